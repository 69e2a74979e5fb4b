use std::collections::HashMap;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::store::{EntityId, RelationId, TripleSet};

/// Denominator used when comparing two relations' pair sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OverlapMeasure {
    /// `|A ∩ B| / min(|A|, |B|)`
    #[default]
    Containment,
    /// `|A ∩ B| / |A ∪ B|`
    Jaccard,
}

impl FromStr for OverlapMeasure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "containment" => Ok(Self::Containment),
            "jaccard" => Ok(Self::Jaccard),
            other => Err(Error::Config(format!("unknown overlap measure {other:?}"))),
        }
    }
}

impl OverlapMeasure {
    pub fn overlap(self, intersection: usize, a: usize, b: usize) -> f64 {
        let denom = match self {
            OverlapMeasure::Containment => a.min(b),
            OverlapMeasure::Jaccard => a + b - intersection,
        };
        if denom == 0 {
            0.0
        } else {
            intersection as f64 / denom as f64
        }
    }
}

/// A pair of distinct relations whose pair sets overlap at or above the
/// threshold. `first` has the lexicographically smaller IRI.
#[derive(Debug, Clone, PartialEq)]
pub struct FlaggedPair {
    pub first: RelationId,
    pub second: RelationId,
    pub intersection: usize,
    pub overlap: f64,
}

// Ratios such as 97/100 land a few ulps away from 0.97.
const THRESHOLD_SLACK: f64 = 1e-12;

fn check_threshold(threshold: f64) -> Result<()> {
    if threshold > 0.0 && threshold <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "overlap threshold must be in (0, 1], got {threshold}"
        )))
    }
}

/// Relation pairs whose `(head, tail)` sets nearly coincide.
pub fn detect_near_duplicates(
    set: &TripleSet,
    threshold: f64,
    measure: OverlapMeasure,
) -> Result<Vec<FlaggedPair>> {
    check_threshold(threshold)?;
    let by_pair = relations_by_pair(set);
    let mut counts: HashMap<(RelationId, RelationId), usize> = HashMap::new();
    for rels in by_pair.values() {
        for (i, &a) in rels.iter().enumerate() {
            for &b in &rels[i + 1..] {
                *counts.entry(ordered(a, b)).or_default() += 1;
            }
        }
    }
    Ok(flag(set, counts, threshold, measure))
}

/// Relation pairs where one's pairs nearly coincide with the other's
/// reversed pairs.
pub fn detect_inverses(
    set: &TripleSet,
    threshold: f64,
    measure: OverlapMeasure,
) -> Result<Vec<FlaggedPair>> {
    check_threshold(threshold)?;
    let by_pair = relations_by_pair(set);
    let mut counts: HashMap<(RelationId, RelationId), usize> = HashMap::new();
    for s in set.relations() {
        for &(h, t) in set.pairs(s) {
            if let Some(rels) = by_pair.get(&(t, h)) {
                for &r in rels {
                    // Each unordered pair is seen from both sides; count once.
                    if r < s {
                        *counts.entry((r, s)).or_default() += 1;
                    }
                }
            }
        }
    }
    Ok(flag(set, counts, threshold, measure))
}

fn relations_by_pair(set: &TripleSet) -> HashMap<(EntityId, EntityId), Vec<RelationId>> {
    let mut by_pair: HashMap<(EntityId, EntityId), Vec<RelationId>> = HashMap::new();
    for r in set.relations() {
        for &p in set.pairs(r) {
            by_pair.entry(p).or_default().push(r);
        }
    }
    by_pair
}

fn ordered(a: RelationId, b: RelationId) -> (RelationId, RelationId) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

fn flag(
    set: &TripleSet,
    counts: HashMap<(RelationId, RelationId), usize>,
    threshold: f64,
    measure: OverlapMeasure,
) -> Vec<FlaggedPair> {
    let mut out: Vec<FlaggedPair> = counts
        .into_iter()
        .filter_map(|((a, b), inter)| {
            let overlap = measure.overlap(inter, set.pairs(a).len(), set.pairs(b).len());
            if overlap + THRESHOLD_SLACK < threshold {
                return None;
            }
            let (first, second) = if set.relation_iri(a) <= set.relation_iri(b) {
                (a, b)
            } else {
                (b, a)
            };
            Some(FlaggedPair {
                first,
                second,
                intersection: inter,
                overlap,
            })
        })
        .collect();
    out.sort_by(|x, y| {
        set.relation_iri(x.first)
            .cmp(set.relation_iri(y.first))
            .then_with(|| set.relation_iri(x.second).cmp(set.relation_iri(y.second)))
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::store::TripleSetBuilder;

    fn build(rows: impl IntoIterator<Item = (String, &'static str, String)>) -> TripleSet {
        let mut b = TripleSetBuilder::new();
        for (h, r, t) in rows {
            b.insert_str(&h, r, &t);
        }
        b.build()
    }

    fn pairs(n: usize) -> Vec<(String, String)> {
        (0..n).map(|i| (format!("h{i}"), format!("t{i}"))).collect()
    }

    #[test]
    fn identical_sets_flagged() {
        let rows = pairs(10)
            .into_iter()
            .flat_map(|(h, t)| [(h.clone(), "r", t.clone()), (h, "s", t)]);
        let set = build(rows);
        let flagged = detect_near_duplicates(&set, 0.97, OverlapMeasure::Containment).unwrap();
        assert_eq!(flagged.len(), 1);
        assert_eq!(flagged[0].overlap, 1.0);
        assert_eq!(set.relation_iri(flagged[0].first), "r");
    }

    fn shared_fixture(shared: usize, inverse: bool) -> TripleSet {
        let mut rows = Vec::new();
        for (h, t) in pairs(100) {
            rows.push((h, "r", t));
        }
        for (i, (h, t)) in pairs(100).into_iter().enumerate() {
            let (h, t) = if i < shared { (h, t) } else { (format!("x{i}"), format!("y{i}")) };
            if inverse {
                rows.push((t, "s", h));
            } else {
                rows.push((h, "s", t));
            }
        }
        build(rows)
    }

    #[test]
    fn ninety_seven_of_hundred_on_threshold() {
        let flagged = detect_near_duplicates(&shared_fixture(97, false), 0.97, OverlapMeasure::Containment).unwrap();
        assert_eq!(flagged.len(), 1);
        assert_eq!(flagged[0].intersection, 97);
        let flagged = detect_near_duplicates(&shared_fixture(96, false), 0.97, OverlapMeasure::Containment).unwrap();
        assert!(flagged.is_empty());
    }

    #[test]
    fn inverse_ninety_seven_flagged() {
        let set = shared_fixture(97, true);
        assert!(detect_near_duplicates(&set, 0.97, OverlapMeasure::Containment).unwrap().is_empty());
        let flagged = detect_inverses(&set, 0.97, OverlapMeasure::Containment).unwrap();
        assert_eq!(flagged.len(), 1);
        assert_eq!(flagged[0].intersection, 97);
        assert!(detect_inverses(&shared_fixture(96, true), 0.97, OverlapMeasure::Containment)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn disjoint_not_flagged() {
        let set = shared_fixture(0, false);
        assert!(detect_near_duplicates(&set, 0.5, OverlapMeasure::Containment).unwrap().is_empty());
    }

    #[test]
    fn exact_inverse_flagged() {
        let rows = pairs(5)
            .into_iter()
            .flat_map(|(h, t)| [(h.clone(), "r", t.clone()), (t, "s", h)]);
        let flagged = detect_inverses(&build(rows), 0.97, OverlapMeasure::Containment).unwrap();
        assert_eq!(flagged.len(), 1);
    }

    #[test]
    fn self_inverse_excluded() {
        let set = build([
            ("a".to_owned(), "r", "b".to_owned()),
            ("b".to_owned(), "r", "a".to_owned()),
        ]);
        assert!(detect_inverses(&set, 0.5, OverlapMeasure::Containment).unwrap().is_empty());
    }

    #[test]
    fn jaccard_is_stricter() {
        // r has 100 pairs, s is a 50-pair subset: containment 1.0, jaccard 0.5.
        let mut rows: Vec<_> = pairs(100).into_iter().map(|(h, t)| (h, "r", t)).collect();
        rows.extend(pairs(50).into_iter().map(|(h, t)| (h, "s", t)));
        let set = build(rows);
        assert_eq!(detect_near_duplicates(&set, 0.97, OverlapMeasure::Containment).unwrap().len(), 1);
        assert!(detect_near_duplicates(&set, 0.97, OverlapMeasure::Jaccard).unwrap().is_empty());
    }

    #[test]
    fn threshold_range_checked() {
        let set = build([("a".to_owned(), "r", "b".to_owned())]);
        assert!(detect_near_duplicates(&set, 0.0, OverlapMeasure::Containment).is_err());
        assert!(detect_inverses(&set, 1.5, OverlapMeasure::Containment).is_err());
    }
}
