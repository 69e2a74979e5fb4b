use std::collections::HashMap;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::extend::normalize;
use crate::store::{Lexicon, RelationId, TripleSet};

/// The fourteen categories, in report order.
pub const CATEGORIES: [&str; 14] = [
    "unknown",
    "person",
    "object",
    "nature",
    "clothing",
    "body part",
    "animal",
    "action",
    "building",
    "scene",
    "color",
    "religious",
    "style",
    "material",
];

pub const UNKNOWN: &str = "unknown";

const STARTER_RULES: &str = include_str!("../../data/taxonomy_rules.csv");

fn category_index(name: &str) -> Option<usize> {
    let key = name.trim().to_lowercase().replace(['_', '-'], " ");
    CATEGORIES.iter().position(|c| *c == key)
}

/// Rules mapping entity IRIs or surfaces to a category.
#[derive(Debug, Clone, Default)]
pub struct TaxonomyMap {
    exact: HashMap<String, usize>,
    /// Keyword tokens and category, in file order.
    keywords: Vec<(Vec<String>, usize)>,
}

impl TaxonomyMap {
    /// The rules shipped with the crate.
    pub fn starter() -> Self {
        Self::parse(STARTER_RULES, Path::new("taxonomy_rules.csv")).expect("bundled taxonomy rules parse")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    /// `category,keyword-or-IRI` per line; `#` comments and blank lines are
    /// skipped. A value containing `://` or starting with `urn:` is an IRI.
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut map = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let lineno = i as u64 + 1;
            let Some((cat, value)) = line.split_once(',') else {
                return Err(Error::parse(origin, lineno, "expected category,keyword"));
            };
            let value = value.trim().trim_matches('"');
            let Some(c) = category_index(cat) else {
                return Err(Error::parse(origin, lineno, format!("unknown category {:?}", cat.trim())));
            };
            if value.is_empty() {
                return Err(Error::parse(origin, lineno, "empty keyword"));
            }
            if value.contains("://") || value.starts_with("urn:") {
                map.exact.entry(value.to_owned()).or_insert(c);
            } else {
                let key = normalize(value);
                map.exact.entry(key.clone()).or_insert(c);
                map.keywords.push((key.split(' ').map(str::to_owned).collect(), c));
            }
        }
        Ok(map)
    }

    /// Category of an entity: exact IRI, then exact surface, then the
    /// longest keyword occurring as whole tokens in the surface.
    pub fn classify(&self, surface: &str, iri: Option<&str>) -> &'static str {
        if let Some(&c) = iri.and_then(|i| self.exact.get(i)) {
            return CATEGORIES[c];
        }
        let key = normalize(surface);
        if let Some(&c) = self.exact.get(&key) {
            return CATEGORIES[c];
        }
        let toks: Vec<&str> = key.split(' ').filter(|t| !t.is_empty()).collect();
        let mut best: Option<(usize, usize)> = None;
        for (kw, c) in &self.keywords {
            let hit = kw.len() <= toks.len()
                && toks.windows(kw.len()).any(|w| w.iter().zip(kw).all(|(a, b)| token_matches(a, b)));
            if hit && best.is_none_or(|(len, _)| kw.len() > len) {
                best = Some((kw.len(), *c));
            }
        }
        best.map_or(UNKNOWN, |(_, c)| CATEGORIES[c])
    }
}

/// Equal, or equal after dropping a plural `s`/`es`.
fn token_matches(token: &str, keyword: &str) -> bool {
    token == keyword
        || token.strip_suffix('s') == Some(keyword)
        || token.strip_suffix("es") == Some(keyword)
}

/// Mention counts per category.
#[derive(Debug, Clone, PartialEq)]
pub struct TaxonomyDistribution {
    /// Indexed like [`CATEGORIES`].
    pub counts: [usize; 14],
}

impl TaxonomyDistribution {
    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn count(&self, category: &str) -> usize {
        category_index(category).map_or(0, |i| self.counts[i])
    }

    /// Exact percentages; all zero for an empty input.
    pub fn percentages(&self) -> [f64; 14] {
        let total = self.total();
        self.counts.map(|c| if total == 0 { 0.0 } else { 100.0 * c as f64 / total as f64 })
    }

    /// Percentages rounded to `decimals` places by largest remainder, so
    /// the rounded values still sum to exactly 100 (non-empty input).
    pub fn rounded_percentages(&self, decimals: u32) -> [f64; 14] {
        let total = self.total();
        if total == 0 {
            return [0.0; 14];
        }
        let unit = 10u64.pow(decimals);
        let scale = 100 * unit;
        let mut units = [0u64; 14];
        let mut rema: Vec<(u64, usize)> = Vec::with_capacity(14);
        for (i, &c) in self.counts.iter().enumerate() {
            let num = c as u64 * scale;
            units[i] = num / total as u64;
            rema.push((num % total as u64, i));
        }
        let missing = scale - units.iter().sum::<u64>();
        rema.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        for &(_, i) in rema.iter().take(missing as usize) {
            units[i] += 1;
        }
        units.map(|u| u as f64 / unit as f64)
    }

    pub fn to_csv(&self) -> String {
        let pct = self.rounded_percentages(1);
        let mut out = String::from("category,count,percent\n");
        for (i, c) in CATEGORIES.iter().enumerate() {
            out.push_str(&format!("{c},{},{:.1}\n", self.counts[i], pct[i]));
        }
        out
    }
}

/// Classifies every `(surface, iri)` mention.
pub fn taxonomy_distribution<'a>(
    mentions: impl IntoIterator<Item = (&'a str, Option<&'a str>)>,
    map: &TaxonomyMap,
) -> TaxonomyDistribution {
    let mut counts = [0usize; 14];
    for (surface, iri) in mentions {
        let c = map.classify(surface, iri);
        counts[category_index(c).expect("classify returns a known category")] += 1;
    }
    TaxonomyDistribution { counts }
}

/// Objects of `relation`, one per triple, as `(surface, iri)`.
pub fn relation_mentions<'a>(set: &'a TripleSet, lexicon: &'a Lexicon, relation: RelationId) -> Vec<(&'a str, Option<&'a str>)> {
    set.pairs(relation)
        .iter()
        .map(|&(_, t)| (lexicon.entity_surface(set, t), Some(set.entity_iri(t))))
        .collect()
}

/// Two distributions side by side, as percentages with one decimal.
pub fn comparison_table(left_name: &str, left: &TaxonomyDistribution, right_name: &str, right: &TaxonomyDistribution) -> String {
    let (l, r) = (left.rounded_percentages(1), right.rounded_percentages(1));
    let mut out = format!("{:<12}{:>14}{:>14}\n", "category", left_name, right_name);
    for (i, c) in CATEGORIES.iter().enumerate() {
        out.push_str(&format!("{c:<12}{:>14.1}{:>14.1}\n", l[i], r[i]));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn four_entities_half_person() {
        let map = TaxonomyMap::starter();
        let d = taxonomy_distribution(
            [("man", None), ("old woman", None), ("sword", None), ("zzyzx", None)],
            &map,
        );
        let p = d.percentages();
        assert_eq!((p[1], p[2], p[0]), (50.0, 25.0, 25.0));
    }

    #[test]
    fn all_unmapped_is_all_unknown() {
        let d = taxonomy_distribution([("qq", None), ("rr", None)], &TaxonomyMap::default());
        assert_eq!(d.percentages()[0], 100.0);
    }

    #[test]
    fn longest_keyword_and_exact_iri_win() {
        let map = TaxonomyMap::parse(
            "person,man\naction,man kneeling\nobject,http://ex.org/Q1\n",
            Path::new("r"),
        )
        .unwrap();
        assert_eq!(map.classify("a man kneeling in prayer", None), "action");
        assert_eq!(map.classify("Man", None), "person");
        assert_eq!(map.classify("manuscript", None), UNKNOWN);
        assert_eq!(map.classify("two men kneeling", None), UNKNOWN);
        assert_eq!(map.classify("mans", None), "person");
        assert_eq!(map.classify("man", Some("http://ex.org/Q1")), "object");
    }

    #[test]
    fn bad_rules_report_line() {
        let err = TaxonomyMap::parse("# c\nperson,man\nvehicle,car\n", Path::new("r")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }));
    }

    #[test]
    fn rounding_keeps_sum() {
        let d = TaxonomyDistribution {
            counts: [1, 1, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0],
        };
        let sum: f64 = d.rounded_percentages(1).iter().sum();
        assert!((sum - 100.0).abs() < 1e-9);
    }
}
