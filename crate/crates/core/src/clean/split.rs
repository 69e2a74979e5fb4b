use std::fs::{self, File};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::store::{read_triples, write_triples, CsvDialect, Triple, TripleSet, TripleSetBuilder};

/// Train/valid/test partition sharing one entity and relation lexicon.
#[derive(Debug, Clone)]
pub struct DatasetSplit {
    pub train: TripleSet,
    pub valid: TripleSet,
    pub test: TripleSet,
    /// `None` when the split was loaded from files.
    pub seed: Option<u64>,
    pub ratios: [f64; 3],
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Part {
    Train,
    Valid,
    Test,
}

// Allowed drift of each part from its target size, as a fraction of the
// whole dataset, when closure forces triples into train.
const RATIO_TOLERANCE: f64 = 0.01;

fn check_ratios(ratios: [f64; 3]) -> Result<()> {
    let sum: f64 = ratios.iter().sum();
    if ratios.iter().any(|r| !(r.is_finite() && *r >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "split ratios must be non-negative and sum to 1, got {ratios:?}"
        )));
    }
    if ratios[0] == 0.0 {
        return Err(Error::InvalidArgument("train ratio must be positive".into()));
    }
    Ok(())
}

/// Seeded random split in which every entity and relation of valid and test
/// also occurs in train.
///
/// Triples are shuffled and cut at the target sizes. Any valid/test triple
/// mentioning something unseen in train is moved into train, and the gap is
/// refilled with train triples whose entities and relation occur at least
/// twice in train, so removing them keeps closure.
pub fn split_dataset(set: &TripleSet, ratios: [f64; 3], seed: u64) -> Result<DatasetSplit> {
    check_ratios(ratios)?;
    let n = set.len();
    let n_valid = (ratios[1] * n as f64).round() as usize;
    let n_test = (ratios[2] * n as f64).round() as usize;
    if n_valid + n_test > n {
        return Err(Error::TooSmall(format!("{n} triples cannot honour ratios {ratios:?}")));
    }
    let n_train = n - n_valid - n_test;

    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);

    let triples = set.triples();
    let mut part = vec![Part::Train; n];
    for &i in &order[n_train..n_train + n_valid] {
        part[i] = Part::Valid;
    }
    for &i in &order[n_train + n_valid..] {
        part[i] = Part::Test;
    }

    let mut entity_count = vec![0u32; set.num_entity_handles()];
    let mut relation_count = vec![0u32; set.num_relation_handles()];
    let add = |t: &Triple, ec: &mut [u32], rc: &mut [u32], delta: i32| {
        for e in [t.head, t.tail] {
            ec[e.index()] = (ec[e.index()] as i32 + delta) as u32;
        }
        rc[t.relation.index()] = (rc[t.relation.index()] as i32 + delta) as u32;
    };
    for (i, t) in triples.iter().enumerate() {
        if part[i] == Part::Train {
            add(t, &mut entity_count, &mut relation_count, 1);
        }
    }

    // Counts only grow here, so one pass settles closure for every triple.
    let mut deficit = [0usize; 3];
    for &i in &order {
        if part[i] == Part::Train {
            continue;
        }
        let t = &triples[i];
        let closed = entity_count[t.head.index()] > 0
            && entity_count[t.tail.index()] > 0
            && relation_count[t.relation.index()] > 0;
        if !closed {
            deficit[part[i] as usize] += 1;
            part[i] = Part::Train;
            add(t, &mut entity_count, &mut relation_count, 1);
        }
    }

    for target in [Part::Valid, Part::Test] {
        for &i in &order {
            if deficit[target as usize] == 0 {
                break;
            }
            if part[i] != Part::Train {
                continue;
            }
            let t = &triples[i];
            add(t, &mut entity_count, &mut relation_count, -1);
            let still_closed = entity_count[t.head.index()] > 0
                && entity_count[t.tail.index()] > 0
                && relation_count[t.relation.index()] > 0;
            if still_closed {
                part[i] = target;
                deficit[target as usize] -= 1;
            } else {
                add(t, &mut entity_count, &mut relation_count, 1);
            }
        }
    }

    let sizes = [n_train, n_valid, n_test];
    let tolerance = RATIO_TOLERANCE * n as f64;
    for (k, name) in ["valid", "test"].iter().enumerate() {
        let short = deficit[k + 1];
        if short as f64 > tolerance {
            return Err(Error::TooSmall(format!(
                "{name} split short by {short} of {} triples after enforcing entity/relation closure",
                sizes[k + 1]
            )));
        }
    }

    let pick = |p: Part| -> TripleSet { set.filter_indexed(|i| part[i] == p) };
    Ok(DatasetSplit {
        train: pick(Part::Train),
        valid: pick(Part::Valid),
        test: pick(Part::Test),
        seed: Some(seed),
        ratios,
    })
}

impl DatasetSplit {
    /// Reads three `from,rel,to` files into one shared lexicon.
    pub fn load(train: &Path, valid: &Path, test: &Path, dialect: &CsvDialect) -> Result<Self> {
        let mut builder = TripleSetBuilder::new();
        let mut parts = Vec::with_capacity(3);
        for path in [train, valid, test] {
            let file = File::open(path).map_err(|e| Error::io(path, e))?;
            let (rows, _) = read_triples(&mut builder, file, dialect, path)?;
            parts.push(rows);
        }
        let all = builder.build();
        let mut it = parts.into_iter().map(|rows| {
            TripleSet::from_triples(all.entity_lexicon().clone(), all.relation_lexicon().clone(), rows)
        });
        let (train, valid, test) = (it.next().unwrap(), it.next().unwrap(), it.next().unwrap());
        let total = (train.len() + valid.len() + test.len()).max(1) as f64;
        let ratios = [
            train.len() as f64 / total,
            valid.len() as f64 / total,
            test.len() as f64 / total,
        ];
        Ok(Self {
            train,
            valid,
            test,
            seed: None,
            ratios,
        })
    }

    /// Loads `train.csv`, `valid.csv` and `test.csv` from a directory.
    pub fn load_dir(dir: &Path) -> Result<Self> {
        Self::load(
            &dir.join("train.csv"),
            &dir.join("valid.csv"),
            &dir.join("test.csv"),
            &CsvDialect::default(),
        )
    }

    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (name, set) in [("train.csv", &self.train), ("valid.csv", &self.valid), ("test.csv", &self.test)] {
            let path = dir.join(name);
            let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
            write_triples(set, std::io::BufWriter::new(file))?;
        }
        Ok(())
    }

    /// Every triple of the three parts, train first.
    pub fn all(&self) -> TripleSet {
        TripleSet::from_triples(
            self.train.entity_lexicon().clone(),
            self.train.relation_lexicon().clone(),
            self.train
                .triples()
                .iter()
                .chain(self.valid.triples())
                .chain(self.test.triples())
                .copied(),
        )
    }

    /// Valid/test triples mentioning an entity or relation absent from train.
    pub fn closure_violations(&self) -> usize {
        let mut seen_e = vec![false; self.train.num_entity_handles()];
        let mut seen_r = vec![false; self.train.num_relation_handles()];
        for t in self.train.triples() {
            seen_e[t.head.index()] = true;
            seen_e[t.tail.index()] = true;
            seen_r[t.relation.index()] = true;
        }
        self.valid
            .triples()
            .iter()
            .chain(self.test.triples())
            .filter(|t| !(seen_e[t.head.index()] && seen_e[t.tail.index()] && seen_r[t.relation.index()]))
            .count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn chain(n: usize) -> TripleSet {
        let mut b = TripleSetBuilder::new();
        for i in 0..n {
            b.insert_str(&format!("e{i}"), "next", &format!("e{}", i + 1));
        }
        b.build()
    }

    #[test]
    fn chain_of_ten_splits_eight_one_one() {
        let split = split_dataset(&chain(10), [0.8, 0.1, 0.1], 7).unwrap();
        assert_eq!((split.train.len(), split.valid.len(), split.test.len()), (8, 1, 1));
        assert_eq!(split.closure_violations(), 0);
    }

    #[test]
    fn all_train() {
        let split = split_dataset(&chain(10), [1.0, 0.0, 0.0], 1).unwrap();
        assert_eq!(split.train.len(), 10);
        assert!(split.valid.is_empty() && split.test.is_empty());
    }

    #[test]
    fn deterministic_for_seed() {
        let set = chain(40);
        let a = split_dataset(&set, [0.8, 0.1, 0.1], 3).unwrap();
        let b = split_dataset(&set, [0.8, 0.1, 0.1], 3).unwrap();
        assert_eq!(a.test.triples(), b.test.triples());
        assert_eq!(a.valid.triples(), b.valid.triples());
    }

    #[test]
    fn union_and_disjointness() {
        let set = chain(60);
        let s = split_dataset(&set, [0.7, 0.15, 0.15], 11).unwrap();
        let parts: Vec<HashSet<Triple>> = [&s.train, &s.valid, &s.test]
            .iter()
            .map(|p| p.triples().iter().copied().collect())
            .collect();
        assert!(parts[0].is_disjoint(&parts[1]) && parts[0].is_disjoint(&parts[2]) && parts[1].is_disjoint(&parts[2]));
        assert_eq!(parts.iter().map(HashSet::len).sum::<usize>(), set.len());
    }

    #[test]
    fn too_small_for_closure() {
        // Two disjoint edges: neither can leave train without losing an entity.
        let mut b = TripleSetBuilder::new();
        b.insert_str("a", "r", "b");
        b.insert_str("c", "r", "d");
        let err = split_dataset(&b.build(), [0.5, 0.5, 0.0], 0).unwrap_err();
        assert!(matches!(err, Error::TooSmall(_)));
    }

    #[test]
    fn bad_ratios_rejected() {
        assert!(split_dataset(&chain(5), [0.5, 0.2, 0.2], 0).is_err());
        assert!(split_dataset(&chain(5), [0.0, 0.5, 0.5], 0).is_err());
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let s = split_dataset(&chain(20), [0.8, 0.1, 0.1], 5).unwrap();
        s.write_dir(dir.path()).unwrap();
        let back = DatasetSplit::load_dir(dir.path()).unwrap();
        assert_eq!(back.train.len(), s.train.len());
        assert_eq!(back.closure_violations(), 0);
        let render = |set: &TripleSet| -> Vec<(String, String, String)> {
            set.triples()
                .iter()
                .map(|t| {
                    let (h, r, tl) = set.render(t);
                    (h.to_owned(), r.to_owned(), tl.to_owned())
                })
                .collect()
        };
        assert_eq!(render(&back.test), render(&s.test));
    }
}
