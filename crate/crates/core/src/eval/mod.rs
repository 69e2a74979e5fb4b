//! Link-prediction ranking metrics.
//!
//! Each test triple is ranked twice, once predicting the tail and once the
//! head, against every candidate entity. Ties share the mean of the ranks
//! they span, so a rank may be fractional. Reported metrics pool both
//! directions.

use std::collections::{HashMap, HashSet};
use std::fmt;

use rayon::prelude::*;

use crate::clean::DatasetSplit;
use crate::error::Result;
use crate::models::{Direction, ModelParams};
use crate::store::{EntityId, RelationId, Triple, TripleSet};

/// Known-true answers for every `(anchor, relation)` query, used to drop
/// competing correct answers in the filtered setting.
#[derive(Debug, Clone, Default)]
pub struct FilterIndex {
    tails: HashMap<(EntityId, RelationId), HashSet<EntityId>>,
    heads: HashMap<(EntityId, RelationId), HashSet<EntityId>>,
}

impl FilterIndex {
    pub fn from_sets(sets: &[&TripleSet]) -> Self {
        let mut idx = Self::default();
        for set in sets {
            for t in set.triples() {
                idx.tails.entry((t.head, t.relation)).or_default().insert(t.tail);
                idx.heads.entry((t.tail, t.relation)).or_default().insert(t.head);
            }
        }
        idx
    }

    /// Train, valid and test together.
    pub fn from_split(split: &DatasetSplit) -> Self {
        Self::from_sets(&[&split.train, &split.valid, &split.test])
    }

    fn known(&self, anchor: EntityId, r: RelationId, dir: Direction) -> Option<&HashSet<EntityId>> {
        match dir {
            Direction::Tail => self.tails.get(&(anchor, r)),
            Direction::Head => self.heads.get(&(anchor, r)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Setting {
    Raw,
    Filtered,
}

impl Setting {
    pub fn as_str(self) -> &'static str {
        match self {
            Setting::Raw => "raw",
            Setting::Filtered => "filtered",
        }
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TripleRanks {
    pub head: f64,
    pub tail: f64,
}

/// Mid-rank of `target` among `candidates`: one plus the number of strictly
/// better candidates plus half the number of other candidates tied with it.
/// Candidates for which `skip` holds are ignored; the target never is.
pub fn mid_rank(scores: &[f64], target: EntityId, candidates: &[EntityId], skip: impl Fn(EntityId) -> bool) -> f64 {
    let s = scores[target.index()];
    let mut better = 0usize;
    let mut tied = 0usize;
    for &c in candidates {
        if c == target || skip(c) {
            continue;
        }
        let v = scores[c.index()];
        if v > s {
            better += 1;
        } else if v == s {
            tied += 1;
        }
    }
    1.0 + better as f64 + tied as f64 / 2.0
}

/// Head and tail ranks of one triple. `filter` selects the filtered setting.
pub fn rank_triple(
    params: &ModelParams,
    triple: &Triple,
    candidates: &[EntityId],
    filter: Option<&FilterIndex>,
) -> Result<TripleRanks> {
    params.check_triple(triple)?;
    let mut scores = vec![0.0; params.num_entities];
    let mut one = |anchor: EntityId, target: EntityId, dir: Direction| {
        params.score_candidates(anchor, triple.relation, dir, &mut scores);
        let known = filter.and_then(|f| f.known(anchor, triple.relation, dir));
        mid_rank(&scores, target, candidates, |c| known.is_some_and(|k| k.contains(&c)))
    };
    let tail = one(triple.head, triple.tail, Direction::Tail);
    let head = one(triple.tail, triple.head, Direction::Head);
    Ok(TripleRanks { head, tail })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub mr: f64,
    pub mrr: f64,
    pub hits1: f64,
    pub hits3: f64,
    pub hits10: f64,
    /// Number of ranks pooled (two per test triple).
    pub ranks: usize,
}

impl Metrics {
    pub fn from_ranks(ranks: &[f64]) -> Self {
        let n = ranks.len().max(1) as f64;
        let hits = |k: f64| ranks.iter().filter(|&&r| r <= k).count() as f64 / n;
        Self {
            mr: ranks.iter().sum::<f64>() / n,
            mrr: ranks.iter().map(|r| 1.0 / r).sum::<f64>() / n,
            hits1: hits(1.0),
            hits3: hits(3.0),
            hits10: hits(10.0),
            ranks: ranks.len(),
        }
    }

    pub const CSV_HEADER: &'static str = "model,dataset,setting,mr,mrr,hits1,hits3,hits10";

    pub fn csv_row(&self, model: &str, dataset: &str, setting: Setting) -> String {
        format!(
            "{model},{dataset},{setting},{:.4},{:.4},{:.4},{:.4},{:.4}",
            self.mr, self.mrr, self.hits1, self.hits3, self.hits10
        )
    }
}

/// Ranks every triple of `test` in parallel; results are pooled in input
/// order, so the metrics do not depend on the thread count.
pub fn evaluate(
    params: &ModelParams,
    test: &TripleSet,
    candidates: &[EntityId],
    filter: Option<&FilterIndex>,
) -> Result<Metrics> {
    let per_triple: Vec<TripleRanks> = test
        .triples()
        .par_iter()
        .map(|t| rank_triple(params, t, candidates, filter))
        .collect::<Result<_>>()?;
    let ranks: Vec<f64> = per_triple.iter().flat_map(|r| [r.tail, r.head]).collect();
    Ok(Metrics::from_ranks(&ranks))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalReport {
    pub raw: Metrics,
    pub filtered: Metrics,
}

impl EvalReport {
    pub fn get(&self, setting: Setting) -> &Metrics {
        match setting {
            Setting::Raw => &self.raw,
            Setting::Filtered => &self.filtered,
        }
    }
}

/// Test-set metrics with candidates drawn from the entities seen in train
/// and filtering against all three parts.
pub fn evaluate_split(params: &ModelParams, split: &DatasetSplit) -> Result<EvalReport> {
    let candidates = split.train.entities();
    let filter = FilterIndex::from_split(split);
    Ok(EvalReport {
        raw: evaluate(params, &split.test, &candidates, None)?,
        filtered: evaluate(params, &split.test, &candidates, Some(&filter))?,
    })
}

/// CSV with one row per `(model, setting)`.
pub fn metrics_csv(dataset: &str, rows: &[(String, EvalReport)]) -> String {
    let mut out = format!("{}\n", Metrics::CSV_HEADER);
    for (model, rep) in rows {
        for s in [Setting::Raw, Setting::Filtered] {
            out.push_str(&rep.get(s).csv_row(model, dataset, s));
            out.push('\n');
        }
    }
    out
}

/// Fixed-width table of filtered and raw metrics.
pub fn metrics_table(rows: &[(String, EvalReport)]) -> String {
    let mut out = format!(
        "{:<12} {:<9} {:>9} {:>7} {:>7} {:>7} {:>7}\n",
        "model", "setting", "MR", "MRR", "H@1", "H@3", "H@10"
    );
    for (model, rep) in rows {
        for s in [Setting::Filtered, Setting::Raw] {
            let m = rep.get(s);
            out.push_str(&format!(
                "{:<12} {:<9} {:>9.1} {:>7.3} {:>7.3} {:>7.3} {:>7.3}\n",
                model, s.as_str(), m.mr, m.mrr, m.hits1, m.hits3, m.hits10
            ));
        }
    }
    out
}
