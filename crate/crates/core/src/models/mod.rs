//! Knowledge-graph embedding models.
//!
//! | kind        | score                              | training loss                         |
//! |-------------|------------------------------------|---------------------------------------|
//! | TransE      | `-‖h + r - t‖₂`                    | margin ranking, uniform negatives     |
//! | DistMult    | `⟨h, r, t⟩`                        | logistic, uniform negatives, L2       |
//! | ComplEx     | `Re⟨h, r, conj(t)⟩`                | logistic, uniform negatives, L2       |
//! | ComplEx-N3  | `Re⟨h, r, conj(t)⟩`                | 1-N softmax cross-entropy, N3         |
//! | TuckER      | `W ×₁ r ×₂ h ×₃ t`                 | 1-N binary cross-entropy, smoothing   |
//!
//! Parameters are kept in `f64` so analytic gradients can be compared with
//! central differences; checkpoints store them as little-endian `f32`.
//! Complex embeddings of rank `d` occupy `2d` reals per row: real parts
//! first, imaginary parts second.

mod check;
mod checkpoint;
mod config;
mod loss;
mod optim;
mod train;

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::store::{EntityId, RelationId, Triple};

pub use check::{gradient_check, gradient_check_with};
pub use checkpoint::{read_checkpoint, write_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use config::{EmbeddingConfig, OptimizerKind};
pub use loss::smoothed_targets;
pub use train::{train, write_loss_log, EpochLoss, TrainOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    #[serde(rename = "transe")]
    TransE,
    #[serde(rename = "distmult")]
    DistMult,
    #[serde(rename = "complex")]
    ComplEx,
    #[serde(rename = "complex-n3")]
    ComplExN3,
    #[serde(rename = "tucker")]
    TuckER,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [
        ModelKind::TransE,
        ModelKind::DistMult,
        ModelKind::ComplEx,
        ModelKind::ComplExN3,
        ModelKind::TuckER,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::TransE => "TransE",
            ModelKind::DistMult => "DistMult",
            ModelKind::ComplEx => "ComplEx",
            ModelKind::ComplExN3 => "ComplEx-N3",
            ModelKind::TuckER => "TuckER",
        }
    }

    pub(crate) fn code(self) -> u32 {
        match self {
            ModelKind::TransE => 0,
            ModelKind::DistMult => 1,
            ModelKind::ComplEx => 2,
            ModelKind::ComplExN3 => 3,
            ModelKind::TuckER => 4,
        }
    }

    pub(crate) fn from_code(code: u32) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.code() == code)
    }

    fn is_complex(self) -> bool {
        matches!(self, ModelKind::ComplEx | ModelKind::ComplExN3)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        match key.as_str() {
            "transe" => Ok(ModelKind::TransE),
            "distmult" => Ok(ModelKind::DistMult),
            "complex" => Ok(ModelKind::ComplEx),
            "complexn3" => Ok(ModelKind::ComplExN3),
            "tucker" => Ok(ModelKind::TuckER),
            _ => Err(Error::Config(format!("unknown model kind {s:?}"))),
        }
    }
}

/// Which side of a triple is being predicted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    /// `(h, r, ?)`
    Tail,
    /// `(?, r, t)`
    Head,
}

/// Entity and relation tables (and the TuckER core tensor).
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub kind: ModelKind,
    pub entity_dim: usize,
    pub relation_dim: usize,
    pub num_entities: usize,
    pub num_relations: usize,
    pub seed: u64,
    pub entities: Vec<f64>,
    pub relations: Vec<f64>,
    /// `relation_dim × entity_dim × entity_dim`, row-major; empty unless TuckER.
    pub core: Vec<f64>,
}

impl ModelParams {
    /// Seeded uniform initialisation in `[-0.5/√d, 0.5/√d]` per table.
    pub fn init(
        kind: ModelKind,
        num_entities: usize,
        num_relations: usize,
        entity_dim: usize,
        relation_dim: usize,
        seed: u64,
    ) -> Result<Self> {
        let mut p = Self::zeros(kind, num_entities, num_relations, entity_dim, relation_dim, seed)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut fill = |table: &mut [f64], d: usize| {
            let bound = 0.5 / (d as f64).sqrt();
            for x in table {
                *x = rng.gen_range(-bound..bound);
            }
        };
        fill(&mut p.entities, entity_dim);
        fill(&mut p.relations, relation_dim);
        fill(&mut p.core, entity_dim);
        Ok(p)
    }

    pub fn zeros(
        kind: ModelKind,
        num_entities: usize,
        num_relations: usize,
        entity_dim: usize,
        relation_dim: usize,
        seed: u64,
    ) -> Result<Self> {
        if entity_dim == 0 || relation_dim == 0 {
            return Err(Error::Config("embedding dimensions must be positive".into()));
        }
        if kind != ModelKind::TuckER && entity_dim != relation_dim {
            return Err(Error::Config(format!(
                "{kind} needs equal entity and relation dimensions ({entity_dim} != {relation_dim})"
            )));
        }
        let mut p = Self {
            kind,
            entity_dim,
            relation_dim,
            num_entities,
            num_relations,
            seed,
            entities: Vec::new(),
            relations: Vec::new(),
            core: Vec::new(),
        };
        p.entities = vec![0.0; num_entities * p.entity_width()];
        p.relations = vec![0.0; num_relations * p.relation_width()];
        if kind == ModelKind::TuckER {
            p.core = vec![0.0; relation_dim * entity_dim * entity_dim];
        }
        Ok(p)
    }

    /// Reals per entity row.
    pub fn entity_width(&self) -> usize {
        if self.kind.is_complex() {
            2 * self.entity_dim
        } else {
            self.entity_dim
        }
    }

    /// Reals per relation row.
    pub fn relation_width(&self) -> usize {
        if self.kind.is_complex() {
            2 * self.relation_dim
        } else {
            self.relation_dim
        }
    }

    pub fn entity(&self, e: EntityId) -> &[f64] {
        let w = self.entity_width();
        &self.entities[e.index() * w..(e.index() + 1) * w]
    }

    pub fn relation(&self, r: RelationId) -> &[f64] {
        let w = self.relation_width();
        &self.relations[r.index() * w..(r.index() + 1) * w]
    }

    pub fn entity_mut(&mut self, e: EntityId) -> &mut [f64] {
        let w = self.entity_width();
        &mut self.entities[e.index() * w..(e.index() + 1) * w]
    }

    pub fn relation_mut(&mut self, r: RelationId) -> &mut [f64] {
        let w = self.relation_width();
        &mut self.relations[r.index() * w..(r.index() + 1) * w]
    }

    pub fn is_finite(&self) -> bool {
        self.entities
            .iter()
            .chain(&self.relations)
            .chain(&self.core)
            .all(|x| x.is_finite())
    }

    pub(crate) fn check_triple(&self, t: &Triple) -> Result<()> {
        for e in [t.head, t.tail] {
            if e.index() >= self.num_entities {
                return Err(Error::IndexOutOfRange {
                    kind: "entity",
                    index: e.index(),
                    len: self.num_entities,
                });
            }
        }
        if t.relation.index() >= self.num_relations {
            return Err(Error::IndexOutOfRange {
                kind: "relation",
                index: t.relation.index(),
                len: self.num_relations,
            });
        }
        Ok(())
    }

    /// `Wm[a, b] = Σ_k r_k W[k, a, b]`, the relation-specific TuckER matrix.
    pub(crate) fn tucker_matrix(&self, r: RelationId) -> Vec<f64> {
        let d = self.entity_dim;
        let dd = d * d;
        let mut wm = vec![0.0; dd];
        for (k, &rk) in self.relation(r).iter().enumerate() {
            let slab = &self.core[k * dd..(k + 1) * dd];
            for (m, &w) in wm.iter_mut().zip(slab) {
                *m += rk * w;
            }
        }
        wm
    }

    /// The vector `q` with `score(anchor, r, e) = q · e` for every candidate
    /// `e`, for the bilinear models and TuckER. `None` for TransE.
    pub(crate) fn query_vector(
        &self,
        anchor: EntityId,
        r: RelationId,
        dir: Direction,
        tucker_matrix: Option<&[f64]>,
    ) -> Option<Vec<f64>> {
        let a = self.entity(anchor);
        let rel = self.relation(r);
        match self.kind {
            ModelKind::TransE => None,
            ModelKind::DistMult => Some(a.iter().zip(rel).map(|(x, y)| x * y).collect()),
            ModelKind::ComplEx | ModelKind::ComplExN3 => {
                let d = self.entity_dim;
                let (ar, ai) = a.split_at(d);
                let (rr, ri) = rel.split_at(d);
                let mut q = vec![0.0; 2 * d];
                for i in 0..d {
                    match dir {
                        Direction::Tail => {
                            q[i] = ar[i] * rr[i] - ai[i] * ri[i];
                            q[d + i] = ar[i] * ri[i] + ai[i] * rr[i];
                        }
                        Direction::Head => {
                            q[i] = rr[i] * ar[i] + ri[i] * ai[i];
                            q[d + i] = rr[i] * ai[i] - ri[i] * ar[i];
                        }
                    }
                }
                Some(q)
            }
            ModelKind::TuckER => {
                let owned;
                let wm = match tucker_matrix {
                    Some(m) => m,
                    None => {
                        owned = self.tucker_matrix(r);
                        &owned
                    }
                };
                Some(tucker_project(wm, a, self.entity_dim, dir))
            }
        }
    }

    /// Scores every entity as the missing side of `(anchor, r, ?)` or
    /// `(?, r, anchor)`. `out` must have `num_entities` slots.
    pub fn score_candidates(&self, anchor: EntityId, r: RelationId, dir: Direction, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.num_entities);
        let w = self.entity_width();
        match self.query_vector(anchor, r, dir, None) {
            Some(q) => {
                for (j, s) in out.iter_mut().enumerate() {
                    *s = dot(&q, &self.entities[j * w..(j + 1) * w]);
                }
            }
            None => {
                // TransE: tail candidates are compared with h + r, head
                // candidates with t - r.
                let a = self.entity(anchor);
                let rel = self.relation(r);
                let target: Vec<f64> = match dir {
                    Direction::Tail => a.iter().zip(rel).map(|(x, y)| x + y).collect(),
                    Direction::Head => a.iter().zip(rel).map(|(x, y)| x - y).collect(),
                };
                for (j, s) in out.iter_mut().enumerate() {
                    let e = &self.entities[j * w..(j + 1) * w];
                    *s = -target
                        .iter()
                        .zip(e)
                        .map(|(x, y)| (x - y) * (x - y))
                        .sum::<f64>()
                        .sqrt();
                }
            }
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Tail direction: `x[b] = Σ_a v[a] Wm[a, b]`; head direction:
/// `x[a] = Σ_b Wm[a, b] v[b]`.
pub(crate) fn tucker_project(wm: &[f64], v: &[f64], d: usize, dir: Direction) -> Vec<f64> {
    let mut x = vec![0.0; d];
    match dir {
        Direction::Tail => {
            for (a, &va) in v.iter().enumerate() {
                let row = &wm[a * d..(a + 1) * d];
                for (xb, &w) in x.iter_mut().zip(row) {
                    *xb += va * w;
                }
            }
        }
        Direction::Head => {
            for (a, xa) in x.iter_mut().enumerate() {
                *xa = dot(&wm[a * d..(a + 1) * d], v);
            }
        }
    }
    x
}

/// Plausibility of a triple; higher is more plausible.
pub fn score(params: &ModelParams, triple: &Triple) -> Result<f64> {
    params.check_triple(triple)?;
    Ok(score_unchecked(params, triple))
}

pub(crate) fn score_unchecked(params: &ModelParams, t: &Triple) -> f64 {
    let h = params.entity(t.head);
    let r = params.relation(t.relation);
    let tl = params.entity(t.tail);
    match params.kind {
        ModelKind::TransE => -h
            .iter()
            .zip(r)
            .zip(tl)
            .map(|((a, b), c)| (a + b - c) * (a + b - c))
            .sum::<f64>()
            .sqrt(),
        ModelKind::DistMult => h.iter().zip(r).zip(tl).map(|((a, b), c)| a * b * c).sum(),
        ModelKind::ComplEx | ModelKind::ComplExN3 => {
            let d = params.entity_dim;
            let (hr, hi) = h.split_at(d);
            let (rr, ri) = r.split_at(d);
            let (tr, ti) = tl.split_at(d);
            (0..d)
                .map(|i| {
                    hr[i] * rr[i] * tr[i] + hi[i] * rr[i] * ti[i] + hr[i] * ri[i] * ti[i]
                        - hi[i] * ri[i] * tr[i]
                })
                .sum()
        }
        ModelKind::TuckER => {
            let wm = params.tucker_matrix(t.relation);
            dot(&tucker_project(&wm, h, params.entity_dim, Direction::Tail), tl)
        }
    }
}
