//! Per-example losses with hand-written gradients.

use std::collections::HashMap;

use super::{dot, score_unchecked, tucker_project, Direction, EmbeddingConfig, ModelKind, ModelParams};
use crate::store::{EntityId, RelationId, Triple};

/// Dense gradient table that remembers which rows were written, so clearing
/// and sparse optimiser steps only visit those.
#[derive(Debug, Clone)]
pub(crate) struct RowGrad {
    width: usize,
    pub(crate) data: Vec<f64>,
    touched: Vec<usize>,
    mark: Vec<bool>,
}

impl RowGrad {
    pub(crate) fn new(rows: usize, width: usize) -> Self {
        Self {
            width,
            data: vec![0.0; rows * width],
            touched: Vec::new(),
            mark: vec![false; rows],
        }
    }

    pub(crate) fn row_mut(&mut self, i: usize) -> &mut [f64] {
        if !self.mark[i] {
            self.mark[i] = true;
            self.touched.push(i);
        }
        &mut self.data[i * self.width..(i + 1) * self.width]
    }

    pub(crate) fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.width..(i + 1) * self.width]
    }

    pub(crate) fn touched(&self) -> &[usize] {
        &self.touched
    }

    pub(crate) fn clear(&mut self) {
        for &i in &self.touched {
            self.mark[i] = false;
            self.data[i * self.width..(i + 1) * self.width].fill(0.0);
        }
        self.touched.clear();
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Gradients {
    pub(crate) entities: RowGrad,
    pub(crate) relations: RowGrad,
    pub(crate) core: Vec<f64>,
    // Per-relation gradient of the TuckER matrix Wm, folded into `core` and
    // `relations` by `finish`.
    tucker_acc: HashMap<RelationId, Vec<f64>>,
}

impl Gradients {
    pub(crate) fn for_params(p: &ModelParams) -> Self {
        Self {
            entities: RowGrad::new(p.num_entities, p.entity_width()),
            relations: RowGrad::new(p.num_relations, p.relation_width()),
            core: vec![0.0; p.core.len()],
            tucker_acc: HashMap::new(),
        }
    }

    pub(crate) fn clear(&mut self) {
        self.entities.clear();
        self.relations.clear();
        self.core.fill(0.0);
        self.tucker_acc.clear();
    }

    /// `dW[k,a,b] += r_k dWm[a,b]`, `dr_k += Σ W[k,a,b] dWm[a,b]`.
    pub(crate) fn finish(&mut self, p: &ModelParams) {
        let dd = p.entity_dim * p.entity_dim;
        let mut acc: Vec<_> = self.tucker_acc.drain().collect();
        acc.sort_by_key(|(r, _)| *r);
        for (r, dwm) in acc {
            let rel = p.relation(r);
            let dr = self.relations.row_mut(r.index());
            for (k, &rk) in rel.iter().enumerate() {
                let slab = &p.core[k * dd..(k + 1) * dd];
                dr[k] += dot(slab, &dwm);
                for (g, &d) in self.core[k * dd..(k + 1) * dd].iter_mut().zip(&dwm) {
                    *g += rk * d;
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct LossSettings {
    pub margin: f64,
    pub regularization: f64,
    pub label_smoothing: f64,
}

impl From<&EmbeddingConfig> for LossSettings {
    fn from(c: &EmbeddingConfig) -> Self {
        Self {
            margin: c.margin,
            regularization: c.regularization,
            label_smoothing: c.label_smoothing,
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) enum Example {
    /// One positive against sampled corruptions.
    Contrastive { pos: Triple, negs: Vec<Triple> },
    /// Scores every entity for `(anchor, relation, ?)` or `(?, relation, anchor)`.
    OneToN {
        anchor: EntityId,
        relation: RelationId,
        dir: Direction,
        targets: Vec<EntityId>,
    },
}

/// Multiplicative dropout masks for TuckER, already scaled by `1/(1-p)`.
#[derive(Debug, Clone)]
pub(crate) struct TuckerMasks {
    pub input: Vec<f64>,
    pub hidden1: Vec<f64>,
    pub hidden2: Vec<f64>,
}

/// Smoothed 1-N targets: `(1 - ε) y + ε / n`.
pub fn smoothed_targets(num_entities: usize, positives: &[EntityId], epsilon: f64) -> Vec<f64> {
    let base = epsilon / num_entities as f64;
    let mut y = vec![base; num_entities];
    for e in positives {
        y[e.index()] = (1.0 - epsilon) + base;
    }
    y
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Adds `coeff * ∂score/∂θ` for one triple.
pub(crate) fn score_grad(p: &ModelParams, t: &Triple, coeff: f64, g: &mut Gradients) {
    let h = p.entity(t.head);
    let r = p.relation(t.relation);
    let tl = p.entity(t.tail);
    match p.kind {
        ModelKind::TransE => {
            let v: Vec<f64> = h.iter().zip(r).zip(tl).map(|((a, b), c)| a + b - c).collect();
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if n == 0.0 {
                return;
            }
            for (x, vi) in g.entities.row_mut(t.head.index()).iter_mut().zip(&v) {
                *x -= coeff * vi / n;
            }
            for (x, vi) in g.relations.row_mut(t.relation.index()).iter_mut().zip(&v) {
                *x -= coeff * vi / n;
            }
            for (x, vi) in g.entities.row_mut(t.tail.index()).iter_mut().zip(&v) {
                *x += coeff * vi / n;
            }
        }
        ModelKind::DistMult => {
            let (h, r, tl) = (h.to_vec(), r.to_vec(), tl.to_vec());
            for (i, x) in g.entities.row_mut(t.head.index()).iter_mut().enumerate() {
                *x += coeff * r[i] * tl[i];
            }
            for (i, x) in g.relations.row_mut(t.relation.index()).iter_mut().enumerate() {
                *x += coeff * h[i] * tl[i];
            }
            for (i, x) in g.entities.row_mut(t.tail.index()).iter_mut().enumerate() {
                *x += coeff * h[i] * r[i];
            }
        }
        ModelKind::ComplEx | ModelKind::ComplExN3 => {
            let d = p.entity_dim;
            let (h, r, tl) = (h.to_vec(), r.to_vec(), tl.to_vec());
            let (hr, hi) = h.split_at(d);
            let (rr, ri) = r.split_at(d);
            let (tr, ti) = tl.split_at(d);
            let gh = g.entities.row_mut(t.head.index());
            for i in 0..d {
                gh[i] += coeff * (rr[i] * tr[i] + ri[i] * ti[i]);
                gh[d + i] += coeff * (rr[i] * ti[i] - ri[i] * tr[i]);
            }
            let gr = g.relations.row_mut(t.relation.index());
            for i in 0..d {
                gr[i] += coeff * (hr[i] * tr[i] + hi[i] * ti[i]);
                gr[d + i] += coeff * (hr[i] * ti[i] - hi[i] * tr[i]);
            }
            let gt = g.entities.row_mut(t.tail.index());
            for i in 0..d {
                gt[i] += coeff * (hr[i] * rr[i] - hi[i] * ri[i]);
                gt[d + i] += coeff * (hi[i] * rr[i] + hr[i] * ri[i]);
            }
        }
        ModelKind::TuckER => {
            let wm = p.tucker_matrix(t.relation);
            let x = tucker_project(&wm, h, p.entity_dim, Direction::Tail);
            for (gx, xi) in g.entities.row_mut(t.tail.index()).iter_mut().zip(&x) {
                *gx += coeff * xi;
            }
            let dh = tucker_project(&wm, tl, p.entity_dim, Direction::Head);
            for (gx, v) in g.entities.row_mut(t.head.index()).iter_mut().zip(&dh) {
                *gx += coeff * v;
            }
            let d = p.entity_dim;
            let acc = g.tucker_acc.entry(t.relation).or_insert_with(|| vec![0.0; d * d]);
            for a in 0..d {
                for b in 0..d {
                    acc[a * d + b] += coeff * h[a] * tl[b];
                }
            }
        }
    }
}

/// Loss of one example; adds `scale * ∂loss/∂θ` to `g`. `wm` is the TuckER
/// relation matrix of the example's relation.
pub(crate) fn example_loss(
    p: &ModelParams,
    ex: &Example,
    s: &LossSettings,
    masks: Option<&TuckerMasks>,
    wm: Option<&[f64]>,
    scale: f64,
    g: &mut Gradients,
) -> f64 {
    match ex {
        Example::Contrastive { pos, negs } => contrastive(p, pos, negs, s, scale, g),
        Example::OneToN {
            anchor,
            relation,
            dir,
            targets,
        } => one_to_n(p, *anchor, *relation, *dir, targets, s, masks, wm, scale, g),
    }
}

fn contrastive(p: &ModelParams, pos: &Triple, negs: &[Triple], s: &LossSettings, scale: f64, g: &mut Gradients) -> f64 {
    let sp = score_unchecked(p, pos);
    let mut loss = 0.0;
    match p.kind {
        ModelKind::TransE => {
            for n in negs {
                let l = s.margin - sp + score_unchecked(p, n);
                if l > 0.0 {
                    loss += l;
                    score_grad(p, pos, -scale, g);
                    score_grad(p, n, scale, g);
                }
            }
        }
        _ => {
            loss += softplus(-sp);
            score_grad(p, pos, -scale * sigmoid(-sp), g);
            for n in negs {
                let sn = score_unchecked(p, n);
                loss += softplus(sn);
                score_grad(p, n, scale * sigmoid(sn), g);
            }
            if s.regularization > 0.0 {
                let lam = s.regularization;
                for (e, is_ent) in [(pos.head.index(), true), (pos.relation.index(), false), (pos.tail.index(), true)] {
                    let (row, grow) = if is_ent {
                        let w = p.entity_width();
                        (&p.entities[e * w..(e + 1) * w], g.entities.row_mut(e))
                    } else {
                        let w = p.relation_width();
                        (&p.relations[e * w..(e + 1) * w], g.relations.row_mut(e))
                    };
                    for (gx, x) in grow.iter_mut().zip(row) {
                        loss += lam * x * x;
                        *gx += scale * 2.0 * lam * x;
                    }
                }
            }
        }
    }
    loss
}

fn n3(row: &[f64], d: usize, lam: f64, scale: f64, grow: &mut [f64]) -> f64 {
    let mut loss = 0.0;
    for i in 0..d {
        let (re, im) = (row[i], row[d + i]);
        let m = (re * re + im * im).sqrt();
        loss += lam * m * m * m;
        grow[i] += scale * 3.0 * lam * m * re;
        grow[d + i] += scale * 3.0 * lam * m * im;
    }
    loss
}

#[allow(clippy::too_many_arguments)]
fn one_to_n(
    p: &ModelParams,
    anchor: EntityId,
    rel: RelationId,
    dir: Direction,
    targets: &[EntityId],
    s: &LossSettings,
    masks: Option<&TuckerMasks>,
    wm: Option<&[f64]>,
    scale: f64,
    g: &mut Gradients,
) -> f64 {
    let n = p.num_entities;
    let w = p.entity_width();
    let d = p.entity_dim;

    // Forward: the query vector q, with TuckER intermediates kept for backprop.
    let mut tucker = None;
    let q = if p.kind == ModelKind::TuckER {
        let owned;
        let wm = match wm {
            Some(m) => m,
            None => {
                owned = p.tucker_matrix(rel);
                &owned
            }
        };
        let a_in: Vec<f64> = match masks {
            Some(m) => p.entity(anchor).iter().zip(&m.input).map(|(x, k)| x * k).collect(),
            None => p.entity(anchor).to_vec(),
        };
        let wm_d: Vec<f64> = match masks {
            Some(m) => wm.iter().zip(&m.hidden1).map(|(x, k)| x * k).collect(),
            None => wm.to_vec(),
        };
        let mut x = tucker_project(&wm_d, &a_in, d, dir);
        if let Some(m) = masks {
            for (xi, k) in x.iter_mut().zip(&m.hidden2) {
                *xi *= k;
            }
        }
        tucker = Some((a_in, wm_d));
        x
    } else {
        p.query_vector(anchor, rel, dir, None)
            .expect("1-N training needs a bilinear model")
    };

    let scores: Vec<f64> = (0..n).map(|j| dot(&q, &p.entities[j * w..(j + 1) * w])).collect();
    let mut gs = vec![0.0; n];
    let mut loss = 0.0;
    match p.kind {
        ModelKind::TuckER => {
            let y = smoothed_targets(n, targets, s.label_smoothing);
            for j in 0..n {
                loss += (softplus(scores[j]) - y[j] * scores[j]) / n as f64;
                gs[j] = (sigmoid(scores[j]) - y[j]) / n as f64;
            }
        }
        _ => {
            let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let z: f64 = scores.iter().map(|s| (s - max).exp()).sum();
            let lse = max + z.ln();
            for &t in targets {
                loss += lse - scores[t.index()];
                for j in 0..n {
                    gs[j] += (scores[j] - lse).exp();
                }
                gs[t.index()] -= 1.0;
            }
        }
    }

    // Backward through the candidate dot products.
    let mut dq = vec![0.0; q.len()];
    for j in 0..n {
        if gs[j] == 0.0 {
            continue;
        }
        let e = &p.entities[j * w..(j + 1) * w];
        for (x, ei) in dq.iter_mut().zip(e) {
            *x += gs[j] * ei;
        }
        let coeff = scale * gs[j];
        for (x, qi) in g.entities.row_mut(j).iter_mut().zip(&q) {
            *x += coeff * qi;
        }
    }
    for x in &mut dq {
        *x *= scale;
    }

    match p.kind {
        ModelKind::TuckER => {
            let (a_in, wm_d) = tucker.unwrap();
            let mut dx = dq;
            if let Some(m) = masks {
                for (x, k) in dx.iter_mut().zip(&m.hidden2) {
                    *x *= k;
                }
            }
            let mut acc = vec![0.0; d * d];
            let da = match dir {
                Direction::Tail => {
                    for a in 0..d {
                        for b in 0..d {
                            acc[a * d + b] = a_in[a] * dx[b];
                        }
                    }
                    tucker_project(&wm_d, &dx, d, Direction::Head)
                }
                Direction::Head => {
                    for a in 0..d {
                        for b in 0..d {
                            acc[a * d + b] = dx[a] * a_in[b];
                        }
                    }
                    tucker_project(&wm_d, &dx, d, Direction::Tail)
                }
            };
            let ga = g.entities.row_mut(anchor.index());
            for (i, x) in ga.iter_mut().enumerate() {
                let k = masks.map_or(1.0, |m| m.input[i]);
                *x += da[i] * k;
            }
            let slot = g.tucker_acc.entry(rel).or_insert_with(|| vec![0.0; d * d]);
            for (i, x) in slot.iter_mut().enumerate() {
                let k = masks.map_or(1.0, |m| m.hidden1[i]);
                *x += acc[i] * k;
            }
        }
        _ => {
            let a = p.entity(anchor).to_vec();
            let r = p.relation(rel).to_vec();
            let (ar, ai) = a.split_at(d);
            let (rr, ri) = r.split_at(d);
            let (dr, di) = dq.split_at(d);
            let mut ga = vec![0.0; 2 * d];
            let mut gr = vec![0.0; 2 * d];
            for i in 0..d {
                match dir {
                    Direction::Tail => {
                        ga[i] = dr[i] * rr[i] + di[i] * ri[i];
                        ga[d + i] = -dr[i] * ri[i] + di[i] * rr[i];
                        gr[i] = dr[i] * ar[i] + di[i] * ai[i];
                        gr[d + i] = -dr[i] * ai[i] + di[i] * ar[i];
                    }
                    Direction::Head => {
                        ga[i] = dr[i] * rr[i] - di[i] * ri[i];
                        ga[d + i] = dr[i] * ri[i] + di[i] * rr[i];
                        gr[i] = dr[i] * ar[i] + di[i] * ai[i];
                        gr[d + i] = dr[i] * ai[i] - di[i] * ar[i];
                    }
                }
            }
            for (x, v) in g.entities.row_mut(anchor.index()).iter_mut().zip(&ga) {
                *x += v;
            }
            for (x, v) in g.relations.row_mut(rel.index()).iter_mut().zip(&gr) {
                *x += v;
            }
            if s.regularization > 0.0 {
                let lam = s.regularization;
                for &t in targets {
                    loss += n3(&a, d, lam, scale, g.entities.row_mut(anchor.index()));
                    loss += n3(&r, d, lam, scale, g.relations.row_mut(rel.index()));
                    loss += n3(p.entity(t), d, lam, scale, g.entities.row_mut(t.index()));
                }
            }
        }
    }
    loss
}
