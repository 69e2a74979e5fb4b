use super::loss::{Gradients, RowGrad};
use super::{ModelParams, OptimizerKind};

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPS: f64 = 1e-8;

#[derive(Debug, Clone, Default)]
struct Moments {
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Moments {
    fn new(len: usize) -> Self {
        Self {
            m: vec![0.0; len],
            v: vec![0.0; len],
        }
    }

    fn step(&mut self, range: std::ops::Range<usize>, params: &mut [f64], grads: &[f64], lr_t: f64) {
        for ((i, p), &g) in range.clone().zip(&mut params[range]).zip(grads) {
            let m = &mut self.m[i];
            let v = &mut self.v[i];
            *m = BETA1 * *m + (1.0 - BETA1) * g;
            *v = BETA2 * *v + (1.0 - BETA2) * g * g;
            *p -= lr_t * *m / (v.sqrt() + EPS);
        }
    }
}

/// Plain SGD or Adam. Adam updates only the rows that received a gradient
/// in the current step (lazy moments), with bias correction from the global
/// step count.
#[derive(Debug, Clone)]
pub(crate) struct Optimizer {
    kind: OptimizerKind,
    step: u64,
    entities: Moments,
    relations: Moments,
    core: Moments,
}

impl Optimizer {
    pub(crate) fn new(kind: OptimizerKind, p: &ModelParams) -> Self {
        let (e, r, c) = match kind {
            OptimizerKind::Sgd => (0, 0, 0),
            OptimizerKind::Adam => (p.entities.len(), p.relations.len(), p.core.len()),
        };
        Self {
            kind,
            step: 0,
            entities: Moments::new(e),
            relations: Moments::new(r),
            core: Moments::new(c),
        }
    }

    pub(crate) fn apply(&mut self, p: &mut ModelParams, g: &Gradients, lr: f64) {
        self.step += 1;
        let ew = p.entity_width();
        let rw = p.relation_width();
        match self.kind {
            OptimizerKind::Sgd => {
                sgd_rows(&mut p.entities, &g.entities, ew, lr);
                sgd_rows(&mut p.relations, &g.relations, rw, lr);
                for (x, d) in p.core.iter_mut().zip(&g.core) {
                    *x -= lr * d;
                }
            }
            OptimizerKind::Adam => {
                let t = self.step as i32;
                let lr_t = lr * (1.0 - BETA2.powi(t)).sqrt() / (1.0 - BETA1.powi(t));
                for &i in g.entities.touched() {
                    self.entities.step(i * ew..(i + 1) * ew, &mut p.entities, g.entities.row(i), lr_t);
                }
                for &i in g.relations.touched() {
                    self.relations.step(i * rw..(i + 1) * rw, &mut p.relations, g.relations.row(i), lr_t);
                }
                if !p.core.is_empty() {
                    let len = p.core.len();
                    self.core.step(0..len, &mut p.core, &g.core, lr_t);
                }
            }
        }
    }
}

fn sgd_rows(table: &mut [f64], g: &RowGrad, width: usize, lr: f64) {
    for &i in g.touched() {
        for (x, d) in table[i * width..(i + 1) * width].iter_mut().zip(g.row(i)) {
            *x -= lr * d;
        }
    }
}
