use std::collections::{BTreeMap, HashMap};
use std::io::Write;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::loss::{example_loss, Example, Gradients, LossSettings, TuckerMasks};
use super::optim::Optimizer;
use super::{Direction, EmbeddingConfig, ModelKind, ModelParams};
use crate::error::{Error, Result};
use crate::store::{EntityId, RelationId, Triple, TripleSet};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochLoss {
    pub epoch: usize,
    /// Mean per-example loss over the epoch.
    pub loss: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: ModelParams,
    pub losses: Vec<EpochLoss>,
}

const RESAMPLE_ATTEMPTS: usize = 10;

/// Trains on every triple of `train_set`.
///
/// Tables are sized to the lexicon of `train_set`, so triples from a split
/// sharing that lexicon can be scored afterwards. Runs single-threaded and
/// is bitwise reproducible for a fixed config.
pub fn train(train_set: &TripleSet, config: &EmbeddingConfig) -> Result<TrainOutcome> {
    config.validate()?;
    if train_set.is_empty() {
        return Err(Error::TooSmall("training set is empty".into()));
    }
    let mut params = ModelParams::init(
        config.model,
        train_set.num_entity_handles(),
        train_set.num_relation_handles(),
        config.entity_dim,
        config.relation_dim,
        config.seed,
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(1));
    let mut grads = Gradients::for_params(&params);
    let mut opt = Optimizer::new(config.optimizer, &params);
    let settings = LossSettings::from(config);
    let candidates = train_set.entities();
    let mut lr = config.learning_rate;
    let mut losses = Vec::with_capacity(config.epochs);

    let one_to_n = one_to_n_examples(train_set, config.model);

    for epoch in 1..=config.epochs {
        let examples: Vec<Example> = match &one_to_n {
            Some(fixed) => {
                let mut ex = fixed.clone();
                ex.shuffle(&mut rng);
                ex
            }
            None => {
                let mut order: Vec<Triple> = train_set.triples().to_vec();
                order.shuffle(&mut rng);
                order
                    .into_iter()
                    .map(|pos| {
                        let negs = (0..config.negatives)
                            .map(|_| corrupt(&pos, &candidates, train_set, config.resample_known_true, &mut rng))
                            .collect();
                        Example::Contrastive { pos, negs }
                    })
                    .collect()
            }
        };

        let mut total = 0.0;
        for batch in examples.chunks(config.batch_size) {
            grads.clear();
            let scale = 1.0 / batch.len() as f64;
            let mut wm_cache: HashMap<RelationId, Vec<f64>> = HashMap::new();
            for ex in batch {
                let (masks, wm) = match (config.model, ex) {
                    (ModelKind::TuckER, Example::OneToN { relation, .. }) => {
                        let wm = wm_cache
                            .entry(*relation)
                            .or_insert_with(|| params.tucker_matrix(*relation));
                        (Some(dropout_masks(config, &mut rng)), Some(wm.as_slice()))
                    }
                    _ => (None, None),
                };
                total += example_loss(&params, ex, &settings, masks.as_ref(), wm, scale, &mut grads);
            }
            grads.finish(&params);
            opt.apply(&mut params, &grads, lr);
            if config.model == ModelKind::TransE {
                for &i in grads.entities.touched() {
                    normalize(params.entity_mut(EntityId(i as u32)));
                }
            }
        }
        let loss = total / examples.len() as f64;
        if !loss.is_finite() || !params.is_finite() {
            return Err(Error::Divergence { epoch, loss });
        }
        log::debug!("{} epoch {epoch}: loss {loss:.6}", config.model);
        losses.push(EpochLoss { epoch, loss });
        lr *= config.decay_rate;
    }
    Ok(TrainOutcome { params, losses })
}

fn normalize(row: &mut [f64]) {
    let n = row.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        for x in row {
            *x /= n;
        }
    }
}

/// Replaces head or tail (fair coin) with a uniformly drawn entity.
fn corrupt(
    pos: &Triple,
    candidates: &[EntityId],
    known: &TripleSet,
    resample: bool,
    rng: &mut ChaCha8Rng,
) -> Triple {
    let mut neg = *pos;
    for _ in 0..RESAMPLE_ATTEMPTS {
        let e = candidates[rng.gen_range(0..candidates.len())];
        neg = if rng.gen_bool(0.5) {
            Triple::new(e, pos.relation, pos.tail)
        } else {
            Triple::new(pos.head, pos.relation, e)
        };
        if !resample || !known.contains(&neg) {
            break;
        }
    }
    neg
}

fn keep_mask(len: usize, p: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    if p == 0.0 {
        return vec![1.0; len];
    }
    let keep = 1.0 / (1.0 - p);
    (0..len)
        .map(|_| if rng.gen_bool(p) { 0.0 } else { keep })
        .collect()
}

fn dropout_masks(c: &EmbeddingConfig, rng: &mut ChaCha8Rng) -> TuckerMasks {
    let d = c.entity_dim;
    TuckerMasks {
        input: keep_mask(d, c.input_dropout, rng),
        hidden1: keep_mask(d * d, c.hidden_dropout1, rng),
        hidden2: keep_mask(d, c.hidden_dropout2, rng),
    }
}

/// TuckER: one multi-label example per `(h, r)` and per `(r, t)`.
/// ComplEx-N3: one single-target example per triple and direction.
fn one_to_n_examples(set: &TripleSet, kind: ModelKind) -> Option<Vec<Example>> {
    match kind {
        ModelKind::TuckER => {
            let mut tails: BTreeMap<(EntityId, RelationId), Vec<EntityId>> = BTreeMap::new();
            let mut heads: BTreeMap<(EntityId, RelationId), Vec<EntityId>> = BTreeMap::new();
            for t in set.triples() {
                tails.entry((t.head, t.relation)).or_default().push(t.tail);
                heads.entry((t.tail, t.relation)).or_default().push(t.head);
            }
            let mk = |dir: Direction| {
                move |((anchor, relation), targets): ((EntityId, RelationId), Vec<EntityId>)| Example::OneToN {
                    anchor,
                    relation,
                    dir,
                    targets,
                }
            };
            Some(
                tails
                    .into_iter()
                    .map(mk(Direction::Tail))
                    .chain(heads.into_iter().map(mk(Direction::Head)))
                    .collect(),
            )
        }
        ModelKind::ComplExN3 => Some(
            set.triples()
                .iter()
                .flat_map(|t| {
                    [
                        Example::OneToN {
                            anchor: t.head,
                            relation: t.relation,
                            dir: Direction::Tail,
                            targets: vec![t.tail],
                        },
                        Example::OneToN {
                            anchor: t.tail,
                            relation: t.relation,
                            dir: Direction::Head,
                            targets: vec![t.head],
                        },
                    ]
                })
                .collect(),
        ),
        _ => None,
    }
}

/// `epoch,loss` CSV.
pub fn write_loss_log<W: Write>(losses: &[EpochLoss], mut out: W) -> Result<()> {
    let mut text = String::from("epoch,loss\n");
    for l in losses {
        text.push_str(&format!("{},{}\n", l.epoch, l.loss));
    }
    out.write_all(text.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| Error::io("loss log", e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::score_unchecked;
    use crate::store::TripleSetBuilder;

    fn toy() -> TripleSet {
        let mut b = TripleSetBuilder::new();
        for i in 0..5 {
            b.insert_str(&format!("e{i}"), "next", &format!("e{}", i + 1));
        }
        for i in 0..4 {
            b.insert_str(&format!("e{i}"), "skip", &format!("e{}", i + 2));
        }
        for i in 0..3 {
            b.insert_str(&format!("e{i}"), "skip", &format!("e{}", i + 3));
        }
        b.build()
    }

    fn small(kind: ModelKind) -> EmbeddingConfig {
        EmbeddingConfig {
            entity_dim: 8,
            relation_dim: 8,
            epochs: 5,
            batch_size: 4,
            ..EmbeddingConfig::defaults_for(kind)
        }
    }

    #[test]
    fn zero_epochs_returns_initialisation() {
        let set = toy();
        for kind in ModelKind::ALL {
            let cfg = EmbeddingConfig { epochs: 0, ..small(kind) };
            let out = train(&set, &cfg).unwrap();
            let init = ModelParams::init(kind, set.num_entity_handles(), set.num_relation_handles(), 8, 8, cfg.seed).unwrap();
            assert_eq!(out.params, init, "{kind}");
            assert!(out.losses.is_empty());
        }
    }

    #[test]
    fn bitwise_reproducible() {
        let set = toy();
        for kind in ModelKind::ALL {
            let a = train(&set, &small(kind)).unwrap();
            let b = train(&set, &small(kind)).unwrap();
            assert_eq!(a.params, b.params, "{kind}");
            assert_eq!(a.losses, b.losses);
        }
    }

    #[test]
    fn loss_decreases_for_every_model() {
        let set = toy();
        for kind in ModelKind::ALL {
            let cfg = EmbeddingConfig {
                epochs: 60,
                learning_rate: 0.02,
                input_dropout: 0.0,
                hidden_dropout1: 0.0,
                hidden_dropout2: 0.0,
                ..small(kind)
            };
            let out = train(&set, &cfg).unwrap();
            let first = out.losses.first().unwrap().loss;
            let last = out.losses.last().unwrap().loss;
            assert!(last < first, "{kind}: {first} -> {last}");
        }
    }

    #[test]
    fn transe_entities_stay_on_unit_sphere() {
        let set = toy();
        let out = train(&set, &small(ModelKind::TransE)).unwrap();
        for e in set.entities() {
            let n: f64 = out.params.entity(e).iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((n - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn divergence_is_reported() {
        let set = toy();
        let cfg = EmbeddingConfig {
            learning_rate: 1e300,
            optimizer: crate::models::OptimizerKind::Sgd,
            regularization: 1.0,
            epochs: 3,
            ..small(ModelKind::DistMult)
        };
        assert!(matches!(train(&set, &cfg), Err(Error::Divergence { .. })));
    }

    #[test]
    fn transe_learns_translation_toy() {
        let set = toy();
        let cfg = EmbeddingConfig {
            epochs: 200,
            learning_rate: 0.05,
            negatives: 4,
            margin: 0.5,
            ..small(ModelKind::TransE)
        };
        let p = train(&set, &cfg).unwrap().params;
        // Filtered tail ranking of every training triple.
        let mut hits = 0;
        for t in set.triples() {
            let s = score_unchecked(&p, t);
            let better = set
                .entities()
                .into_iter()
                .filter(|&e| e != t.tail && !set.contains(&Triple::new(t.head, t.relation, e)))
                .filter(|&e| score_unchecked(&p, &Triple::new(t.head, t.relation, e)) > s)
                .count();
            if better == 0 {
                hits += 1;
            }
        }
        assert!(hits as f64 / set.len() as f64 >= 0.8, "hits {hits}/12");
    }

    #[test]
    fn loss_log_format() {
        let mut buf = Vec::new();
        write_loss_log(&[EpochLoss { epoch: 1, loss: 0.5 }], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "epoch,loss\n1,0.5\n");
    }
}
