use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::loss::{example_loss, Example, Gradients, LossSettings};
use super::{Direction, EmbeddingConfig, ModelKind, ModelParams};
use crate::error::Result;
use crate::store::{EntityId, Triple};

const COORDINATES: usize = 64;

#[derive(Debug, Clone, Copy)]
enum Coord {
    Entity(usize),
    Relation(usize),
    Core(usize),
}

fn get(p: &ModelParams, c: Coord) -> f64 {
    match c {
        Coord::Entity(i) => p.entities[i],
        Coord::Relation(i) => p.relations[i],
        Coord::Core(i) => p.core[i],
    }
}

fn set(p: &mut ModelParams, c: Coord, v: f64) {
    match c {
        Coord::Entity(i) => p.entities[i] = v,
        Coord::Relation(i) => p.relations[i] = v,
        Coord::Core(i) => p.core[i] = v,
    }
}

fn analytic(g: &Gradients, c: Coord) -> f64 {
    match c {
        Coord::Entity(i) => g.entities.data[i],
        Coord::Relation(i) => g.relations.data[i],
        Coord::Core(i) => g.core[i],
    }
}

/// Largest relative deviation `|a - n| / max(|a|, |n|, 1e-6)` between the
/// analytic gradient and central differences of step `epsilon`, over a
/// seeded random subset of the coordinates the training loss depends on.
///
/// The loss is the model's own training loss around `triple` with default
/// hyperparameters and dropout disabled.
pub fn gradient_check(params: &ModelParams, triple: &Triple, epsilon: f64) -> Result<f64> {
    gradient_check_with(params, triple, epsilon, &EmbeddingConfig::defaults_for(params.kind))
}

pub fn gradient_check_with(
    params: &ModelParams,
    triple: &Triple,
    epsilon: f64,
    config: &EmbeddingConfig,
) -> Result<f64> {
    params.check_triple(triple)?;
    let settings = LossSettings::from(config);
    let examples = check_examples(params, triple);
    let loss = |p: &ModelParams| -> f64 {
        let mut scratch = Gradients::for_params(p);
        examples
            .iter()
            .map(|ex| example_loss(p, ex, &settings, None, None, 1.0, &mut scratch))
            .sum()
    };

    let mut grads = Gradients::for_params(params);
    for ex in &examples {
        example_loss(params, ex, &settings, None, None, 1.0, &mut grads);
    }
    grads.finish(params);

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed ^ 0x9e37_79b9);
    let ew = params.entity_width();
    let rw = params.relation_width();
    let mut coords: Vec<Coord> = Vec::new();
    for e in [triple.head, triple.tail] {
        coords.extend((e.index() * ew..(e.index() + 1) * ew).map(Coord::Entity));
    }
    let r = triple.relation.index();
    coords.extend((r * rw..(r + 1) * rw).map(Coord::Relation));
    for _ in 0..COORDINATES {
        coords.push(Coord::Entity(rng.gen_range(0..params.entities.len())));
    }
    if !params.core.is_empty() {
        for _ in 0..COORDINATES {
            coords.push(Coord::Core(rng.gen_range(0..params.core.len())));
        }
    }
    coords.shuffle(&mut rng);
    coords.truncate(2 * COORDINATES);

    let mut probe = params.clone();
    let mut worst: f64 = 0.0;
    for c in coords {
        let x = get(params, c);
        set(&mut probe, c, x + epsilon);
        let up = loss(&probe);
        set(&mut probe, c, x - epsilon);
        let down = loss(&probe);
        set(&mut probe, c, x);
        let numeric = (up - down) / (2.0 * epsilon);
        let a = analytic(&grads, c);
        let dev = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
        worst = worst.max(dev);
    }
    Ok(worst)
}

/// The loss terms training would produce for `triple`: two fixed
/// corruptions for the sampled-negative models, both query directions for
/// the 1-N models.
fn check_examples(p: &ModelParams, t: &Triple) -> Vec<Example> {
    match p.kind {
        ModelKind::TransE | ModelKind::DistMult | ModelKind::ComplEx => {
            let n = p.num_entities as u32;
            let other = |e: EntityId| EntityId((e.0 + 1) % n.max(1));
            vec![Example::Contrastive {
                pos: *t,
                negs: vec![
                    Triple::new(other(t.head), t.relation, t.tail),
                    Triple::new(t.head, t.relation, other(t.tail)),
                ],
            }]
        }
        ModelKind::ComplExN3 | ModelKind::TuckER => vec![
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
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::store::RelationId;

    #[test]
    fn analytic_gradients_match_central_differences() {
        for kind in ModelKind::ALL {
            let rd = if kind == ModelKind::TuckER { 5 } else { 6 };
            let p = ModelParams::init(kind, 9, 3, 6, rd, 21).unwrap();
            let t = Triple::new(EntityId(2), RelationId(1), EntityId(7));
            let dev = gradient_check(&p, &t, 1e-5).unwrap();
            assert!(dev < 1e-4, "{kind}: {dev}");
        }
    }

    #[test]
    fn larger_parameters_still_check() {
        // Default init is small; scale up so every term is far from zero.
        for kind in ModelKind::ALL {
            let mut p = ModelParams::init(kind, 6, 2, 4, 4, 5).unwrap();
            for x in p.entities.iter_mut().chain(&mut p.relations).chain(&mut p.core) {
                *x *= 4.0;
            }
            let t = Triple::new(EntityId(0), RelationId(0), EntityId(3));
            let dev = gradient_check(&p, &t, 1e-5).unwrap();
            assert!(dev < 1e-4, "{kind}: {dev}");
        }
    }

    #[test]
    fn all_zero_distmult_has_zero_gradient() {
        let p = ModelParams::zeros(ModelKind::DistMult, 4, 1, 3, 3, 0).unwrap();
        let t = Triple::new(EntityId(0), RelationId(0), EntityId(1));
        assert_eq!(gradient_check(&p, &t, 1e-5).unwrap(), 0.0);
    }

    #[test]
    fn out_of_range_triple_rejected() {
        let p = ModelParams::zeros(ModelKind::DistMult, 4, 1, 3, 3, 0).unwrap();
        assert!(gradient_check(&p, &Triple::new(EntityId(9), RelationId(0), EntityId(1)), 1e-5).is_err());
    }
}
