use std::collections::HashSet;
use std::fmt;

use crate::store::{EntityId, RelationId, TripleSet};

/// Relation cardinality class at the 1.5 tph/hpt threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Cardinality {
    OneToOne,
    OneToMany,
    ManyToOne,
    ManyToMany,
}

impl Cardinality {
    /// Classifies from integer counts so that values sitting exactly on the
    /// threshold are not at the mercy of float rounding: `pairs / heads >= 1.5`
    /// is evaluated as `2 * pairs >= 3 * heads`.
    pub fn from_counts(pairs: usize, heads: usize, tails: usize) -> Cardinality {
        let many_tails = 2 * pairs >= 3 * heads;
        let many_heads = 2 * pairs >= 3 * tails;
        match (many_tails, many_heads) {
            (false, false) => Cardinality::OneToOne,
            (true, false) => Cardinality::OneToMany,
            (false, true) => Cardinality::ManyToOne,
            (true, true) => Cardinality::ManyToMany,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Cardinality::OneToOne => "1-1",
            Cardinality::OneToMany => "1-n",
            Cardinality::ManyToOne => "n-1",
            Cardinality::ManyToMany => "n-n",
        }
    }
}

impl fmt::Display for Cardinality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelationProfile {
    pub relation: RelationId,
    pub iri: String,
    pub triples: usize,
    pub distinct_heads: usize,
    pub distinct_tails: usize,
    /// Mean number of distinct tails per head.
    pub tph: f64,
    /// Mean number of distinct heads per tail.
    pub hpt: f64,
    pub cardinality: Cardinality,
}

/// One profile per relation present in `set`, ascending by handle.
pub fn profile_relations(set: &TripleSet) -> Vec<RelationProfile> {
    set.relations()
        .map(|r| {
            let pairs = set.pairs(r);
            let heads: HashSet<EntityId> = pairs.iter().map(|p| p.0).collect();
            let tails: HashSet<EntityId> = pairs.iter().map(|p| p.1).collect();
            let n = pairs.len();
            RelationProfile {
                relation: r,
                iri: set.relation_iri(r).to_owned(),
                triples: n,
                distinct_heads: heads.len(),
                distinct_tails: tails.len(),
                tph: n as f64 / heads.len() as f64,
                hpt: n as f64 / tails.len() as f64,
                cardinality: Cardinality::from_counts(n, heads.len(), tails.len()),
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CardinalitySummary {
    pub one_to_one: usize,
    pub one_to_many: usize,
    pub many_to_one: usize,
    pub many_to_many: usize,
}

impl CardinalitySummary {
    pub fn from_profiles(profiles: &[RelationProfile]) -> Self {
        let mut s = Self::default();
        for p in profiles {
            match p.cardinality {
                Cardinality::OneToOne => s.one_to_one += 1,
                Cardinality::OneToMany => s.one_to_many += 1,
                Cardinality::ManyToOne => s.many_to_one += 1,
                Cardinality::ManyToMany => s.many_to_many += 1,
            }
        }
        s
    }

    pub fn total(&self) -> usize {
        self.one_to_one + self.one_to_many + self.many_to_one + self.many_to_many
    }
}

impl fmt::Display for CardinalitySummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "1-1: {}  1-n: {}  n-1: {}  n-n: {}",
            self.one_to_one, self.one_to_many, self.many_to_one, self.many_to_many
        )
    }
}

pub fn profiles_csv(profiles: &[RelationProfile]) -> String {
    let mut out = String::from("relation,triples,distinct_heads,distinct_tails,tph,hpt,cardinality\n");
    for p in profiles {
        out.push_str(&format!(
            "{},{},{},{},{:.6},{:.6},{}\n",
            p.iri, p.triples, p.distinct_heads, p.distinct_tails, p.tph, p.hpt, p.cardinality
        ));
    }
    out
}
