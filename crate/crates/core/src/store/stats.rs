use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use super::{EntityId, EntityKind, RelationId, TripleSet};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationFrequency {
    pub relation: RelationId,
    pub iri: String,
    pub triples: usize,
    /// Heads sharing at least one tail with another head under this relation.
    pub shared_tail_heads: usize,
}

/// Summary counts of a triple set.
///
/// Two entity totals are reported: `distinct_entities` counts each node once,
/// while `subject_plus_object` adds the subject and object counts (nodes in
/// both positions counted twice). Published dataset summaries are not
/// consistent about which one they mean.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphStats {
    pub triples: usize,
    pub distinct_entities: usize,
    pub subject_entities: usize,
    pub object_entities: usize,
    pub both_positions: usize,
    pub subject_plus_object: usize,
    pub iri_entities: usize,
    pub literal_entities: usize,
    pub relations: usize,
    /// Sorted by descending triple count, then IRI.
    pub relation_frequencies: Vec<RelationFrequency>,
}

pub fn compute_stats(set: &TripleSet) -> GraphStats {
    let subjects: HashSet<EntityId> = set.heads().collect();
    let objects: HashSet<EntityId> = set.tails().collect();
    let both = subjects.intersection(&objects).count();
    let distinct: HashSet<EntityId> = subjects.union(&objects).copied().collect();
    let literal = distinct
        .iter()
        .filter(|&&e| set.entity_kind(e) == EntityKind::Literal)
        .count();

    let mut relation_frequencies: Vec<RelationFrequency> = set
        .relations()
        .map(|r| RelationFrequency {
            relation: r,
            iri: set.relation_iri(r).to_owned(),
            triples: set.pairs(r).len(),
            shared_tail_heads: shared_tail_count(set, r),
        })
        .collect();
    relation_frequencies.sort_by(|a, b| b.triples.cmp(&a.triples).then_with(|| a.iri.cmp(&b.iri)));

    GraphStats {
        triples: set.len(),
        distinct_entities: distinct.len(),
        subject_entities: subjects.len(),
        object_entities: objects.len(),
        both_positions: both,
        subject_plus_object: subjects.len() + objects.len(),
        iri_entities: distinct.len() - literal,
        literal_entities: literal,
        relations: relation_frequencies.len(),
        relation_frequencies,
    }
}

/// Number of heads that share at least one tail with a different head under
/// `relation`.
pub fn shared_tail_count(set: &TripleSet, relation: RelationId) -> usize {
    let mut heads_per_tail: HashMap<EntityId, usize> = HashMap::new();
    for &(_, t) in set.pairs(relation) {
        *heads_per_tail.entry(t).or_default() += 1;
    }
    let sharing: HashSet<EntityId> = set
        .pairs(relation)
        .iter()
        .filter(|(_, t)| heads_per_tail[t] >= 2)
        .map(|&(h, _)| h)
        .collect();
    sharing.len()
}

impl GraphStats {
    pub fn to_text(&self) -> String {
        let rows: [(&str, usize); 9] = [
            ("triples", self.triples),
            ("entities as subject", self.subject_entities),
            ("entities as object", self.object_entities),
            ("distinct entities", self.distinct_entities),
            ("subject + object entities", self.subject_plus_object),
            ("entities in subject and object position", self.both_positions),
            ("iri entities", self.iri_entities),
            ("literal entities", self.literal_entities),
            ("relations", self.relations),
        ];
        let mut out = String::new();
        for (name, value) in rows {
            let _ = writeln!(out, "{name:<42}{value:>12}");
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("element,count\n");
        let rows = [
            ("triples", self.triples),
            ("subject_entities", self.subject_entities),
            ("object_entities", self.object_entities),
            ("distinct_entities", self.distinct_entities),
            ("subject_plus_object", self.subject_plus_object),
            ("both_positions", self.both_positions),
            ("iri_entities", self.iri_entities),
            ("literal_entities", self.literal_entities),
            ("relations", self.relations),
        ];
        for (name, value) in rows {
            let _ = writeln!(out, "{name},{value}");
        }
        out
    }

    pub fn frequencies_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        let _ = w.write_record(["relation", "triples", "shared_tail_heads"]);
        for f in &self.relation_frequencies {
            let _ = w.write_record([
                f.iri.clone(),
                f.triples.to_string(),
                f.shared_tail_heads.to_string(),
            ]);
        }
        String::from_utf8(w.into_inner().unwrap_or_default()).unwrap_or_default()
    }
}
