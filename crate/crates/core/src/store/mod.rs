//! Triple storage: interning, indexing, parsing and summary statistics.
//!
//! A [`TripleSet`] is an immutable, deduplicated directed multigraph. Entity
//! and relation lexicons are shared behind an `Arc` so that subsets produced
//! by cleaning or splitting keep the same integer handles as their parent,
//! which is what the embedding models and the evaluator rely on.

mod csv_io;
mod lexicon;
mod stats;

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::sync::Arc;

pub use csv_io::{parse_triples, read_triples, write_triples, CsvDialect, HeaderMode, ParseSummary};
pub use lexicon::{
    flatten_iri, image_file_name, resolve_entity, resolve_relation, Language, Lexicon, LexiconPaths,
    OrphanKey,
};
pub use stats::{compute_stats, shared_tail_count, GraphStats, RelationFrequency};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EntityId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RelationId(pub u32);

impl EntityId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl RelationId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Whether a node is an IRI or a literal value embedded as a triple object.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EntityKind {
    Iri,
    Literal,
}

impl EntityKind {
    /// Absolute IRIs (`scheme:rest` without whitespace) and bare Wikidata
    /// identifiers (`Q123`, `P31`, `L7`) are IRI nodes; everything else is a
    /// literal.
    pub fn classify(value: &str) -> EntityKind {
        if is_wikidata_id(value) || looks_like_iri(value) {
            EntityKind::Iri
        } else {
            EntityKind::Literal
        }
    }
}

pub(crate) fn is_wikidata_id(value: &str) -> bool {
    let mut chars = value.chars();
    matches!(chars.next(), Some('Q' | 'P' | 'L'))
        && value.len() > 1
        && chars.all(|c| c.is_ascii_digit())
}

fn looks_like_iri(value: &str) -> bool {
    if value.chars().any(char::is_whitespace) {
        return false;
    }
    let Some((scheme, rest)) = value.split_once(':') else {
        return false;
    };
    !rest.is_empty()
        && scheme.len() >= 2
        && scheme.starts_with(|c: char| c.is_ascii_alphabetic())
        && scheme
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.'))
}

/// Bijective string interner handing out dense `u32` handles.
#[derive(Debug, Clone, Default)]
pub struct Interner {
    values: Vec<String>,
    index: HashMap<String, u32>,
}

impl Interner {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern(&mut self, value: &str) -> u32 {
        if let Some(&id) = self.index.get(value) {
            return id;
        }
        let id = u32::try_from(self.values.len()).expect("interner overflow");
        self.values.push(value.to_owned());
        self.index.insert(value.to_owned(), id);
        id
    }

    pub fn get(&self, value: &str) -> Option<u32> {
        self.index.get(value).copied()
    }

    pub fn resolve(&self, id: u32) -> Option<&str> {
        self.values.get(id as usize).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, &str)> {
        self.values
            .iter()
            .enumerate()
            .map(|(i, v)| (i as u32, v.as_str()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triple {
    pub head: EntityId,
    pub relation: RelationId,
    pub tail: EntityId,
}

impl Triple {
    pub fn new(head: EntityId, relation: RelationId, tail: EntityId) -> Self {
        Self {
            head,
            relation,
            tail,
        }
    }
}

#[derive(Debug, Default)]
struct RelationIndex {
    pairs: Vec<(EntityId, EntityId)>,
    set: HashSet<(EntityId, EntityId)>,
}

/// Interned, deduplicated triple collection with relation, head and tail
/// indexes. Immutable once built.
#[derive(Debug, Clone)]
pub struct TripleSet {
    entities: Arc<Interner>,
    relations: Arc<Interner>,
    triples: Vec<Triple>,
    by_relation: Arc<Vec<RelationIndex>>,
    by_head: Arc<HashMap<EntityId, Vec<u32>>>,
    by_tail: Arc<HashMap<EntityId, Vec<u32>>>,
}

impl TripleSet {
    /// Builds a set over existing lexicons. Duplicate triples are dropped,
    /// keeping first-occurrence order.
    pub fn from_triples(
        entities: Arc<Interner>,
        relations: Arc<Interner>,
        triples: impl IntoIterator<Item = Triple>,
    ) -> Self {
        let mut by_relation: Vec<RelationIndex> = Vec::new();
        by_relation.resize_with(relations.len(), RelationIndex::default);
        let mut by_head: HashMap<EntityId, Vec<u32>> = HashMap::new();
        let mut by_tail: HashMap<EntityId, Vec<u32>> = HashMap::new();
        let mut kept = Vec::new();
        for t in triples {
            debug_assert!(t.head.index() < entities.len() && t.tail.index() < entities.len());
            let idx = &mut by_relation[t.relation.index()];
            if !idx.set.insert((t.head, t.tail)) {
                continue;
            }
            idx.pairs.push((t.head, t.tail));
            let pos = kept.len() as u32;
            by_head.entry(t.head).or_default().push(pos);
            by_tail.entry(t.tail).or_default().push(pos);
            kept.push(t);
        }
        Self {
            entities,
            relations,
            triples: kept,
            by_relation: Arc::new(by_relation),
            by_head: Arc::new(by_head),
            by_tail: Arc::new(by_tail),
        }
    }

    /// An empty set sharing this set's lexicons.
    pub fn empty_like(&self) -> Self {
        Self::from_triples(self.entities.clone(), self.relations.clone(), [])
    }

    /// A subset keeping the triples for which `keep` returns true.
    pub fn filter(&self, mut keep: impl FnMut(&Triple) -> bool) -> Self {
        Self::from_triples(
            self.entities.clone(),
            self.relations.clone(),
            self.triples.iter().copied().filter(|t| keep(t)),
        )
    }

    /// Like [`TripleSet::filter`] but keyed by position in [`TripleSet::triples`].
    pub fn filter_indexed(&self, mut keep: impl FnMut(usize) -> bool) -> Self {
        Self::from_triples(
            self.entities.clone(),
            self.relations.clone(),
            self.triples
                .iter()
                .enumerate()
                .filter(|(i, _)| keep(*i))
                .map(|(_, t)| *t),
        )
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn contains(&self, triple: &Triple) -> bool {
        self.by_relation
            .get(triple.relation.index())
            .is_some_and(|c| c.set.contains(&(triple.head, triple.tail)))
    }

    pub fn entity_lexicon(&self) -> &Arc<Interner> {
        &self.entities
    }

    pub fn relation_lexicon(&self) -> &Arc<Interner> {
        &self.relations
    }

    /// Number of interned entity handles (may exceed the entities present).
    pub fn num_entity_handles(&self) -> usize {
        self.entities.len()
    }

    pub fn num_relation_handles(&self) -> usize {
        self.relations.len()
    }

    pub fn entity_iri(&self, id: EntityId) -> &str {
        self.entities.resolve(id.0).expect("entity handle from this lexicon")
    }

    pub fn entity_kind(&self, id: EntityId) -> EntityKind {
        EntityKind::classify(self.entity_iri(id))
    }

    pub fn entity_id(&self, iri: &str) -> Option<EntityId> {
        self.entities.get(iri).map(EntityId)
    }

    pub fn relation_iri(&self, id: RelationId) -> &str {
        self.relations
            .resolve(id.0)
            .expect("relation handle from this lexicon")
    }

    pub fn relation_id(&self, iri: &str) -> Option<RelationId> {
        self.relations.get(iri).map(RelationId)
    }

    /// Entity pairs carrying `relation`, in insertion order.
    pub fn pairs(&self, relation: RelationId) -> &[(EntityId, EntityId)] {
        self.by_relation
            .get(relation.index())
            .map(|c| c.pairs.as_slice())
            .unwrap_or(&[])
    }

    pub fn pair_set(&self, relation: RelationId) -> Option<&HashSet<(EntityId, EntityId)>> {
        self.by_relation.get(relation.index()).map(|c| &c.set)
    }

    /// Relations with at least one triple, by ascending handle.
    pub fn relations(&self) -> impl Iterator<Item = RelationId> + '_ {
        self.by_relation
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.pairs.is_empty())
            .map(|(i, _)| RelationId(i as u32))
    }

    pub fn relation_count(&self) -> usize {
        self.relations().count()
    }

    pub fn outgoing(&self, head: EntityId) -> impl Iterator<Item = &Triple> + '_ {
        self.by_head
            .get(&head)
            .into_iter()
            .flatten()
            .map(|&i| &self.triples[i as usize])
    }

    pub fn incoming(&self, tail: EntityId) -> impl Iterator<Item = &Triple> + '_ {
        self.by_tail
            .get(&tail)
            .into_iter()
            .flatten()
            .map(|&i| &self.triples[i as usize])
    }

    /// Distinct entities occurring in at least one triple, ascending.
    pub fn entities(&self) -> Vec<EntityId> {
        let mut seen: Vec<EntityId> = self
            .by_head
            .keys()
            .chain(self.by_tail.keys())
            .copied()
            .collect::<HashSet<_>>()
            .into_iter()
            .collect();
        seen.sort_unstable();
        seen
    }

    pub fn heads(&self) -> impl Iterator<Item = EntityId> + '_ {
        self.by_head.keys().copied()
    }

    pub fn tails(&self) -> impl Iterator<Item = EntityId> + '_ {
        self.by_tail.keys().copied()
    }

    /// Resolves a triple to its string form.
    pub fn render(&self, t: &Triple) -> (&str, &str, &str) {
        (
            self.entity_iri(t.head),
            self.relation_iri(t.relation),
            self.entity_iri(t.tail),
        )
    }
}

impl fmt::Display for TripleSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "TripleSet({} triples, {} relations)",
            self.len(),
            self.relation_count()
        )
    }
}

/// Mutable front end used while reading files or minting new entities.
#[derive(Debug, Default, Clone)]
pub struct TripleSetBuilder {
    entities: Interner,
    relations: Interner,
    triples: Vec<Triple>,
    seen: HashSet<Triple>,
    raw_count: usize,
}

impl TripleSetBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Starts from an existing set, keeping every handle stable.
    pub fn from_set(set: &TripleSet) -> Self {
        Self {
            entities: (*set.entities).clone(),
            relations: (*set.relations).clone(),
            triples: set.triples.clone(),
            seen: set.triples.iter().copied().collect(),
            raw_count: set.len(),
        }
    }

    pub fn intern_entity(&mut self, iri: &str) -> EntityId {
        EntityId(self.entities.intern(iri))
    }

    pub fn intern_relation(&mut self, iri: &str) -> RelationId {
        RelationId(self.relations.intern(iri))
    }

    /// Records a triple; returns false when it was already present.
    pub fn insert(&mut self, triple: Triple) -> bool {
        self.raw_count += 1;
        if self.seen.insert(triple) {
            self.triples.push(triple);
            true
        } else {
            false
        }
    }

    pub fn insert_str(&mut self, head: &str, relation: &str, tail: &str) -> bool {
        let t = Triple::new(
            self.intern_entity(head),
            self.intern_relation(relation),
            self.intern_entity(tail),
        );
        self.insert(t)
    }

    /// Number of insert calls, duplicates included.
    pub fn raw_count(&self) -> usize {
        self.raw_count
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn build(self) -> TripleSet {
        TripleSet::from_triples(
            Arc::new(self.entities),
            Arc::new(self.relations),
            self.triples,
        )
    }
}
