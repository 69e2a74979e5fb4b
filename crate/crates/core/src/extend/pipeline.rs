use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs;

use serde::{Deserialize, Serialize};

use super::client::{ClientError, ModelClient, ModelRequest, RequestKind, RequestTag};
use super::prompt::{vision_question, PromptInput, PromptTemplate};
use super::vectors::{cosine, tokens, WordVectorStore};
use crate::error::{Error, Result};
use crate::store::{
    image_file_name, resolve_relation, EntityId, Language, Lexicon, RelationId, TripleSet, TripleSetBuilder,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Source {
    TextModel,
    VisionModel,
}

impl Source {
    pub fn as_str(self) -> &'static str {
        match self {
            Source::TextModel => "text-model",
            Source::VisionModel => "vision-model",
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CandidateStatus {
    Raw,
    DuplicateOfKg,
    DuplicateCrossModel,
    RejectedByImageCheck,
    Accepted,
}

impl CandidateStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            CandidateStatus::Raw => "raw",
            CandidateStatus::DuplicateOfKg => "duplicate-of-kg",
            CandidateStatus::DuplicateCrossModel => "duplicate-cross-model",
            CandidateStatus::RejectedByImageCheck => "rejected-by-image-check",
            CandidateStatus::Accepted => "accepted",
        }
    }
}

impl fmt::Display for CandidateStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Nearest {
    pub surface: String,
    pub similarity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub subject: EntityId,
    pub relation: RelationId,
    /// As produced by the model, trimmed.
    pub surface: String,
    pub source: Source,
    /// Most similar existing object of the relation.
    pub nearest: Option<Nearest>,
    /// Most similar candidate of the other model, when compared.
    pub cross_model: Option<Nearest>,
    pub status: CandidateStatus,
    pub note: Option<String>,
}

impl Candidate {
    pub fn new(subject: EntityId, relation: RelationId, surface: impl Into<String>, source: Source) -> Self {
        Self {
            subject,
            relation,
            surface: surface.into(),
            source,
            nearest: None,
            cross_model: None,
            status: CandidateStatus::Raw,
            note: None,
        }
    }
}

/// A model call that produced no candidates.
#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub subject: EntityId,
    pub source: Source,
    pub kind: FailureKind,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureKind {
    MissingContext,
    ParseFailure,
    ClientError,
}

impl FailureKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FailureKind::MissingContext => "missing-context",
            FailureKind::ParseFailure => "parse-failure",
            FailureKind::ClientError => "client-error",
        }
    }
}

/// Lower-cased tokens joined by single spaces; the key for exact matches.
pub fn normalize(surface: &str) -> String {
    tokens(surface).map(str::to_lowercase).collect::<Vec<_>>().join(" ")
}

/// Reads a model answer as a JSON array of strings. Code fences and text
/// around the outermost brackets are tolerated; any non-string element makes
/// the answer unparseable. Elements are trimmed, empty ones dropped.
pub fn parse_candidate_list(text: &str) -> Option<Vec<String>> {
    let parse = |s: &str| serde_json::from_str::<Vec<String>>(s).ok();
    let list = parse(text.trim()).or_else(|| {
        let start = text.find('[')?;
        let end = text.rfind(']')?;
        (start < end).then(|| parse(&text[start..=end])).flatten()
    })?;
    Some(
        list.into_iter()
            .map(|s| s.trim().to_owned())
            .filter(|s| !s.is_empty())
            .collect(),
    )
}

/// Leading yes/no token, case-insensitive.
pub fn parse_yes_no(text: &str) -> Option<bool> {
    let first = tokens(text).next()?.to_lowercase();
    match first.as_str() {
        "yes" => Some(true),
        "no" => Some(false),
        _ => None,
    }
}

pub(crate) fn call(client: &dyn ModelClient, req: &ModelRequest, retries: u32) -> std::result::Result<String, ClientError> {
    let mut attempt = 0;
    loop {
        match client.complete(req) {
            Err(e) if e.is_retriable() && attempt < retries => {
                log::warn!("{}: {e}; retrying", req.tag);
                attempt += 1;
            }
            other => return other,
        }
    }
}

/// Result of one extraction call.
#[derive(Debug, Clone, PartialEq)]
pub enum Extraction {
    Surfaces(Vec<String>),
    /// Neither the first answer nor the strict re-query was a JSON array.
    Unparseable { last_answer: String },
}

/// Sends `request`; if the answer is not a JSON array, re-sends once with
/// `strict_prompt` and attempt 2. Duplicate surfaces (after normalisation)
/// keep their first spelling.
pub fn extract_candidates(
    client: &dyn ModelClient,
    request: &ModelRequest,
    strict_prompt: &str,
) -> std::result::Result<Extraction, ClientError> {
    extract_with_retries(client, request, strict_prompt, 0)
}

fn extract_with_retries(
    client: &dyn ModelClient,
    request: &ModelRequest,
    strict_prompt: &str,
    retries: u32,
) -> std::result::Result<Extraction, ClientError> {
    let first = call(client, request, retries)?;
    let list = match parse_candidate_list(&first) {
        Some(l) => l,
        None => {
            let mut strict = request.clone();
            strict.prompt = strict_prompt.to_owned();
            strict.tag.attempt = 2;
            let second = call(client, &strict, retries)?;
            match parse_candidate_list(&second) {
                Some(l) => l,
                None => return Ok(Extraction::Unparseable { last_answer: second }),
            }
        }
    };
    let mut seen = HashSet::new();
    Ok(Extraction::Surfaces(
        list.into_iter().filter(|s| seen.insert(normalize(s))).collect(),
    ))
}

/// Which existing objects a candidate is compared with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchScope {
    /// Every object of the relation, whatever the subject.
    #[default]
    Relation,
    /// Only the objects the candidate's own subject already has.
    Subject,
}

struct KnownObject {
    surface: String,
    key: String,
    vector: Option<Vec<f64>>,
}

/// Existing objects of one relation, vectorised once.
pub struct ExistingObjects {
    objects: Vec<KnownObject>,
    by_subject: HashMap<EntityId, Vec<usize>>,
    scope: MatchScope,
}

impl ExistingObjects {
    pub fn new(set: &TripleSet, lexicon: &Lexicon, relation: RelationId, store: &WordVectorStore, scope: MatchScope) -> Self {
        let mut objects = Vec::new();
        let mut index: HashMap<EntityId, usize> = HashMap::new();
        let mut by_subject: HashMap<EntityId, Vec<usize>> = HashMap::new();
        for &(h, t) in set.pairs(relation) {
            let i = *index.entry(t).or_insert_with(|| {
                let surface = lexicon.entity_surface(set, t).to_owned();
                objects.push(KnownObject {
                    key: normalize(&surface),
                    vector: store.phrase_vector(&surface),
                    surface,
                });
                objects.len() - 1
            });
            by_subject.entry(h).or_default().push(i);
        }
        Self {
            objects,
            by_subject,
            scope,
        }
    }

    pub fn len(&self) -> usize {
        self.objects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }

    /// Highest similarity to an object in scope; an exact normalised match
    /// counts as 1. Ties keep the first object in triple order.
    pub fn nearest(&self, subject: EntityId, surface: &str, store: &WordVectorStore) -> Option<Nearest> {
        let key = normalize(surface);
        let vector = store.phrase_vector(surface);
        let all: Vec<usize>;
        let pool: &[usize] = match self.scope {
            MatchScope::Relation => {
                all = (0..self.objects.len()).collect();
                &all
            }
            MatchScope::Subject => self.by_subject.get(&subject).map_or(&[], Vec::as_slice),
        };
        let mut best: Option<Nearest> = None;
        for &i in pool {
            let o = &self.objects[i];
            let sim = if o.key == key {
                1.0
            } else {
                match (&vector, &o.vector) {
                    (Some(a), Some(b)) => cosine(a, b),
                    _ => 0.0,
                }
            };
            if best.as_ref().is_none_or(|b| sim > b.similarity) {
                best = Some(Nearest {
                    surface: o.surface.clone(),
                    similarity: sim,
                });
            }
        }
        best
    }
}

fn surface_similarity(store: &WordVectorStore, a: &str, b: &str) -> f64 {
    if normalize(a) == normalize(b) {
        1.0
    } else {
        super::vectors::phrase_similarity(store, a, b)
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if tau > 0.0 && tau < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("tau must be in (0, 1), got {tau}")))
    }
}

/// Grounds raw candidates against the graph, then resolves overlaps
/// between the two models.
///
/// A candidate whose nearest existing object reaches `tau` becomes
/// [`CandidateStatus::DuplicateOfKg`]. Among the survivors of one subject, a
/// vision-model candidate reaching `tau` against a text-model candidate
/// becomes [`CandidateStatus::DuplicateCrossModel`]; the text candidate
/// stays. Survivors remain `Raw`.
pub fn match_entities(
    candidates: &mut [Candidate],
    set: &TripleSet,
    lexicon: &Lexicon,
    store: &WordVectorStore,
    tau: f64,
    scope: MatchScope,
) -> Result<()> {
    check_tau(tau)?;
    let mut cache: HashMap<RelationId, ExistingObjects> = HashMap::new();
    for c in candidates.iter() {
        cache
            .entry(c.relation)
            .or_insert_with(|| ExistingObjects::new(set, lexicon, c.relation, store, scope));
    }
    ground(candidates, |r| &cache[&r], store, tau);
    resolve_cross_model(candidates, store, tau);
    Ok(())
}

fn ground<'a>(
    candidates: &mut [Candidate],
    existing: impl Fn(RelationId) -> &'a ExistingObjects,
    store: &WordVectorStore,
    tau: f64,
) {
    for c in candidates.iter_mut().filter(|c| c.status == CandidateStatus::Raw) {
        c.nearest = existing(c.relation).nearest(c.subject, &c.surface, store);
        if c.nearest.as_ref().is_some_and(|n| n.similarity >= tau) {
            c.status = CandidateStatus::DuplicateOfKg;
        }
    }
}

fn resolve_cross_model(candidates: &mut [Candidate], store: &WordVectorStore, tau: f64) {
    let texts: Vec<(EntityId, RelationId, String)> = candidates
        .iter()
        .filter(|c| c.status == CandidateStatus::Raw && c.source == Source::TextModel)
        .map(|c| (c.subject, c.relation, c.surface.clone()))
        .collect();
    for c in candidates
        .iter_mut()
        .filter(|c| c.status == CandidateStatus::Raw && c.source == Source::VisionModel)
    {
        let mut best: Option<Nearest> = None;
        for (s, r, surface) in &texts {
            if *s != c.subject || *r != c.relation {
                continue;
            }
            let sim = surface_similarity(store, &c.surface, surface);
            if best.as_ref().is_none_or(|b| sim > b.similarity) {
                best = Some(Nearest {
                    surface: surface.clone(),
                    similarity: sim,
                });
            }
        }
        if let Some(b) = best {
            if b.similarity >= tau {
                c.status = CandidateStatus::DuplicateCrossModel;
            }
            c.cross_model = Some(b);
        }
    }
}

/// Outcome of the image check for one candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub status: CandidateStatus,
    pub note: Option<String>,
}

impl Verdict {
    fn accept() -> Self {
        Self {
            status: CandidateStatus::Accepted,
            note: None,
        }
    }

    fn reject(note: Option<&str>) -> Self {
        Self {
            status: CandidateStatus::RejectedByImageCheck,
            note: note.map(str::to_owned),
        }
    }
}

/// Asks the vision model whether a text-model candidate is visible in the
/// subject's image. Vision-model candidates, and candidates of relations
/// that are not visually checkable, are accepted without a query. A missing
/// image, an unreadable answer after one strict re-query, or a client error
/// rejects with a note.
#[allow(clippy::too_many_arguments)]
pub fn cross_validate(
    client: Option<&dyn ModelClient>,
    candidate: &Candidate,
    subject_iri: &str,
    relation_iri: &str,
    image: Option<&[u8]>,
    visually_checkable: bool,
    max_tokens: u32,
) -> Verdict {
    cross_validate_with_retries(client, candidate, subject_iri, relation_iri, image, visually_checkable, max_tokens, 0)
}

#[allow(clippy::too_many_arguments)]
fn cross_validate_with_retries(
    client: Option<&dyn ModelClient>,
    candidate: &Candidate,
    subject_iri: &str,
    relation_iri: &str,
    image: Option<&[u8]>,
    visually_checkable: bool,
    max_tokens: u32,
    retries: u32,
) -> Verdict {
    if candidate.source == Source::VisionModel || !visually_checkable {
        return Verdict::accept();
    }
    let Some(image) = image else {
        return Verdict::reject(Some("no-image"));
    };
    let Some(client) = client else {
        return Verdict::reject(Some("no-vision-client"));
    };
    for attempt in 1..=2u8 {
        let req = ModelRequest {
            tag: RequestTag {
                kind: RequestKind::VisionQa,
                subject: subject_iri.to_owned(),
                relation: relation_iri.to_owned(),
                candidate: Some(candidate.surface.clone()),
                attempt,
            },
            prompt: vision_question(&candidate.surface, attempt == 2),
            image: Some(image.to_vec()),
            max_tokens,
        };
        match call(client, &req, retries) {
            Ok(answer) => match parse_yes_no(&answer) {
                Some(true) => return Verdict::accept(),
                Some(false) => return Verdict::reject(None),
                None => continue,
            },
            Err(e) => return Verdict::reject(Some(&format!("client-error: {e}"))),
        }
    }
    Verdict::reject(Some("unparsed-judgment"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtensionConfig {
    pub tau: f64,
    pub scope: MatchScope,
    /// Relations whose text-model candidates are checked against the image,
    /// given as labels, IRIs or Wikidata ids.
    pub visual_relations: Vec<String>,
    pub lang: Language,
    pub max_inflight: usize,
    pub max_tokens: u32,
    /// Extra attempts after a transport failure or timeout.
    pub transport_retries: u32,
    pub run_id: String,
    /// Prefix of minted entity IRIs.
    pub namespace: String,
    pub template: PromptTemplate,
}

impl Default for ExtensionConfig {
    fn default() -> Self {
        Self {
            tau: 0.4,
            scope: MatchScope::Relation,
            visual_relations: vec!["depicts".into()],
            lang: Language::En,
            max_inflight: 4,
            max_tokens: 256,
            transport_retries: 1,
            run_id: "run0".into(),
            namespace: "urn:heritage-kg:extension:".into(),
            template: PromptTemplate::default(),
        }
    }
}

impl ExtensionConfig {
    pub fn is_visual(&self, set: &TripleSet, lexicon: &Lexicon, relation: RelationId) -> bool {
        self.visual_relations.iter().any(|key| {
            lexicon.relation_label(relation) == Some(key.as_str())
                || resolve_relation(set, key) == Some(relation)
        })
    }
}

/// The two model endpoints. Vision-QA goes to the vision client.
#[derive(Clone, Copy, Default)]
pub struct Clients<'a> {
    pub text: Option<&'a dyn ModelClient>,
    pub vision: Option<&'a dyn ModelClient>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExtensionStats {
    pub subjects: usize,
    /// Distinct objects of the relation before extension.
    pub raw_tail_count: usize,
    pub raw_candidates: usize,
    pub duplicate_of_kg: usize,
    pub duplicate_cross_model: usize,
    pub rejected_by_image_check: usize,
    pub accepted: usize,
    pub missing_context: usize,
    pub parse_failures: usize,
    pub client_errors: usize,
}

impl ExtensionStats {
    /// Distinct entities proposed by the two models together.
    pub fn generated(&self) -> usize {
        self.raw_candidates - self.duplicate_cross_model
    }

    /// Proposals surviving grounding and the image check.
    pub fn filtered(&self) -> usize {
        self.accepted
    }

    pub fn generated_ratio(&self) -> f64 {
        ratio(self.generated(), self.raw_tail_count)
    }

    pub fn filtered_ratio(&self) -> f64 {
        ratio(self.filtered(), self.raw_tail_count)
    }

    pub fn from_run(candidates: &[Candidate], failures: &[Failure], subjects: usize, raw_tail_count: usize) -> Self {
        let mut s = Self {
            subjects,
            raw_tail_count,
            raw_candidates: candidates.len(),
            ..Self::default()
        };
        for c in candidates {
            match c.status {
                CandidateStatus::DuplicateOfKg => s.duplicate_of_kg += 1,
                CandidateStatus::DuplicateCrossModel => s.duplicate_cross_model += 1,
                CandidateStatus::RejectedByImageCheck => s.rejected_by_image_check += 1,
                CandidateStatus::Accepted => s.accepted += 1,
                CandidateStatus::Raw => {}
            }
        }
        for f in failures {
            match f.kind {
                FailureKind::MissingContext => s.missing_context += 1,
                FailureKind::ParseFailure => s.parse_failures += 1,
                FailureKind::ClientError => s.client_errors += 1,
            }
        }
        s
    }

    pub fn to_text(&self, run_id: &str) -> String {
        format!(
            "# extension run {run_id}\n\
             subjects                  {}\n\
             objects in graph          {}\n\
             raw candidates            {}\n\
             duplicate of graph        {}\n\
             duplicate across models   {}\n\
             rejected by image check   {}\n\
             accepted                  {}\n\
             missing context           {}\n\
             parse failures            {}\n\
             client errors             {}\n\
             generated                 {} ({:.3} of graph objects)\n\
             filtered                  {} ({:.3} of graph objects)\n",
            self.subjects,
            self.raw_tail_count,
            self.raw_candidates,
            self.duplicate_of_kg,
            self.duplicate_cross_model,
            self.rejected_by_image_check,
            self.accepted,
            self.missing_context,
            self.parse_failures,
            self.client_errors,
            self.generated(),
            self.generated_ratio(),
            self.filtered(),
            self.filtered_ratio(),
        )
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

#[derive(Debug, Clone)]
pub struct ExtensionRun {
    pub relation: RelationId,
    pub subjects: Vec<EntityId>,
    /// In subject order, text-model candidates before vision-model ones.
    pub candidates: Vec<Candidate>,
    pub failures: Vec<Failure>,
    pub stats: ExtensionStats,
}

/// Subjects that already have the relation, ordered by IRI.
pub fn default_subjects(set: &TripleSet, relation: RelationId) -> Vec<EntityId> {
    let mut subjects: Vec<EntityId> = set
        .pairs(relation)
        .iter()
        .map(|p| p.0)
        .collect::<HashSet<_>>()
        .into_iter()
        .collect();
    subjects.sort_by(|a, b| set.entity_iri(*a).cmp(set.entity_iri(*b)));
    subjects
}

/// Resolves a relation given as IRI, Wikidata id or label.
pub fn find_relation(set: &TripleSet, lexicon: &Lexicon, key: &str) -> Option<RelationId> {
    resolve_relation(set, key).or_else(|| {
        let mut matches: Vec<RelationId> = set
            .relations()
            .filter(|&r| lexicon.relation_label(r) == Some(key))
            .collect();
        matches.sort();
        matches.into_iter().next()
    })
}

/// Runs extraction, grounding and the image check for every subject.
///
/// Subjects are processed on a pool of `max_inflight` threads; results are
/// gathered in subject order, so the output does not depend on scheduling.
pub fn run_extension(
    set: &TripleSet,
    lexicon: &Lexicon,
    relation: RelationId,
    subjects: &[EntityId],
    clients: Clients<'_>,
    store: &WordVectorStore,
    config: &ExtensionConfig,
) -> Result<ExtensionRun> {
    check_tau(config.tau)?;
    if config.max_inflight == 0 {
        return Err(Error::InvalidArgument("max_inflight must be positive".into()));
    }
    let existing = ExistingObjects::new(set, lexicon, relation, store, config.scope);
    let visual = config.is_visual(set, lexicon, relation);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.max_inflight)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let per_subject: Vec<(Vec<Candidate>, Vec<Failure>)> = pool.install(|| {
        use rayon::prelude::*;
        subjects
            .par_iter()
            .map(|&s| process_subject(set, lexicon, relation, s, clients, store, config, &existing, visual))
            .collect()
    });
    let mut candidates = Vec::new();
    let mut failures = Vec::new();
    for (c, f) in per_subject {
        candidates.extend(c);
        failures.extend(f);
    }
    let stats = ExtensionStats::from_run(&candidates, &failures, subjects.len(), existing.len());
    Ok(ExtensionRun {
        relation,
        subjects: subjects.to_vec(),
        candidates,
        failures,
        stats,
    })
}

#[allow(clippy::too_many_arguments)]
fn process_subject(
    set: &TripleSet,
    lexicon: &Lexicon,
    relation: RelationId,
    subject: EntityId,
    clients: Clients<'_>,
    store: &WordVectorStore,
    config: &ExtensionConfig,
    existing: &ExistingObjects,
    visual: bool,
) -> (Vec<Candidate>, Vec<Failure>) {
    let subject_iri = set.entity_iri(subject);
    let relation_iri = set.relation_iri(relation);
    let subject_label = lexicon.entity_surface(set, subject);
    let relation_label = lexicon.relation_name(set, relation);
    let mut candidates = Vec::new();
    let mut failures = Vec::new();
    let fail = |source, kind, detail: String| Failure {
        subject,
        source,
        kind,
        detail,
    };

    let image: Option<Vec<u8>> = match lexicon.image(subject) {
        Some(path) => match fs::read(path) {
            Ok(bytes) => Some(bytes),
            Err(e) => {
                log::warn!("{}: {e}", path.display());
                None
            }
        },
        None => None,
    };

    for source in [Source::TextModel, Source::VisionModel] {
        let (client, kind) = match source {
            Source::TextModel => (clients.text, RequestKind::Text),
            Source::VisionModel => (clients.vision, RequestKind::Vision),
        };
        let Some(client) = client else { continue };
        let image_tag = image_file_name(subject_iri);
        let input = match source {
            Source::TextModel => match lexicon.description(subject, config.lang) {
                Some(d) if !d.trim().is_empty() => PromptInput::Description(d),
                _ => {
                    failures.push(fail(source, FailureKind::MissingContext, format!("no {} description", config.lang)));
                    continue;
                }
            },
            Source::VisionModel => {
                if image.is_none() {
                    failures.push(fail(source, FailureKind::MissingContext, "no image".into()));
                    continue;
                }
                PromptInput::Image(&image_tag)
            }
        };
        let (prompt, strict) = match (
            config.template.render(subject_label, relation_label, input),
            config.template.render_strict(subject_label, relation_label, input),
        ) {
            (Ok(p), Ok(s)) => (p, s),
            (Err(e), _) | (_, Err(e)) => {
                failures.push(fail(source, FailureKind::MissingContext, e.to_string()));
                continue;
            }
        };
        let request = ModelRequest {
            tag: RequestTag {
                kind,
                subject: subject_iri.to_owned(),
                relation: relation_iri.to_owned(),
                candidate: None,
                attempt: 1,
            },
            prompt,
            image: if source == Source::VisionModel { image.clone() } else { None },
            max_tokens: config.max_tokens,
        };
        match extract_with_retries(client, &request, &strict, config.transport_retries) {
            Ok(Extraction::Surfaces(list)) => {
                candidates.extend(list.into_iter().map(|s| Candidate::new(subject, relation, s, source)));
            }
            Ok(Extraction::Unparseable { last_answer }) => {
                log::warn!("{subject_iri}: unparseable {source} answer after re-query: {last_answer:?}");
                failures.push(fail(source, FailureKind::ParseFailure, "answer is not a JSON array of strings".into()));
            }
            Err(e) => failures.push(fail(source, FailureKind::ClientError, e.to_string())),
        }
    }

    ground(&mut candidates, |_| existing, store, config.tau);
    resolve_cross_model(&mut candidates, store, config.tau);
    for c in candidates.iter_mut().filter(|c| c.status == CandidateStatus::Raw) {
        let v = cross_validate_with_retries(
            clients.vision,
            c,
            subject_iri,
            relation_iri,
            image.as_deref(),
            visual,
            config.max_tokens,
            config.transport_retries,
        );
        c.status = v.status;
        c.note = v.note;
    }
    (candidates, failures)
}

/// Before/after counts of a merge.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MergeSummary {
    pub added: usize,
    pub triples_before: usize,
    pub triples_after: usize,
    pub entities_before: usize,
    pub entities_after: usize,
    pub relations_before: usize,
    pub relations_after: usize,
}

/// Adds one fresh entity and one `(subject, relation, new)` triple per
/// accepted candidate. New IRIs are `{namespace}{run_id}:{source}:{n}`,
/// numbered from 1 in candidate order, and carry the surface as label.
/// Candidates with any other status are ignored.
pub fn merge_extension(
    set: &TripleSet,
    lexicon: &Lexicon,
    candidates: &[Candidate],
    namespace: &str,
    run_id: &str,
) -> Result<(TripleSet, Lexicon, MergeSummary)> {
    let mut builder = TripleSetBuilder::from_set(set);
    let mut labels = Vec::new();
    let mut n = 0usize;
    for c in candidates.iter().filter(|c| c.status == CandidateStatus::Accepted) {
        n += 1;
        let iri = format!("{namespace}{run_id}:{}:{n}", c.source);
        if set.entity_id(&iri).is_some() {
            return Err(Error::InvalidArgument(format!(
                "minted IRI {iri} already exists; choose another run id"
            )));
        }
        let e = builder.intern_entity(&iri);
        builder.insert(crate::store::Triple::new(c.subject, c.relation, e));
        labels.push((e, c.surface.clone()));
    }
    let merged = builder.build();
    let mut lex = lexicon.clone();
    for (e, label) in labels {
        lex.set_entity_label(e, label);
    }
    let summary = MergeSummary {
        added: n,
        triples_before: set.len(),
        triples_after: merged.len(),
        entities_before: set.entities().len(),
        entities_after: merged.entities().len(),
        relations_before: set.relation_count(),
        relations_after: merged.relation_count(),
    };
    Ok((merged, lex, summary))
}

pub const AUDIT_HEADER: [&str; 8] = ["subject", "relation", "surface", "source", "nearest", "similarity", "status", "note"];

/// Candidate audit log: one row per candidate, then one per failure (empty
/// surface, failure kind as status).
pub fn audit_csv(set: &TripleSet, run: &ExtensionRun) -> Result<String> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::InvalidArgument(format!("audit log: {e}"));
    w.write_record(AUDIT_HEADER).map_err(csv_err)?;
    let relation = set.relation_iri(run.relation);
    for c in &run.candidates {
        let shown = match c.status {
            CandidateStatus::DuplicateCrossModel => c.cross_model.as_ref(),
            _ => c.nearest.as_ref(),
        };
        let (nearest, sim) = match shown {
            Some(n) => (n.surface.clone(), format!("{:.6}", n.similarity)),
            None => (String::new(), String::new()),
        };
        w.write_record([
            set.entity_iri(c.subject),
            relation,
            &c.surface,
            c.source.as_str(),
            &nearest,
            &sim,
            c.status.as_str(),
            c.note.as_deref().unwrap_or(""),
        ])
        .map_err(csv_err)?;
    }
    for f in &run.failures {
        w.write_record([
            set.entity_iri(f.subject),
            relation,
            "",
            f.source.as_str(),
            "",
            "",
            f.kind.as_str(),
            &f.detail,
        ])
        .map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::InvalidArgument(format!("audit log: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

/// Reads the candidate rows of an audit log back; failure rows are skipped.
/// Subjects and relations must exist in `set`.
pub fn read_audit(text: &str, origin: &std::path::Path, set: &TripleSet) -> Result<Vec<Candidate>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let mut out = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let line = i as u64 + 2;
        let row = row.map_err(|e| Error::parse(origin, line, e.to_string()))?;
        if row.len() < 7 {
            return Err(Error::parse(origin, line, format!("expected 8 fields, found {}", row.len())));
        }
        let status = match &row[6] {
            "duplicate-of-kg" => CandidateStatus::DuplicateOfKg,
            "duplicate-cross-model" => CandidateStatus::DuplicateCrossModel,
            "rejected-by-image-check" => CandidateStatus::RejectedByImageCheck,
            "accepted" => CandidateStatus::Accepted,
            "raw" => CandidateStatus::Raw,
            _ => continue,
        };
        let source = match &row[3] {
            "text-model" => Source::TextModel,
            "vision-model" => Source::VisionModel,
            other => return Err(Error::parse(origin, line, format!("unknown source {other:?}"))),
        };
        let subject = set
            .entity_id(&row[0])
            .ok_or_else(|| Error::parse(origin, line, format!("unknown subject {}", &row[0])))?;
        let relation = set
            .relation_id(&row[1])
            .ok_or_else(|| Error::parse(origin, line, format!("unknown relation {}", &row[1])))?;
        let mut c = Candidate::new(subject, relation, &row[2], source);
        c.status = status;
        if !row[4].is_empty() {
            let similarity = row[5]
                .parse()
                .map_err(|_| Error::parse(origin, line, format!("bad similarity {:?}", &row[5])))?;
            c.nearest = Some(Nearest {
                surface: row[4].to_owned(),
                similarity,
            });
        }
        c.note = row.get(7).filter(|n| !n.is_empty()).map(str::to_owned);
        out.push(c);
    }
    Ok(out)
}

/// Accepted candidates whose similarity to an object the relation had
/// before extension reaches `tau`; empty for a correct run.
pub fn novelty_violations<'a>(
    candidates: &'a [Candidate],
    set: &TripleSet,
    lexicon: &Lexicon,
    store: &WordVectorStore,
    tau: f64,
) -> Vec<(&'a Candidate, Nearest)> {
    let mut cache: HashMap<RelationId, ExistingObjects> = HashMap::new();
    candidates
        .iter()
        .filter(|c| c.status == CandidateStatus::Accepted)
        .filter_map(|c| {
            let existing = cache
                .entry(c.relation)
                .or_insert_with(|| ExistingObjects::new(set, lexicon, c.relation, store, MatchScope::Relation));
            existing
                .nearest(c.subject, &c.surface, store)
                .filter(|n| n.similarity >= tau)
                .map(|n| (c, n))
        })
        .collect()
}
