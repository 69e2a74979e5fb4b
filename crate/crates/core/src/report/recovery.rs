use std::fmt;
use std::fs;

use crate::error::{Error, Result};
use crate::extend::{
    call, parse_yes_no, text_question, vision_question, Clients, ModelClient, ModelRequest, RequestKind, RequestTag,
};
use crate::store::{EntityId, Language, Lexicon, RelationId, TripleSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelTag {
    TextModel,
    VisionModel,
    Combined,
}

impl ModelTag {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelTag::TextModel => "text-model",
            ModelTag::VisionModel => "vision-model",
            ModelTag::Combined => "combined",
        }
    }
}

impl fmt::Display for ModelTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Harmonic mean of recall and a precision of 1.
pub fn f1_from_recall(recall: f64) -> f64 {
    if recall <= 0.0 {
        0.0
    } else {
        2.0 * recall / (1.0 + recall)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryResult {
    pub model: ModelTag,
    /// Pairs with a usable answer.
    pub queried: usize,
    pub recognized: usize,
    /// Pairs dropped from the denominator: client error or unreadable answer.
    pub failures: usize,
    /// Pairs without the context this model needs.
    pub skipped: usize,
}

impl RecoveryResult {
    pub fn recall(&self) -> f64 {
        if self.queried == 0 {
            0.0
        } else {
            self.recognized as f64 / self.queried as f64
        }
    }

    pub fn f1(&self) -> f64 {
        f1_from_recall(self.recall())
    }
}

/// Answer for one known `(subject, object)` pair: `Some(yes)`, `None` when
/// the model could not be asked or did not answer usably.
#[derive(Debug, Clone, PartialEq)]
pub struct PairAnswer {
    pub subject: EntityId,
    pub object: EntityId,
    pub text: Answer,
    pub vision: Answer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Answer {
    Yes,
    No,
    NoContext,
    Failed,
}

impl Answer {
    fn usable(self) -> Option<bool> {
        match self {
            Answer::Yes => Some(true),
            Answer::No => Some(false),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryReport {
    pub answers: Vec<PairAnswer>,
    /// Text model, vision model, combined.
    pub results: [RecoveryResult; 3],
}

#[derive(Debug, Clone)]
pub struct RecoveryConfig {
    pub lang: Language,
    pub max_inflight: usize,
    pub max_tokens: u32,
    pub transport_retries: u32,
}

impl Default for RecoveryConfig {
    fn default() -> Self {
        Self {
            lang: Language::En,
            max_inflight: 4,
            max_tokens: 16,
            transport_retries: 1,
        }
    }
}

/// Asks each model whether the existing objects of `relation` hold for
/// their subjects. Only subjects in `subjects` are queried.
///
/// Combined recall counts a pair as recognised when either model says yes,
/// over the pairs where at least one model answered.
pub fn recover_ground_truth(
    set: &TripleSet,
    lexicon: &Lexicon,
    relation: RelationId,
    subjects: &[EntityId],
    clients: Clients<'_>,
    config: &RecoveryConfig,
) -> Result<RecoveryReport> {
    if config.max_inflight == 0 {
        return Err(Error::InvalidArgument("max_inflight must be positive".into()));
    }
    let wanted: std::collections::HashSet<EntityId> = subjects.iter().copied().collect();
    let mut pairs: Vec<(EntityId, EntityId)> =
        set.pairs(relation).iter().copied().filter(|(h, _)| wanted.contains(h)).collect();
    pairs.sort_by(|a, b| {
        (set.entity_iri(a.0), set.entity_iri(a.1)).cmp(&(set.entity_iri(b.0), set.entity_iri(b.1)))
    });

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.max_inflight)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let answers: Vec<PairAnswer> = pool.install(|| {
        use rayon::prelude::*;
        pairs
            .par_iter()
            .map(|&(s, o)| ask_pair(set, lexicon, relation, s, o, clients, config))
            .collect()
    });

    let tally = |pick: &dyn Fn(&PairAnswer) -> Answer, model| {
        let mut r = RecoveryResult {
            model,
            queried: 0,
            recognized: 0,
            failures: 0,
            skipped: 0,
        };
        for a in &answers {
            match pick(a) {
                Answer::Yes => {
                    r.queried += 1;
                    r.recognized += 1;
                }
                Answer::No => r.queried += 1,
                Answer::Failed => r.failures += 1,
                Answer::NoContext => r.skipped += 1,
            }
        }
        r
    };
    let text = tally(&|a| a.text, ModelTag::TextModel);
    let vision = tally(&|a| a.vision, ModelTag::VisionModel);
    let combined = tally(
        &|a| match (a.text.usable(), a.vision.usable()) {
            (Some(true), _) | (_, Some(true)) => Answer::Yes,
            (Some(false), _) | (_, Some(false)) => Answer::No,
            _ if a.text == Answer::Failed || a.vision == Answer::Failed => Answer::Failed,
            _ => Answer::NoContext,
        },
        ModelTag::Combined,
    );
    for r in [&text, &vision, &combined] {
        if r.failures > 0 {
            log::warn!("{}: {} pairs excluded after client failures", r.model, r.failures);
        }
    }
    Ok(RecoveryReport {
        answers,
        results: [text, vision, combined],
    })
}

fn ask_pair(
    set: &TripleSet,
    lexicon: &Lexicon,
    relation: RelationId,
    subject: EntityId,
    object: EntityId,
    clients: Clients<'_>,
    config: &RecoveryConfig,
) -> PairAnswer {
    let subject_iri = set.entity_iri(subject);
    let relation_iri = set.relation_iri(relation);
    let object_surface = lexicon.entity_surface(set, object);
    let tag = |kind| RequestTag {
        kind,
        subject: subject_iri.to_owned(),
        relation: relation_iri.to_owned(),
        candidate: Some(object_surface.to_owned()),
        attempt: 1,
    };

    let text = match (clients.text, lexicon.description(subject, config.lang)) {
        (Some(client), Some(desc)) if !desc.trim().is_empty() => {
            let subject_label = lexicon.entity_surface(set, subject);
            let relation_label = lexicon.relation_name(set, relation);
            ask(client, tag(RequestKind::TextQa), None, config, |strict| {
                text_question(subject_label, relation_label, object_surface, desc, strict)
            })
        }
        _ => Answer::NoContext,
    };
    let image = lexicon.image(subject).and_then(|p| fs::read(p).ok());
    let vision = match (clients.vision, image) {
        (Some(client), Some(bytes)) => ask(client, tag(RequestKind::VisionQa), Some(bytes), config, |strict| {
            vision_question(object_surface, strict)
        }),
        _ => Answer::NoContext,
    };
    PairAnswer {
        subject,
        object,
        text,
        vision,
    }
}

fn ask(
    client: &dyn ModelClient,
    tag: RequestTag,
    image: Option<Vec<u8>>,
    config: &RecoveryConfig,
    prompt: impl Fn(bool) -> String,
) -> Answer {
    for attempt in 1..=2u8 {
        let req = ModelRequest {
            tag: RequestTag { attempt, ..tag.clone() },
            prompt: prompt(attempt == 2),
            image: image.clone(),
            max_tokens: config.max_tokens,
        };
        match call(client, &req, config.transport_retries) {
            Ok(text) => match parse_yes_no(&text) {
                Some(true) => return Answer::Yes,
                Some(false) => return Answer::No,
                None => continue,
            },
            Err(e) => {
                log::warn!("{}: {e}", req.tag);
                return Answer::Failed;
            }
        }
    }
    Answer::Failed
}

pub const RECOVERY_HEADER: &str = "model,queried,recognized,failures,recall,f1";

pub fn recovery_csv(results: &[RecoveryResult]) -> String {
    let mut out = format!("{RECOVERY_HEADER}\n");
    for r in results {
        out.push_str(&format!(
            "{},{},{},{},{:.3},{:.3}\n",
            r.model,
            r.queried,
            r.recognized,
            r.failures,
            r.recall(),
            r.f1()
        ));
    }
    out
}

pub fn recovery_table(results: &[RecoveryResult]) -> String {
    let mut out = format!("{:<14}{:>8}{:>8}\n", "model", "recall", "f1");
    for r in results {
        out.push_str(&format!("{:<14}{:>8.3}{:>8.3}\n", r.model.as_str(), r.recall(), r.f1()));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extend::ClientError;
    use crate::store::TripleSetBuilder;

    #[test]
    fn f1_of_perfect_and_zero_recall() {
        assert_eq!(f1_from_recall(1.0), 1.0);
        assert_eq!(f1_from_recall(0.0), 0.0);
        assert!((f1_from_recall(0.5) - 2.0 / 3.0).abs() < 1e-15);
    }

    fn fixture(dir: &std::path::Path) -> (TripleSet, Lexicon, RelationId) {
        let mut b = TripleSetBuilder::new();
        for (s, o) in [("a", "horse"), ("a", "sword"), ("b", "dog"), ("b", "tree")] {
            b.insert_str(&format!("http://ex.org/{s}"), "http://ex.org/depicts", &format!("http://ex.org/{o}"));
        }
        let set = b.build();
        let mut lex = Lexicon::new();
        let a = set.entity_id("http://ex.org/a").unwrap();
        let b = set.entity_id("http://ex.org/b").unwrap();
        lex.set_description(a, Language::En, "A knight with a sword.");
        let img = dir.join("b.jpg");
        std::fs::write(&img, b"\xff\xd8").unwrap();
        lex.set_image(b, img);
        let r = set.relation_id("http://ex.org/depicts").unwrap();
        (set, lex, r)
    }

    #[test]
    fn always_yes_recovers_everything_with_context() {
        let dir = tempfile::tempdir().unwrap();
        let (set, lex, r) = fixture(dir.path());
        let yes = |_: &ModelRequest| Ok::<_, ClientError>("Yes".to_owned());
        let subjects: Vec<_> = set.heads().collect();
        let rep = recover_ground_truth(
            &set,
            &lex,
            r,
            &subjects,
            Clients {
                text: Some(&yes),
                vision: Some(&yes),
            },
            &RecoveryConfig::default(),
        )
        .unwrap();
        let [t, v, c] = &rep.results;
        assert_eq!((t.queried, t.skipped, t.recall()), (2, 2, 1.0));
        assert_eq!((v.queried, v.skipped, v.f1()), (2, 2, 1.0));
        assert_eq!((c.queried, c.recognized), (4, 4));
    }

    #[test]
    fn failures_leave_the_denominator() {
        let dir = tempfile::tempdir().unwrap();
        let (set, lex, r) = fixture(dir.path());
        let text = |req: &ModelRequest| match req.tag.candidate.as_deref() {
            Some("horse") => Ok("yes".to_owned()),
            _ => Err(ClientError::NoReplayEntry("x".into())),
        };
        let vision = |_: &ModelRequest| Ok::<_, ClientError>("no".to_owned());
        let subjects: Vec<_> = set.heads().collect();
        let rep = recover_ground_truth(
            &set,
            &lex,
            r,
            &subjects,
            Clients {
                text: Some(&text),
                vision: Some(&vision),
            },
            &RecoveryConfig::default(),
        )
        .unwrap();
        let [t, v, c] = &rep.results;
        assert_eq!((t.queried, t.recognized, t.failures), (1, 1, 1));
        assert_eq!((v.queried, v.recognized), (2, 0));
        // horse: yes; sword: text failed, no vision context; dog, tree: no.
        assert_eq!((c.queried, c.recognized, c.failures), (3, 1, 1));
    }
}
