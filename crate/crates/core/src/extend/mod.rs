//! Open-world extension: candidate extraction with text and vision models,
//! grounding against the graph, and the image cross-check.

mod client;
mod pipeline;
mod prompt;
mod vectors;

pub use client::{
    read_replay_file, ClientError, HttpClient, ModelClient, ModelRequest, ReplayClient, ReplayRecord, RequestKind,
    RequestTag,
};
pub use pipeline::{
    audit_csv, cross_validate, default_subjects, extract_candidates, find_relation, match_entities, merge_extension,
    normalize, novelty_violations, parse_candidate_list, parse_yes_no, read_audit, run_extension, Candidate, CandidateStatus,
    Clients, ExistingObjects, Extraction, ExtensionConfig, ExtensionRun, ExtensionStats, Failure, FailureKind,
    MatchScope, MergeSummary, Nearest, Source, Verdict, AUDIT_HEADER,
};
pub use prompt::{text_question, vision_question, PromptInput, PromptTemplate};
pub use vectors::{cosine, phrase_similarity, tokens, WordVectorStore};
pub(crate) use pipeline::call;
