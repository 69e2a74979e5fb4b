//! Validation reports: ground-truth recovery, annotation precision and the
//! entity taxonomy.

mod precision;
mod recovery;
mod taxonomy;

pub use precision::{
    compute_precision, parse_annotations, read_annotations, AnnotationRecord, AnnotatorPrecision, PrecisionReport,
    ANNOTATION_HEADER,
};
pub use recovery::{
    f1_from_recall, recover_ground_truth, recovery_csv, recovery_table, Answer, ModelTag, PairAnswer, RecoveryConfig,
    RecoveryReport, RecoveryResult, RECOVERY_HEADER,
};
pub use taxonomy::{
    comparison_table, relation_mentions, taxonomy_distribution, TaxonomyDistribution, TaxonomyMap, CATEGORIES, UNKNOWN,
};
