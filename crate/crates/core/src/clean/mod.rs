//! Relation profiling, leakage-oriented relation cleaning and dataset
//! splitting.

mod detect;
mod plan;
mod profile;
mod split;

pub use detect::{detect_inverses, detect_near_duplicates, FlaggedPair, OverlapMeasure};
pub use plan::{apply_cleaning, read_relation_list, CleaningPlan, CleaningReport, RemovedPair};
pub use profile::{profile_relations, profiles_csv, Cardinality, CardinalitySummary, RelationProfile};
pub use split::{split_dataset, DatasetSplit};
