//! Ground-truth recovery with recorded answers, then annotation precision.
//!
//! cargo run --example validation_reports

use std::path::PathBuf;

use heritage_kg::extend::{default_subjects, find_relation, Clients, ReplayClient};
use heritage_kg::report::{
    compute_precision, read_annotations, recover_ground_truth, recovery_table, RecoveryConfig,
};
use heritage_kg::store::{parse_triples, CsvDialect, Lexicon, LexiconPaths};

fn main() -> heritage_kg::Result<()> {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let dir = root.join("extend");
    let (set, _) = parse_triples(&dir.join("triples.csv"), &CsvDialect::default())?;
    let lexicon = Lexicon::load(&set, &LexiconPaths::from_distribution_dir(&dir))?;
    let replay = ReplayClient::from_dir(&dir.join("replay_recovery"))?;
    let relation = find_relation(&set, &lexicon, "depicts").expect("fixture has depicts");

    let report = recover_ground_truth(
        &set,
        &lexicon,
        relation,
        &default_subjects(&set, relation),
        Clients {
            text: Some(&replay),
            vision: Some(&replay),
        },
        &RecoveryConfig::default(),
    )?;
    print!("{}", recovery_table(&report.results));

    let precision = compute_precision(&read_annotations(&root.join("annotations.csv"))?)?;
    print!("{}", precision.to_csv());
    Ok(())
}
