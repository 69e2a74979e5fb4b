//! Remove redundant, identifier-like and rare relations, then split.
//!
//! cargo run --example clean_dataset

use std::path::PathBuf;

use heritage_kg::clean::{apply_cleaning, split_dataset, CleaningPlan};
use heritage_kg::store::{parse_triples, CsvDialect, Lexicon, LexiconPaths};

fn main() -> heritage_kg::Result<()> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/mini");
    let (set, _) = parse_triples(&dir.join("triples.csv"), &CsvDialect::default())?;
    let lexicon = Lexicon::load(&set, &LexiconPaths::from_distribution_dir(&dir))?;

    let plan = CleaningPlan {
        manual_removals: vec!["P31".into()],
        ..CleaningPlan::default()
    };
    let (cleaned, report) = apply_cleaning(&set, &lexicon, &plan)?;
    print!("{}", report.to_text());

    let split = split_dataset(&cleaned, [0.8, 0.1, 0.1], 7)?;
    println!(
        "split: {} train / {} valid / {} test, closure violations {}",
        split.train.len(),
        split.valid.len(),
        split.test.len(),
        split.closure_violations()
    );
    Ok(())
}
