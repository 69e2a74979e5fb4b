//! Run the extension pipeline against recorded model answers and print
//! the audit log.
//!
//! cargo run --example extend_with_replay

use std::path::PathBuf;

use heritage_kg::extend::{
    audit_csv, default_subjects, find_relation, merge_extension, run_extension, Clients, ExtensionConfig,
    ReplayClient, WordVectorStore,
};
use heritage_kg::store::{parse_triples, CsvDialect, Lexicon, LexiconPaths};

fn main() -> heritage_kg::Result<()> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/extend");
    let (set, _) = parse_triples(&dir.join("triples.csv"), &CsvDialect::default())?;
    let lexicon = Lexicon::load(&set, &LexiconPaths::from_distribution_dir(&dir))?;
    let store = WordVectorStore::load(&dir.join("vectors.txt"))?;
    let replay = ReplayClient::from_dir(&dir.join("replay"))?;

    let relation = find_relation(&set, &lexicon, "depicts").expect("fixture has depicts");
    let subjects = default_subjects(&set, relation);
    let config = ExtensionConfig::default();
    let clients = Clients {
        text: Some(&replay),
        vision: Some(&replay),
    };
    let run = run_extension(&set, &lexicon, relation, &subjects, clients, &store, &config)?;

    print!("{}", audit_csv(&set, &run)?);
    print!("{}", run.stats.to_text(&config.run_id));

    let (merged, _, summary) = merge_extension(&set, &lexicon, &run.candidates, &config.namespace, &config.run_id)?;
    println!(
        "merged: {} -> {} triples, {} new entities",
        summary.triples_before,
        merged.len(),
        summary.added
    );
    Ok(())
}
