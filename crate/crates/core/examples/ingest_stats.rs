//! Parse a triple distribution with its sidecars and print its characteristics.
//!
//! cargo run --example ingest_stats [-- <dataset-dir>]

use std::path::PathBuf;

use heritage_kg::clean::{profile_relations, CardinalitySummary};
use heritage_kg::store::{compute_stats, parse_triples, CsvDialect, Language, Lexicon, LexiconPaths};

fn main() -> heritage_kg::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/mini"));
    let (set, summary) = parse_triples(&dir.join("triples.csv"), &CsvDialect::default())?;
    let lexicon = Lexicon::load(&set, &LexiconPaths::from_distribution_dir(&dir))?;

    println!("{} records, {} distinct triples", summary.records, summary.collapsed);
    print!("{}", compute_stats(&set).to_text());

    let card = CardinalitySummary::from_profiles(&profile_relations(&set));
    println!(
        "cardinality 1-1 {} / 1-n {} / n-1 {} / n-n {}",
        card.one_to_one, card.one_to_many, card.many_to_one, card.many_to_many
    );
    println!(
        "entities with description and image: {}",
        lexicon.multimodal_entities(&set, Language::En).len()
    );
    Ok(())
}
