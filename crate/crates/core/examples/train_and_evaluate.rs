//! Train two embedding models on the cleaned fixture and compare them.
//!
//! cargo run --release --example train_and_evaluate
//!
//! The fixture links are random, so scores sit near chance; the point is the
//! train, checkpoint and evaluate round trip.

use std::path::PathBuf;

use heritage_kg::clean::{apply_cleaning, split_dataset, CleaningPlan};
use heritage_kg::eval::{evaluate_split, Metrics, Setting};
use heritage_kg::models::{read_checkpoint, train, write_checkpoint, EmbeddingConfig, ModelKind};
use heritage_kg::store::{parse_triples, CsvDialect, Lexicon, LexiconPaths};

fn main() -> heritage_kg::Result<()> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/mini");
    let (set, _) = parse_triples(&dir.join("triples.csv"), &CsvDialect::default())?;
    let lexicon = Lexicon::load(&set, &LexiconPaths::from_distribution_dir(&dir))?;
    let (cleaned, _) = apply_cleaning(&set, &lexicon, &CleaningPlan::default())?;
    let split = split_dataset(&cleaned, [0.8, 0.1, 0.1], 7)?;

    println!("{}", Metrics::CSV_HEADER);
    for (kind, entity_dim, relation_dim) in [(ModelKind::DistMult, 32, 32), (ModelKind::TuckER, 32, 16)] {
        let config = EmbeddingConfig {
            entity_dim,
            relation_dim,
            epochs: 30,
            ..EmbeddingConfig::defaults_for(kind)
        };
        let outcome = train(&split.train, &config)?;

        // Checkpoints round-trip through the binary format.
        let mut bytes = Vec::new();
        write_checkpoint(&outcome.params, &mut bytes)?;
        let params = read_checkpoint(bytes.as_slice())?;

        let report = evaluate_split(&params, &split)?;
        for setting in [Setting::Raw, Setting::Filtered] {
            println!("{}", report.get(setting).csv_row(kind.name(), "mini", setting));
        }
    }
    Ok(())
}
