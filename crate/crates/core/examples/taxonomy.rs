//! Classify entity surfaces into the fourteen categories and compare the
//! objects already in the graph with a list of new ones.
//!
//! cargo run --example taxonomy

use std::path::PathBuf;

use heritage_kg::extend::find_relation;
use heritage_kg::report::{comparison_table, relation_mentions, taxonomy_distribution, TaxonomyMap};
use heritage_kg::store::{parse_triples, CsvDialect, Lexicon, LexiconPaths};

fn main() -> heritage_kg::Result<()> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/extend");
    let (set, _) = parse_triples(&dir.join("triples.csv"), &CsvDialect::default())?;
    let lexicon = Lexicon::load(&set, &LexiconPaths::from_distribution_dir(&dir))?;
    let relation = find_relation(&set, &lexicon, "depicts").expect("fixture has depicts");
    let map = TaxonomyMap::starter();

    let original = taxonomy_distribution(relation_mentions(&set, &lexicon, relation), &map);
    let added = taxonomy_distribution(
        ["horse", "jousting", "vase", "table", "apple", "dogs"].map(|s| (s, None)),
        &map,
    );
    print!("{}", comparison_table("original", &original, "added", &added));
    Ok(())
}
