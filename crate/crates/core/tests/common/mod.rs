#![allow(dead_code)]

use std::path::PathBuf;

use heritage_kg::extend::{
    default_subjects, find_relation, run_extension, Clients, ExtensionConfig, ExtensionRun, ReplayClient,
    WordVectorStore,
};
use heritage_kg::store::{parse_triples, CsvDialect, Lexicon, LexiconPaths, RelationId, TripleSet};

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

pub fn load_dataset(dir: &str) -> (TripleSet, Lexicon) {
    let root = fixtures().join(dir);
    let (set, _) = parse_triples(&root.join("triples.csv"), &CsvDialect::default()).unwrap();
    let lexicon = Lexicon::load(&set, &LexiconPaths::from_distribution_dir(&root)).unwrap();
    (set, lexicon)
}

pub struct ExtendFixture {
    pub set: TripleSet,
    pub lexicon: Lexicon,
    pub relation: RelationId,
    pub store: WordVectorStore,
    pub replay: ReplayClient,
}

impl ExtendFixture {
    pub fn load() -> Self {
        let (set, lexicon) = load_dataset("extend");
        let relation = find_relation(&set, &lexicon, "depicts").expect("depicts relation");
        let store = WordVectorStore::load(&fixtures().join("extend/vectors.txt")).unwrap();
        let replay = ReplayClient::from_dir(&fixtures().join("extend/replay")).unwrap();
        Self {
            set,
            lexicon,
            relation,
            store,
            replay,
        }
    }

    pub fn run(&self, max_inflight: usize) -> ExtensionRun {
        let config = ExtensionConfig {
            max_inflight,
            ..ExtensionConfig::default()
        };
        let subjects = default_subjects(&self.set, self.relation);
        let clients = Clients {
            text: Some(&self.replay),
            vision: Some(&self.replay),
        };
        run_extension(&self.set, &self.lexicon, self.relation, &subjects, clients, &self.store, &config).unwrap()
    }
}
