use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::{is_wikidata_id, EntityId, EntityKind, RelationId, TripleSet};
use crate::error::{Error, Result};

const WD_ENTITY: &str = "http://www.wikidata.org/entity/";
const WD_DIRECT: &str = "http://www.wikidata.org/prop/direct/";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    En,
    Fr,
}

impl Language {
    pub fn tag(self) -> &'static str {
        match self {
            Language::En => "en",
            Language::Fr => "fr",
        }
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Language {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "en" => Ok(Language::En),
            "fr" => Ok(Language::Fr),
            other => Err(Error::InvalidArgument(format!("unknown language tag {other:?}"))),
        }
    }
}

/// Keys found in a sidecar file that do not resolve in the triple set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrphanKey {
    pub source: PathBuf,
    pub key: String,
}

#[derive(Debug, Clone, Default)]
pub struct LexiconPaths {
    pub entity_labels: Option<PathBuf>,
    pub relation_labels: Option<PathBuf>,
    pub descriptions: Vec<(Language, PathBuf)>,
    pub image_dir: Option<PathBuf>,
}

impl LexiconPaths {
    /// The layout of the published distribution: `text_data/entity2text.txt`,
    /// `text_data/rel2text.txt`, `text_data/entity2description_{en,fr}.csv`
    /// and an `images/` directory. Missing files are left unset.
    pub fn from_distribution_dir(root: &Path) -> Self {
        let text = root.join("text_data");
        let existing = |p: PathBuf| p.exists().then_some(p);
        let mut descriptions = Vec::new();
        for lang in [Language::En, Language::Fr] {
            if let Some(p) = existing(text.join(format!("entity2description_{lang}.csv"))) {
                descriptions.push((lang, p));
            }
        }
        Self {
            entity_labels: existing(text.join("entity2text.txt")),
            relation_labels: existing(text.join("rel2text.txt")),
            descriptions,
            image_dir: existing(root.join("images")),
        }
    }
}

/// Labels, descriptions and image paths attached to a [`TripleSet`].
///
/// Lookups return `None` for absent keys, so an entity whose label is the
/// empty string is distinguishable from one without a label.
#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    entity_labels: HashMap<EntityId, String>,
    relation_labels: HashMap<RelationId, String>,
    descriptions: HashMap<(EntityId, Language), String>,
    images: HashMap<EntityId, PathBuf>,
    orphans: Vec<OrphanKey>,
}

/// Removes every non-alphanumeric character from an IRI.
pub fn flatten_iri(iri: &str) -> String {
    iri.chars().filter(|c| c.is_alphanumeric()).collect()
}

pub fn image_file_name(iri: &str) -> String {
    format!("{}.jpg", flatten_iri(iri))
}

impl Lexicon {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn load(set: &TripleSet, paths: &LexiconPaths) -> Result<Self> {
        let mut lex = Lexicon::new();
        if let Some(p) = &paths.entity_labels {
            for (key, text) in read_two_columns(p)? {
                match resolve_entity(set, &key) {
                    Some(id) => {
                        lex.entity_labels.insert(id, text);
                    }
                    None => lex.orphan(p, key),
                }
            }
        }
        if let Some(p) = &paths.relation_labels {
            for (key, text) in read_two_columns(p)? {
                match resolve_relation(set, &key) {
                    Some(id) => {
                        lex.relation_labels.insert(id, text);
                    }
                    None => lex.orphan(p, key),
                }
            }
        }
        for (lang, p) in &paths.descriptions {
            for (key, text) in read_two_columns(p)? {
                match resolve_entity(set, &key) {
                    Some(id) => {
                        lex.descriptions.insert((id, *lang), text);
                    }
                    None => lex.orphan(p, key),
                }
            }
        }
        if let Some(dir) = &paths.image_dir {
            lex.scan_images(set, dir)?;
        }
        if !lex.orphans.is_empty() {
            log::warn!("lexicon: {} keys do not resolve in the triple set", lex.orphans.len());
        }
        Ok(lex)
    }

    fn scan_images(&mut self, set: &TripleSet, dir: &Path) -> Result<()> {
        let mut files = HashSet::new();
        for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
            let entry = entry.map_err(|e| Error::io(dir, e))?;
            if let Some(name) = entry.file_name().to_str() {
                files.insert(name.to_owned());
            }
        }
        let mut matched = HashSet::new();
        for id in set.entities() {
            if set.entity_kind(id) != EntityKind::Iri {
                continue;
            }
            let name = image_file_name(set.entity_iri(id));
            if files.contains(&name) {
                self.images.insert(id, dir.join(&name));
                matched.insert(name);
            }
        }
        let mut unmatched: Vec<_> = files
            .into_iter()
            .filter(|f| f.ends_with(".jpg") && !matched.contains(f))
            .collect();
        unmatched.sort();
        for f in unmatched {
            self.orphan(dir, f);
        }
        Ok(())
    }

    fn orphan(&mut self, source: &Path, key: String) {
        self.orphans.push(OrphanKey {
            source: source.to_path_buf(),
            key,
        });
    }

    pub fn entity_label(&self, id: EntityId) -> Option<&str> {
        self.entity_labels.get(&id).map(String::as_str)
    }

    pub fn relation_label(&self, id: RelationId) -> Option<&str> {
        self.relation_labels.get(&id).map(String::as_str)
    }

    pub fn description(&self, id: EntityId, lang: Language) -> Option<&str> {
        self.descriptions.get(&(id, lang)).map(String::as_str)
    }

    pub fn image(&self, id: EntityId) -> Option<&Path> {
        self.images.get(&id).map(PathBuf::as_path)
    }

    pub fn orphans(&self) -> &[OrphanKey] {
        &self.orphans
    }

    pub fn set_entity_label(&mut self, id: EntityId, label: impl Into<String>) {
        self.entity_labels.insert(id, label.into());
    }

    pub fn set_relation_label(&mut self, id: RelationId, label: impl Into<String>) {
        self.relation_labels.insert(id, label.into());
    }

    pub fn set_description(&mut self, id: EntityId, lang: Language, text: impl Into<String>) {
        self.descriptions.insert((id, lang), text.into());
    }

    pub fn set_image(&mut self, id: EntityId, path: impl Into<PathBuf>) {
        self.images.insert(id, path.into());
    }

    /// Relation label when known, otherwise its IRI.
    pub fn relation_name<'a>(&'a self, set: &'a TripleSet, id: RelationId) -> &'a str {
        self.relation_label(id).unwrap_or_else(|| set.relation_iri(id))
    }

    /// Human-facing text for an entity: its label, a literal's own value, or
    /// the last path segment of its IRI.
    pub fn entity_surface<'a>(&'a self, set: &'a TripleSet, id: EntityId) -> &'a str {
        if let Some(label) = self.entity_label(id) {
            return label;
        }
        let iri = set.entity_iri(id);
        match set.entity_kind(id) {
            EntityKind::Literal => iri,
            EntityKind::Iri => iri
                .rsplit(['/', '#'])
                .next()
                .filter(|s| !s.is_empty())
                .unwrap_or(iri),
        }
    }

    /// Entities present in `set` with a description in `lang` and an image.
    pub fn multimodal_entities(&self, set: &TripleSet, lang: Language) -> Vec<EntityId> {
        set.entities()
            .into_iter()
            .filter(|&e| self.description(e, lang).is_some() && self.image(e).is_some())
            .collect()
    }
}

pub fn resolve_entity(set: &TripleSet, key: &str) -> Option<EntityId> {
    if let Some(id) = set.entity_id(key) {
        return Some(id);
    }
    if is_wikidata_id(key) {
        return set.entity_id(&format!("{WD_ENTITY}{key}"));
    }
    local_wikidata_id(key).and_then(|q| set.entity_id(q))
}

pub fn resolve_relation(set: &TripleSet, key: &str) -> Option<RelationId> {
    if let Some(id) = set.relation_id(key) {
        return Some(id);
    }
    if is_wikidata_id(key) {
        return set
            .relation_id(&format!("{WD_DIRECT}{key}"))
            .or_else(|| set.relation_id(&format!("{WD_ENTITY}{key}")));
    }
    local_wikidata_id(key).and_then(|p| set.relation_id(p))
}

fn local_wikidata_id(iri: &str) -> Option<&str> {
    if !iri.starts_with("http://www.wikidata.org/") && !iri.starts_with("https://www.wikidata.org/") {
        return None;
    }
    iri.rsplit('/').next().filter(|s| is_wikidata_id(s))
}

const HEADER_KEYS: [&str; 8] = ["id", "key", "entity", "iri", "uri", "relation", "rel", "from"];

/// Reads a `(key, text)` file. Tab-delimited when the first line has a tab,
/// comma-delimited (with double-quote quoting) otherwise.
fn read_two_columns(path: &Path) -> Result<Vec<(String, String)>> {
    let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let delimiter = match raw.lines().find(|l| !l.trim().is_empty()) {
        Some(l) if l.contains('\t') => b'\t',
        _ => b',',
    };
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .delimiter(delimiter)
        .quoting(delimiter == b',')
        .from_reader(raw.as_bytes());
    let mut out = Vec::new();
    let mut first = true;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            Error::parse(path, line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() == 1 && rec[0].trim().is_empty() {
            continue;
        }
        if rec.len() < 2 {
            return Err(Error::parse(path, line, "expected two columns (key, text)"));
        }
        let key = rec[0].trim().to_owned();
        if std::mem::take(&mut first) && HEADER_KEYS.contains(&key.to_ascii_lowercase().as_str()) {
            continue;
        }
        let sep = char::from(delimiter).to_string();
        let text = rec.iter().skip(1).collect::<Vec<_>>().join(&sep);
        out.push((key, text));
    }
    Ok(out)
}
