use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Deserialize;

use super::detect::{detect_inverses, detect_near_duplicates, OverlapMeasure};
use crate::error::{Error, Result};
use crate::store::{resolve_relation, Lexicon, RelationId, TripleSet};

/// Parameters of the relation-cleaning pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct CleaningPlan {
    pub overlap_threshold: f64,
    pub measure: OverlapMeasure,
    pub detect_duplicates: bool,
    pub detect_inverses: bool,
    /// Case-sensitive substrings matched against relation labels, in order.
    pub name_patterns: Vec<String>,
    /// Relation IRIs (or bare Wikidata property ids) removed by hand.
    pub manual_removals: Vec<String>,
    /// Relations with fewer triples than this are dropped last.
    pub min_frequency: usize,
}

impl Default for CleaningPlan {
    fn default() -> Self {
        Self {
            overlap_threshold: 0.97,
            measure: OverlapMeasure::Containment,
            detect_duplicates: true,
            detect_inverses: true,
            name_patterns: vec!["ID".into(), "URL".into()],
            manual_removals: Vec::new(),
            min_frequency: 2,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlanFile {
    overlap_threshold: Option<f64>,
    measure: Option<OverlapMeasure>,
    detect_duplicates: Option<bool>,
    detect_inverses: Option<bool>,
    name_patterns: Option<Vec<String>>,
    manual_removals: Option<Vec<String>>,
    manual_list: Option<String>,
    min_frequency: Option<usize>,
}

impl CleaningPlan {
    /// A plan that removes nothing.
    pub fn identity() -> Self {
        Self {
            detect_duplicates: false,
            detect_inverses: false,
            name_patterns: Vec::new(),
            manual_removals: Vec::new(),
            min_frequency: 1,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.overlap_threshold > 0.0 && self.overlap_threshold <= 1.0) {
            return Err(Error::Config(format!(
                "overlap_threshold must be in (0, 1], got {}",
                self.overlap_threshold
            )));
        }
        if self.min_frequency == 0 {
            return Err(Error::Config("min_frequency must be at least 1".into()));
        }
        if self.name_patterns.iter().any(String::is_empty) {
            return Err(Error::Config("empty name pattern".into()));
        }
        Ok(())
    }

    /// Reads a TOML plan. Unset keys keep their defaults; `manual_list` names a
    /// file (relative to the plan) with one relation per line, `#` comments
    /// allowed.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: PlanFile =
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut plan = CleaningPlan::default();
        if let Some(v) = file.overlap_threshold {
            plan.overlap_threshold = v;
        }
        if let Some(v) = file.measure {
            plan.measure = v;
        }
        if let Some(v) = file.detect_duplicates {
            plan.detect_duplicates = v;
        }
        if let Some(v) = file.detect_inverses {
            plan.detect_inverses = v;
        }
        if let Some(v) = file.name_patterns {
            plan.name_patterns = v;
        }
        if let Some(v) = file.manual_removals {
            plan.manual_removals = v;
        }
        if let Some(v) = file.min_frequency {
            plan.min_frequency = v;
        }
        if let Some(list) = file.manual_list {
            let list_path = path.parent().unwrap_or(Path::new(".")).join(list);
            plan.manual_removals.extend(read_relation_list(&list_path)?);
        }
        plan.validate()?;
        Ok(plan)
    }
}

pub fn read_relation_list(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(str::to_owned)
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct RemovedPair {
    pub kept: String,
    pub dropped: String,
    pub overlap: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CleaningReport {
    pub duplicate_pairs: Vec<RemovedPair>,
    pub inverse_pairs: Vec<RemovedPair>,
    /// One entry per pattern, in plan order.
    pub pattern_removed: Vec<(String, Vec<String>)>,
    pub manual_removed: Vec<String>,
    pub low_frequency_removed: Vec<String>,
    pub warnings: Vec<String>,
    pub triples_before: usize,
    pub triples_after: usize,
    pub relations_before: usize,
    pub relations_after: usize,
}

impl CleaningReport {
    pub fn removed_count(&self) -> usize {
        self.duplicate_pairs.len()
            + self.inverse_pairs.len()
            + self.pattern_removed.iter().map(|(_, v)| v.len()).sum::<usize>()
            + self.manual_removed.len()
            + self.low_frequency_removed.len()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "triples:   {} -> {}", self.triples_before, self.triples_after);
        let _ = writeln!(out, "relations: {} -> {}", self.relations_before, self.relations_after);
        let _ = writeln!(out, "\nnear-duplicate relations removed: {}", self.duplicate_pairs.len());
        for p in &self.duplicate_pairs {
            let _ = writeln!(out, "  {} (kept {}, overlap {:.4})", p.dropped, p.kept, p.overlap);
        }
        let _ = writeln!(out, "inverse relations removed: {}", self.inverse_pairs.len());
        for p in &self.inverse_pairs {
            let _ = writeln!(out, "  {} (kept {}, overlap {:.4})", p.dropped, p.kept, p.overlap);
        }
        for (pattern, rels) in &self.pattern_removed {
            let _ = writeln!(out, "pattern {pattern:?} removed: {}", rels.len());
            for r in rels {
                let _ = writeln!(out, "  {r}");
            }
        }
        let _ = writeln!(out, "manually removed: {}", self.manual_removed.len());
        for r in &self.manual_removed {
            let _ = writeln!(out, "  {r}");
        }
        let _ = writeln!(out, "low-frequency removed: {}", self.low_frequency_removed.len());
        for r in &self.low_frequency_removed {
            let _ = writeln!(out, "  {r}");
        }
        if !self.warnings.is_empty() {
            let _ = writeln!(out, "\nwarnings:");
            for w in &self.warnings {
                let _ = writeln!(out, "  {w}");
            }
        }
        out
    }

    /// `category,relation,partner,overlap` with one row per removed relation.
    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        let _ = w.write_record(["category", "relation", "partner", "overlap"]);
        for p in &self.duplicate_pairs {
            let _ = w.write_record(["near-duplicate", &p.dropped, &p.kept, &format!("{:.6}", p.overlap)]);
        }
        for p in &self.inverse_pairs {
            let _ = w.write_record(["inverse", &p.dropped, &p.kept, &format!("{:.6}", p.overlap)]);
        }
        for (pattern, rels) in &self.pattern_removed {
            for r in rels {
                let _ = w.write_record([format!("pattern:{pattern}").as_str(), r, "", ""]);
            }
        }
        for r in &self.manual_removed {
            let _ = w.write_record(["manual", r, "", ""]);
        }
        for r in &self.low_frequency_removed {
            let _ = w.write_record(["low-frequency", r, "", ""]);
        }
        String::from_utf8(w.into_inner().unwrap_or_default()).unwrap_or_default()
    }
}

/// Runs the cleaning steps in order: near-duplicate and inverse relations,
/// then each name pattern, then the manual list, then low-frequency
/// relations. Whole relations are removed, never individual triples.
pub fn apply_cleaning(
    set: &TripleSet,
    lexicon: &Lexicon,
    plan: &CleaningPlan,
) -> Result<(TripleSet, CleaningReport)> {
    plan.validate()?;
    let mut report = CleaningReport {
        triples_before: set.len(),
        relations_before: set.relation_count(),
        ..Default::default()
    };
    let mut removed: HashSet<RelationId> = HashSet::new();

    // Step 1: keep the smaller IRI of each flagged pair. Pairs whose member
    // is already gone are skipped, so survivors never form a flagged pair.
    let mut flagged = Vec::new();
    if plan.detect_duplicates {
        for p in detect_near_duplicates(set, plan.overlap_threshold, plan.measure)? {
            flagged.push((false, p));
        }
    }
    if plan.detect_inverses {
        for p in detect_inverses(set, plan.overlap_threshold, plan.measure)? {
            flagged.push((true, p));
        }
    }
    for (inverse, p) in flagged {
        if removed.contains(&p.first) || removed.contains(&p.second) {
            continue;
        }
        removed.insert(p.second);
        let entry = RemovedPair {
            kept: set.relation_iri(p.first).to_owned(),
            dropped: set.relation_iri(p.second).to_owned(),
            overlap: p.overlap,
        };
        if inverse {
            report.inverse_pairs.push(entry);
        } else {
            report.duplicate_pairs.push(entry);
        }
    }

    let alive = |removed: &HashSet<RelationId>| -> Vec<RelationId> {
        set.relations().filter(|r| !removed.contains(r)).collect()
    };

    // Steps 2-3: name patterns.
    for pattern in &plan.name_patterns {
        let mut hits: Vec<String> = Vec::new();
        for r in alive(&removed) {
            if lexicon.relation_name(set, r).contains(pattern.as_str()) {
                removed.insert(r);
                hits.push(set.relation_iri(r).to_owned());
            }
        }
        hits.sort();
        report.pattern_removed.push((pattern.clone(), hits));
    }

    // Step 4a: manual list.
    let mut manual: BTreeSet<String> = BTreeSet::new();
    for key in &plan.manual_removals {
        match resolve_relation(set, key) {
            Some(r) if removed.contains(&r) => report
                .warnings
                .push(format!("manual entry {key} was already removed by an earlier step")),
            Some(r) => {
                removed.insert(r);
                manual.insert(set.relation_iri(r).to_owned());
            }
            None => report
                .warnings
                .push(format!("manual entry {key} does not match any relation")),
        }
    }
    report.manual_removed = manual.into_iter().collect();

    // Step 4b: low frequency, counted on what survives so far.
    let counts: HashMap<RelationId, usize> =
        set.relations().map(|r| (r, set.pairs(r).len())).collect();
    let mut low: Vec<String> = Vec::new();
    for r in alive(&removed) {
        if counts[&r] < plan.min_frequency {
            removed.insert(r);
            low.push(set.relation_iri(r).to_owned());
        }
    }
    low.sort();
    report.low_frequency_removed = low;

    let cleaned = set.filter(|t| !removed.contains(&t.relation));
    report.triples_after = cleaned.len();
    report.relations_after = cleaned.relation_count();
    debug_assert_eq!(
        report.relations_after,
        report.relations_before - report.removed_count()
    );
    Ok((cleaned, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::store::TripleSetBuilder;

    fn toy() -> (TripleSet, Lexicon) {
        let mut b = TripleSetBuilder::new();
        for i in 0..5 {
            b.insert_str(&format!("w{i}"), "P180", &format!("thing{i}"));
            b.insert_str(&format!("w{i}"), "P1212", &format!("atlas{i}"));
            b.insert_str(&format!("w{i}"), "P973", &format!("url{i}"));
            b.insert_str(&format!("w{i}"), "P8091", &format!("ark{i}"));
        }
        b.insert_str("w0", "P999", "rare");
        let set = b.build();
        let mut lex = Lexicon::new();
        for (iri, label) in [
            ("P180", "depicts"),
            ("P1212", "Atlas ID"),
            ("P973", "described at URL"),
            ("P8091", "Archival Resource Key"),
            ("P999", "oddity"),
        ] {
            lex.set_relation_label(set.relation_id(iri).unwrap(), label);
        }
        (set, lex)
    }

    #[test]
    fn identity_plan_is_identity() {
        let (set, lex) = toy();
        let (out, report) = apply_cleaning(&set, &lex, &CleaningPlan::identity()).unwrap();
        assert_eq!(out.triples(), set.triples());
        assert_eq!(report.removed_count(), 0);
    }

    #[test]
    fn pattern_manual_and_frequency_steps() {
        let (set, lex) = toy();
        let plan = CleaningPlan {
            manual_removals: vec!["P8091".into(), "P4896".into()],
            ..CleaningPlan::default()
        };
        let (out, report) = apply_cleaning(&set, &lex, &plan).unwrap();
        assert_eq!(report.pattern_removed[0], ("ID".to_owned(), vec!["P1212".to_owned()]));
        assert_eq!(report.pattern_removed[1], ("URL".to_owned(), vec!["P973".to_owned()]));
        assert_eq!(report.manual_removed, vec!["P8091".to_owned()]);
        assert_eq!(report.low_frequency_removed, vec!["P999".to_owned()]);
        assert_eq!(report.warnings.len(), 1);
        assert_eq!(out.len(), 5);
        assert_eq!(out.relation_count(), 1);
        assert_eq!(report.relations_after, report.relations_before - report.removed_count());
    }

    #[test]
    fn keeps_smaller_iri_of_duplicate_pair() {
        let mut b = TripleSetBuilder::new();
        for i in 0..4 {
            b.insert_str(&format!("a{i}"), "Pb", &format!("b{i}"));
            b.insert_str(&format!("a{i}"), "Pa", &format!("b{i}"));
            b.insert_str(&format!("b{i}"), "Pc", &format!("a{i}"));
        }
        let set = b.build();
        let (out, report) = apply_cleaning(&set, &Lexicon::new(), &CleaningPlan::default()).unwrap();
        assert_eq!(report.duplicate_pairs.len(), 1);
        assert_eq!(report.duplicate_pairs[0].kept, "Pa");
        assert_eq!(report.duplicate_pairs[0].dropped, "Pb");
        assert_eq!(report.inverse_pairs.len(), 1);
        assert_eq!(report.inverse_pairs[0].kept, "Pa");
        assert_eq!(report.inverse_pairs[0].dropped, "Pc");
        assert_eq!(out.relation_count(), 1);
    }

    #[test]
    fn case_sensitive_patterns() {
        let mut b = TripleSetBuilder::new();
        b.insert_str("a", "P1", "b");
        b.insert_str("c", "P1", "d");
        let set = b.build();
        let mut lex = Lexicon::new();
        lex.set_relation_label(set.relation_id("P1").unwrap(), "video identifier");
        let (out, _) = apply_cleaning(&set, &lex, &CleaningPlan::default()).unwrap();
        assert_eq!(out.len(), 2);
    }

    #[test]
    fn plan_file_parsing() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("manual.txt"), "# by hand\nP8091\nP4896  # 3D model\n").unwrap();
        let plan_path = dir.path().join("plan.toml");
        fs::write(
            &plan_path,
            "overlap_threshold = 0.9\nmin_frequency = 3\nmanual_list = \"manual.txt\"\nmeasure = \"jaccard\"\n",
        )
        .unwrap();
        let plan = CleaningPlan::from_file(&plan_path).unwrap();
        assert_eq!(plan.overlap_threshold, 0.9);
        assert_eq!(plan.min_frequency, 3);
        assert_eq!(plan.measure, OverlapMeasure::Jaccard);
        assert_eq!(plan.manual_removals, vec!["P8091", "P4896"]);
        assert_eq!(plan.name_patterns, vec!["ID", "URL"]);

        fs::write(&plan_path, "overlap_threshold = 1.2\n").unwrap();
        assert!(CleaningPlan::from_file(&plan_path).is_err());
        fs::write(&plan_path, "bogus = 1\n").unwrap();
        assert!(CleaningPlan::from_file(&plan_path).is_err());
    }
}
