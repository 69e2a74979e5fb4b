use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// One human judgement of a generated entity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotationRecord {
    pub candidate: String,
    pub subject: String,
    pub relation: String,
    pub annotator: String,
    pub correct: bool,
}

pub const ANNOTATION_HEADER: [&str; 5] = ["candidate", "subject", "relation", "annotator", "label"];

/// Reads `candidate,subject,relation,annotator,label` records; the header
/// row is optional. Labels are `correct` or `incorrect`, case-insensitive.
pub fn parse_annotations(text: &str, origin: &Path) -> Result<Vec<AnnotationRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut out = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let line = i as u64 + 1;
        let row = row.map_err(|e| Error::parse(origin, line, e.to_string()))?;
        if i == 0 && row.iter().eq(ANNOTATION_HEADER) {
            continue;
        }
        if row.len() != 5 {
            return Err(Error::parse(origin, line, format!("expected 5 fields, found {}", row.len())));
        }
        let correct = match row[4].to_ascii_lowercase().as_str() {
            "correct" => true,
            "incorrect" => false,
            other => {
                return Err(Error::parse(
                    origin,
                    line,
                    format!("label must be correct or incorrect, found {other:?}"),
                ))
            }
        };
        out.push(AnnotationRecord {
            candidate: row[0].to_owned(),
            subject: row[1].to_owned(),
            relation: row[2].to_owned(),
            annotator: row[3].to_owned(),
            correct,
        });
    }
    Ok(out)
}

pub fn read_annotations(path: &Path) -> Result<Vec<AnnotationRecord>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_annotations(&text, path)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnotatorPrecision {
    pub annotator: String,
    pub correct: usize,
    pub total: usize,
}

impl AnnotatorPrecision {
    pub fn precision(&self) -> f64 {
        self.correct as f64 / self.total as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrecisionReport {
    /// Sorted by annotator id.
    pub annotators: Vec<AnnotatorPrecision>,
}

impl PrecisionReport {
    /// Unweighted mean of the per-annotator precisions.
    pub fn average(&self) -> f64 {
        self.annotators.iter().map(AnnotatorPrecision::precision).sum::<f64>() / self.annotators.len() as f64
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("annotator,correct,total,precision\n");
        for a in &self.annotators {
            out.push_str(&format!("{},{},{},{:.3}\n", a.annotator, a.correct, a.total, a.precision()));
        }
        out.push_str(&format!("average,,,{:.3}\n", self.average()));
        out
    }
}

/// Per-annotator precision. A second label for the same candidate by the
/// same annotator is an error, as is an empty input.
pub fn compute_precision(records: &[AnnotationRecord]) -> Result<PrecisionReport> {
    if records.is_empty() {
        return Err(Error::InvalidArgument("no annotation records".into()));
    }
    if records.iter().map(|r| &r.annotator).collect::<HashSet<_>>().len() != 2 {
        log::warn!("annotation protocol expects two annotators");
    }
    let mut seen = HashSet::new();
    let mut per: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for r in records {
        if !seen.insert((&r.candidate, &r.subject, &r.relation, &r.annotator)) {
            return Err(Error::InvalidArgument(format!(
                "annotator {} labelled {:?} for {} twice",
                r.annotator, r.candidate, r.subject
            )));
        }
        let e = per.entry(&r.annotator).or_default();
        e.0 += r.correct as usize;
        e.1 += 1;
    }
    Ok(PrecisionReport {
        annotators: per
            .into_iter()
            .map(|(a, (correct, total))| AnnotatorPrecision {
                annotator: a.to_owned(),
                correct,
                total,
            })
            .collect(),
    })
}
