use std::collections::HashSet;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use super::{Triple, TripleSet, TripleSetBuilder};
use crate::error::{Error, Result};

/// How to treat the first record of a triple file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HeaderMode {
    /// Skip the first record only if it reads `from,rel,to`.
    #[default]
    Auto,
    Present,
    Absent,
}

#[derive(Debug, Clone, Copy)]
pub struct CsvDialect {
    pub delimiter: u8,
    pub header: HeaderMode,
}

impl Default for CsvDialect {
    fn default() -> Self {
        Self {
            delimiter: b',',
            header: HeaderMode::Auto,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ParseSummary {
    /// Data records read, duplicates included.
    pub records: usize,
    /// Distinct triples after collapsing duplicates.
    pub collapsed: usize,
    pub had_header: bool,
}

/// Reads a `from,rel,to` file into a fresh [`TripleSet`].
pub fn parse_triples(path: &Path, dialect: &CsvDialect) -> Result<(TripleSet, ParseSummary)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut builder = TripleSetBuilder::new();
    let (_, summary) = read_triples(&mut builder, file, dialect, path)?;
    Ok((builder.build(), summary))
}

/// Streams triple records into `builder`, returning this source's distinct
/// triples in first-occurrence order. `origin` only labels error messages.
pub fn read_triples<R: Read>(
    builder: &mut TripleSetBuilder,
    reader: R,
    dialect: &CsvDialect,
    origin: &Path,
) -> Result<(Vec<Triple>, ParseSummary)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .delimiter(dialect.delimiter)
        .from_reader(reader);

    let mut summary = ParseSummary::default();
    let mut local = HashSet::new();
    let mut out = Vec::new();
    let mut record = csv::StringRecord::new();
    let mut first = true;
    loop {
        let more = rdr.read_record(&mut record).map_err(|e| csv_error(origin, e))?;
        if !more {
            break;
        }
        let line = record.position().map_or(0, |p| p.line());
        if first {
            first = false;
            let is_header = record.len() == 3
                && record
                    .iter()
                    .map(|f| f.trim().to_ascii_lowercase())
                    .eq(["from", "rel", "to"]);
            let skip = match dialect.header {
                HeaderMode::Auto => is_header,
                HeaderMode::Present => true,
                HeaderMode::Absent => false,
            };
            if skip {
                summary.had_header = true;
                continue;
            }
        }
        if record.len() == 1 && record[0].trim().is_empty() {
            continue;
        }
        if record.len() != 3 {
            return Err(Error::parse(
                origin,
                line,
                format!("expected 3 fields (from,rel,to), found {}", record.len()),
            ));
        }
        summary.records += 1;
        let head = builder.intern_entity(&record[0]);
        let relation = builder.intern_relation(&record[1]);
        let tail = builder.intern_entity(&record[2]);
        let t = Triple::new(head, relation, tail);
        builder.insert(t);
        if local.insert(t) {
            out.push(t);
        }
    }
    summary.collapsed = out.len();
    Ok((out, summary))
}

/// Writes `from,rel,to` rows in the set's order, header included.
pub fn write_triples<W: Write>(set: &TripleSet, writer: W) -> Result<()> {
    write_triple_rows(set, set.triples(), writer)
}

pub(crate) fn write_triple_rows<W: Write>(
    set: &TripleSet,
    rows: &[Triple],
    writer: W,
) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(writer);
    let io = |e: csv::Error| Error::Config(format!("writing triples: {e}"));
    w.write_record(["from", "rel", "to"]).map_err(io)?;
    for t in rows {
        let (h, r, tl) = set.render(t);
        w.write_record([h, r, tl]).map_err(io)?;
    }
    w.flush()
        .map_err(|e| Error::Config(format!("writing triples: {e}")))?;
    Ok(())
}

fn csv_error(origin: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(origin, io),
        other => Error::parse(origin, line, format!("{other:?}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn read(text: &str) -> Result<(TripleSet, ParseSummary)> {
        let mut b = TripleSetBuilder::new();
        let (_, s) = read_triples(&mut b, text.as_bytes(), &CsvDialect::default(), Path::new("mem"))?;
        Ok((b.build(), s))
    }

    #[test]
    fn header_and_two_rows() {
        let (set, s) = read("from,rel,to\nQ1,P180,Q2\nQ1,P180,Q3\n").unwrap();
        assert_eq!(set.len(), 2);
        assert_eq!(set.entities().len(), 3);
        assert_eq!(set.relation_count(), 1);
        assert!(s.had_header);
        assert_eq!(s.records, 2);
    }

    #[test]
    fn header_only_is_empty() {
        let (set, s) = read("from,rel,to\n").unwrap();
        assert!(set.is_empty());
        assert_eq!(set.relation_count(), 0);
        assert_eq!(s.records, 0);
    }

    #[test]
    fn duplicates_counted_and_collapsed() {
        let (set, s) = read("a,r,b\na,r,b\na,r,c\n").unwrap();
        assert!(!s.had_header);
        assert_eq!(s.records, 3);
        assert_eq!(s.collapsed, 2);
        assert_eq!(set.len(), 2);
    }

    #[test]
    fn bad_field_count_reports_line() {
        let err = read("from,rel,to\na,r,b\na,r\n").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn quoted_commas_survive_round_trip() {
        let src = "from,rel,to\nQ1,label,\"Olympia, 1863\"\n";
        let (set, _) = read(src).unwrap();
        let mut out = Vec::new();
        write_triples(&set, &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), src);
    }
}
