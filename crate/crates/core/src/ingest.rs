//! SCT-TSV release files: parsing, cross-file validation and serialization.
//!
//! Each file is UTF-8, tab separated, LF or CRLF terminated, and starts with
//! a fixed header line:
//!
//! ```text
//! concepts.tsv       id  active
//! descriptions.tsv   id  conceptId  term  kind  active
//! relationships.tsv  id  sourceId  typeId  destinationId  group  active
//! ```
//!
//! A wrong header is fatal. Any other bad line becomes a [`ParseIssue`] and
//! the row is skipped, so every data line yields exactly one row or one issue.

use std::collections::HashSet;
use std::fmt;
use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::id::{ConceptId, SctId};
use crate::model::{build_store, Concept, Description, DescriptionKind, Relationship, StoreError, TerminologyStore};
use crate::verhoeff::verhoeff_valid;

/// Shortest identifier accepted in release files.
pub const MIN_ID_DIGITS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ReleaseFile {
    Concepts,
    Descriptions,
    Relationships,
}

impl ReleaseFile {
    pub const ALL: [ReleaseFile; 3] = [
        ReleaseFile::Concepts,
        ReleaseFile::Descriptions,
        ReleaseFile::Relationships,
    ];

    pub fn header(self) -> &'static str {
        match self {
            ReleaseFile::Concepts => "id\tactive",
            ReleaseFile::Descriptions => "id\tconceptId\tterm\tkind\tactive",
            ReleaseFile::Relationships => "id\tsourceId\ttypeId\tdestinationId\tgroup\tactive",
        }
    }

    pub fn file_name(self) -> &'static str {
        match self {
            ReleaseFile::Concepts => "concepts.tsv",
            ReleaseFile::Descriptions => "descriptions.tsv",
            ReleaseFile::Relationships => "relationships.tsv",
        }
    }

    fn columns(self) -> usize {
        self.header().split('\t').count()
    }
}

impl fmt::Display for ReleaseFile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.file_name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum IssueKind {
    BadColumnCount,
    BadId,
    BadFlag,
    BadKind,
    EmptyTerm,
    DuplicateId,
    ChecksumFail,
    DanglingReference,
    BadEncoding,
}

impl IssueKind {
    pub fn code(self) -> &'static str {
        match self {
            IssueKind::BadColumnCount => "BAD_COLUMN_COUNT",
            IssueKind::BadId => "BAD_ID",
            IssueKind::BadFlag => "BAD_FLAG",
            IssueKind::BadKind => "BAD_KIND",
            IssueKind::EmptyTerm => "EMPTY_TERM",
            IssueKind::DuplicateId => "DUPLICATE_ID",
            IssueKind::ChecksumFail => "CHECKSUM_FAIL",
            IssueKind::DanglingReference => "DANGLING_REFERENCE",
            IssueKind::BadEncoding => "BAD_ENCODING",
        }
    }
}

impl fmt::Display for IssueKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// A problem with one data line. `line` is 1-based and never the header.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ParseIssue {
    pub file: ReleaseFile,
    pub line: usize,
    pub kind: IssueKind,
    pub detail: String,
}

impl fmt::Display for ParseIssue {
    /// `file:line:kind:detail`
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}:{}", self.file, self.line, self.kind, self.detail)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{file}: expected header {expected:?}, found {found:?}", expected = file.header())]
pub struct BadHeader {
    pub file: ReleaseFile,
    pub found: String,
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error(transparent)]
    BadHeader(#[from] BadHeader),
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Rows of one file, with the source line of each row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Parsed<T> {
    pub rows: Vec<T>,
    pub lines: Vec<usize>,
    pub issues: Vec<ParseIssue>,
}

impl<T> Default for Parsed<T> {
    fn default() -> Self {
        Parsed { rows: Vec::new(), lines: Vec::new(), issues: Vec::new() }
    }
}

/// Source line numbers of the rows of a bundle, parallel to its row lists.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SourceLines {
    pub concepts: Vec<usize>,
    pub descriptions: Vec<usize>,
    pub relationships: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ReleaseBundle {
    pub concepts: Vec<Concept>,
    pub descriptions: Vec<Description>,
    pub relationships: Vec<Relationship>,
    pub issues: Vec<ParseIssue>,
    pub lines: SourceLines,
}

struct RowError(IssueKind, String);

fn field_id(value: &str, column: &str) -> Result<SctId, RowError> {
    let id: SctId = value
        .parse()
        .map_err(|e| RowError(IssueKind::BadId, format!("{column}: {e}")))?;
    if id.digits() < MIN_ID_DIGITS {
        return Err(RowError(
            IssueKind::BadId,
            format!("{column}: {value:?} has fewer than {MIN_ID_DIGITS} digits"),
        ));
    }
    Ok(id)
}

fn field_flag(value: &str) -> Result<bool, RowError> {
    match value {
        "1" => Ok(true),
        "0" => Ok(false),
        other => Err(RowError(IssueKind::BadFlag, format!("active: expected 0 or 1, found {other:?}"))),
    }
}

fn parse_file<T>(
    file: ReleaseFile,
    bytes: &[u8],
    row: impl Fn(&[&str]) -> Result<T, RowError>,
) -> Result<Parsed<T>, BadHeader> {
    let mut lines = bytes.split(|&b| b == b'\n');
    let mut next_line = || {
        lines.next().map(|l| l.strip_suffix(b"\r").unwrap_or(l))
    };
    let header = next_line().unwrap_or_default();
    if header != file.header().as_bytes() {
        return Err(BadHeader { file, found: String::from_utf8_lossy(header).into_owned() });
    }

    let mut parsed = Parsed::default();
    let mut pending_blank = None;
    let mut number = 1;
    while let Some(raw) = next_line() {
        number += 1;
        // A final empty segment is just the file's trailing newline.
        if let Some(blank) = pending_blank.take() {
            parsed.issues.push(ParseIssue {
                file,
                line: blank,
                kind: IssueKind::BadColumnCount,
                detail: "empty line".into(),
            });
        }
        if raw.is_empty() {
            pending_blank = Some(number);
            continue;
        }
        let outcome = match std::str::from_utf8(raw) {
            Err(e) => Err(RowError(IssueKind::BadEncoding, format!("invalid UTF-8: {e}"))),
            Ok(text) => {
                let fields: Vec<&str> = text.split('\t').collect();
                if fields.len() != file.columns() {
                    Err(RowError(
                        IssueKind::BadColumnCount,
                        format!("expected {} columns, found {}", file.columns(), fields.len()),
                    ))
                } else {
                    row(&fields)
                }
            }
        };
        match outcome {
            Ok(r) => {
                parsed.rows.push(r);
                parsed.lines.push(number);
            }
            Err(RowError(kind, detail)) => parsed.issues.push(ParseIssue { file, line: number, kind, detail }),
        }
    }
    Ok(parsed)
}

pub fn parse_concepts(bytes: &[u8]) -> Result<Parsed<Concept>, BadHeader> {
    parse_file(ReleaseFile::Concepts, bytes, |f| {
        Ok(Concept { id: field_id(f[0], "id")?, active: field_flag(f[1])? })
    })
}

pub fn parse_descriptions(bytes: &[u8]) -> Result<Parsed<Description>, BadHeader> {
    parse_file(ReleaseFile::Descriptions, bytes, |f| {
        let id = field_id(f[0], "id")?;
        let concept_id = field_id(f[1], "conceptId")?;
        if f[2].trim().is_empty() {
            return Err(RowError(IssueKind::EmptyTerm, "term is empty".into()));
        }
        let kind = DescriptionKind::from_token(f[3]).ok_or_else(|| {
            RowError(IssueKind::BadKind, format!("kind: expected FSN or SYN, found {:?}", f[3]))
        })?;
        Ok(Description { id, concept_id, term: f[2].to_owned(), kind, active: field_flag(f[4])? })
    })
}

pub fn parse_relationships(bytes: &[u8]) -> Result<Parsed<Relationship>, BadHeader> {
    parse_file(ReleaseFile::Relationships, bytes, |f| {
        let id = field_id(f[0], "id")?;
        let source_id = field_id(f[1], "sourceId")?;
        let type_id = field_id(f[2], "typeId")?;
        let destination_id = field_id(f[3], "destinationId")?;
        let group = match f[4] {
            g if !g.is_empty() && g.bytes().all(|b| b.is_ascii_digit()) => g.parse::<u32>().ok(),
            _ => None,
        }
        .ok_or_else(|| {
            RowError(IssueKind::BadId, format!("group: expected a non-negative integer, found {:?}", f[4]))
        })?;
        let active = field_flag(f[5])?;
        if active && source_id == destination_id {
            return Err(RowError(IssueKind::BadId, format!("active self-loop on {source_id}")));
        }
        Ok(Relationship { id, source_id, type_id, destination_id, group, active })
    })
}

impl ReleaseBundle {
    /// Parses the three files of a release. The parses run in parallel.
    pub fn parse(concepts: &[u8], descriptions: &[u8], relationships: &[u8]) -> Result<Self, BadHeader> {
        let (c, d, r) = std::thread::scope(|s| {
            let d = s.spawn(|| parse_descriptions(descriptions));
            let r = s.spawn(|| parse_relationships(relationships));
            let c = parse_concepts(concepts);
            (c, d.join().expect("parser panicked"), r.join().expect("parser panicked"))
        });
        let (c, d, r) = (c?, d?, r?);
        let issues = [c.issues, d.issues, r.issues].concat();
        Ok(ReleaseBundle {
            concepts: c.rows,
            descriptions: d.rows,
            relationships: r.rows,
            issues,
            lines: SourceLines { concepts: c.lines, descriptions: d.lines, relationships: r.lines },
        })
    }

    /// Reads and parses `concepts.tsv`, `descriptions.tsv` and
    /// `relationships.tsv` from the given paths.
    pub fn read(concepts: &Path, descriptions: &Path, relationships: &Path) -> Result<Self, IngestError> {
        let read = |p: &Path| {
            std::fs::read(p).map_err(|source| IngestError::Io { path: p.display().to_string(), source })
        };
        Ok(ReleaseBundle::parse(&read(concepts)?, &read(descriptions)?, &read(relationships)?)?)
    }

    pub fn read_dir(dir: &Path) -> Result<Self, IngestError> {
        let [c, d, r] = ReleaseFile::ALL.map(|f| dir.join(f.file_name()));
        ReleaseBundle::read(&c, &d, &r)
    }

    /// Source line of row `index` of `file`. Bundles assembled in memory
    /// have no recorded lines; their rows count from line 2.
    pub fn line_of(&self, file: ReleaseFile, index: usize) -> usize {
        let lines = match file {
            ReleaseFile::Concepts => &self.lines.concepts,
            ReleaseFile::Descriptions => &self.lines.descriptions,
            ReleaseFile::Relationships => &self.lines.relationships,
        };
        lines.get(index).copied().unwrap_or(index + 2)
    }

    pub fn build_store(&self, isa_type_id: ConceptId) -> Result<TerminologyStore, StoreError> {
        build_store(
            self.concepts.clone(),
            self.descriptions.clone(),
            self.relationships.clone(),
            isa_type_id,
        )
    }

    /// Serializes the rows back to SCT-TSV, LF terminated.
    pub fn to_tsv(&self) -> [String; 3] {
        [
            concepts_tsv(&self.concepts),
            descriptions_tsv(&self.descriptions),
            relationships_tsv(&self.relationships),
        ]
    }

    pub fn write_dir(&self, dir: &Path) -> std::io::Result<()> {
        for (file, text) in ReleaseFile::ALL.into_iter().zip(self.to_tsv()) {
            std::fs::write(dir.join(file.file_name()), text)?;
        }
        Ok(())
    }
}

fn flag(active: bool) -> u8 {
    u8::from(active)
}

pub fn concepts_tsv(rows: &[Concept]) -> String {
    let mut out = format!("{}\n", ReleaseFile::Concepts.header());
    for c in rows {
        let _ = writeln!(out, "{}\t{}", c.id, flag(c.active));
    }
    out
}

pub fn descriptions_tsv(rows: &[Description]) -> String {
    let mut out = format!("{}\n", ReleaseFile::Descriptions.header());
    for d in rows {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            d.id,
            d.concept_id,
            d.term,
            d.kind.token(),
            flag(d.active)
        );
    }
    out
}

pub fn relationships_tsv(rows: &[Relationship]) -> String {
    let mut out = format!("{}\n", ReleaseFile::Relationships.header());
    for r in rows {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}",
            r.id,
            r.source_id,
            r.type_id,
            r.destination_id,
            r.group,
            flag(r.active)
        );
    }
    out
}

/// Cross-file checks: duplicate row ids, unresolved concept references and,
/// when `check_digits` is set, Verhoeff check digits of every row id.
///
/// Issues come back ordered by file, then line.
pub fn validate_bundle(bundle: &ReleaseBundle, check_digits: bool) -> Vec<ParseIssue> {
    let mut issues = Vec::new();
    let mut report = |file, index, kind, detail: String| {
        issues.push(ParseIssue { file, line: bundle.line_of(file, index), kind, detail });
    };

    let mut check_ids = |file: ReleaseFile, ids: &mut dyn Iterator<Item = SctId>| {
        let mut seen = HashSet::new();
        for (i, id) in ids.enumerate() {
            if !seen.insert(id) {
                report(file, i, IssueKind::DuplicateId, format!("id {id} already defined"));
            }
            if check_digits && !verhoeff_valid(&id.to_string()).unwrap_or(false) {
                report(file, i, IssueKind::ChecksumFail, format!("id {id} fails the Verhoeff check"));
            }
        }
    };
    check_ids(ReleaseFile::Concepts, &mut bundle.concepts.iter().map(|c| c.id));
    check_ids(ReleaseFile::Descriptions, &mut bundle.descriptions.iter().map(|d| d.id));
    check_ids(ReleaseFile::Relationships, &mut bundle.relationships.iter().map(|r| r.id));

    let known: HashSet<ConceptId> = bundle.concepts.iter().map(|c| c.id).collect();
    let mut dangling = |file, index, row: SctId, column: &str, target: ConceptId| {
        if !known.contains(&target) {
            issues.push(ParseIssue {
                file,
                line: bundle.line_of(file, index),
                kind: IssueKind::DanglingReference,
                detail: format!("row {row}: {column} {target} is not a concept"),
            });
        }
    };
    for (i, d) in bundle.descriptions.iter().enumerate() {
        dangling(ReleaseFile::Descriptions, i, d.id, "conceptId", d.concept_id);
    }
    for (i, r) in bundle.relationships.iter().enumerate() {
        dangling(ReleaseFile::Relationships, i, r.id, "sourceId", r.source_id);
        dangling(ReleaseFile::Relationships, i, r.id, "typeId", r.type_id);
        dangling(ReleaseFile::Relationships, i, r.id, "destinationId", r.destination_id);
    }
    issues.sort_by_key(|i| (i.file, i.line));
    issues
}
