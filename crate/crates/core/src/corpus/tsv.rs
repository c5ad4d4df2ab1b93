//! Tab-separated corpus files.
//!
//! The canonical layout is one header row followed by one instance per line:
//!
//! ```text
//! id  text  emotion  attention  certainty  ...  circumstance  attention_a1  ...  circumstance_a3
//! ```
//!
//! Gold appraisal columns and the 21 per-annotator vote columns are both
//! optional. A [`Schema`] maps these canonical fields onto whatever column
//! names a particular release uses. Text fields escape backslash, tab, CR
//! and newline as `\\`, `\t`, `\r`, `\n`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use log::warn;

use super::{AppraisalVector, Corpus, CorpusError, Dimension, Emotion, Instance};
use crate::agreement::majority_vote;

/// A canonical corpus field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Field {
    Id,
    Text,
    Emotion,
    Gold(Dimension),
    /// Vote of annotator 1, 2 or 3.
    Vote(u8, Dimension),
}

impl Field {
    /// Key used in schema descriptor files and as the canonical column name.
    pub fn key(&self) -> String {
        match self {
            Field::Id => "id".into(),
            Field::Text => "text".into(),
            Field::Emotion => "emotion".into(),
            Field::Gold(d) => d.name().into(),
            Field::Vote(a, d) => format!("{}_a{a}", d.name()),
        }
    }

    fn parse_key(key: &str) -> Option<Field> {
        match key {
            "id" => return Some(Field::Id),
            "text" => return Some(Field::Text),
            "emotion" => return Some(Field::Emotion),
            _ => {}
        }
        if let Some((dim, annotator)) = key.rsplit_once("_a") {
            let a: u8 = annotator.parse().ok()?;
            if !(1..=3).contains(&a) {
                return None;
            }
            return Dimension::from_str(dim).ok().map(|d| Field::Vote(a, d));
        }
        Dimension::from_str(key).ok().map(Field::Gold)
    }

    fn gold_fields() -> impl Iterator<Item = Field> {
        Dimension::ALL.into_iter().map(Field::Gold)
    }

    fn vote_fields() -> impl Iterator<Item = Field> {
        (1..=3u8).flat_map(|a| Dimension::ALL.into_iter().map(move |d| Field::Vote(a, d)))
    }
}

/// Maps canonical fields onto column names of a corpus file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schema {
    columns: Vec<(Field, String)>,
}

impl Schema {
    /// `id`, `text`, `emotion` and the seven gold appraisal columns.
    pub fn canonical() -> Self {
        let columns = [Field::Id, Field::Text, Field::Emotion]
            .into_iter()
            .chain(Field::gold_fields())
            .map(|f| (f, f.key()))
            .collect();
        Schema { columns }
    }

    /// The canonical schema plus `<dimension>_a1` .. `<dimension>_a3` vote columns.
    pub fn canonical_with_votes() -> Self {
        let mut schema = Self::canonical();
        schema
            .columns
            .extend(Field::vote_fields().map(|f| (f, f.key())));
        schema
    }

    /// Canonical names, keeping the gold and vote groups only if the header
    /// carries every column of the group.
    pub fn infer(header: &[&str]) -> Self {
        let has = |f: &Field| header.contains(&f.key().as_str());
        let mut columns: Vec<_> = [Field::Id, Field::Text, Field::Emotion]
            .into_iter()
            .map(|f| (f, f.key()))
            .collect();
        if Field::gold_fields().all(|f| has(&f)) {
            columns.extend(Field::gold_fields().map(|f| (f, f.key())));
        }
        if Field::vote_fields().all(|f| has(&f)) {
            columns.extend(Field::vote_fields().map(|f| (f, f.key())));
        }
        Schema { columns }
    }

    /// Parses a descriptor with one `field = column` mapping per line.
    ///
    /// Field keys are `id`, `text`, `emotion`, a dimension name for gold
    /// columns, or `<dimension>_a<n>` for annotator votes. `#` starts a comment.
    pub fn parse(descriptor: &str) -> Result<Self, CorpusError> {
        let mut columns = Vec::new();
        for (lineno, line) in descriptor.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, column) = line.split_once('=').ok_or_else(|| {
                CorpusError::InvalidArgument(format!("schema line {}: expected `field = column`", lineno + 1))
            })?;
            let key = key.trim();
            let column = column.trim().trim_matches('"');
            let field = Field::parse_key(key).ok_or_else(|| {
                CorpusError::InvalidArgument(format!("schema line {}: unknown field `{key}`", lineno + 1))
            })?;
            columns.retain(|(f, _)| *f != field);
            columns.push((field, column.to_string()));
        }
        let schema = Schema { columns };
        schema.check()?;
        Ok(schema)
    }

    pub fn column(&self, field: Field) -> Option<&str> {
        self.columns
            .iter()
            .find(|(f, _)| *f == field)
            .map(|(_, c)| c.as_str())
    }

    pub fn has_gold(&self) -> bool {
        self.column(Field::Gold(Dimension::Attention)).is_some()
    }

    pub fn has_votes(&self) -> bool {
        self.column(Field::Vote(1, Dimension::Attention)).is_some()
    }

    fn check(&self) -> Result<(), CorpusError> {
        for f in [Field::Id, Field::Text, Field::Emotion] {
            if self.column(f).is_none() {
                return Err(CorpusError::InvalidArgument(format!(
                    "schema does not map required field `{}`",
                    f.key()
                )));
            }
        }
        let complete = |fields: Vec<Field>, what: &str| {
            let mapped = fields.iter().filter(|f| self.column(**f).is_some()).count();
            if mapped != 0 && mapped != fields.len() {
                return Err(CorpusError::InvalidArgument(format!(
                    "schema maps {mapped} of {} {what} columns",
                    fields.len()
                )));
            }
            Ok(())
        };
        complete(Field::gold_fields().collect(), "gold appraisal")?;
        complete(Field::vote_fields().collect(), "annotator vote")?;
        Ok(())
    }
}

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out
}

fn unescape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        if c == '\\' {
            let replacement = match chars.peek() {
                Some('\\') => Some('\\'),
                Some('t') => Some('\t'),
                Some('n') => Some('\n'),
                Some('r') => Some('\r'),
                _ => None,
            };
            if let Some(r) = replacement {
                chars.next();
                out.push(r);
                continue;
            }
        }
        out.push(c);
    }
    out
}

fn parse_bit(value: &str) -> Option<bool> {
    match value.trim() {
        "0" => Some(false),
        "1" => Some(true),
        _ => None,
    }
}

/// Reads a corpus from a TSV file. Rows in errors are file line numbers
/// (the header is line 1).
pub fn load_corpus(path: impl AsRef<Path>, schema: Option<&Schema>) -> Result<Corpus, CorpusError> {
    let path = path.as_ref();
    let content = fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let mut corpus = parse_corpus(&content, schema)?;
    corpus.name = name;
    corpus.provenance = format!("loaded from {}", path.display());
    Ok(corpus)
}

pub(crate) fn parse_corpus(content: &str, schema: Option<&Schema>) -> Result<Corpus, CorpusError> {
    let mut lines = content.lines().enumerate();
    let header: Vec<&str> = match lines.next() {
        Some((_, h)) => h.trim_end_matches('\r').split('\t').map(str::trim).collect(),
        None => return Err(CorpusError::MissingColumn("id".into())),
    };
    let inferred;
    let schema = match schema {
        Some(s) => s,
        None => {
            inferred = Schema::infer(&header);
            &inferred
        }
    };
    schema.check()?;

    let mut index_of = Vec::with_capacity(schema.columns.len());
    for (field, column) in &schema.columns {
        let idx = header
            .iter()
            .position(|h| h == column)
            .ok_or_else(|| CorpusError::MissingColumn(column.clone()))?;
        index_of.push((*field, idx, column.as_str()));
    }
    let col = |field: Field| index_of.iter().find(|(f, _, _)| *f == field).copied();

    let mut corpus = Corpus::default();
    let mut seen = std::collections::HashSet::new();
    for (lineno, line) in lines {
        let row = lineno + 1;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split('\t').collect();
        let cell = |field: Field| -> Result<&str, CorpusError> {
            let (_, idx, name) = col(field).expect("schema checked");
            cells.get(idx).copied().ok_or_else(|| CorpusError::UnparseableValue {
                row,
                column: name.to_string(),
                value: String::new(),
            })
        };
        let bit = |field: Field| -> Result<bool, CorpusError> {
            let value = cell(field)?;
            parse_bit(value).ok_or_else(|| CorpusError::UnparseableValue {
                row,
                column: col(field).expect("schema checked").2.to_string(),
                value: value.to_string(),
            })
        };
        let vector = |make: &dyn Fn(Dimension) -> Field| -> Result<AppraisalVector, CorpusError> {
            let mut v = AppraisalVector::ZERO;
            for d in Dimension::ALL {
                v.set(d, bit(make(d))?);
            }
            Ok(v)
        };

        let id = cell(Field::Id)?.trim().to_string();
        if id.is_empty() {
            return Err(CorpusError::UnparseableValue {
                row,
                column: col(Field::Id).expect("schema checked").2.to_string(),
                value: id,
            });
        }
        if !seen.insert(id.clone()) {
            return Err(CorpusError::DuplicateId { row, id });
        }
        let emotion_raw = cell(Field::Emotion)?;
        let emotion = Emotion::from_str(emotion_raw).map_err(|_| CorpusError::UnparseableValue {
            row,
            column: col(Field::Emotion).expect("schema checked").2.to_string(),
            value: emotion_raw.to_string(),
        })?;
        let mut inst = Instance::new(id, unescape(cell(Field::Text)?), emotion);
        if schema.has_votes() {
            inst.annotator_votes = (1..=3u8)
                .map(|a| vector(&|d| Field::Vote(a, d)))
                .collect::<Result<_, _>>()?;
        }
        inst.gold_appraisal = if schema.has_gold() {
            Some(vector(&Field::Gold)?)
        } else if schema.has_votes() {
            majority_vote(&inst.annotator_votes).ok()
        } else {
            None
        };
        corpus.instances.push(inst);
    }
    corpus.validate()?;
    if corpus.is_empty() {
        warn!("corpus file contains a header but no instances");
    }
    Ok(corpus)
}

/// Renders a corpus in the canonical layout. Gold and vote columns are
/// written only when every instance has them.
pub fn corpus_to_tsv(corpus: &Corpus) -> String {
    let schema = if corpus.has_votes() {
        Schema::canonical_with_votes()
    } else if !corpus.is_empty() && corpus.has_gold_appraisal() {
        Schema::canonical()
    } else {
        Schema::infer(&["id", "text", "emotion"])
    };
    let mut out = String::new();
    let header: Vec<_> = schema.columns.iter().map(|(_, c)| c.as_str()).collect();
    out.push_str(&header.join("\t"));
    out.push('\n');
    for inst in &corpus.instances {
        let cells: Vec<String> = schema
            .columns
            .iter()
            .map(|(field, _)| match field {
                Field::Id => escape(&inst.id),
                Field::Text => escape(&inst.text),
                Field::Emotion => inst.emotion.name().to_string(),
                Field::Gold(d) => bit_cell(inst.gold_appraisal.expect("gold present").get(*d)),
                Field::Vote(a, d) => bit_cell(inst.annotator_votes[usize::from(*a) - 1].get(*d)),
            })
            .collect();
        let _ = writeln!(out, "{}", cells.join("\t"));
    }
    out
}

fn bit_cell(b: bool) -> String {
    if b { "1" } else { "0" }.to_string()
}

pub fn save_corpus(corpus: &Corpus, path: impl AsRef<Path>) -> Result<(), CorpusError> {
    let path = path.as_ref();
    fs::write(path, corpus_to_tsv(corpus)).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })
}
