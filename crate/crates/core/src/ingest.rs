//! Loading the labeled news CSV and stratified fold assignment.
//!
//! The reader is a small RFC-4180 parser rather than a general CSV library:
//! it must reject unbalanced quotes with the byte offset of the opening
//! quote, which lenient readers silently accept.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Binary class label. 0 = reliable, 1 = fake (the positive class).
pub type Label = u8;

/// One data row of the news CSV before cleaning.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawRecord {
    pub id: u64,
    pub title: String,
    pub author: String,
    pub text: String,
    pub label: Label,
}

/// Anything carrying a binary label, so folds can be assigned over raw
/// records and cleaned documents alike.
pub trait Labeled {
    fn label(&self) -> Label;
}

impl Labeled for RawRecord {
    fn label(&self) -> Label {
        self.label
    }
}

impl Labeled for Label {
    fn label(&self) -> Label {
        *self
    }
}

/// A parsed CSV record together with the byte offset where it starts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvRow {
    pub offset: u64,
    pub fields: Vec<String>,
}

/// Parses RFC-4180 CSV text. Both `\n` and `\r\n` terminate records, and a
/// trailing empty line is ignored.
pub fn parse_csv(input: &str) -> Result<Vec<CsvRow>> {
    let bytes = input.as_bytes();
    let mut rows = Vec::new();
    let mut pos = 0usize;

    while pos < bytes.len() {
        let row_start = pos;
        let mut fields = Vec::new();
        loop {
            let (field, next) = parse_field(input, pos)?;
            fields.push(field);
            pos = next;
            match bytes.get(pos) {
                Some(b',') => {
                    pos += 1;
                }
                Some(b'\r') if bytes.get(pos + 1) == Some(&b'\n') => {
                    pos += 2;
                    break;
                }
                Some(b'\n') => {
                    pos += 1;
                    break;
                }
                None => break,
                Some(_) => {
                    return Err(Error::MalformedCsv {
                        offset: pos as u64,
                        reason: "unexpected character after closing quote".into(),
                    })
                }
            }
        }
        // A lone newline produces one empty field; skip such blank lines.
        if fields.len() == 1 && fields[0].is_empty() {
            continue;
        }
        rows.push(CsvRow {
            offset: row_start as u64,
            fields,
        });
    }
    Ok(rows)
}

fn parse_field(input: &str, start: usize) -> Result<(String, usize)> {
    let bytes = input.as_bytes();
    if bytes.get(start) != Some(&b'"') {
        let end = bytes[start..]
            .iter()
            .position(|&b| b == b',' || b == b'\n' || b == b'\r')
            .map_or(bytes.len(), |p| start + p);
        // A bare '\r' not followed by '\n' belongs to the field.
        if bytes.get(end) == Some(&b'\r') && bytes.get(end + 1) != Some(&b'\n') {
            let (rest, next) = parse_field(input, end + 1)?;
            return Ok((format!("{}\r{}", &input[start..end], rest), next));
        }
        return Ok((input[start..end].to_string(), end));
    }

    let mut out = String::new();
    let mut pos = start + 1;
    loop {
        let Some(rel) = bytes[pos..].iter().position(|&b| b == b'"') else {
            return Err(Error::MalformedCsv {
                offset: start as u64,
                reason: "unbalanced quote".into(),
            });
        };
        out.push_str(&input[pos..pos + rel]);
        pos += rel + 1;
        if bytes.get(pos) == Some(&b'"') {
            out.push('"');
            pos += 1;
        } else {
            return Ok((out, pos));
        }
    }
}

/// Quotes a field when it contains a delimiter, quote or line break.
pub fn quote_field(field: &str) -> String {
    if field.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

pub fn format_csv_row<S: AsRef<str>>(fields: &[S]) -> String {
    let mut line = fields
        .iter()
        .map(|f| quote_field(f.as_ref()))
        .collect::<Vec<_>>()
        .join(",");
    line.push('\n');
    line
}

/// Reads a UTF-8 CSV file, mapping a missing file to [`Error::FileNotFound`].
pub fn read_csv_file(path: &Path) -> Result<Vec<CsvRow>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let text = String::from_utf8(bytes).map_err(|e| Error::MalformedCsv {
        offset: e.utf8_error().valid_up_to() as u64,
        reason: "invalid UTF-8".into(),
    })?;
    parse_csv(&text)
}

/// Loads labeled news records. Required columns: `id`, `text`, `label`;
/// `title` and `author` are optional. Row numbers in errors count data rows
/// from 1.
pub fn load_csv(path: &Path) -> Result<Vec<RawRecord>> {
    records_from_rows(read_csv_file(path)?)
}

pub fn parse_records(input: &str) -> Result<Vec<RawRecord>> {
    records_from_rows(parse_csv(input)?)
}

fn records_from_rows(rows: Vec<CsvRow>) -> Result<Vec<RawRecord>> {
    let mut rows = rows.into_iter();
    let header = rows
        .next()
        .ok_or_else(|| Error::Empty("CSV has no header row".into()))?;
    let col = |name: &str| {
        header
            .fields
            .iter()
            .position(|h| h.trim().trim_start_matches('\u{feff}').eq_ignore_ascii_case(name))
    };
    let missing = |name: &str| Error::MalformedCsv {
        offset: 0,
        reason: format!("header lacks required column '{name}'"),
    };
    let id_col = col("id").ok_or_else(|| missing("id"))?;
    let text_col = col("text").ok_or_else(|| missing("text"))?;
    let label_col = col("label").ok_or_else(|| missing("label"))?;
    let title_col = col("title");
    let author_col = col("author");
    let width = header.fields.len();

    let mut seen = HashSet::new();
    let mut records = Vec::new();
    for (i, row) in rows.enumerate() {
        let row_no = i + 1;
        if row.fields.len() > width {
            return Err(Error::BadRow {
                row: row_no,
                reason: format!("{} fields, header has {width}", row.fields.len()),
            });
        }
        let get = |c: usize| row.fields.get(c).map(String::as_str).unwrap_or("");
        let id_text = get(id_col).trim();
        let id: u64 = id_text.parse().map_err(|_| Error::BadRow {
            row: row_no,
            reason: format!("id '{id_text}' is not a non-negative integer"),
        })?;
        let label = match get(label_col).trim() {
            "0" => 0,
            "1" => 1,
            "" => {
                return Err(Error::BadRow {
                    row: row_no,
                    reason: "missing label".into(),
                })
            }
            other => {
                return Err(Error::BadRow {
                    row: row_no,
                    reason: format!("label '{other}' is not 0 or 1"),
                })
            }
        };
        if !seen.insert(id) {
            return Err(Error::BadRow {
                row: row_no,
                reason: format!("duplicate id {id}"),
            });
        }
        records.push(RawRecord {
            id,
            title: title_col.map(get).unwrap_or("").to_string(),
            author: author_col.map(get).unwrap_or("").to_string(),
            text: get(text_col).to_string(),
            label,
        });
    }
    Ok(records)
}

/// Serializes records with the canonical `id,title,author,text,label` header.
pub fn records_to_csv(records: &[RawRecord]) -> String {
    let mut out = format_csv_row(&["id", "title", "author", "text", "label"]);
    for r in records {
        out.push_str(&format_csv_row(&[
            r.id.to_string(),
            r.title.clone(),
            r.author.clone(),
            r.text.clone(),
            r.label.to_string(),
        ]));
    }
    out
}

pub fn write_csv(path: &Path, records: &[RawRecord]) -> Result<()> {
    fs::write(path, records_to_csv(records)).map_err(|e| Error::io(path, e))
}

/// Per-record fold membership for k-fold cross-validation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    pub k: usize,
    pub seed: u64,
    pub assignment: Vec<usize>,
}

impl FoldAssignment {
    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        self.indices(|f| f == fold)
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        self.indices(|f| f != fold)
    }

    fn indices(&self, keep: impl Fn(usize) -> bool) -> Vec<usize> {
        self.assignment
            .iter()
            .enumerate()
            .filter(|&(_, &f)| keep(f))
            .map(|(i, _)| i)
            .collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.assignment {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Stratified shuffle-then-deal. Each class is shuffled independently and
/// dealt round-robin; the second class resumes dealing where the first one
/// stopped so that total fold sizes also differ by at most one.
pub fn assign_folds<T: Labeled>(items: &[T], k: usize, seed: u64) -> Result<FoldAssignment> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("fold count must be >= 2, got {k}")));
    }
    let mut by_class: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (i, item) in items.iter().enumerate() {
        let label = item.label();
        if label > 1 {
            return Err(Error::BadRow {
                row: i + 1,
                reason: format!("label {label} is not 0 or 1"),
            });
        }
        by_class[label as usize].push(i);
    }
    for (class, members) in by_class.iter().enumerate() {
        if members.len() < k {
            return Err(Error::InvalidArgument(format!(
                "class {class} has {} members, fewer than k = {k}",
                members.len()
            )));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![0; items.len()];
    let mut next_fold = 0;
    for members in by_class.iter_mut() {
        members.shuffle(&mut rng);
        for &i in members.iter() {
            assignment[i] = next_fold;
            next_fold = (next_fold + 1) % k;
        }
    }
    Ok(FoldAssignment {
        k,
        seed,
        assignment,
    })
}
