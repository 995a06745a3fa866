//! Adapters from on-disk corpora to [`Dataset`].

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{CorpusError, Dataset, LabeledExample, Provenance, Result, TokenizerConfig};

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CorpusError + '_ {
    move |source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn dataset_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".to_string())
}

fn provenance(path: &Path, adapter: &str, config: &TokenizerConfig, skipped_rows: usize) -> Provenance {
    Provenance {
        source: path.display().to_string(),
        adapter: adapter.to_string(),
        tokenizer: config.clone(),
        seed: None,
        skipped_rows,
    }
}

#[derive(Deserialize)]
struct JsonlRecord {
    #[serde(default)]
    id: Option<serde_json::Value>,
    text: String,
    label: serde_json::Value,
}

#[derive(Serialize)]
struct JsonlOut<'a> {
    id: &'a str,
    text: &'a str,
    label: u8,
}

/// Reads the canonical corpus format: one JSON object per line with `text`
/// and an integer `label` in {0, 1}. An optional `id` is kept; otherwise the
/// 1-based line number is used. Blank lines are ignored.
pub fn ingest_jsonl(path: &Path, config: &TokenizerConfig) -> Result<Dataset> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut examples = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: JsonlRecord = serde_json::from_str(&line).map_err(|e| CorpusError::Malformed {
            line: line_no,
            message: e.to_string(),
        })?;
        let label = match rec.label.as_i64() {
            Some(0) => false,
            Some(1) => true,
            _ => {
                return Err(CorpusError::LabelOutOfRange {
                    line: line_no,
                    value: rec.label.to_string(),
                })
            }
        };
        if rec.text.trim().is_empty() {
            return Err(CorpusError::Malformed {
                line: line_no,
                message: "text must be non-empty".to_string(),
            });
        }
        let id = match rec.id {
            Some(serde_json::Value::String(s)) => s,
            Some(v) if !v.is_null() => v.to_string(),
            _ => line_no.to_string(),
        };
        examples.push(LabeledExample::new(id, rec.text, label, config));
    }
    Dataset::new(dataset_name(path), examples, provenance(path, "jsonl", config, 0))
}

/// Writes a dataset in the canonical one-record-per-line format.
pub fn write_jsonl(dataset: &Dataset, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut out = BufWriter::new(file);
    for ex in &dataset.examples {
        let rec = JsonlOut {
            id: &ex.id,
            text: &ex.raw,
            label: u8::from(ex.label),
        };
        let line = serde_json::to_string(&rec).expect("record serializes");
        writeln!(out, "{line}").map_err(io_err(path))?;
    }
    out.flush().map_err(io_err(path))
}

fn column(headers: &csv::StringRecord, name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| CorpusError::MissingColumn(name.to_string()))
}

fn csv_err(path: &Path, e: csv::Error) -> CorpusError {
    let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(source) => CorpusError::Io {
            path: path.to_path_buf(),
            source,
        },
        other => CorpusError::Malformed {
            line,
            message: format!("{other:?}"),
        },
    }
}

/// Reads the OLID tab-separated layout (`id`, `tweet`, `subtask_a` with
/// `OFF`/`NOT`). Other columns are ignored; rows with blank tweets are
/// skipped with a warning.
pub fn ingest_olid_tsv(path: &Path, config: &TokenizerConfig) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .quoting(false)
        .flexible(true)
        .from_path(path)
        .map_err(|e| csv_err(path, e))?;
    let headers = reader.headers().map_err(|e| csv_err(path, e))?.clone();
    let id_col = column(&headers, "id")?;
    let text_col = column(&headers, "tweet")?;
    let label_col = column(&headers, "subtask_a")?;

    let mut examples = Vec::new();
    let mut skipped = 0;
    for rec in reader.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        let id = rec.get(id_col).unwrap_or("").trim().to_string();
        let text = rec.get(text_col).unwrap_or("");
        let raw_label = rec.get(label_col).unwrap_or("").trim();
        let label = match raw_label {
            "OFF" => true,
            "NOT" => false,
            other => {
                return Err(CorpusError::UnknownLabel {
                    row: if id.is_empty() { format!("line {line}") } else { id },
                    value: other.to_string(),
                })
            }
        };
        if text.trim().is_empty() {
            log::warn!("{}: skipping row {id} with empty text", path.display());
            skipped += 1;
            continue;
        }
        examples.push(LabeledExample::new(id, text, label, config));
    }
    if skipped > 0 {
        log::warn!("{}: skipped {skipped} rows with empty text", path.display());
    }
    Dataset::new(dataset_name(path), examples, provenance(path, "olid-tsv", config, skipped))
}

/// Names the columns of a generic comma-separated corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnMap {
    pub text: String,
    pub label: String,
    /// Column holding example ids; the 1-based data row index when absent.
    #[serde(default)]
    pub id: Option<String>,
}

/// Reads an RFC 4180 CSV with a header row, mapping raw label strings to
/// {0, 1} through `label_map`.
///
/// A Gao-style hate-speech export would use, for instance,
/// `ColumnMap { text: "comment", label: "hateful", id: None }` with
/// `{"yes": 1, "no": 0}`.
pub fn ingest_csv_mapped(
    path: &Path,
    columns: &ColumnMap,
    label_map: &BTreeMap<String, u8>,
    config: &TokenizerConfig,
) -> Result<Dataset> {
    if let Some((k, v)) = label_map.iter().find(|(_, &v)| v > 1) {
        return Err(CorpusError::InvalidParameter(format!("label map sends {k:?} to {v}; expected 0 or 1")));
    }
    let mut reader = csv::ReaderBuilder::new()
        .flexible(false)
        .from_path(path)
        .map_err(|e| csv_err(path, e))?;
    let headers = reader.headers().map_err(|e| csv_err(path, e))?.clone();
    let text_col = column(&headers, &columns.text)?;
    let label_col = column(&headers, &columns.label)?;
    let id_col = columns.id.as_deref().map(|c| column(&headers, c)).transpose()?;

    let mut examples = Vec::new();
    let mut skipped = 0;
    for (idx, rec) in reader.records().enumerate() {
        let row = idx + 1;
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let raw_label = rec.get(label_col).unwrap_or("").trim();
        let label = match label_map.get(raw_label) {
            Some(&v) => v == 1,
            None => {
                return Err(CorpusError::UnknownLabel {
                    row: row.to_string(),
                    value: raw_label.to_string(),
                })
            }
        };
        let text = rec.get(text_col).unwrap_or("");
        if text.trim().is_empty() {
            log::warn!("{}: skipping row {row} with empty text", path.display());
            skipped += 1;
            continue;
        }
        let id = match id_col {
            Some(c) => rec.get(c).unwrap_or("").to_string(),
            None => row.to_string(),
        };
        examples.push(LabeledExample::new(id, text, label, config));
    }
    Dataset::new(dataset_name(path), examples, provenance(path, "csv-mapped", config, skipped))
}
