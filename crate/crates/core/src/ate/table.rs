use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{AteConfig, AteEntry, AteError, Result};
use crate::corpus::{Provenance, Token};

pub const TABLE_FORMAT: &str = "causal-ate-table";
pub const TABLE_VERSION: u32 = 1;

/// Binds a table to the estimator, replacer and data that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableMetadata {
    pub estimator_name: String,
    pub estimator_fingerprint: String,
    pub vocabulary_hash: String,
    pub replacer: String,
    pub config: AteConfig,
    pub dataset: String,
    pub provenance: Provenance,
    pub seed: u64,
    /// RFC 3339 build time; left empty for reproducible output.
    pub built_at: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AteTable {
    pub metadata: TableMetadata,
    /// Score for words without an entry.
    pub default_ate: f64,
    pub entries: BTreeMap<Token, AteEntry>,
}

impl AteTable {
    pub fn get(&self, word: &str) -> Option<&AteEntry> {
        self.entries.get(word)
    }

    pub fn ate(&self, word: &str) -> f64 {
        self.get(word).map_or(self.default_ate, |e| e.ate)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Serialize, Deserialize)]
struct TableFile {
    format: String,
    version: u32,
    metadata: TableMetadata,
    default_ate: f64,
    entries: Vec<AteEntry>,
}

/// Writes the table as pretty-printed JSON with a format tag and version.
pub fn save_table(table: &AteTable, path: &Path) -> Result<()> {
    let file = TableFile {
        format: TABLE_FORMAT.to_string(),
        version: TABLE_VERSION,
        metadata: table.metadata.clone(),
        default_ate: table.default_ate,
        entries: table.entries.values().cloned().collect(),
    };
    let mut text = serde_json::to_string_pretty(&file).expect("table serializes");
    text.push('\n');
    write(path, text.as_bytes())
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    let io = |source| AteError::Io {
        path: path.to_path_buf(),
        source,
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io)?;
    }
    fs::write(path, bytes).map_err(io)
}

pub fn load_table(path: &Path) -> Result<AteTable> {
    let text = fs::read_to_string(path).map_err(|source| AteError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| AteError::Corrupt(format!("{}: {e}", path.display())))?;
    if value.get("format").and_then(|f| f.as_str()) != Some(TABLE_FORMAT) {
        return Err(AteError::Corrupt(format!("{} is not an ATE table", path.display())));
    }
    let version = value.get("version").and_then(|v| v.as_u64());
    if version != Some(u64::from(TABLE_VERSION)) {
        log::warn!(
            "{} has table version {:?}, this build reads version {TABLE_VERSION}",
            path.display(),
            version
        );
    }
    let file: TableFile = serde_json::from_value(value).map_err(|e| AteError::Corrupt(e.to_string()))?;
    let mut entries = BTreeMap::new();
    for e in file.entries {
        if !(-1.0..=1.0).contains(&e.ate) || e.support == 0 || !(e.mc_stderr >= 0.0) {
            return Err(AteError::Corrupt(format!("invalid entry for {}", e.word)));
        }
        if entries.insert(e.word.clone(), e).is_some() {
            return Err(AteError::Corrupt("duplicate word".into()));
        }
    }
    Ok(AteTable {
        metadata: file.metadata,
        default_ate: file.default_ate,
        entries,
    })
}

/// Loads a table and requires it to come from the estimator with the given
/// fingerprint.
pub fn load_table_strict(path: &Path, expected_fingerprint: &str) -> Result<AteTable> {
    let table = load_table(path)?;
    if table.metadata.estimator_fingerprint != expected_fingerprint {
        return Err(AteError::EstimatorMismatch {
            expected: expected_fingerprint.to_string(),
            found: table.metadata.estimator_fingerprint.clone(),
        });
    }
    Ok(table)
}

/// Tabular export: `word,ate,support,mc_stderr,n_fallbacks`.
pub fn write_table_csv(table: &AteTable, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for e in table.entries.values() {
        w.serialize(e).map_err(|e| AteError::Corrupt(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| AteError::Corrupt(e.to_string()))?;
    if table.entries.is_empty() {
        return write(path, b"word,ate,support,mc_stderr,n_fallbacks\n");
    }
    write(path, &bytes)
}

pub fn read_table_csv(path: &Path) -> Result<Vec<AteEntry>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| AteError::Corrupt(e.to_string()))?;
    r.deserialize()
        .map(|row| row.map_err(|e| AteError::Corrupt(format!("{}: {e}", path.display()))))
        .collect()
}
