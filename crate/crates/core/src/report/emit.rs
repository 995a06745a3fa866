use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{ReportError, ReportRow, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Jsonl,
    Markdown,
}

impl OutputFormat {
    pub fn extension(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Jsonl => "jsonl",
            OutputFormat::Markdown => "md",
        }
    }
}

impl FromStr for OutputFormat {
    type Err = ReportError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "jsonl" => Ok(OutputFormat::Jsonl),
            "markdown" | "md" => Ok(OutputFormat::Markdown),
            _ => Err(ReportError::UnknownFormat(s.to_string())),
        }
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let io = |source| ReportError::Io {
        path: path.to_path_buf(),
        source,
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io)?;
    }
    std::fs::write(path, bytes).map_err(io)
}

/// Sorted by (model, group) with `diff` recomputed from `pred` and `ate`.
fn prepared(rows: &[ReportRow]) -> Result<Vec<ReportRow>> {
    let mut rows = rows.to_vec();
    rows.sort_by(|a, b| (&a.model, &a.group).cmp(&(&b.model, &b.group)));
    for r in &mut rows {
        let recomputed = r.pred.map(|p| p - r.ate);
        if recomputed != r.diff {
            return Err(ReportError::DiffMismatch {
                model: r.model.clone(),
                group: r.group.clone(),
                pred: r.pred.unwrap_or(f64::NAN),
                ate: r.ate,
                diff: r.diff.unwrap_or(f64::NAN),
            });
        }
        r.diff = recomputed;
    }
    Ok(rows)
}

fn sign(diff: Option<f64>) -> &'static str {
    match diff {
        Some(d) if d > 0.0 => "positive",
        Some(d) if d < 0.0 => "negative",
        Some(_) => "zero",
        None => "no support",
    }
}

fn markdown(rows: &[ReportRow]) -> String {
    let fmt = |v: Option<f64>| v.map_or("n/a".to_string(), |v| format!("{v:.3}"));
    let mut out = String::from("| Model | Group | Pred mode | Pred | ATE | Diff | Sign |\n");
    out.push_str("|---|---|---|---:|---:|---:|---|\n");
    for r in rows {
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} | {:.3} | {} | {} |",
            r.model,
            r.group,
            r.pred_mode,
            fmt(r.pred),
            r.ate,
            fmt(r.diff),
            sign(r.diff)
        );
    }
    out.push_str("\nPositive diff: the ATE score is lower than the classifier prediction.\n");
    out
}

pub fn emit_tables(rows: &[ReportRow], path: &Path, format: OutputFormat) -> Result<()> {
    let rows = prepared(rows)?;
    let bytes = match format {
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for r in &rows {
                w.serialize(r)?;
            }
            w.into_inner().map_err(|e| ReportError::Csv(e.into_error().into()))?
        }
        OutputFormat::Jsonl => rows
            .iter()
            .map(|r| serde_json::to_string(r).expect("row serializes") + "\n")
            .collect::<String>()
            .into_bytes(),
        OutputFormat::Markdown => markdown(&rows).into_bytes(),
    };
    write_file(path, &bytes)
}

pub fn read_report_csv(path: &Path) -> Result<Vec<ReportRow>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

/// One value of one metric, in long format for plotting tools.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotRecord {
    pub dataset: String,
    pub model: String,
    pub group: String,
    pub metric: String,
    pub value: f64,
}

/// Writes `pred` and `ate` records for every row of every dataset; rows
/// without a prediction contribute only their `ate` record.
pub fn emit_plot_data(rows_by_dataset: &[(String, Vec<ReportRow>)], path: &Path) -> Result<Vec<PlotRecord>> {
    let mut records = Vec::new();
    for (dataset, rows) in rows_by_dataset {
        for r in prepared(rows)? {
            let mut push = |metric: &str, value: f64| {
                records.push(PlotRecord {
                    dataset: dataset.clone(),
                    model: r.model.clone(),
                    group: r.group.clone(),
                    metric: metric.to_string(),
                    value,
                })
            };
            if let Some(p) = r.pred {
                push("pred", p);
            }
            push("ate", r.ate);
        }
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    for rec in &records {
        w.serialize(rec)?;
    }
    let bytes = w.into_inner().map_err(|e| ReportError::Csv(e.into_error().into()))?;
    write_file(path, &bytes)?;
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::report::PredMode;

    fn row(model: &str, group: &str, pred: f64, ate: f64) -> ReportRow {
        ReportRow {
            model: model.into(),
            group: group.into(),
            pred_mode: PredMode::TermOnly,
            pred: Some(pred),
            ate,
            diff: Some(pred - ate),
            pred_term_only: pred,
            pred_corpus_mean: None,
            eval_support: 3,
            ate_support: 7,
            ate_stderr: 0.0,
        }
    }

    fn grid() -> Vec<ReportRow> {
        let models = ["NN3Layer20105", "LR", "SVM", "NB", "NN1Layer5", "NN2Layer105", "MaxWord"];
        let groups = ["hispanic", "gay", "female", "black", "african"];
        let mut rows = Vec::new();
        for (i, m) in models.iter().enumerate() {
            for (j, g) in groups.iter().enumerate() {
                rows.push(row(m, g, 0.1 * i as f64 / 7.0 + 0.3, 0.05 * j as f64));
            }
        }
        rows
    }

    #[test]
    fn stable_order_for_full_grid() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.csv");
        emit_tables(&grid(), &p, OutputFormat::Csv).unwrap();
        let back = read_report_csv(&p).unwrap();
        assert_eq!(back.len(), 35);
        let keys: Vec<(String, String)> = back.iter().map(|r| (r.model.clone(), r.group.clone())).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
        let mut reversed = grid();
        reversed.reverse();
        let q = dir.path().join("q.csv");
        emit_tables(&reversed, &q, OutputFormat::Csv).unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), std::fs::read(&q).unwrap());
    }

    #[test]
    fn csv_round_trip_preserves_values() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.csv");
        let mut rows = grid();
        rows[3].pred = None;
        rows[3].diff = None;
        rows[3].pred_mode = PredMode::CorpusMean;
        emit_tables(&rows, &p, OutputFormat::Csv).unwrap();
        let back = read_report_csv(&p).unwrap();
        for r in &rows {
            let b = back.iter().find(|b| b.model == r.model && b.group == r.group).unwrap();
            assert!((b.ate - r.ate).abs() < 1e-6);
            assert_eq!(b.pred.is_some(), r.pred.is_some());
            if let (Some(x), Some(y)) = (b.pred, r.pred) {
                assert!((x - y).abs() < 1e-6);
            }
            assert_eq!(b.pred_mode, r.pred_mode);
        }
    }

    #[test]
    fn markdown_flags_negative_diff() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.md");
        emit_tables(&[row("NN1Layer5", "african", 0.2, 0.203), row("LR", "african", 0.201, 0.099)], &p, OutputFormat::Markdown)
            .unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.contains("| NN1Layer5 | african | term-only | 0.200 | 0.203 | -0.003 | negative |"), "{text}");
        assert!(text.contains("| LR | african | term-only | 0.201 | 0.099 | 0.102 | positive |"), "{text}");
    }

    #[test]
    fn inconsistent_diff_rejected() {
        let mut r = row("LR", "gay", 0.4, 0.1);
        r.diff = Some(0.1);
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            emit_tables(&[r], &dir.path().join("x.csv"), OutputFormat::Csv),
            Err(ReportError::DiffMismatch { .. })
        ));
    }

    #[test]
    fn plot_records_are_long_format() {
        let dir = tempfile::tempdir().unwrap();
        let lr: Vec<ReportRow> = grid().into_iter().filter(|r| r.model == "LR").collect();
        let mut other = lr.clone();
        other[0].ate = 0.167;
        other[0].diff = other[0].pred.map(|p| p - 0.167);
        let recs = emit_plot_data(
            &[("gao-style".to_string(), other), ("synthetic".to_string(), lr)],
            &dir.path().join("plot.csv"),
        )
        .unwrap();
        assert_eq!(recs.len(), 20);
        assert!(recs.iter().any(|r| r.dataset == "gao-style" && r.metric == "ate" && r.value == 0.167));
        let text = std::fs::read_to_string(dir.path().join("plot.csv")).unwrap();
        assert!(text.starts_with("dataset,model,group,metric,value\n"));
    }

    #[test]
    fn parses_formats() {
        assert_eq!("markdown".parse::<OutputFormat>().unwrap(), OutputFormat::Markdown);
        assert_eq!("CSV".parse::<OutputFormat>().unwrap(), OutputFormat::Csv);
        assert!("xml".parse::<OutputFormat>().is_err());
    }
}
