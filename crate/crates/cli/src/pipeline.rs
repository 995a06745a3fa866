//! The pipeline stages behind each subcommand.
//!
//! Output layout under `output_dir`:
//!
//! ```text
//! config.resolved.toml
//! corpus/   corpus.jsonl train.jsonl eval.jsonl dataset.json [manifest.json]
//! models/   <estimator>.model training.json
//! tables/   <estimator>.json <estimator>.csv <estimator>.build.json
//! reports/  groups.{csv,jsonl,md} plot.csv [theorem.json]
//! ```

use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use causal_ate::ate::{
    build_ate_table_from_config, load_table, load_table_strict, save_table, sentence_score, write_table_csv, AteTable,
};
use causal_ate::corpus::{
    build_vocabulary, generate_synthetic, ingest_csv_mapped, ingest_jsonl, ingest_olid_tsv, split, tokenize,
    write_jsonl, Dataset, Provenance, SynthManifest, SynthSpec,
};
use causal_ate::models::{
    load_model, load_model_for_scoring, save_model, train_linear_svm, train_logistic_regression, train_mlp,
    train_naive_bayes, AttributeEstimator, MaxWordSentenceModel, TrainedModel,
};
use causal_ate::report::{
    emit_plot_data, emit_tables, read_report_csv, group_report, theorem_check, GroupSpec, ReportRow, TheoremReport,
};
use serde::{Deserialize, Serialize};

use crate::config::{Adapter, EstimatorConfig, RunConfig};
use crate::error::{Failure, Outcome};

fn io_fail(path: &Path) -> impl FnOnce(std::io::Error) -> Failure + '_ {
    move |e| Failure::data(format!("{}: {e}", path.display()))
}

fn create_dir(path: &Path) -> Outcome<()> {
    std::fs::create_dir_all(path).map_err(io_fail(path))
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Outcome<()> {
    let text = serde_json::to_string_pretty(value).expect("value serializes") + "\n";
    std::fs::write(path, text).map_err(io_fail(path))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Outcome<T> {
    let text = std::fs::read_to_string(path).map_err(io_fail(path))?;
    serde_json::from_str(&text).map_err(|e| Failure::data(format!("{}: {e}", path.display())))
}

// ---------------------------------------------------------------- synth

/// Reads a synthetic spec (TOML, or JSON by extension); the default spec
/// when no file is given.
pub fn load_synth_spec(path: Option<&Path>) -> Outcome<SynthSpec> {
    let Some(p) = path else {
        return Ok(SynthSpec::default());
    };
    let text = std::fs::read_to_string(p).map_err(|e| Failure::usage(format!("cannot read spec {}: {e}", p.display())))?;
    let parsed = if p.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(&text).map_err(|e| e.to_string())
    } else {
        toml::from_str(&text).map_err(|e| e.to_string())
    };
    parsed.map_err(|e| Failure::usage(format!("invalid spec {}: {e}", p.display())))
}

/// Writes `corpus.jsonl` and `manifest.json` into `out`.
pub fn cmd_synth(spec: &SynthSpec, out: &Path) -> Outcome<SynthManifest> {
    let dataset = generate_synthetic(spec)?;
    let manifest = SynthManifest::new(spec, &dataset);
    create_dir(out)?;
    write_jsonl(&dataset, &out.join("corpus.jsonl"))?;
    write_json(&manifest, &out.join("manifest.json"))?;
    Ok(manifest)
}

// ---------------------------------------------------------------- corpus

/// Name and provenance of a split, restored when the split file is re-read.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SplitRecord {
    pub name: String,
    pub provenance: Provenance,
    pub examples: usize,
    pub positives: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorpusRecord {
    pub train_fraction: f64,
    pub split_seed: u64,
    pub train: SplitRecord,
    pub eval: SplitRecord,
    pub manifest: Option<SynthManifest>,
}

fn split_record(d: &Dataset) -> SplitRecord {
    SplitRecord {
        name: d.name.clone(),
        provenance: d.provenance.clone(),
        examples: d.len(),
        positives: d.positives(),
    }
}

fn ingest_source(cfg: &RunConfig) -> Outcome<(Dataset, Option<SynthManifest>)> {
    let ds = &cfg.dataset;
    let tok = &ds.tokenizer;
    let path = || ds.path.as_deref().expect("validated");
    Ok(match ds.adapter {
        Adapter::Synthetic => {
            let d = generate_synthetic(&ds.synth)?;
            let m = SynthManifest::new(&ds.synth, &d);
            (d, Some(m))
        }
        Adapter::Jsonl => (ingest_jsonl(path(), tok)?, None),
        Adapter::OlidTsv => (ingest_olid_tsv(path(), tok)?, None),
        Adapter::Csv => (
            ingest_csv_mapped(path(), ds.columns.as_ref().expect("validated"), &ds.label_map, tok)?,
            None,
        ),
    })
}

/// Ingests (or generates) the corpus, splits it and writes `corpus/`.
pub fn prepare_corpus(cfg: &RunConfig) -> Outcome<CorpusRecord> {
    let (dataset, manifest) = ingest_source(cfg)?;
    let (train, eval) = if cfg.split.train_fraction >= 1.0 {
        (dataset.clone(), dataset.clone())
    } else {
        split(&dataset, cfg.split.train_fraction, cfg.split.seed)?
    };
    let dir = cfg.corpus_dir();
    create_dir(&dir)?;
    write_jsonl(&dataset, &dir.join("corpus.jsonl"))?;
    write_jsonl(&train, &dir.join("train.jsonl"))?;
    write_jsonl(&eval, &dir.join("eval.jsonl"))?;
    if let Some(m) = &manifest {
        write_json(m, &dir.join("manifest.json"))?;
    }
    let record = CorpusRecord {
        train_fraction: cfg.split.train_fraction,
        split_seed: cfg.split.seed,
        train: split_record(&train),
        eval: split_record(&eval),
        manifest,
    };
    write_json(&record, &dir.join("dataset.json"))?;
    log::info!(
        "corpus: {} training and {} evaluation sentences",
        record.train.examples,
        record.eval.examples
    );
    Ok(record)
}

pub struct Splits {
    pub record: CorpusRecord,
    pub train: Dataset,
    pub eval: Dataset,
}

fn reload(path: &Path, rec: &SplitRecord, cfg: &RunConfig) -> Outcome<Dataset> {
    let mut d = ingest_jsonl(path, &cfg.dataset.tokenizer)?;
    d.name = rec.name.clone();
    d.provenance = rec.provenance.clone();
    if d.len() != rec.examples {
        return Err(Failure::data(format!(
            "{} has {} examples, dataset.json records {}",
            path.display(),
            d.len(),
            rec.examples
        )));
    }
    Ok(d)
}

/// Re-reads the splits written by [`prepare_corpus`].
pub fn load_splits(cfg: &RunConfig) -> Outcome<Splits> {
    let dir = cfg.corpus_dir();
    let record: CorpusRecord = read_json(&dir.join("dataset.json"))?;
    let train = reload(&dir.join("train.jsonl"), &record.train, cfg)?;
    let eval = reload(&dir.join("eval.jsonl"), &record.eval, cfg)?;
    Ok(Splits { record, train, eval })
}

// ---------------------------------------------------------------- train

pub fn model_path(cfg: &RunConfig, e: &EstimatorConfig) -> PathBuf {
    cfg.models_dir().join(format!("{}.model", e.slug()))
}

pub fn table_path(cfg: &RunConfig, e: &EstimatorConfig) -> PathBuf {
    cfg.tables_dir().join(format!("{}.json", e.slug()))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainingSummary {
    pub estimator: String,
    pub name: String,
    pub vocabulary_size: usize,
    pub heldout_accuracy: f64,
}

fn accuracy(model: &dyn AttributeEstimator, d: &Dataset) -> f64 {
    let hits = d
        .examples
        .iter()
        .filter(|e| (model.predict(&e.tokens) >= 0.5) == e.label)
        .count();
    hits as f64 / d.len() as f64
}

fn train_one(e: &EstimatorConfig, cfg: &RunConfig, train: &Dataset) -> Outcome<TrainedModel> {
    let v = build_vocabulary(train, cfg.vocabulary_min_count);
    Ok(match e {
        EstimatorConfig::MaxWord(c) => {
            TrainedModel::MaxWord(MaxWordSentenceModel::train(train, cfg.vocabulary_min_count, c.default))
        }
        EstimatorConfig::NaiveBayes(c) => TrainedModel::NaiveBayes(train_naive_bayes(train, &v, c)?),
        EstimatorConfig::LogisticRegression(c) => TrainedModel::LogisticRegression(train_logistic_regression(train, &v, c)?),
        EstimatorConfig::LinearSvm(c) => TrainedModel::LinearSvm(train_linear_svm(train, &v, c)?),
        EstimatorConfig::Mlp(c) => TrainedModel::Mlp(train_mlp(train, &v, c)?),
    })
}

/// Prepares the corpus, trains every configured estimator and saves them.
pub fn cmd_train(cfg: &RunConfig, out: &mut dyn Write) -> Outcome<Vec<TrainingSummary>> {
    cfg.echo()?;
    prepare_corpus(cfg)?;
    let splits = load_splits(cfg)?;
    create_dir(&cfg.models_dir())?;
    let vocabulary_size = build_vocabulary(&splits.train, cfg.vocabulary_min_count).len();
    let mut summaries = Vec::new();
    for e in &cfg.estimators {
        let model = train_one(e, cfg, &splits.train)?;
        save_model(&model, &model_path(cfg, e))?;
        let s = TrainingSummary {
            estimator: e.slug(),
            name: model.name(),
            vocabulary_size,
            heldout_accuracy: accuracy(&model, &splits.eval),
        };
        writeln!(out, "{}\t{}\theld-out accuracy {:.4}", s.estimator, s.name, s.heldout_accuracy)
            .map_err(Failure::data)?;
        summaries.push(s);
    }
    write_json(&summaries, &cfg.models_dir().join("training.json"))?;
    Ok(summaries)
}

// ---------------------------------------------------------------- ate

/// Builds and saves one ATE table per estimator over the training split.
pub fn cmd_ate(cfg: &RunConfig, out: &mut dyn Write) -> Outcome<Vec<AteTable>> {
    cfg.echo()?;
    let splits = load_splits(cfg)?;
    let vocabulary = build_vocabulary(&splits.train, cfg.vocabulary_min_count);
    create_dir(&cfg.tables_dir())?;
    let mut tables = Vec::new();
    for e in &cfg.estimators {
        let model = load_model_for_scoring(&model_path(cfg, e), &vocabulary.hash())?;
        log::info!("building ATE table for {} over {} words", model.name(), vocabulary.len());
        let (mut table, report) = build_ate_table_from_config(&model, &splits.train, &vocabulary, &cfg.ate)?;
        if table.is_empty() {
            log::warn!(
                "{}: no word reaches min_support {}; the table is empty",
                e.slug(),
                cfg.ate.min_support
            );
        }
        table.metadata.built_at = Some(chrono::Utc::now().to_rfc3339());
        let path = table_path(cfg, e);
        save_table(&table, &path)?;
        write_table_csv(&table, &path.with_extension("csv"))?;
        write_json(&report, &path.with_extension("build.json"))?;
        writeln!(
            out,
            "{}\t{} entries\t{} omitted\t{} fallbacks",
            e.slug(),
            table.len(),
            report.omitted.len(),
            report.total_fallbacks
        )
        .map_err(Failure::data)?;
        tables.push(table);
    }
    Ok(tables)
}

// ---------------------------------------------------------------- score

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredLine {
    pub text: String,
    pub score: f64,
    pub argmax: Option<String>,
}

/// Parses an aggregation order: a positive number, or `inf`/`max`.
pub fn parse_order(s: &str) -> Outcome<f64> {
    let p = match s.trim().to_ascii_lowercase().as_str() {
        "inf" | "infinity" | "max" => f64::INFINITY,
        other => other
            .parse::<f64>()
            .map_err(|_| Failure::usage(format!("invalid order {s:?}: expected a positive number or inf")))?,
    };
    if p.is_nan() || p <= 0.0 {
        return Err(Failure::usage(format!("order p must be positive, got {s}")));
    }
    Ok(p)
}

/// Scores each input line; one JSON object per line on `out`.
pub fn cmd_score(table_path: &Path, input: &mut dyn BufRead, p: f64, out: &mut dyn Write) -> Outcome<Vec<ScoredLine>> {
    let table = load_table(table_path)?;
    let tok = &table.metadata.provenance.tokenizer;
    let mut scored = Vec::new();
    for line in input.lines() {
        let line = line.map_err(Failure::data)?;
        let s = sentence_score(&table, &tokenize(&line, tok), p)?;
        let rec = ScoredLine {
            text: line,
            score: s.value,
            argmax: s.argmax_word.map(|t| t.as_str().to_string()),
        };
        writeln!(out, "{}", serde_json::to_string(&rec).expect("line serializes")).map_err(Failure::data)?;
        scored.push(rec);
    }
    Ok(scored)
}

// ---------------------------------------------------------------- report

fn load_groups(cfg: &RunConfig) -> Outcome<GroupSpec> {
    let spec = match &cfg.report.groups {
        Some(p) => GroupSpec::load(p)?,
        None => GroupSpec::default(),
    };
    Ok(spec.normalized(&cfg.dataset.tokenizer)?)
}

fn load_pair(cfg: &RunConfig, e: &EstimatorConfig) -> Outcome<(TrainedModel, AteTable)> {
    let model = load_model(&model_path(cfg, e))?;
    let table = load_table_strict(&table_path(cfg, e), &model.fingerprint())?;
    Ok((model, table))
}

fn bound_check_for(cfg: &RunConfig, record: &CorpusRecord) -> Outcome<Option<TheoremReport>> {
    let Some(manifest) = &record.manifest else {
        log::info!("theorem check skipped: the corpus has no planted words");
        return Ok(None);
    };
    let Some(e) = cfg.estimators.iter().find(|e| matches!(e, EstimatorConfig::MaxWord(_))) else {
        log::info!("theorem check skipped: no max-word estimator configured");
        return Ok(None);
    };
    let table = load_table(&table_path(cfg, e))?;
    Ok(Some(theorem_check(&table, manifest.spurious(), cfg.report.epsilon)))
}

pub struct ReportOutput {
    pub rows: Vec<ReportRow>,
    pub theorem: Option<TheoremReport>,
}

/// Group report over the evaluation split, plot data and the theorem check.
pub fn cmd_report(cfg: &RunConfig, out: &mut dyn Write) -> Outcome<ReportOutput> {
    cfg.echo()?;
    let splits = load_splits(cfg)?;
    let groups = load_groups(cfg)?;
    let mut rows = Vec::new();
    for e in &cfg.estimators {
        let (model, table) = load_pair(cfg, e)?;
        rows.extend(group_report(&model, &table, &splits.eval, &groups, cfg.report.pred_mode));
    }
    let dir = cfg.reports_dir();
    create_dir(&dir)?;
    for f in &cfg.report.formats {
        emit_tables(&rows, &dir.join(format!("groups.{}", f.extension())), *f)?;
    }
    let label = cfg.report.dataset_label.clone().unwrap_or_else(|| splits.record.eval.name.clone());
    emit_plot_data(&[(label, rows.clone())], &dir.join("plot.csv"))?;
    for r in &rows {
        let fmt = |v: Option<f64>| v.map_or("n/a".to_string(), |v| format!("{v:.3}"));
        writeln!(out, "{}\t{}\tpred {}\tate {:.3}\tdiff {}", r.model, r.group, fmt(r.pred), r.ate, fmt(r.diff))
            .map_err(Failure::data)?;
    }
    let theorem = if cfg.report.theorem_check {
        bound_check_for(cfg, &splits.record)?
    } else {
        None
    };
    if let Some(t) = &theorem {
        write_json(t, &dir.join("theorem.json"))?;
        writeln!(
            out,
            "theorem check: {} spurious words checked, {} missing, {} violations, max ATE {}",
            t.n_spurious_checked,
            t.n_missing,
            t.n_violations,
            t.max_spurious_ate.map_or("n/a".into(), |a| format!("{a:.4}"))
        )
        .map_err(Failure::data)?;
        if t.n_violations > 0 {
            log::warn!("{} planted spurious word(s) exceed the 0.25 bound", t.n_violations);
        }
    }
    Ok(ReportOutput { rows, theorem })
}

// ---------------------------------------------------------------- verify

/// Re-checks saved outputs: table provenance, the diff identity in the
/// emitted report and the spurious-word bound. Breaches are invariant
/// failures.
pub fn cmd_verify(cfg: &RunConfig, out: &mut dyn Write) -> Outcome<()> {
    let record: CorpusRecord = read_json(&cfg.corpus_dir().join("dataset.json"))?;
    for e in &cfg.estimators {
        load_pair(cfg, e)?;
    }
    let report = cfg.reports_dir().join("groups.csv");
    if report.exists() {
        for r in read_report_csv(&report)? {
            if r.diff != r.pred.map(|p| p - r.ate) {
                return Err(Failure::invariant(format!(
                    "{}: diff for {}/{} is not pred - ate",
                    report.display(),
                    r.model,
                    r.group
                )));
            }
        }
    }
    if let Some(t) = bound_check_for(cfg, &record)? {
        writeln!(
            out,
            "theorem check: {} checked, {} violations",
            t.n_spurious_checked, t.n_violations
        )
        .map_err(Failure::data)?;
        if t.n_violations > 0 {
            let words: Vec<&str> = t.details.iter().filter(|d| d.violation).map(|d| d.word.as_str()).collect();
            return Err(Failure::invariant(format!(
                "spurious words above the 0.25 bound: {}",
                words.join(", ")
            )));
        }
    }
    writeln!(out, "verify: ok").map_err(Failure::data)
}

/// train, ate and report in sequence.
pub fn cmd_run(cfg: &RunConfig, out: &mut dyn Write) -> Outcome<ReportOutput> {
    cmd_train(cfg, out)?;
    cmd_ate(cfg, out)?;
    cmd_report(cfg, out)
}
