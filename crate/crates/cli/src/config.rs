//! The run configuration: one TOML file, every field optional.
//!
//! Seeds and the output directory can be overridden from the command line
//! or the environment (`CAUSAL_ATE_SEED`, `CAUSAL_ATE_OUTPUT_DIR`). The
//! resolved configuration, with every seed written out, is echoed into the
//! output directory so a run can be repeated from it.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use causal_ate::ate::AteConfig;
use causal_ate::corpus::{ColumnMap, SynthSpec, TokenizerConfig};
use causal_ate::models::{LrConfig, MlpConfig, NbConfig, SvmConfig};
use causal_ate::report::{EpsilonPolicy, OutputFormat, PredMode, DEFAULT_GROUPS};
use serde::{Deserialize, Serialize};

use crate::error::{Failure, Outcome};

pub const RESOLVED_CONFIG: &str = "config.resolved.toml";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// When set, replaces every component seed below.
    pub seed: Option<u64>,
    pub output_dir: PathBuf,
    /// Minimum number of training sentences for a word to enter the
    /// vocabulary shared by all estimators and ATE tables.
    pub vocabulary_min_count: usize,
    pub dataset: DatasetConfig,
    pub split: SplitConfig,
    pub estimators: Vec<EstimatorConfig>,
    pub ate: AteConfig,
    pub report: ReportConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: None,
            output_dir: PathBuf::from("causal-ate-out"),
            vocabulary_min_count: 1,
            dataset: DatasetConfig::default(),
            split: SplitConfig::default(),
            estimators: vec![
                EstimatorConfig::MaxWord(MaxWordConfig::default()),
                EstimatorConfig::LogisticRegression(LrConfig::default()),
                EstimatorConfig::LinearSvm(SvmConfig::default()),
                EstimatorConfig::NaiveBayes(NbConfig::default()),
            ],
            ate: AteConfig::default(),
            report: ReportConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Adapter {
    /// Generated in-process from `dataset.synth`.
    Synthetic,
    /// One `{"text", "label"}` object per line.
    Jsonl,
    OlidTsv,
    /// Comma-separated with `columns` and `label_map`.
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    pub adapter: Adapter,
    pub path: Option<PathBuf>,
    pub columns: Option<ColumnMap>,
    pub label_map: BTreeMap<String, u8>,
    pub tokenizer: TokenizerConfig,
    pub synth: SynthSpec,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            adapter: Adapter::Synthetic,
            path: None,
            columns: None,
            label_map: BTreeMap::new(),
            tokenizer: TokenizerConfig::default(),
            // group terms planted as the spurious lexicon, so the default
            // report has something to say
            synth: SynthSpec {
                spurious_lexicon: DEFAULT_GROUPS.iter().map(|s| s.to_string()).collect(),
                ..SynthSpec::default()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    /// Share of examples used for training. 1.0 disables the split and
    /// evaluates on the training corpus.
    pub train_fraction: f64,
    pub seed: u64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            train_fraction: 0.8,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MaxWordConfig {
    /// Sentence score for inputs without known words.
    pub default: f64,
}

impl Default for MaxWordConfig {
    fn default() -> Self {
        Self { default: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EstimatorConfig {
    MaxWord(MaxWordConfig),
    NaiveBayes(NbConfig),
    LogisticRegression(LrConfig),
    LinearSvm(SvmConfig),
    Mlp(MlpConfig),
}

impl EstimatorConfig {
    /// File stem for this estimator's model and table.
    pub fn slug(&self) -> String {
        match self {
            EstimatorConfig::MaxWord(_) => "max-word".into(),
            EstimatorConfig::NaiveBayes(_) => "naive-bayes".into(),
            EstimatorConfig::LogisticRegression(_) => "logistic-regression".into(),
            EstimatorConfig::LinearSvm(_) => "linear-svm".into(),
            EstimatorConfig::Mlp(c) => format!(
                "mlp-{}",
                c.hidden_sizes.iter().map(|h| h.to_string()).collect::<Vec<_>>().join("-")
            ),
        }
    }

    fn set_seed(&mut self, seed: u64) {
        match self {
            EstimatorConfig::MaxWord(_) | EstimatorConfig::NaiveBayes(_) => {}
            EstimatorConfig::LogisticRegression(c) => c.seed = seed,
            EstimatorConfig::LinearSvm(c) => c.seed = seed,
            EstimatorConfig::Mlp(c) => c.seed = seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportConfig {
    /// JSONL group spec; the five default groups when absent.
    pub groups: Option<PathBuf>,
    pub pred_mode: PredMode,
    pub formats: Vec<OutputFormat>,
    /// Label for the plot-data records.
    pub dataset_label: Option<String>,
    /// Check the planted spurious words of a synthetic corpus against the
    /// max-word table.
    pub theorem_check: bool,
    pub epsilon: EpsilonPolicy,
}

impl Default for ReportConfig {
    fn default() -> Self {
        Self {
            groups: None,
            pred_mode: PredMode::TermOnly,
            formats: vec![OutputFormat::Csv, OutputFormat::Jsonl, OutputFormat::Markdown],
            dataset_label: None,
            theorem_check: true,
            epsilon: EpsilonPolicy::default(),
        }
    }
}

fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) if b.get("kind") == o.get("kind") || o.get("kind").is_none() => {
                merge(b, o)
            }
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

/// Values that take precedence over the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Outcome<Self> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| Failure::usage(format!("cannot read config {}: {e}", p.display())))?;
                Self::from_toml(&text).map_err(|e| Failure::usage(format!("invalid config {}: {e}", p.display())))
            }
        }
    }

    /// Parses a (partial) config. Tables are merged key by key over the
    /// defaults, so a file setting one synthetic-spec field keeps the other
    /// defaults; arrays replace the default wholesale.
    pub fn from_toml(text: &str) -> Result<Self, toml::de::Error> {
        let user: toml::Table = toml::from_str(text)?;
        let mut merged = toml::Table::try_from(Self::default()).expect("defaults serialize");
        merge(&mut merged, user);
        toml::Value::Table(merged).try_into()
    }

    /// Applies overrides and spreads the master seed to every component.
    pub fn resolve(mut self, overrides: &Overrides) -> Outcome<Self> {
        if let Some(s) = overrides.seed {
            self.seed = Some(s);
        }
        if let Some(d) = &overrides.output_dir {
            self.output_dir = d.clone();
        }
        if let Some(seed) = self.seed {
            self.dataset.synth.seed = seed;
            self.split.seed = seed;
            self.ate.replacement.seed = seed;
            for e in &mut self.estimators {
                e.set_seed(seed);
            }
        }
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Outcome<()> {
        if self.estimators.is_empty() {
            return Err(Failure::usage("no estimators configured"));
        }
        let mut slugs: Vec<String> = self.estimators.iter().map(|e| e.slug()).collect();
        slugs.sort();
        if slugs.windows(2).any(|w| w[0] == w[1]) {
            return Err(Failure::usage("two estimators share a kind and shape"));
        }
        if !(self.split.train_fraction > 0.0 && self.split.train_fraction <= 1.0) {
            return Err(Failure::usage(format!(
                "split.train_fraction must lie in (0, 1], got {}",
                self.split.train_fraction
            )));
        }
        if self.dataset.adapter != Adapter::Synthetic && self.dataset.path.is_none() {
            return Err(Failure::usage("dataset.path is required for file adapters"));
        }
        if self.dataset.adapter == Adapter::Csv && self.dataset.columns.is_none() {
            return Err(Failure::usage("dataset.columns is required for the csv adapter"));
        }
        if self.vocabulary_min_count == 0 {
            return Err(Failure::usage("vocabulary_min_count must be at least 1"));
        }
        self.ate.replacement.validate().map_err(Failure::usage)?;
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn corpus_dir(&self) -> PathBuf {
        self.output_dir.join("corpus")
    }

    pub fn models_dir(&self) -> PathBuf {
        self.output_dir.join("models")
    }

    pub fn tables_dir(&self) -> PathBuf {
        self.output_dir.join("tables")
    }

    pub fn reports_dir(&self) -> PathBuf {
        self.output_dir.join("reports")
    }

    /// Writes `config.resolved.toml` into the output directory.
    pub fn echo(&self) -> Outcome<()> {
        std::fs::create_dir_all(&self.output_dir).map_err(|e| Failure::data(format!("{}: {e}", self.output_dir.display())))?;
        let path = self.output_dir.join(RESOLVED_CONFIG);
        std::fs::write(&path, self.to_toml()).map_err(|e| Failure::data(format!("{}: {e}", path.display())))
    }
}
