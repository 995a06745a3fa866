//! Command-line pipeline: synthesize or ingest a corpus, train estimators,
//! build ATE tables, score sentences and report per-group comparisons.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error,
//! 3 invariant breach.

pub mod config;
pub mod error;
pub mod pipeline;

use std::ffi::OsString;
use std::io::{BufReader, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use config::{Overrides, RunConfig};
use error::{Failure, Outcome};

#[derive(Debug, Parser)]
#[command(name = "causal-ate", version, about = "Causal ATE word scores and bias reports")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Run-config TOML file; every field is optional (see `causal-ate config`).
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Master seed, spread to the generator, split, models and replacer.
    #[arg(long, env = "CAUSAL_ATE_SEED")]
    seed: Option<u64>,
    /// Output directory (corpus/, models/, tables/, reports/).
    #[arg(long, env = "CAUSAL_ATE_OUTPUT_DIR")]
    output_dir: Option<PathBuf>,
}

impl RunArgs {
    fn resolve(&self) -> Outcome<RunConfig> {
        RunConfig::load(self.config.as_deref())?.resolve(&Overrides {
            seed: self.seed,
            output_dir: self.output_dir.clone(),
        })
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic corpus with planted causal and spurious words.
    Synth {
        /// Generator spec (TOML, or JSON by extension); defaults when absent.
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Directory for corpus.jsonl and manifest.json.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, env = "CAUSAL_ATE_SEED")]
        seed: Option<u64>,
    },
    /// Prepare the corpus and train every configured estimator.
    Train(RunArgs),
    /// Build one ATE table per trained estimator.
    Ate(RunArgs),
    /// Score sentences (one per line) with an ATE table.
    Score {
        #[arg(long)]
        table: PathBuf,
        /// Input file; standard input when absent.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Aggregation order: a positive number, or `inf` for the maximum.
        #[arg(long, default_value = "inf")]
        p: String,
    },
    /// Group report, plot data and the spurious-word bound check.
    Report(RunArgs),
    /// Re-check saved tables and reports; exits 3 on a breached invariant.
    Verify(RunArgs),
    /// train, ate and report in one go.
    Run(RunArgs),
    /// Print the fully resolved configuration as TOML.
    Config(RunArgs),
}

fn execute(cli: Cli, out: &mut dyn Write) -> Outcome<()> {
    match cli.command {
        Command::Synth { spec, out: dir, seed } => {
            let mut spec = pipeline::load_synth_spec(spec.as_deref())?;
            if let Some(s) = seed {
                spec.seed = s;
            }
            let m = pipeline::cmd_synth(&spec, &dir)?;
            writeln!(out, "{} sentences ({} toxic) written to {}", spec.n_sentences, m.n_toxic, dir.display())
                .map_err(Failure::data)
        }
        Command::Train(a) => pipeline::cmd_train(&a.resolve()?, out).map(drop),
        Command::Ate(a) => pipeline::cmd_ate(&a.resolve()?, out).map(drop),
        Command::Score { table, input, p } => {
            let p = pipeline::parse_order(&p)?;
            match input {
                Some(path) => {
                    let f = std::fs::File::open(&path).map_err(|e| Failure::data(format!("{}: {e}", path.display())))?;
                    pipeline::cmd_score(&table, &mut BufReader::new(f), p, out).map(drop)
                }
                None => pipeline::cmd_score(&table, &mut std::io::stdin().lock(), p, out).map(drop),
            }
        }
        Command::Report(a) => pipeline::cmd_report(&a.resolve()?, out).map(drop),
        Command::Verify(a) => pipeline::cmd_verify(&a.resolve()?, out),
        Command::Run(a) => pipeline::cmd_run(&a.resolve()?, out).map(drop),
        Command::Config(a) => write!(out, "{}", a.resolve()?.to_toml()).map_err(Failure::data),
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match execute(cli, &mut lock) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {f}");
            f.exit_code()
        }
    }
}
