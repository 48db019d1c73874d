//! Command-line interface.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

pub mod commands;
pub mod config;

pub use config::RunConfig;

#[derive(Debug, Parser)]
#[command(name = "lexprob", version, about = "Word probabilities from subword language models")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Root seed for every randomised step.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Linear-space tolerance for numeric checks.
    #[arg(long, global = true)]
    pub tolerance: Option<f64>,
    /// Directory for output tables; standard output when unset.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// Report surprisal in bits instead of nats.
    #[arg(long, global = true)]
    pub bits: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score every word of a corpus, one sentence per line.
    Score {
        corpus: PathBuf,
        /// Report the uncorrected product in place of this correction (fix1, fix2, fix3).
        #[arg(long)]
        drop_fix: Option<String>,
    },
    /// Compare every word conditional against exhaustive enumeration.
    OracleCheck {
        #[arg(long, default_value_t = 1000)]
        max_len: usize,
        #[arg(long, default_value_t = crate::lm::random::MIN_EOS_MASS)]
        min_eos: f64,
        /// Longest context, in words.
        #[arg(long, default_value_t = 2)]
        context_words: usize,
        #[arg(long)]
        drop_fix: Option<String>,
    },
    /// Cross-validated log-likelihood gain of corrected and uncorrected surprisal.
    AnalyzeRt {
        /// Reading times: `word,avg_rt,sentence_idx,word_idx`.
        #[arg(long)]
        rt: PathBuf,
        /// Score files, one per model.
        #[arg(long, required = true, num_args = 1..)]
        scored: Vec<PathBuf>,
        /// Unigram counts `word<TAB>count`; the reading-time words otherwise.
        #[arg(long)]
        counts: Option<PathBuf>,
        #[arg(long, default_value_t = 10)]
        folds: usize,
        #[arg(long, default_value_t = crate::analysis::permutation::DEFAULT_PERMUTATIONS)]
        permutations: usize,
    },
    /// Rank correlations of word length with frequency and surprisal statistics.
    AnalyzeLengths {
        #[arg(long)]
        scored: PathBuf,
        #[arg(long)]
        counts: PathBuf,
    },
    /// Check the vocabulary, tokeniser and model files.
    Validate {
        /// Prefix length for the model support check.
        #[arg(long, default_value_t = 6)]
        depth: usize,
    },
}

/// Exit status of a completed command.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    /// Finished, but some inputs were skipped.
    Partial,
    Failure,
}

impl Outcome {
    pub fn code(self) -> u8 {
        match self {
            Outcome::Success => 0,
            Outcome::Failure => 1,
            Outcome::Partial => 2,
        }
    }
}

/// Settings after applying flags over the config file.
pub struct Context {
    pub config: RunConfig,
    pub bits: bool,
}

impl Context {
    pub fn new(global: &GlobalArgs) -> Result<Self, String> {
        let mut config = match &global.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(seed) = global.seed {
            config.seed = seed;
        }
        if let Some(tol) = global.tolerance {
            config.tolerance = tol;
        }
        if let Some(dir) = &global.out_dir {
            config.out_dir = Some(dir.clone());
        }
        Ok(Context { config, bits: global.bits })
    }

    /// Writes `bytes` to `<out_dir>/<name>`, or to standard output.
    pub fn emit(&self, name: &str, bytes: &[u8]) -> Result<(), String> {
        use std::io::Write;
        match &self.config.out_dir {
            Some(dir) => {
                std::fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
                let path = dir.join(name);
                std::fs::write(&path, bytes).map_err(|e| format!("{}: {e}", path.display()))
            }
            None => std::io::stdout().write_all(bytes).map_err(|e| e.to_string()),
        }
    }
}

pub(crate) fn read_file(path: &Path) -> Result<Vec<u8>, String> {
    std::fs::read(path).map_err(|e| format!("{}: {e}", path.display()))
}

/// Runs a parsed command line. Errors are reported on standard error.
pub fn run(cli: &Cli) -> Outcome {
    let result = Context::new(&cli.global).and_then(|ctx| match &cli.command {
        Command::Score { corpus, drop_fix } => commands::score(&ctx, corpus, drop_fix.as_deref()),
        Command::OracleCheck { max_len, min_eos, context_words, drop_fix } => {
            commands::oracle_check(&ctx, *max_len, *min_eos, *context_words, drop_fix.as_deref())
        }
        Command::AnalyzeRt { rt, scored, counts, folds, permutations } => {
            commands::analyze_rt(&ctx, rt, scored, counts.as_deref(), *folds, *permutations)
        }
        Command::AnalyzeLengths { scored, counts } => commands::analyze_lengths(&ctx, scored, counts),
        Command::Validate { depth } => commands::validate(&ctx, *depth),
    });
    match result {
        Ok(outcome) => outcome,
        Err(msg) => {
            eprintln!("error: {msg}");
            Outcome::Failure
        }
    }
}
