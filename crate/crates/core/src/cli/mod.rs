//! Command-line entry point.
//!
//! Exit codes: 0 on success, 1 on a usage or configuration error, 2 when the
//! input data fails validation or an analysis cannot be carried out.

mod commands;
mod config;
mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use config::{ConfigFile, Overrides, RunConfig};
pub use output::Output;

use crate::classifier::ModelKind;
use crate::diachronic::{BonferroniFamily, Direction, ScoreKind};
use crate::error::Error;
use crate::lexicon::Tier;

#[derive(Debug, Parser)]
#[command(name = "moral-sentiment", version, about = "Moral sentiment change over diachronic word embeddings")]
pub struct Cli {
    #[command(flatten)]
    run: RunArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Flat key = value config file; flags override its values
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// CSV manifest listing decade,path,format
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    /// Moral Foundations Dictionary CSV (word,category)
    #[arg(long, global = true)]
    mfd: Option<PathBuf>,
    /// Valence/concreteness norms CSV
    #[arg(long, global = true)]
    norms: Option<PathBuf>,
    /// Word list CSV (word,frequency)
    #[arg(long, global = true)]
    wordlist: Option<PathBuf>,
    /// Output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// centroid, naive_bayes, knn or kde
    #[arg(long, global = true)]
    model: Option<ModelKind>,
    #[arg(long, global = true)]
    k: Option<usize>,
    /// KDE bandwidth; tuned on the polarity seeds when omitted
    #[arg(long, global = true)]
    bandwidth: Option<f64>,
    /// relevance, polarity or category
    #[arg(long, global = true)]
    tier: Option<Tier>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Scale every vector to unit length after loading
    #[arg(long, global = true)]
    normalize: bool,
    /// Bonferroni family: filtered or all
    #[arg(long, global = true)]
    bonferroni: Option<BonferroniFamily>,
    /// none, forward, backward or reference:<decade>
    #[arg(long, global = true)]
    align: Option<String>,
    /// Number of neutral-valence irrelevance seeds (default: as many as moral seeds)
    #[arg(long, global = true)]
    irrelevant_count: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Align the decades and write the aligned spaces
    Align,
    /// Posterior of a word (or averaged words) in one decade
    Classify {
        #[arg(long, required = true, num_args = 1..)]
        word: Vec<String>,
        /// Defaults to the latest decade
        #[arg(long)]
        decade: Option<i32>,
    },
    /// Per-decade posteriors and log-odds of one word
    Timecourse {
        #[arg(long)]
        word: String,
    },
    /// Word x decade score matrix for the word list
    Matrix {
        #[arg(long, default_value = "relevance")]
        kind: ScoreKind,
    },
    /// Leave-one-out seed classification accuracy
    Evaluate {
        #[arg(long)]
        decade: Option<i32>,
        /// Evaluate every decade and report mean and spread
        #[arg(long)]
        historical: bool,
    },
    /// Correlation of predicted polarity with human valence
    ValenceCorr {
        #[arg(long)]
        decade: Option<i32>,
    },
    /// Correlation of predictions with survey proportions
    SurveyCorr {
        #[arg(long)]
        survey: Option<PathBuf>,
        #[arg(long)]
        decade: Option<i32>,
    },
    /// Rank words by the rate of change of their scores
    Retrieve {
        #[arg(long)]
        direction: Direction,
        #[arg(long, default_value_t = 10)]
        top: usize,
        /// Precomputed matrix (JSON) of the scores being ranked
        #[arg(long)]
        matrix: Option<PathBuf>,
        /// Precomputed relevance matrix for polarity retrieval
        #[arg(long)]
        relevance_matrix: Option<PathBuf>,
        /// Skip the early/modern category labels
        #[arg(long)]
        no_categories: bool,
    },
    /// Regress relevance change rates on frequency, length and concreteness
    Regress {
        #[arg(long)]
        matrix: Option<PathBuf>,
    },
    /// Shuffled-decade control for the change regression
    Permute {
        #[arg(long)]
        matrix: Option<PathBuf>,
        #[arg(long, default_value_t = 1000)]
        shuffles: usize,
    },
    /// Fisher discriminant projection of words against the seed classes
    Project {
        #[arg(long, required = true, num_args = 1..)]
        word: Vec<String>,
        #[arg(long)]
        decade: Option<i32>,
    },
    /// Write the synthetic test corpus
    Fixture {
        #[arg(long)]
        dir: PathBuf,
    },
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) => 1,
        _ => 2,
    }
}

/// Parses `args` (program name first), runs the subcommand and returns the
/// process exit code.
pub fn dispatch<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .try_init();
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            exit_code(&e)
        }
    }
}

fn run(cli: Cli) -> crate::Result<()> {
    let file = match &cli.run.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    let survey = match &cli.command {
        Command::SurveyCorr { survey, .. } => survey.clone(),
        _ => None,
    };
    let a = cli.run;
    let flags = Overrides {
        manifest: a.manifest,
        mfd: a.mfd,
        norms: a.norms,
        wordlist: a.wordlist,
        survey,
        out: a.out,
        model: a.model,
        k: a.k,
        bandwidth: a.bandwidth,
        tier: a.tier,
        seed: a.seed,
        normalize: a.normalize,
        bonferroni: a.bonferroni,
        align: a.align,
        irrelevant_count: a.irrelevant_count,
    };
    let config = RunConfig::resolve(flags, &file)?;
    commands::execute(config, cli.command)
}
