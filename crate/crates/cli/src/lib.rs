//! `hyperimp`: ingest a knowledge base of evaluated configurations and
//! emit plot-ready CSV/JSON for importance, priors, tunability and
//! algorithm comparisons.

pub(crate) mod commands;
pub mod manifest;

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

pub use manifest::RunManifest;

/// Environment variable naming a directory of extra space definitions.
pub const SPACES_ENV: &str = "HYPERIMP_SPACES";

#[derive(Debug, Clone, Parser)]
#[command(
    name = "hyperimp",
    version,
    about = "Hyperparameter importance across datasets",
    args_override_self = true
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,

    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// Seed for forests and synthetic data
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Trees per surrogate forest
    #[arg(long, global = true, default_value_t = 32)]
    pub trees: usize,

    /// Largest subset size in the importance decomposition
    #[arg(long, global = true, default_value_t = 2)]
    pub max_order: usize,

    /// Fraction of top records per dataset feeding a prior; omitted means the
    /// single best record
    #[arg(long, global = true)]
    pub top_q: Option<f64>,

    /// Score margin within which two algorithms tie
    #[arg(long, global = true, default_value_t = 0.01)]
    pub tie_band: f64,

    /// Read --tie-band as a fraction of the larger score
    #[arg(long, global = true)]
    pub relative_tie: bool,

    /// Tunability reference: recommended-defaults or per-dataset-median
    #[arg(long, global = true, default_value = "recommended-defaults")]
    pub reference: String,

    /// Skip invalid rows instead of failing
    #[arg(long, global = true)]
    pub lenient: bool,

    /// Worker threads (defaults to all cores)
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    /// Directory of additional space definitions (*.json)
    #[arg(long, global = true, env = SPACES_ENV)]
    pub spaces: Option<PathBuf>,

    /// Output directory [default: .]
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

impl GlobalArgs {
    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("."))
    }
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Per-dataset variance fractions, violin data and significance tests
    Importance {
        /// Knowledge base CSV
        kb: PathBuf,
        #[arg(long)]
        algorithm: String,
    },
    /// Density of good values for one hyperparameter and its recommended default
    Priors {
        kb: PathBuf,
        #[arg(long)]
        algorithm: String,
        /// Defaults to the most important singleton in --importance
        #[arg(long)]
        hyperparameter: Option<String>,
        /// importance.csv to pick the hyperparameter from (default: <out>/importance.csv)
        #[arg(long)]
        importance: Option<PathBuf>,
    },
    /// Gap between best and reference score per dataset, per algorithm
    Tunability { kb: PathBuf },
    /// Mean rank of every algorithm over shared datasets
    Rank { kb: PathBuf },
    /// Pairwise win/tie/loss percentages
    Winmatrix { kb: PathBuf },
    /// Generate a knowledge base with planted structure
    Synth {
        /// Spec JSON
        spec: PathBuf,
    },
    /// Re-run the command recorded in a run.json manifest
    Replay {
        manifest: PathBuf,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Importance { .. } => "importance",
            Command::Priors { .. } => "priors",
            Command::Tunability { .. } => "tunability",
            Command::Rank { .. } => "rank",
            Command::Winmatrix { .. } => "winmatrix",
            Command::Synth { .. } => "synth",
            Command::Replay { .. } => "replay",
        }
    }
}

/// Parses `argv` (including the program name) and runs it.
pub fn run_from_args<I, S>(argv: I) -> Result<()>
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let argv: Vec<String> = argv.into_iter().map(Into::into).collect();
    let cli = Cli::try_parse_from(&argv)?;
    run(cli, &argv)
}

pub fn run(cli: Cli, argv: &[String]) -> Result<()> {
    if let Command::Replay { manifest } = &cli.command {
        return replay(manifest, &cli);
    }
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(jobs) = cli.global.jobs {
        pool = pool.num_threads(jobs.max(1));
    }
    let pool = pool.build().context("starting worker pool")?;
    let out = cli.global.out_dir();
    std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    let inputs = pool.install(|| commands::execute(&cli))?;
    RunManifest::new(&cli, argv, inputs)?.write(&out)
}

/// Re-executes a manifest. An explicit `--out` on the replay redirects the
/// outputs; otherwise they go where the original run wrote them.
fn replay(path: &std::path::Path, outer: &Cli) -> Result<()> {
    let manifest = RunManifest::read(path)?;
    let mut argv = manifest.replay_argv.clone();
    if let Some(out) = &outer.global.out {
        argv.push("--out".into());
        argv.push(manifest::absolute(out)?.display().to_string());
    }
    let cli = Cli::try_parse_from(&argv).context("manifest command no longer parses")?;
    if matches!(cli.command, Command::Replay { .. }) {
        anyhow::bail!("a manifest cannot replay another replay");
    }
    run(cli, &argv)
}
