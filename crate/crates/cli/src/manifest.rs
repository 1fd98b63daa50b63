//! `run.json`: what was run, on which inputs, with which settings.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::{Cli, Command};

pub const MANIFEST_FILE: &str = "run.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Arguments as invoked.
    pub argv: Vec<String>,
    /// Equivalent arguments with every setting spelled out and every path
    /// absolute; `hyperimp replay` runs these.
    pub replay_argv: Vec<String>,
    /// Role -> absolute path of every file read.
    pub inputs: BTreeMap<String, String>,
    pub space_dir: Option<String>,
    pub seed: u64,
    pub parameters: BTreeMap<String, serde_json::Value>,
    pub version: String,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
}

pub fn absolute(path: &Path) -> Result<PathBuf> {
    if path.is_absolute() {
        return Ok(path.to_path_buf());
    }
    Ok(std::env::current_dir()
        .context("reading working directory")?
        .join(path))
}

fn abs_string(path: &Path) -> Result<String> {
    Ok(absolute(path)?.display().to_string())
}

impl RunManifest {
    pub fn new(cli: &Cli, argv: &[String], inputs: Vec<(String, PathBuf)>) -> Result<Self> {
        let g = &cli.global;
        let mut parameters = BTreeMap::new();
        parameters.insert("trees".to_string(), json!(g.trees));
        parameters.insert("max_order".to_string(), json!(g.max_order));
        parameters.insert("top_q".to_string(), json!(g.top_q));
        parameters.insert("tie_band".to_string(), json!(g.tie_band));
        parameters.insert("relative_tie".to_string(), json!(g.relative_tie));
        parameters.insert("reference".to_string(), json!(g.reference));
        parameters.insert("lenient".to_string(), json!(g.lenient));
        Ok(Self {
            command: cli.command.name().to_string(),
            argv: argv.to_vec(),
            replay_argv: replay_argv(cli)?,
            inputs: inputs
                .into_iter()
                .map(|(role, p)| Ok((role, abs_string(&p)?)))
                .collect::<Result<_>>()?,
            space_dir: g.spaces.as_deref().map(abs_string).transpose()?,
            seed: g.seed,
            parameters,
            version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        })
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let path = dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(&path, text + "\n").with_context(|| format!("writing {}", path.display()))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

fn replay_argv(cli: &Cli) -> Result<Vec<String>> {
    let g = &cli.global;
    let mut argv = vec!["hyperimp".to_string(), cli.command.name().to_string()];
    let mut push = |flag: &str, value: String| {
        argv.push(format!("--{flag}"));
        argv.push(value);
    };
    match &cli.command {
        Command::Importance { kb, algorithm } => {
            push("algorithm", algorithm.clone());
            argv.push(abs_string(kb)?);
        }
        Command::Priors {
            kb,
            algorithm,
            hyperparameter,
            importance,
        } => {
            push("algorithm", algorithm.clone());
            if let Some(h) = hyperparameter {
                push("hyperparameter", h.clone());
            }
            match (hyperparameter, importance) {
                (_, Some(p)) => push("importance", abs_string(p)?),
                // pin the table the hyperparameter was picked from
                (None, None) => push("importance", abs_string(&g.out_dir().join(crate::commands::IMPORTANCE_FILE))?),
                (Some(_), None) => {}
            }
            argv.push(abs_string(kb)?);
        }
        Command::Tunability { kb } | Command::Rank { kb } | Command::Winmatrix { kb } => {
            argv.push(abs_string(kb)?)
        }
        Command::Synth { spec } => argv.push(abs_string(spec)?),
        Command::Replay { manifest } => argv.push(abs_string(manifest)?),
    }
    let mut push = |flag: &str, value: String| {
        argv.push(format!("--{flag}"));
        argv.push(value);
    };
    push("seed", g.seed.to_string());
    push("trees", g.trees.to_string());
    push("max-order", g.max_order.to_string());
    if let Some(q) = g.top_q {
        push("top-q", q.to_string());
    }
    push("tie-band", g.tie_band.to_string());
    push("reference", g.reference.clone());
    if let Some(dir) = &g.spaces {
        push("spaces", abs_string(dir)?);
    }
    push("out", abs_string(&g.out_dir())?);
    if g.relative_tie {
        argv.push("--relative-tie".into());
    }
    if g.lenient {
        argv.push("--lenient".into());
    }
    Ok(argv)
}
