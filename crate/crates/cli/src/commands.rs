use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use hyperimp_core::analytics::{
    mean_rank, significance_report, tunability, win_matrix, write_rank_csv, write_significance_csv,
    write_tunability_csv, write_win_csv, ReferenceMode, TieBand,
};
use hyperimp_core::config_space::{builtin_spaces, load_space_dir, ConfigurationSpace, SpaceMap};
use hyperimp_core::fanova::{importance_table, violin_data, write_importance_csv};
use hyperimp_core::forest::ForestParams;
use hyperimp_core::perfdata::{load_knowledge_base, write_knowledge_base, KnowledgeBase, LoadOptions};
use hyperimp_core::priors::{
    collect_best_values, density_curve, fit_density, integrate, recommend_default, DensityEstimate, Selection,
    ARGMAX_GRID,
};
use hyperimp_core::synthetic::{planted_kb, SynthSpec};
use serde_json::json;

use crate::{Cli, Command, GlobalArgs};

pub const IMPORTANCE_FILE: &str = "importance.csv";

/// Runs `cli` and returns the `(role, path)` of every input it read.
pub fn execute(cli: &Cli) -> Result<Vec<(String, PathBuf)>> {
    let g = &cli.global;
    let out = g.out_dir();
    let mut inputs = Vec::new();
    if let Some(dir) = &g.spaces {
        inputs.push(("spaces".to_string(), dir.clone()));
    }
    match &cli.command {
        Command::Importance { kb, algorithm } => {
            inputs.push(("kb".into(), kb.clone()));
            importance(g, &load(g, kb)?, algorithm, &out)?;
        }
        Command::Priors {
            kb,
            algorithm,
            hyperparameter,
            importance,
        } => {
            inputs.push(("kb".into(), kb.clone()));
            let kb = load(g, kb)?;
            let hp = match hyperparameter {
                Some(h) => h.clone(),
                None => {
                    let path = importance.clone().unwrap_or_else(|| out.join(IMPORTANCE_FILE));
                    inputs.push(("importance".into(), path.clone()));
                    let space = kb
                        .space(algorithm)
                        .with_context(|| format!("algorithm `{algorithm}` is not in the knowledge base"))?;
                    top_hyperparameter(&path, space)?
                }
            };
            priors(g, &kb, algorithm, &hp, &out)?;
        }
        Command::Tunability { kb } => {
            inputs.push(("kb".into(), kb.clone()));
            tunability_cmd(g, &load(g, kb)?, &out)?;
        }
        Command::Rank { kb } => {
            inputs.push(("kb".into(), kb.clone()));
            rank(&load(g, kb)?, &out)?;
        }
        Command::Winmatrix { kb } => {
            inputs.push(("kb".into(), kb.clone()));
            winmatrix(g, &load(g, kb)?, &out)?;
        }
        Command::Synth { spec } => {
            inputs.push(("spec".into(), spec.clone()));
            synth(g, spec, &out)?;
        }
        Command::Replay { .. } => unreachable!("replay is dispatched before execution"),
    }
    Ok(inputs)
}

fn spaces(g: &GlobalArgs) -> Result<SpaceMap> {
    let mut spaces = builtin_spaces();
    if let Some(dir) = &g.spaces {
        let extra = load_space_dir(dir).with_context(|| format!("loading spaces from {}", dir.display()))?;
        spaces.extend(extra);
    }
    Ok(spaces)
}

fn load(g: &GlobalArgs, path: &Path) -> Result<KnowledgeBase> {
    let options = LoadOptions {
        lenient: g.lenient,
        ..LoadOptions::default()
    };
    let report = load_knowledge_base(path, &spaces(g)?, &options)
        .with_context(|| format!("loading {}", path.display()))?;
    for r in &report.rejections {
        eprintln!("warning: {}: skipped {r}", path.display());
    }
    Ok(report.kb)
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn write_json(dir: &Path, name: &str, value: &impl serde::Serialize) -> Result<()> {
    let mut w = create(dir, name)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn forest_params(g: &GlobalArgs) -> ForestParams {
    ForestParams {
        n_trees: g.trees,
        seed: g.seed,
        ..ForestParams::default()
    }
}

fn importance(g: &GlobalArgs, kb: &KnowledgeBase, algorithm: &str, out: &Path) -> Result<()> {
    let rows = importance_table(kb, algorithm, &forest_params(g), g.max_order)?;
    write_importance_csv(&rows, create(out, IMPORTANCE_FILE)?)?;
    write_json(out, "violin.json", &violin_data(algorithm, &rows))?;

    let space = kb.space(algorithm).expect("algorithm has tables");
    let singletons: Vec<String> = space.names().map(str::to_string).collect();
    let pairs = significance_report(&rows, &singletons);
    write_significance_csv(&pairs, create(out, "significance.csv")?)?;

    let n = rows.len() as f64;
    let mut summary: Vec<(String, f64)> = rows[0]
        .report
        .entries
        .iter()
        .map(|e| {
            let mean = rows.iter().filter_map(|r| r.report.entry(&e.name)).map(|x| x.fraction_mean).sum::<f64>() / n;
            (e.name.clone(), mean)
        })
        .collect();
    summary.sort_by(|a, b| b.1.total_cmp(&a.1));
    println!("{algorithm}: {} dataset(s), mean variance fraction", rows.len());
    for (name, mean) in summary.iter().take(10) {
        println!("  {name:<40} {mean:>8.4}");
    }
    Ok(())
}

/// The singleton with the largest mean fraction in an importance CSV.
fn top_hyperparameter(path: &Path, space: &ConfigurationSpace) -> Result<String> {
    let mut reader = csv::Reader::from_path(path)
        .with_context(|| format!("no hyperparameter given and cannot read {}", path.display()))?;
    let headers = reader.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let (Some(subset_col), Some(frac_col)) = (col("subset"), col("fraction_mean")) else {
        bail!("{} is not an importance table", path.display());
    };
    let mut sums: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
    for record in reader.records() {
        let record = record?;
        let subset = &record[subset_col];
        let Some(idx) = space.index_of(subset) else { continue };
        let fraction: f64 = record[frac_col]
            .parse()
            .with_context(|| format!("bad fraction in {}", path.display()))?;
        let e = sums.entry(idx).or_insert((0.0, 0));
        e.0 += fraction;
        e.1 += 1;
    }
    let mut best: Option<(usize, f64)> = None;
    for (&idx, &(sum, count)) in &sums {
        let mean = sum / count as f64;
        if best.map_or(true, |(_, b)| mean > b) {
            best = Some((idx, mean));
        }
    }
    match best {
        Some((idx, _)) => Ok(space.domain(idx).name.clone()),
        None => bail!(
            "{} lists no hyperparameter of `{}`",
            path.display(),
            space.algorithm()
        ),
    }
}

fn priors(g: &GlobalArgs, kb: &KnowledgeBase, algorithm: &str, hp: &str, out: &Path) -> Result<()> {
    let selection = match g.top_q {
        Some(q) => Selection::TopFraction(q),
        None => Selection::BestPerDataset,
    };
    let space = kb
        .space(algorithm)
        .with_context(|| format!("algorithm `{algorithm}` is not in the knowledge base"))?;
    let domain = space.domain(space.require_index(hp)?);
    let values = collect_best_values(kb, algorithm, hp, selection)?;
    let density = fit_density(&values, domain.cardinality())?;
    let recommended = recommend_default(space, hp, &density)?;
    let (selection_name, q) = match selection {
        Selection::TopFraction(q) => ("top-q", Some(q)),
        Selection::BestPerDataset => ("best-per-dataset", None),
    };
    let mut w = csv::Writer::from_writer(create(out, &format!("prior_{hp}.csv"))?);
    let report = match &density {
        DensityEstimate::Numeric { bandwidth, .. } => {
            w.write_record(["value", "internal", "density"])?;
            for (i, (x, y)) in density_curve(space, hp, &density, ARGMAX_GRID)?.into_iter().enumerate() {
                let u = i as f64 / (ARGMAX_GRID - 1) as f64;
                w.write_record([x.to_string(), u.to_string(), y.to_string()])?;
            }
            json!({
                "algorithm": algorithm,
                "hyperparameter": hp,
                "kind": domain.kind,
                "selection": selection_name,
                "top_q": q,
                "n_samples": density.n_samples(),
                "bandwidth": bandwidth,
                "integral": integrate(&density, ARGMAX_GRID),
                "recommended_default": recommended,
            })
        }
        DensityEstimate::Categorical { counts, probabilities } => {
            w.write_record(["category", "count", "probability"])?;
            for ((label, c), p) in domain.categories.iter().zip(counts).zip(probabilities) {
                w.write_record([label.clone(), c.to_string(), p.to_string()])?;
            }
            json!({
                "algorithm": algorithm,
                "hyperparameter": hp,
                "kind": domain.kind,
                "selection": selection_name,
                "top_q": q,
                "n_samples": density.n_samples(),
                "bandwidth": null,
                "frequencies": domain.categories.iter().zip(probabilities)
                    .map(|(l, p)| json!({"category": l, "probability": p}))
                    .collect::<Vec<_>>(),
                "recommended_default": recommended,
            })
        }
    };
    w.flush()?;
    write_json(out, &format!("prior_{hp}.json"), &report)?;
    println!(
        "{algorithm}/{hp}: recommended default {recommended} from {} sample(s)",
        density.n_samples()
    );
    Ok(())
}

fn tunability_cmd(g: &GlobalArgs, kb: &KnowledgeBase, out: &Path) -> Result<()> {
    let mode: ReferenceMode = g.reference.parse()?;
    let results = kb
        .algorithms()
        .iter()
        .map(|a| tunability(kb, a, mode).with_context(|| format!("tunability of `{a}`")))
        .collect::<Result<Vec<_>>>()?;
    write_tunability_csv(&results, create(out, "tunability.csv")?)?;
    let mut order: Vec<_> = results.iter().collect();
    order.sort_by(|a, b| b.aggregate_std.total_cmp(&a.aggregate_std));
    println!("{:<24} {:>10} {:>10} {:>8}", "algorithm", "std", "mean", "datasets");
    for r in order {
        println!(
            "{:<24} {:>10.4} {:>10.4} {:>8}",
            r.algorithm,
            r.aggregate_std,
            r.aggregate_mean,
            r.deltas.len()
        );
    }
    Ok(())
}

fn rank(kb: &KnowledgeBase, out: &Path) -> Result<()> {
    let summary = mean_rank(kb)?;
    write_rank_csv(&summary, create(out, "rank.csv")?)?;
    println!(
        "mean rank over {} dataset(s) ({} excluded as incomplete)",
        summary.datasets_used, summary.datasets_excluded
    );
    for r in summary.ordered() {
        println!("  {:<24} {:>7.3} ± {:.3}", r.algorithm, r.mean_rank, r.ci_halfwidth);
    }
    Ok(())
}

fn winmatrix(g: &GlobalArgs, kb: &KnowledgeBase, out: &Path) -> Result<()> {
    let band = if g.relative_tie {
        TieBand::Relative(g.tie_band)
    } else {
        TieBand::Absolute(g.tie_band)
    };
    let m = win_matrix(kb, band)?;
    write_win_csv(&m, create(out, "winmatrix.csv")?)?;
    print!("{:<16}", "win %");
    for a in &m.algorithms {
        print!(" {:>10.10}", a);
    }
    println!();
    for (a, row) in m.algorithms.iter().zip(&m.entries) {
        print!("{:<16.16}", a);
        for e in row {
            match e {
                Some(e) => print!(" {:>10.1}", e.win_pct),
                None => print!(" {:>10}", "-"),
            }
        }
        println!();
    }
    Ok(())
}

fn synth(g: &GlobalArgs, spec_path: &Path, out: &Path) -> Result<()> {
    let text = std::fs::read_to_string(spec_path).with_context(|| format!("reading {}", spec_path.display()))?;
    let spec = SynthSpec::from_json(&text).with_context(|| format!("parsing {}", spec_path.display()))?;
    let planted = planted_kb(&spec, g.seed)?;
    write_knowledge_base(&planted.kb, create(out, "kb.csv")?)?;
    write_json(out, "ground_truth.json", &planted.truth)?;
    // spaces under the generated algorithm ids, for --spaces on later runs
    let space_dir = out.join("spaces");
    std::fs::create_dir_all(&space_dir)?;
    for alg in planted.kb.algorithms() {
        let space = planted.kb.space(&alg).expect("algorithm has tables");
        std::fs::write(space_dir.join(format!("{alg}.json")), space.to_json() + "\n")?;
    }
    println!(
        "{} table(s), {} record(s) -> {}",
        planted.kb.len(),
        planted.kb.record_count(),
        out.join("kb.csv").display()
    );
    Ok(())
}
