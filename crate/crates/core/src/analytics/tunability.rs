//! How much an algorithm gains from tuning: per dataset, the gap between
//! the best observed score and a reference configuration's score.

use std::io::Write;

use serde::Serialize;

use crate::config_space::{Configuration, ConfigurationSpace};
use crate::error::{Error, Result};
use crate::perfdata::{best_record, filter, KnowledgeBase, PerformanceTable};
use crate::priors::{collect_best_values, fit_density, recommend_default, Selection};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReferenceMode {
    /// Score of the sampled configuration nearest to the recommended
    /// defaults.
    RecommendedDefaults,
    /// Median score of the table.
    PerDatasetMedian,
}

impl std::str::FromStr for ReferenceMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "recommended-defaults" => Ok(ReferenceMode::RecommendedDefaults),
            "per-dataset-median" => Ok(ReferenceMode::PerDatasetMedian),
            other => Err(Error::InvalidParameter(format!("unknown reference mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TunabilityResult {
    pub algorithm: String,
    /// `(dataset, best - reference)` in dataset order.
    pub deltas: Vec<(String, f64)>,
    /// Sample standard deviation of the deltas.
    pub aggregate_std: f64,
    pub aggregate_mean: f64,
    pub reference_description: String,
}

/// Recommended value of every hyperparameter, from a prior over the best
/// record of each dataset.
pub fn recommended_configuration(kb: &KnowledgeBase, algorithm: &str) -> Result<Configuration> {
    let space = kb
        .space(algorithm)
        .ok_or_else(|| Error::AlgorithmAbsent(algorithm.to_string()))?;
    let values = space
        .domains()
        .iter()
        .map(|d| {
            let samples = collect_best_values(kb, algorithm, &d.name, Selection::BestPerDataset)?;
            if d.is_numeric() && samples.len() < 2 {
                return Ok(d.from_internal(samples[0]));
            }
            let density = fit_density(&samples, d.cardinality())?;
            recommend_default(space, &d.name, &density)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Configuration(values))
}

/// Distance in internal coordinates; categorical dimensions contribute 0
/// when equal and 1 otherwise.
fn internal_distance(space: &ConfigurationSpace, a: &[f64], b: &[f64]) -> f64 {
    space
        .domains()
        .iter()
        .zip(a.iter().zip(b))
        .map(|(d, (x, y))| {
            if d.is_numeric() {
                (x - y).powi(2)
            } else if x == y {
                0.0
            } else {
                1.0
            }
        })
        .sum()
}

/// Earliest record closest to `target`.
fn nearest_score(table: &PerformanceTable, target: &[f64]) -> f64 {
    let mut best = (f64::INFINITY, 0.0);
    for r in table.records() {
        let d = internal_distance(table.space(), &r.internal, target);
        if d < best.0 {
            best = (d, r.score);
        }
    }
    best.1
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn sample_sd(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

pub fn tunability(kb: &KnowledgeBase, algorithm: &str, mode: ReferenceMode) -> Result<TunabilityResult> {
    let tables = filter(kb, Some(algorithm), None);
    if tables.is_empty() {
        return Err(Error::AlgorithmAbsent(algorithm.to_string()));
    }
    let (reference, description): (Box<dyn Fn(&PerformanceTable) -> f64>, String) = match mode {
        ReferenceMode::PerDatasetMedian => (
            Box::new(|t: &PerformanceTable| median(&t.scores().collect::<Vec<_>>())),
            "per-dataset median score".to_string(),
        ),
        ReferenceMode::RecommendedDefaults => {
            let config = recommended_configuration(kb, algorithm)?;
            let space = tables[0].space();
            let target = space.to_internal(&config)?;
            let rendered = space
                .names()
                .zip(&config.0)
                .map(|(n, v)| format!("{n}={v}"))
                .collect::<Vec<_>>()
                .join(" ");
            (
                Box::new(move |t: &PerformanceTable| nearest_score(t, &target)),
                format!("nearest sampled configuration to recommended defaults ({rendered})"),
            )
        }
    };
    let deltas: Vec<(String, f64)> = tables
        .iter()
        .map(|t| (t.dataset().to_string(), best_record(t).score - reference(t)))
        .collect();
    let values: Vec<f64> = deltas.iter().map(|(_, d)| *d).collect();
    Ok(TunabilityResult {
        algorithm: algorithm.to_string(),
        aggregate_std: sample_sd(&values),
        aggregate_mean: values.iter().sum::<f64>() / values.len() as f64,
        deltas,
        reference_description: description,
    })
}

/// CSV `algorithm,dataset,delta`, followed per algorithm by the aggregate
/// rows `aggregate_std` and `aggregate_mean` in the dataset column.
pub fn write_tunability_csv<W: Write>(results: &[TunabilityResult], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["algorithm", "dataset", "delta"])?;
    for r in results {
        for (d, v) in &r.deltas {
            w.write_record([r.algorithm.as_str(), d, &v.to_string()])?;
        }
        w.write_record([r.algorithm.as_str(), "aggregate_std", &r.aggregate_std.to_string()])?;
        w.write_record([r.algorithm.as_str(), "aggregate_mean", &r.aggregate_mean.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
