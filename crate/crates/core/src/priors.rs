//! One-dimensional priors over well-performing hyperparameter values.
//!
//! Numeric hyperparameters get a Gaussian KDE in internal coordinates,
//! reflected at both ends of `[0, 1]` so that no mass leaves the support.
//! Categorical ones get an add-one smoothed frequency table.

use std::f64::consts::PI;

use serde::Serialize;

use crate::config_space::{ConfigurationSpace, DomainKind, Value};
use crate::error::{Error, Result};
use crate::perfdata::{filter, KnowledgeBase};

pub const BANDWIDTH_FLOOR: f64 = 1e-3;
/// Grid used by [`recommend_default`] for numeric densities.
pub const ARGMAX_GRID: usize = 1001;

/// Which records of each dataset feed a prior.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Selection {
    /// The single best record per dataset.
    BestPerDataset,
    /// The top `ceil(q * K)` records per dataset.
    TopFraction(f64),
}

impl Selection {
    pub fn count(&self, k: usize) -> usize {
        match *self {
            Selection::BestPerDataset => 1.min(k),
            Selection::TopFraction(q) => ((q * k as f64).ceil() as usize).clamp(1, k),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Selection::TopFraction(q) if !(q > 0.0 && q <= 1.0) => Err(Error::InvalidParameter(
                format!("top fraction {q} must lie in (0, 1]"),
            )),
            _ => Ok(()),
        }
    }
}

/// Internal values of `hyperparameter` from the top records of every
/// dataset of `algorithm`, concatenated in dataset order. Within a dataset
/// records are taken by decreasing score, earlier rows first on ties.
pub fn collect_best_values(
    kb: &KnowledgeBase,
    algorithm: &str,
    hyperparameter: &str,
    selection: Selection,
) -> Result<Vec<f64>> {
    selection.validate()?;
    let tables = filter(kb, Some(algorithm), None);
    if tables.is_empty() {
        return Err(Error::AlgorithmAbsent(algorithm.to_string()));
    }
    let dim = tables[0].space().require_index(hyperparameter)?;
    let mut out = Vec::new();
    for t in tables {
        let mut order: Vec<usize> = (0..t.len()).collect();
        order.sort_by(|&a, &b| t.records()[b].score.total_cmp(&t.records()[a].score));
        out.extend(
            order
                .iter()
                .take(selection.count(t.len()))
                .map(|&i| t.records()[i].internal[dim]),
        );
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum DensityEstimate {
    Numeric {
        samples: Vec<f64>,
        bandwidth: f64,
    },
    Categorical {
        counts: Vec<usize>,
        probabilities: Vec<f64>,
    },
}

/// Silverman's rule of thumb, `0.9 * min(sd, IQR / 1.34) * n^(-1/5)`,
/// floored at [`BANDWIDTH_FLOOR`].
pub fn silverman_bandwidth(samples: &[f64]) -> f64 {
    let n = samples.len() as f64;
    if samples.len() < 2 {
        return BANDWIDTH_FLOOR;
    }
    let mean = samples.iter().sum::<f64>() / n;
    let sd = (samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let iqr = quantile(&sorted, 0.75) - quantile(&sorted, 0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    (0.9 * spread * n.powf(-0.2)).max(BANDWIDTH_FLOOR)
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Fits a prior to internal values. `cardinality` is `Some(c)` for
/// categorical kinds (values are category indices) and `None` for numeric.
pub fn fit_density(values: &[f64], cardinality: Option<usize>) -> Result<DensityEstimate> {
    match cardinality {
        None => {
            if values.len() < 2 {
                return Err(Error::InvalidParameter(
                    "a numeric density needs at least two values".into(),
                ));
            }
            if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::InvalidParameter("samples must lie in [0, 1]".into()));
            }
            Ok(DensityEstimate::Numeric {
                samples: values.to_vec(),
                bandwidth: silverman_bandwidth(values),
            })
        }
        Some(c) => {
            if values.is_empty() || c == 0 {
                return Err(Error::InvalidParameter(
                    "a categorical density needs at least one value".into(),
                ));
            }
            let mut counts = vec![0usize; c];
            for &v in values {
                let i = v.round();
                if i < 0.0 || i as usize >= c {
                    return Err(Error::InvalidParameter(format!("category index {v} out of range")));
                }
                counts[i as usize] += 1;
            }
            let denom = (values.len() + c) as f64;
            let probabilities = counts.iter().map(|&k| (k + 1) as f64 / denom).collect();
            Ok(DensityEstimate::Categorical {
                counts,
                probabilities,
            })
        }
    }
}

fn gaussian(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

impl DensityEstimate {
    pub fn bandwidth(&self) -> Option<f64> {
        match self {
            DensityEstimate::Numeric { bandwidth, .. } => Some(*bandwidth),
            DensityEstimate::Categorical { .. } => None,
        }
    }

    pub fn n_samples(&self) -> usize {
        match self {
            DensityEstimate::Numeric { samples, .. } => samples.len(),
            DensityEstimate::Categorical { counts, .. } => counts.iter().sum(),
        }
    }

    /// Density at internal coordinate `x`; zero outside `[0, 1]`.
    ///
    /// Reflecting at 0 and 1 repeatedly is the same as summing the kernel
    /// over the images `2k + s` and `2k - s` of every sample `s`, which
    /// keeps the total mass on `[0, 1]` at exactly one.
    pub fn pdf(&self, x: f64) -> f64 {
        let DensityEstimate::Numeric { samples, bandwidth } = self else {
            return 0.0;
        };
        if !(0.0..=1.0).contains(&x) {
            return 0.0;
        }
        let h = *bandwidth;
        let reach = (8.0 * h / 2.0).ceil() as i64 + 1;
        let mut total = 0.0;
        for &s in samples {
            for k in -reach..=reach {
                let shift = 2.0 * k as f64;
                total += gaussian((x - (shift + s)) / h) + gaussian((x - (shift - s)) / h);
            }
        }
        total / (samples.len() as f64 * h)
    }
}

/// Most probable value in external units: the first grid maximum of the
/// density for numeric kinds, the first modal category otherwise.
pub fn recommend_default(space: &ConfigurationSpace, hyperparameter: &str, density: &DensityEstimate) -> Result<Value> {
    let domain = space.domain(space.require_index(hyperparameter)?);
    let internal = match density {
        DensityEstimate::Numeric { .. } => {
            if !domain.is_numeric() {
                return Err(Error::InvalidParameter(format!("`{hyperparameter}` is categorical")));
            }
            let mut best = (0.0, f64::NEG_INFINITY);
            for i in 0..ARGMAX_GRID {
                let x = i as f64 / (ARGMAX_GRID - 1) as f64;
                let p = density.pdf(x);
                if p > best.1 {
                    best = (x, p);
                }
            }
            best.0
        }
        DensityEstimate::Categorical { probabilities, .. } => {
            if domain.cardinality() != Some(probabilities.len()) {
                return Err(Error::InvalidParameter(format!(
                    "`{hyperparameter}` has a different number of categories"
                )));
            }
            let mut best = 0;
            for (i, &p) in probabilities.iter().enumerate() {
                if p > probabilities[best] {
                    best = i;
                }
            }
            best as f64
        }
    };
    Ok(domain.from_internal(internal))
}

/// `n_points` evenly spaced internal points mapped to external units, with
/// the density height (per unit of internal coordinate) at each.
pub fn density_curve(
    space: &ConfigurationSpace,
    hyperparameter: &str,
    density: &DensityEstimate,
    n_points: usize,
) -> Result<Vec<(f64, f64)>> {
    let domain = space.domain(space.require_index(hyperparameter)?);
    if !matches!(density, DensityEstimate::Numeric { .. }) || !domain.is_numeric() {
        return Err(Error::InvalidParameter(format!(
            "`{hyperparameter}` is categorical; use the frequency table"
        )));
    }
    if n_points < 2 {
        return Err(Error::InvalidParameter("a curve needs at least two points".into()));
    }
    let (lo, hi) = (domain.lower.unwrap_or(0.0), domain.upper.unwrap_or(1.0));
    Ok((0..n_points)
        .map(|i| {
            let u = i as f64 / (n_points - 1) as f64;
            let x = match domain.kind {
                DomainKind::ContinuousLog => (lo.ln() + u * (hi.ln() - lo.ln())).exp(),
                _ => lo + u * (hi - lo),
            };
            (x, density.pdf(u))
        })
        .collect())
}

/// Trapezoid rule over `[0, 1]` in internal coordinates.
pub fn integrate(density: &DensityEstimate, n_points: usize) -> f64 {
    let step = 1.0 / (n_points - 1) as f64;
    let ys: Vec<f64> = (0..n_points).map(|i| density.pdf(i as f64 * step)).collect();
    step * (ys.iter().sum::<f64>() - 0.5 * (ys[0] + ys[n_points - 1]))
}
