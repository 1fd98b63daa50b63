//! Ground-truth functions with brute-force fANOVA decompositions, and
//! synthetic knowledge bases with planted structure.
//!
//! Ground-truth functions live on the unit cube `[0, 1]^n`. A categorical
//! dimension with `c` labels reads its coordinate `u` as category
//! `floor(u * c)`, so the uniform measure on the cube matches uniform
//! sampling of labels.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config_space::{builtin_space, ConfigurationSpace, HyperparameterSubset};
use crate::error::{Error, Result};
use crate::forest::{Axis, RegressionTree, TreeNode};
use crate::perfdata::{KnowledgeBase, PerformanceTable};

pub const MAX_ORACLE_DIMS: usize = 4;
pub const MIN_GRID: usize = 20;
pub const MAX_GRID: usize = 200;

const DEGENERATE_VARIANCE: f64 = 1e-14;

type Evaluator = dyn Fn(&[f64]) -> f64 + Send + Sync;

#[derive(Clone)]
pub struct GroundTruthFunction {
    dim: usize,
    evaluator: Arc<Evaluator>,
    description: String,
}

impl fmt::Debug for GroundTruthFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GroundTruthFunction")
            .field("dim", &self.dim)
            .field("description", &self.description)
            .finish()
    }
}

impl GroundTruthFunction {
    pub fn new(
        dim: usize,
        description: impl Into<String>,
        evaluator: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            dim,
            evaluator: Arc::new(evaluator),
            description: description.into(),
        }
    }

    pub fn constant(dim: usize, value: f64) -> Self {
        Self::new(dim, format!("constant {value}"), move |_| value)
    }

    /// The function computed by `tree`, read on the unit cube.
    pub fn from_tree(tree: RegressionTree) -> Self {
        let axes = tree.axes().to_vec();
        let description = format!("tree with {} leaves", tree.leaf_count());
        Self::new(tree.dims(), description, move |u| {
            let x: Vec<f64> = u
                .iter()
                .zip(&axes)
                .map(|(&v, a)| match a {
                    Axis::Numeric => v,
                    Axis::Categorical(c) => category_of(v, *c) as f64,
                })
                .collect();
            tree.predict(&x)
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    pub fn eval(&self, u: &[f64]) -> f64 {
        (self.evaluator)(u)
    }
}

fn category_of(u: f64, c: usize) -> usize {
    ((u * c as f64).floor().max(0.0) as usize).min(c - 1)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleEntry {
    pub subset: HyperparameterSubset,
    pub variance: f64,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleDecomposition {
    /// Every nonempty subset, ordered by size then lexicographically.
    pub entries: Vec<OracleEntry>,
    pub mean: f64,
    pub total_variance: f64,
    pub grid_resolution: usize,
    pub degenerate: bool,
}

impl OracleDecomposition {
    pub fn fraction(&self, indices: &[usize]) -> Option<f64> {
        self.entries
            .iter()
            .find(|e| e.subset.indices() == indices)
            .map(|e| e.fraction)
    }
}

/// Functional ANOVA by exhaustive averaging over the midpoint grid
/// `{(i + 0.5) / r}^n`. Shares no code with the tree decomposition.
pub fn brute_force_fanova(f: &GroundTruthFunction, grid_resolution: usize) -> Result<OracleDecomposition> {
    let n = f.dim();
    let r = grid_resolution;
    if n == 0 || n > MAX_ORACLE_DIMS {
        return Err(Error::InvalidParameter(format!(
            "brute-force oracle supports 1..={MAX_ORACLE_DIMS} dimensions, got {n}"
        )));
    }
    if !(MIN_GRID..=MAX_GRID).contains(&r) {
        return Err(Error::InvalidParameter(format!(
            "grid resolution must lie in {MIN_GRID}..={MAX_GRID}, got {r}"
        )));
    }
    let slab = r.pow(n as u32 - 1);
    // row-major values, first axis slowest; slabs evaluated in parallel
    let values: Vec<f64> = (0..r)
        .into_par_iter()
        .flat_map_iter(|i0| {
            let mut point = vec![0.0; n];
            (0..slab).map(move |rest| {
                point[0] = (i0 as f64 + 0.5) / r as f64;
                let mut k = rest;
                for d in (1..n).rev() {
                    point[d] = ((k % r) as f64 + 0.5) / r as f64;
                    k /= r;
                }
                f.eval(&point)
            })
        })
        .collect();
    let total = values.len() as f64;
    let mean = values.iter().sum::<f64>() / total;
    let total_variance = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / total;

    let strides: Vec<usize> = (0..n).map(|d| r.pow((n - 1 - d) as u32)).collect();
    let subsets = HyperparameterSubset::lattice(n, n);
    let mut components: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
    let mut entries = Vec::with_capacity(subsets.len());
    for subset in subsets {
        let dims = subset.indices();
        let size = r.pow(dims.len() as u32);
        let mut marginal = vec![0.0; size];
        for (flat, v) in values.iter().enumerate() {
            marginal[project(flat, dims, &strides, r)] += v;
        }
        let per_cell = total / size as f64;
        marginal.iter_mut().for_each(|m| *m /= per_cell);

        let mask = subset.mask();
        let mut component = marginal;
        for (cell, c) in component.iter_mut().enumerate() {
            *c -= mean;
            let coords = unflatten(cell, dims.len(), r);
            let mut sub = (mask - 1) & mask;
            while sub != 0 {
                let lower = &components[&sub];
                let sub_idx = dims
                    .iter()
                    .zip(&coords)
                    .filter(|(&d, _)| sub >> d & 1 == 1)
                    .fold(0, |acc, (_, &i)| acc * r + i);
                *c -= lower[sub_idx];
                sub = (sub - 1) & mask;
            }
        }
        let variance = component.iter().map(|c| c * c).sum::<f64>() / size as f64;
        components.insert(mask, component);
        entries.push(OracleEntry {
            subset,
            variance,
            fraction: 0.0,
        });
    }
    let degenerate = total_variance <= DEGENERATE_VARIANCE;
    if !degenerate {
        for e in &mut entries {
            e.fraction = e.variance / total_variance;
        }
    }
    Ok(OracleDecomposition {
        entries,
        mean,
        total_variance,
        grid_resolution: r,
        degenerate,
    })
}

fn project(flat: usize, dims: &[usize], strides: &[usize], r: usize) -> usize {
    dims.iter().fold(0, |acc, &d| acc * r + (flat / strides[d]) % r)
}

fn unflatten(mut cell: usize, len: usize, r: usize) -> Vec<usize> {
    let mut out = vec![0; len];
    for k in (0..len).rev() {
        out[k] = cell % r;
        cell /= r;
    }
    out
}

/// Unit-cube coordinates of an internal vector: numeric values pass
/// through, category `k` of `c` maps to the centre of its slot.
pub fn unit_point(space: &ConfigurationSpace, internal: &[f64]) -> Vec<f64> {
    space
        .domains()
        .iter()
        .zip(internal)
        .map(|(d, &x)| match d.cardinality() {
            Some(c) => (x + 0.5) / c as f64,
            None => x,
        })
        .collect()
}

/// Samples `n_samples` uniform configurations and scores each with
/// `f(point) + N(0, noise_sd)`, clamped to `[0, 1]`.
pub fn generate_table(
    f: &GroundTruthFunction,
    space: Arc<ConfigurationSpace>,
    dataset: &str,
    n_samples: usize,
    noise_sd: f64,
    seed: u64,
) -> Result<PerformanceTable> {
    if f.dim() != space.len() {
        return Err(Error::DimensionMismatch {
            algorithm: space.algorithm().to_string(),
            expected: space.len(),
            got: f.dim(),
        });
    }
    if !(noise_sd >= 0.0) {
        return Err(Error::InvalidParameter("noise_sd must be non-negative".into()));
    }
    let configs = space.sample_uniform(n_samples, seed);
    let mut noise_rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let noise = Normal::new(0.0, noise_sd.max(f64::MIN_POSITIVE)).expect("valid sd");
    let rows = configs
        .into_iter()
        .map(|c| {
            let point = unit_point(&space, &space.to_internal(&c)?);
            let eps = if noise_sd > 0.0 { noise.sample(&mut noise_rng) } else { 0.0 };
            Ok((c, (f.eval(&point) + eps).clamp(0.0, 1.0)))
        })
        .collect::<Result<Vec<_>>>()?;
    PerformanceTable::new(space, dataset, rows)
}

/// A random tree over `axes` with up to `n_leaves` leaves and leaf values
/// uniform in `[0, 1]`. Thresholds fall strictly inside the box they cut.
///
/// With `snap = Some(r)` every threshold is a multiple of `1 / r`, so a
/// midpoint grid of resolution `r` integrates the tree exactly.
pub fn random_tree<R: Rng>(rng: &mut R, axes: &[Axis], n_leaves: usize, snap: Option<usize>) -> RegressionTree {
    fn grid_span(lo: f64, hi: f64, r: usize) -> (i64, i64) {
        let r = r as f64;
        ((lo * r).round() as i64 + 1, (hi * r).round() as i64 - 1)
    }
    fn grow<R: Rng>(
        rng: &mut R,
        axes: &[Axis],
        bounds: &mut [(f64, f64, u64)],
        leaves: usize,
        snap: Option<usize>,
    ) -> TreeNode {
        if leaves <= 1 {
            return TreeNode::leaf(rng.gen());
        }
        let splittable: Vec<usize> = (0..axes.len())
            .filter(|&d| match axes[d] {
                Axis::Numeric => match snap {
                    Some(r) => {
                        let (a, b) = grid_span(bounds[d].0, bounds[d].1, r);
                        a <= b
                    }
                    None => bounds[d].1 - bounds[d].0 > 1e-6,
                },
                Axis::Categorical(_) => bounds[d].2.count_ones() >= 2,
            })
            .collect();
        if splittable.is_empty() {
            return TreeNode::leaf(rng.gen());
        }
        let dim = splittable[rng.gen_range(0..splittable.len())];
        let left_leaves = rng.gen_range(1..leaves);
        let saved = bounds[dim];
        match axes[dim] {
            Axis::Numeric => {
                let (lo, hi, _) = saved;
                let t = match snap {
                    Some(r) => {
                        let (a, b) = grid_span(lo, hi, r);
                        rng.gen_range(a..=b) as f64 / r as f64
                    }
                    None => lo + (hi - lo) * rng.gen_range(0.05..0.95),
                };
                bounds[dim] = (lo, t, 0);
                let l = grow(rng, axes, bounds, left_leaves, snap);
                bounds[dim] = (t, hi, 0);
                let r = grow(rng, axes, bounds, leaves - left_leaves, snap);
                bounds[dim] = saved;
                TreeNode::threshold(dim, t, l, r)
            }
            Axis::Categorical(_) => {
                let members: Vec<u32> = (0..64).filter(|b| saved.2 >> b & 1 == 1).collect();
                let mut left = 1u64 << members[0];
                for &m in &members[1..members.len() - 1] {
                    if rng.gen_bool(0.5) {
                        left |= 1 << m;
                    }
                }
                bounds[dim].2 = saved.2 & left;
                let l = grow(rng, axes, bounds, left_leaves, snap);
                bounds[dim].2 = saved.2 & !left;
                let r = grow(rng, axes, bounds, leaves - left_leaves, snap);
                bounds[dim] = saved;
                TreeNode::categories(dim, left, l, r)
            }
        }
    }
    let mut bounds: Vec<(f64, f64, u64)> = axes
        .iter()
        .map(|a| match a {
            Axis::Numeric => (0.0, 1.0, 0),
            Axis::Categorical(c) => (0.0, 0.0, if *c >= 64 { u64::MAX } else { (1u64 << c) - 1 }),
        })
        .collect();
    let root = grow(rng, axes, &mut bounds, n_leaves, snap);
    RegressionTree::new(axes.to_vec(), root).expect("generated tree is well formed")
}

// ---------------------------------------------------------------------------
// planted knowledge bases

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Shape {
    /// `v`
    Linear,
    /// `1 - v`
    Decreasing,
    /// `v^2`
    Quadratic,
    /// `1 - 4 (v - 0.5)^2`
    Peak,
    /// `1` above 0.5, else `0`
    Step,
    /// `sin(2 pi v)`
    Sine,
}

impl Shape {
    pub fn apply(self, v: f64) -> f64 {
        match self {
            Shape::Linear => v,
            Shape::Decreasing => 1.0 - v,
            Shape::Quadratic => v * v,
            Shape::Peak => 1.0 - 4.0 * (v - 0.5).powi(2),
            Shape::Step => f64::from(u8::from(v > 0.5)),
            Shape::Sine => (2.0 * std::f64::consts::PI * v).sin(),
        }
    }
}

/// `weight * prod_h shape(v_h)` over the named hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub hyperparameters: Vec<String>,
    pub shape: Shape,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Response {
    pub offset: f64,
    #[serde(default)]
    pub terms: Vec<Term>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SpaceRef {
    Builtin(String),
    Inline(ConfigurationSpace),
}

fn default_configs() -> usize {
    500
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmSpec {
    /// Algorithm id written to the knowledge base.
    pub name: String,
    pub space: SpaceRef,
    pub datasets: usize,
    #[serde(default = "default_configs")]
    pub configs: usize,
    #[serde(default)]
    pub noise_sd: f64,
    pub response: Response,
    /// Per-dataset offset shift, uniform in `[-j, j]`.
    #[serde(default)]
    pub offset_jitter: f64,
    /// Per-dataset multiplicative term weight, uniform in `[1 - j, 1 + j]`.
    #[serde(default)]
    pub weight_jitter: f64,
}

fn default_prefix() -> String {
    "d".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub algorithms: Vec<AlgorithmSpec>,
    #[serde(default = "default_prefix")]
    pub dataset_prefix: String,
}

impl SynthSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

impl AlgorithmSpec {
    /// The configuration space, renamed to this algorithm's id.
    pub fn resolve_space(&self) -> Result<ConfigurationSpace> {
        let base = match &self.space {
            SpaceRef::Builtin(name) => builtin_space(name)?,
            SpaceRef::Inline(space) => space.clone(),
        };
        ConfigurationSpace::new(&self.name, base.domains().to_vec())
    }

    fn active_dims(&self, space: &ConfigurationSpace) -> Result<Vec<usize>> {
        let mut dims = Vec::new();
        for t in &self.response.terms {
            if t.hyperparameters.is_empty() {
                return Err(Error::InvalidParameter(format!(
                    "term without hyperparameters in `{}`",
                    self.name
                )));
            }
            for h in &t.hyperparameters {
                let i = space.require_index(h)?;
                if !dims.contains(&i) {
                    dims.push(i);
                }
            }
        }
        dims.sort_unstable();
        Ok(dims)
    }
}

/// Builds the response as a function on the cube of `space`, with the
/// given offset and per-term weights.
pub fn response_function(
    space: &ConfigurationSpace,
    response: &Response,
    offset: f64,
    weights: &[f64],
) -> Result<GroundTruthFunction> {
    let cards: Vec<Option<usize>> = space.domains().iter().map(|d| d.cardinality()).collect();
    let terms: Vec<(Vec<usize>, Shape, f64)> = response
        .terms
        .iter()
        .zip(weights)
        .map(|(t, &w)| {
            let idx = t
                .hyperparameters
                .iter()
                .map(|h| space.require_index(h))
                .collect::<Result<Vec<_>>>()?;
            Ok((idx, t.shape, w))
        })
        .collect::<Result<_>>()?;
    let description = format!("{} term(s) over `{}`", terms.len(), space.algorithm());
    Ok(GroundTruthFunction::new(space.len(), description, move |u| {
        let coord = |d: usize| match cards[d] {
            Some(c) if c > 1 => category_of(u[d], c) as f64 / (c - 1) as f64,
            Some(_) => 0.0,
            None => u[d],
        };
        offset
            + terms
                .iter()
                .map(|(idx, shape, w)| w * idx.iter().map(|&d| shape.apply(coord(d))).product::<f64>())
                .sum::<f64>()
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlantedFraction {
    pub subset: String,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlgorithmTruth {
    pub algorithm: String,
    pub active_hyperparameters: Vec<String>,
    /// Variance fractions of the noiseless base response over the active
    /// hyperparameters; every other subset has fraction zero.
    pub fractions: Vec<PlantedFraction>,
    pub total_variance: f64,
    pub grid_resolution: usize,
    pub degenerate: bool,
    pub noise_sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetTruth {
    pub dataset: String,
    /// Best noiseless score among the sampled configurations, per algorithm.
    pub noiseless_best: BTreeMap<String, f64>,
    pub best_algorithm: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroundTruth {
    pub algorithms: Vec<AlgorithmTruth>,
    pub datasets: Vec<DatasetTruth>,
}

#[derive(Debug, Clone)]
pub struct PlantedKb {
    pub kb: KnowledgeBase,
    pub truth: GroundTruth,
}

fn lcm(a: usize, b: usize) -> usize {
    fn gcd(a: usize, b: usize) -> usize {
        if b == 0 {
            a
        } else {
            gcd(b, a % b)
        }
    }
    a / gcd(a, b) * b
}

/// Brute-force decomposition of the base response over its active
/// hyperparameters.
pub fn algorithm_truth(spec: &AlgorithmSpec) -> Result<AlgorithmTruth> {
    let space = spec.resolve_space()?;
    let active = spec.active_dims(&space)?;
    let names: Vec<String> = active.iter().map(|&d| space.domain(d).name.clone()).collect();
    let weights: Vec<f64> = spec.response.terms.iter().map(|t| t.weight).collect();
    let mut truth = AlgorithmTruth {
        algorithm: spec.name.clone(),
        active_hyperparameters: names.clone(),
        fractions: Vec::new(),
        total_variance: 0.0,
        grid_resolution: 0,
        degenerate: true,
        noise_sd: spec.noise_sd,
    };
    if active.is_empty() {
        return Ok(truth);
    }
    if active.len() > MAX_ORACLE_DIMS {
        return Err(Error::InvalidParameter(format!(
            "`{}` plants structure on {} hyperparameters; the oracle handles at most {MAX_ORACLE_DIMS}",
            spec.name,
            active.len()
        )));
    }
    let full = response_function(&space, &spec.response, spec.response.offset, &weights)?;
    let n = space.len();
    let active_for_eval = active.clone();
    let restricted = GroundTruthFunction::new(active.len(), "active part", move |u| {
        let mut point = vec![0.5; n];
        for (k, &d) in active_for_eval.iter().enumerate() {
            point[d] = u[k];
        }
        full.eval(&point)
    });
    let base = match active.len() {
        1 | 2 => 200,
        3 => 100,
        _ => 40,
    };
    let step = active
        .iter()
        .filter_map(|&d| space.domain(d).cardinality())
        .fold(1, lcm);
    let resolution = if step > 1 && step <= base {
        (base / step * step).max(step * MIN_GRID.div_ceil(step))
    } else {
        base
    };
    let oracle = brute_force_fanova(&restricted, resolution)?;
    truth.fractions = oracle
        .entries
        .iter()
        .map(|e| PlantedFraction {
            subset: e.subset.indices().iter().map(|&k| names[k].as_str()).collect::<Vec<_>>().join("+"),
            fraction: e.fraction,
        })
        .collect();
    truth.total_variance = oracle.total_variance;
    truth.grid_resolution = oracle.grid_resolution;
    truth.degenerate = oracle.degenerate;
    Ok(truth)
}

/// Generates every (algorithm, dataset) table of `spec`. Dataset ids are
/// shared across algorithms: `<prefix>000`, `<prefix>001`, ...
pub fn planted_kb(spec: &SynthSpec, seed: u64) -> Result<PlantedKb> {
    let mut master = ChaCha8Rng::seed_from_u64(seed);
    let mut kb = KnowledgeBase::new();
    let mut algorithms = Vec::new();
    let mut best: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
    let n_datasets = spec.algorithms.iter().map(|a| a.datasets).max().unwrap_or(0);
    let width = n_datasets.saturating_sub(1).to_string().len().max(3);

    for alg in &spec.algorithms {
        if alg.datasets == 0 || alg.configs == 0 {
            return Err(Error::InvalidParameter(format!(
                "`{}` needs at least one dataset and one configuration",
                alg.name
            )));
        }
        let space = Arc::new(alg.resolve_space()?);
        algorithms.push(algorithm_truth(alg)?);
        for d in 0..alg.datasets {
            let dataset = format!("{}{:0width$}", spec.dataset_prefix, d);
            let table_seed: u64 = master.gen();
            let mut jitter = ChaCha8Rng::seed_from_u64(table_seed.rotate_left(17));
            let offset = alg.response.offset
                + if alg.offset_jitter > 0.0 {
                    jitter.gen_range(-alg.offset_jitter..=alg.offset_jitter)
                } else {
                    0.0
                };
            let weights: Vec<f64> = alg
                .response
                .terms
                .iter()
                .map(|t| {
                    let scale = if alg.weight_jitter > 0.0 {
                        jitter.gen_range(1.0 - alg.weight_jitter..=1.0 + alg.weight_jitter)
                    } else {
                        1.0
                    };
                    t.weight * scale
                })
                .collect();
            let f = response_function(&space, &alg.response, offset, &weights)?;
            let table = generate_table(&f, Arc::clone(&space), &dataset, alg.configs, alg.noise_sd, table_seed)?;
            let noiseless = table
                .records()
                .iter()
                .map(|r| f.eval(&unit_point(&space, &r.internal)).clamp(0.0, 1.0))
                .fold(f64::NEG_INFINITY, f64::max);
            best.entry(dataset.clone()).or_default().insert(alg.name.clone(), noiseless);
            kb.insert(table)?;
        }
    }

    let datasets = best
        .into_iter()
        .map(|(dataset, scores)| {
            let best_algorithm = scores
                .iter()
                .fold(None::<(&String, f64)>, |acc, (a, &s)| match acc {
                    Some((_, b)) if b >= s => acc,
                    _ => Some((a, s)),
                })
                .map(|(a, _)| a.clone())
                .unwrap_or_default();
            DatasetTruth {
                dataset,
                noiseless_best: scores,
                best_algorithm,
            }
        })
        .collect();
    Ok(PlantedKb {
        kb,
        truth: GroundTruth { algorithms, datasets },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config_space::HyperparameterDomain;

    #[test]
    fn constant_is_degenerate() {
        let d = brute_force_fanova(&GroundTruthFunction::constant(2, 0.3), 50).unwrap();
        assert!(d.degenerate);
        assert!(d.entries.iter().all(|e| e.fraction == 0.0));
    }

    #[test]
    fn single_variable() {
        let f = GroundTruthFunction::new(2, "x0", |u| u[0]);
        let d = brute_force_fanova(&f, 200).unwrap();
        assert!((d.fraction(&[0]).unwrap() - 1.0).abs() < 1e-3);
        assert!(d.fraction(&[1]).unwrap() <= 1e-3);
        assert!(d.fraction(&[0, 1]).unwrap() <= 1e-3);
    }

    #[test]
    fn additive_two_d() {
        let f = GroundTruthFunction::new(2, "x0 + x1", |u| u[0] + u[1]);
        let d = brute_force_fanova(&f, 200).unwrap();
        assert!((d.fraction(&[0]).unwrap() - 0.5).abs() < 5e-3);
        assert!((d.fraction(&[1]).unwrap() - 0.5).abs() < 5e-3);
        assert!(d.fraction(&[0, 1]).unwrap() <= 1e-3);
        // each uniform coordinate has variance 1/12
        assert!((d.total_variance - 2.0 / 12.0).abs() < 1e-4);
    }

    #[test]
    fn oracle_limits() {
        let f = GroundTruthFunction::new(5, "", |u| u[0]);
        assert!(brute_force_fanova(&f, 20).is_err());
        let g = GroundTruthFunction::new(2, "", |u| u[0]);
        assert!(brute_force_fanova(&g, 10).is_err());
        assert!(brute_force_fanova(&g, 201).is_err());
    }

    #[test]
    fn generate_constant_table() {
        let space = Arc::new(builtin_space("adaboost").unwrap());
        let f = GroundTruthFunction::constant(space.len(), 0.5);
        let t = generate_table(&f, Arc::clone(&space), "d", 500, 0.0, 3).unwrap();
        assert_eq!(t.len(), 500);
        assert!(t.scores().all(|s| s == 0.5));
        assert!(generate_table(&GroundTruthFunction::constant(2, 0.5), space, "d", 5, 0.0, 3).is_err());
    }

    #[test]
    fn random_trees_have_requested_leaves() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for leaves in [1, 2, 7, 50] {
            let t = random_tree(&mut rng, &[Axis::Numeric, Axis::Categorical(3), Axis::Numeric], leaves, None);
            // categorical dims may run out of splits, numeric ones keep going
            assert_eq!(t.leaf_count(), leaves);
            let snapped = random_tree(&mut rng, &[Axis::Numeric, Axis::Numeric], leaves, Some(40));
            for d in 0..2 {
                assert!(snapped.thresholds(d).iter().all(|t| ((t * 40.0).round() - t * 40.0).abs() < 1e-9));
            }
            let total: f64 = t.leaves().iter().map(|l| l.measure).sum();
            assert!((total - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn shapes() {
        assert_eq!(Shape::Peak.apply(0.5), 1.0);
        assert_eq!(Shape::Step.apply(0.7), 1.0);
        assert_eq!(Shape::Step.apply(0.2), 0.0);
        assert_eq!(Shape::Decreasing.apply(0.25), 0.75);
    }

    #[test]
    fn spec_parses_and_resolves() {
        let json = r#"{
            "algorithms": [{
                "name": "ab", "space": "adaboost", "datasets": 2, "configs": 20,
                "noise_sd": 0.0,
                "response": {"offset": 0.5, "terms": [
                    {"hyperparameters": ["learning_rate"], "shape": "linear", "weight": 0.2}
                ]}
            }]
        }"#;
        let spec = SynthSpec::from_json(json).unwrap();
        let planted = planted_kb(&spec, 9).unwrap();
        assert_eq!(planted.kb.len(), 2);
        assert_eq!(planted.kb.datasets(), vec!["d000", "d001"]);
        let truth = &planted.truth.algorithms[0];
        assert_eq!(truth.active_hyperparameters, vec!["learning_rate"]);
        assert!((truth.fractions[0].fraction - 1.0).abs() < 1e-9);
    }

    #[test]
    fn categorical_active_dims_use_aligned_grid() {
        let space = ConfigurationSpace::new(
            "c",
            vec![
                HyperparameterDomain::categorical("k", &["a", "b", "c"]),
                HyperparameterDomain::continuous("x", 0.0, 1.0),
            ],
        )
        .unwrap();
        let spec = AlgorithmSpec {
            name: "c".into(),
            space: SpaceRef::Inline(space),
            datasets: 1,
            configs: 10,
            noise_sd: 0.0,
            response: Response {
                offset: 0.2,
                terms: vec![Term {
                    hyperparameters: vec!["k".into()],
                    shape: Shape::Linear,
                    weight: 0.3,
                }],
            },
            offset_jitter: 0.0,
            weight_jitter: 0.0,
        };
        let truth = algorithm_truth(&spec).unwrap();
        assert_eq!(truth.grid_resolution % 3, 0);
        // values 0, 0.15, 0.3 with equal weight: variance 0.015
        assert!((truth.total_variance - 0.015).abs() < 1e-12);
    }
}
