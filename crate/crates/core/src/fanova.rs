//! Functional ANOVA over fitted trees.
//!
//! A tree is piecewise constant on the cross-partition formed by all of its
//! split points, so marginals, components and their variances can be
//! computed exactly by finite sums over cells and leaves. Everything is
//! taken against the uniform measure on internal coordinates.

use std::collections::HashMap;
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::config_space::{ConfigurationSpace, HyperparameterSubset};
use crate::error::{Error, Result};
use crate::forest::{fit_forest, Axis, Extent, Forest, ForestParams, Leaf, RegressionTree};
use crate::perfdata::{filter, KnowledgeBase};

/// Trees whose variance falls at or below this are treated as constant.
const DEGENERATE_VARIANCE: f64 = 1e-14;

/// A partial configuration: internal values for the members of `subset`,
/// in subset order.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalQuery {
    pub subset: HyperparameterSubset,
    pub assignment: Vec<f64>,
}

impl MarginalQuery {
    pub fn new(subset: HyperparameterSubset, assignment: Vec<f64>) -> Result<Self> {
        if subset.len() != assignment.len() {
            return Err(Error::InvalidParameter(format!(
                "{} values for a subset of size {}",
                assignment.len(),
                subset.len()
            )));
        }
        Ok(Self { subset, assignment })
    }
}

/// Average of the tree over every dimension outside `query.subset`, with
/// the subset pinned to `query.assignment`.
pub fn marginal(tree: &RegressionTree, query: &MarginalQuery) -> f64 {
    let leaves = tree.leaves();
    marginal_over(&leaves, query.subset.indices(), &query.assignment)
}

fn marginal_over(leaves: &[Leaf], dims: &[usize], values: &[f64]) -> f64 {
    leaves
        .iter()
        .filter(|l| dims.iter().zip(values).all(|(&d, &v)| l.bounds[d].contains(v)))
        .map(|l| {
            let rest: f64 = l
                .bounds
                .iter()
                .enumerate()
                .filter(|(d, _)| !dims.contains(d))
                .map(|(_, e)| e.measure())
                .product();
            l.value * rest
        })
        .sum()
}

/// Component function of `subset` at `assignment`: the marginal minus every
/// lower-order component (including the global mean). The empty subset
/// yields the tree mean.
pub fn component_value(tree: &RegressionTree, subset: &HyperparameterSubset, assignment: &[f64]) -> f64 {
    let leaves = tree.leaves();
    let mut memo = HashMap::new();
    component_rec(&leaves, subset.indices(), assignment, subset.mask(), &mut memo)
}

fn component_rec(
    leaves: &[Leaf],
    dims: &[usize],
    values: &[f64],
    mask: u64,
    memo: &mut HashMap<u64, f64>,
) -> f64 {
    if let Some(&v) = memo.get(&mask) {
        return v;
    }
    let (sub_dims, sub_values): (Vec<usize>, Vec<f64>) = dims
        .iter()
        .zip(values)
        .filter(|(&d, _)| mask >> d & 1 == 1)
        .map(|(&d, &v)| (d, v))
        .unzip();
    let mut value = marginal_over(leaves, &sub_dims, &sub_values);
    if mask != 0 {
        // every proper submask, including the empty set
        let mut sub = (mask - 1) & mask;
        loop {
            value -= component_rec(leaves, dims, values, sub, memo);
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & mask;
        }
    }
    memo.insert(mask, value);
    value
}

/// Cells of one dimension in the tree's cross-partition.
#[derive(Debug, Clone)]
struct DimCells {
    /// Cell boundaries for numeric dims: `[0, t_1, ..., t_k, 1]`.
    edges: Vec<f64>,
    categorical: Option<usize>,
}

impl DimCells {
    fn new(tree: &RegressionTree, dim: usize) -> Self {
        match tree.axes()[dim] {
            Axis::Numeric => {
                let mut edges = vec![0.0];
                edges.extend(tree.thresholds(dim));
                edges.push(1.0);
                Self {
                    edges,
                    categorical: None,
                }
            }
            Axis::Categorical(c) => Self {
                edges: Vec::new(),
                categorical: Some(c),
            },
        }
    }

    fn len(&self) -> usize {
        self.categorical.unwrap_or_else(|| self.edges.len() - 1)
    }

    fn measure(&self, cell: usize) -> f64 {
        match self.categorical {
            Some(c) => 1.0 / c as f64,
            None => self.edges[cell + 1] - self.edges[cell],
        }
    }

    /// Indices of the cells lying inside `extent`.
    fn covered(&self, extent: &Extent) -> Vec<usize> {
        match *extent {
            Extent::Categories { mask, .. } => {
                (0..self.len()).filter(|c| mask >> c & 1 == 1).collect()
            }
            Extent::Interval { lo, hi } => {
                // leaf bounds are themselves cell edges
                let start = self.edges.partition_point(|&e| e < lo);
                let end = self.edges.partition_point(|&e| e < hi);
                (start..end).collect()
            }
        }
    }
}

/// Dense array over the cells of a subset of dimensions, row-major.
#[derive(Debug, Clone)]
struct Grid {
    dims: Vec<usize>,
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Grid {
    fn zeros(dims: &[usize], cells: &[DimCells]) -> Self {
        let shape: Vec<usize> = dims.iter().map(|&d| cells[d].len()).collect();
        let size = shape.iter().product();
        Self {
            dims: dims.to_vec(),
            shape,
            data: vec![0.0; size],
        }
    }

    fn flat(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.shape).fold(0, |acc, (&i, &s)| acc * s + i)
    }
}

/// Calls `f` with every multi-index in the product of `lists`.
fn for_each_product(lists: &[Vec<usize>], mut f: impl FnMut(&[usize])) {
    if lists.iter().any(|l| l.is_empty()) {
        return;
    }
    let mut pos = vec![0usize; lists.len()];
    let mut idx: Vec<usize> = lists.iter().map(|l| l[0]).collect();
    loop {
        f(&idx);
        let mut k = lists.len();
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            pos[k] += 1;
            if pos[k] < lists[k].len() {
                idx[k] = lists[k][pos[k]];
                break;
            }
            pos[k] = 0;
            idx[k] = lists[k][0];
        }
    }
}

/// Exact decomposition of one tree.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TreeDecomposition {
    /// Mean of the tree function (the empty-set component).
    pub mean: f64,
    pub total_variance: f64,
    pub degenerate: bool,
    /// `(subset, V_U)` in lattice order.
    pub variances: Vec<(HyperparameterSubset, f64)>,
}

impl TreeDecomposition {
    /// `V_U / V` per subset; all zero for degenerate trees.
    pub fn fractions(&self) -> Vec<f64> {
        self.variances
            .iter()
            .map(|(_, v)| {
                if self.degenerate {
                    0.0
                } else {
                    v / self.total_variance
                }
            })
            .collect()
    }
}

/// Variance contributions of every subset of size `1..=max_order`.
pub fn decompose_tree(tree: &RegressionTree, max_order: usize) -> TreeDecomposition {
    let leaves = tree.leaves();
    let mean: f64 = leaves.iter().map(|l| l.value * l.measure).sum();
    let total_variance: f64 = leaves
        .iter()
        .map(|l| l.measure * (l.value - mean).powi(2))
        .sum();
    let subsets = HyperparameterSubset::lattice(tree.dims(), max_order);
    let degenerate = total_variance <= DEGENERATE_VARIANCE;
    if degenerate {
        return TreeDecomposition {
            mean,
            total_variance,
            degenerate,
            variances: subsets.into_iter().map(|s| (s, 0.0)).collect(),
        };
    }

    let cells: Vec<DimCells> = (0..tree.dims()).map(|d| DimCells::new(tree, d)).collect();
    let mut components: HashMap<u64, Grid> = HashMap::new();
    let mut variances = Vec::with_capacity(subsets.len());

    for subset in subsets {
        let dims = subset.indices();
        let mut grid = Grid::zeros(dims, &cells);

        // marginal: each leaf adds value x (measure outside the subset) to
        // every cell it covers
        for leaf in &leaves {
            let rest: f64 = leaf
                .bounds
                .iter()
                .enumerate()
                .filter(|(d, _)| !dims.contains(d))
                .map(|(_, e)| e.measure())
                .product();
            if rest == 0.0 {
                continue;
            }
            let weight = leaf.value * rest;
            let lists: Vec<Vec<usize>> = dims
                .iter()
                .map(|&d| cells[d].covered(&leaf.bounds[d]))
                .collect();
            for_each_product(&lists, |idx| {
                let at = grid.flat(idx);
                grid.data[at] += weight;
            });
        }

        // subtract the mean and every proper nonempty sub-component
        let mask = subset.mask();
        let lower: Vec<&Grid> = {
            let mut v = Vec::new();
            let mut sub = (mask - 1) & mask;
            while sub != 0 {
                v.push(&components[&sub]);
                sub = (sub - 1) & mask;
            }
            v
        };
        let positions: Vec<Vec<usize>> = lower
            .iter()
            .map(|g| {
                g.dims
                    .iter()
                    .map(|d| dims.iter().position(|x| x == d).unwrap())
                    .collect()
            })
            .collect();
        let all: Vec<Vec<usize>> = grid.shape.iter().map(|&s| (0..s).collect()).collect();
        let mut variance = 0.0;
        let mut sub_idx = Vec::with_capacity(dims.len());
        for_each_product(&all, |idx| {
            let at = grid.flat(idx);
            let mut v = grid.data[at] - mean;
            for (g, pos) in lower.iter().zip(&positions) {
                sub_idx.clear();
                sub_idx.extend(pos.iter().map(|&p| idx[p]));
                v -= g.data[g.flat(&sub_idx)];
            }
            grid.data[at] = v;
            let weight: f64 = dims
                .iter()
                .zip(idx)
                .map(|(&d, &i)| cells[d].measure(i))
                .product();
            variance += weight * v * v;
        });
        components.insert(mask, grid);
        variances.push((subset, variance));
    }

    TreeDecomposition {
        mean,
        total_variance,
        degenerate,
        variances,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubsetImportance {
    pub subset: HyperparameterSubset,
    /// `+`-joined hyperparameter names.
    pub name: String,
    pub fraction_mean: f64,
    pub fraction_std: f64,
    pub raw_variance_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImportanceReport {
    pub entries: Vec<SubsetImportance>,
    pub total_variance_mean: f64,
    /// Mean over trees of the empty-set component.
    pub baseline_mean: f64,
    pub max_order: usize,
    /// Every tree had zero variance.
    pub degenerate: bool,
}

impl ImportanceReport {
    pub fn entry(&self, name: &str) -> Option<&SubsetImportance> {
        self.entries.iter().find(|e| e.name == name)
    }

    /// Singleton entries sorted by decreasing mean fraction (stable).
    pub fn ranked_singletons(&self) -> Vec<&SubsetImportance> {
        let mut v: Vec<_> = self.entries.iter().filter(|e| e.subset.len() == 1).collect();
        v.sort_by(|a, b| b.fraction_mean.total_cmp(&a.fraction_mean));
        v
    }
}

/// Decomposes every tree of `forest` and averages the per-tree fractions.
/// Degenerate trees count as zero in the mean and are left out of the
/// standard deviation.
pub fn variance_decomposition(forest: &Forest, max_order: usize) -> Result<ImportanceReport> {
    if max_order == 0 {
        return Err(Error::InvalidParameter("max_order must be at least 1".into()));
    }
    let per_tree: Vec<TreeDecomposition> = forest
        .trees()
        .par_iter()
        .map(|t| decompose_tree(t, max_order))
        .collect();
    Ok(aggregate(forest.space(), &per_tree, max_order))
}

fn aggregate(space: &ConfigurationSpace, per_tree: &[TreeDecomposition], max_order: usize) -> ImportanceReport {
    let n_trees = per_tree.len() as f64;
    let fractions: Vec<Vec<f64>> = per_tree.iter().map(|t| t.fractions()).collect();
    let live: Vec<usize> = (0..per_tree.len()).filter(|&i| !per_tree[i].degenerate).collect();
    let entries = per_tree[0]
        .variances
        .iter()
        .enumerate()
        .map(|(k, (subset, _))| {
            let fraction_mean = fractions.iter().map(|f| f[k]).sum::<f64>() / n_trees;
            let fraction_std = if live.is_empty() {
                0.0
            } else {
                let m = live.iter().map(|&i| fractions[i][k]).sum::<f64>() / live.len() as f64;
                (live.iter().map(|&i| (fractions[i][k] - m).powi(2)).sum::<f64>()
                    / live.len() as f64)
                    .sqrt()
            };
            SubsetImportance {
                subset: subset.clone(),
                name: subset.render(space),
                fraction_mean,
                fraction_std,
                raw_variance_mean: per_tree.iter().map(|t| t.variances[k].1).sum::<f64>() / n_trees,
            }
        })
        .collect();
    ImportanceReport {
        entries,
        total_variance_mean: per_tree.iter().map(|t| t.total_variance).sum::<f64>() / n_trees,
        baseline_mean: per_tree.iter().map(|t| t.mean).sum::<f64>() / n_trees,
        max_order,
        degenerate: live.is_empty(),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DatasetImportance {
    pub dataset: String,
    pub report: ImportanceReport,
}

/// Fits a forest and decomposes it for every dataset of `algorithm`,
/// ordered by dataset id.
pub fn importance_table(
    kb: &KnowledgeBase,
    algorithm: &str,
    params: &ForestParams,
    max_order: usize,
) -> Result<Vec<DatasetImportance>> {
    let tables = filter(kb, Some(algorithm), None);
    if tables.is_empty() {
        return Err(Error::AlgorithmAbsent(algorithm.to_string()));
    }
    tables
        .par_iter()
        .map(|t| {
            let wrap = |e: Error| Error::Dataset {
                dataset: t.dataset().to_string(),
                source: Box::new(e),
            };
            let forest = fit_forest(t, params).map_err(wrap)?;
            let report = variance_decomposition(&forest, max_order).map_err(wrap)?;
            Ok(DatasetImportance {
                dataset: t.dataset().to_string(),
                report,
            })
        })
        .collect()
}

/// CSV `dataset,subset,fraction_mean,fraction_std,raw_variance_mean`.
pub fn write_importance_csv<W: Write>(rows: &[DatasetImportance], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["dataset", "subset", "fraction_mean", "fraction_std", "raw_variance_mean"])?;
    for row in rows {
        for e in &row.report.entries {
            w.write_record([
                row.dataset.clone(),
                e.name.clone(),
                e.fraction_mean.to_string(),
                e.fraction_std.to_string(),
                e.raw_variance_mean.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Per-subset fraction arrays across datasets, ready for violin plots.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ViolinData {
    pub algorithm: String,
    pub datasets: Vec<String>,
    pub subsets: Vec<ViolinSeries>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ViolinSeries {
    pub subset: String,
    pub order: usize,
    pub fractions: Vec<f64>,
}

pub fn violin_data(algorithm: &str, rows: &[DatasetImportance]) -> ViolinData {
    let subsets = rows
        .first()
        .map(|r| {
            r.report
                .entries
                .iter()
                .enumerate()
                .map(|(k, e)| ViolinSeries {
                    subset: e.name.clone(),
                    order: e.subset.len(),
                    fractions: rows.iter().map(|r| r.report.entries[k].fraction_mean).collect(),
                })
                .collect()
        })
        .unwrap_or_default();
    ViolinData {
        algorithm: algorithm.to_string(),
        datasets: rows.iter().map(|r| r.dataset.clone()).collect(),
        subsets,
    }
}
