//! Random-forest surrogate over internal coordinates.
//!
//! Each tree is an axis-aligned partition of the unit cube: numeric
//! dimensions are cut by thresholds, categorical dimensions by category
//! bipartitions. The leaf boxes tile the space, which is what lets the
//! functional ANOVA in [`crate::fanova`] integrate a tree exactly.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config_space::{Configuration, ConfigurationSpace};
use crate::error::{Error, Result};
use crate::perfdata::PerformanceTable;

/// Largest category count for which every bipartition is searched.
const EXHAUSTIVE_CATEGORIES: usize = 8;

/// How a tree sees one dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Axis {
    Numeric,
    Categorical(usize),
}

impl Axis {
    pub fn for_space(space: &ConfigurationSpace) -> Vec<Axis> {
        space
            .domains()
            .iter()
            .map(|d| match d.cardinality() {
                Some(c) => Axis::Categorical(c),
                None => Axis::Numeric,
            })
            .collect()
    }

    fn full_extent(self) -> Extent {
        match self {
            Axis::Numeric => Extent::Interval { lo: 0.0, hi: 1.0 },
            Axis::Categorical(c) => Extent::Categories {
                mask: full_mask(c),
                cardinality: c,
            },
        }
    }
}

fn full_mask(c: usize) -> u64 {
    if c >= 64 {
        u64::MAX
    } else {
        (1u64 << c) - 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum SplitRule {
    /// `x <= threshold` goes left.
    Threshold(f64),
    /// Categories whose bit is set go left.
    Categories(u64),
}

impl SplitRule {
    #[inline]
    pub fn goes_left(&self, x: f64) -> bool {
        match *self {
            SplitRule::Threshold(t) => x <= t,
            SplitRule::Categories(mask) => mask >> (x as u32) & 1 == 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum TreeNode {
    Leaf {
        value: f64,
        count: usize,
    },
    Split {
        dim: usize,
        rule: SplitRule,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

impl TreeNode {
    pub fn leaf(value: f64) -> Self {
        TreeNode::Leaf { value, count: 0 }
    }

    pub fn threshold(dim: usize, threshold: f64, left: TreeNode, right: TreeNode) -> Self {
        TreeNode::Split {
            dim,
            rule: SplitRule::Threshold(threshold),
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    pub fn categories(dim: usize, left_mask: u64, left: TreeNode, right: TreeNode) -> Self {
        TreeNode::Split {
            dim,
            rule: SplitRule::Categories(left_mask),
            left: Box::new(left),
            right: Box::new(right),
        }
    }
}

/// The footprint of a leaf along one dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Extent {
    Interval { lo: f64, hi: f64 },
    Categories { mask: u64, cardinality: usize },
}

impl Extent {
    /// Uniform measure of the extent within its dimension.
    pub fn measure(&self) -> f64 {
        match *self {
            Extent::Interval { lo, hi } => hi - lo,
            Extent::Categories { mask, cardinality } => {
                mask.count_ones() as f64 / cardinality as f64
            }
        }
    }

    /// Half-open on the left (`lo < x <= hi`) except at 0, so that sibling
    /// intervals never share a point.
    pub fn contains(&self, x: f64) -> bool {
        match *self {
            Extent::Interval { lo, hi } => (x > lo || (lo <= 0.0 && x >= lo)) && x <= hi,
            Extent::Categories { mask, .. } => x >= 0.0 && mask >> (x as u32) & 1 == 1,
        }
    }

    fn split(&self, rule: &SplitRule) -> (Extent, Extent) {
        match (*self, *rule) {
            (Extent::Interval { lo, hi }, SplitRule::Threshold(t)) => (
                Extent::Interval { lo, hi: t.min(hi) },
                Extent::Interval { lo: t.max(lo), hi },
            ),
            (Extent::Categories { mask, cardinality }, SplitRule::Categories(left)) => (
                Extent::Categories {
                    mask: mask & left,
                    cardinality,
                },
                Extent::Categories {
                    mask: mask & !left,
                    cardinality,
                },
            ),
            _ => unreachable!("split rule does not match axis kind"),
        }
    }
}

/// A leaf's box: one extent per dimension.
pub type LeafBox = Vec<Extent>;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Leaf {
    pub bounds: LeafBox,
    pub value: f64,
    pub measure: f64,
}

impl Leaf {
    pub fn contains(&self, x: &[f64]) -> bool {
        self.bounds.iter().zip(x).all(|(e, &v)| e.contains(v))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegressionTree {
    axes: Vec<Axis>,
    root: TreeNode,
}

impl RegressionTree {
    /// Wraps a hand-built node structure, checking every split against the
    /// axis kinds and the box it refines.
    pub fn new(axes: Vec<Axis>, root: TreeNode) -> Result<Self> {
        fn check(node: &TreeNode, axes: &[Axis], bounds: &mut LeafBox) -> Result<()> {
            let TreeNode::Split {
                dim,
                rule,
                left,
                right,
            } = node
            else {
                return Ok(());
            };
            let bad = |m: String| Err(Error::InvalidParameter(m));
            let Some(axis) = axes.get(*dim) else {
                return bad(format!("split on dimension {dim} out of range"));
            };
            match (axis, rule, bounds[*dim]) {
                (Axis::Numeric, SplitRule::Threshold(t), Extent::Interval { lo, hi }) => {
                    if !(*t > lo && *t < hi) {
                        return bad(format!("threshold {t} outside ({lo}, {hi})"));
                    }
                }
                (Axis::Categorical(_), SplitRule::Categories(m), Extent::Categories { mask, .. }) => {
                    if m & mask == 0 || mask & !m == 0 {
                        return bad("category split leaves one side empty".into());
                    }
                }
                _ => return bad(format!("split rule does not fit axis {dim}")),
            }
            let saved = bounds[*dim];
            let (l, r) = saved.split(rule);
            bounds[*dim] = l;
            check(left, axes, bounds)?;
            bounds[*dim] = r;
            check(right, axes, bounds)?;
            bounds[*dim] = saved;
            Ok(())
        }
        let mut bounds: LeafBox = axes.iter().map(|a| a.full_extent()).collect();
        check(&root, &axes, &mut bounds)?;
        Ok(Self { axes, root })
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn root(&self) -> &TreeNode {
        &self.root
    }

    pub fn dims(&self) -> usize {
        self.axes.len()
    }

    /// Value of the leaf containing `x` (internal coordinates).
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut node = &self.root;
        loop {
            match node {
                TreeNode::Leaf { value, .. } => return *value,
                TreeNode::Split {
                    dim,
                    rule,
                    left,
                    right,
                } => {
                    node = if rule.goes_left(x[*dim]) { left } else { right };
                }
            }
        }
    }

    pub fn leaf_count(&self) -> usize {
        fn count(n: &TreeNode) -> usize {
            match n {
                TreeNode::Leaf { .. } => 1,
                TreeNode::Split { left, right, .. } => count(left) + count(right),
            }
        }
        count(&self.root)
    }

    /// Every split threshold used on numeric dimension `dim`, sorted and
    /// deduplicated.
    pub fn thresholds(&self, dim: usize) -> Vec<f64> {
        fn walk(n: &TreeNode, dim: usize, out: &mut Vec<f64>) {
            if let TreeNode::Split {
                dim: d,
                rule,
                left,
                right,
            } = n
            {
                if let (true, SplitRule::Threshold(t)) = (*d == dim, rule) {
                    out.push(*t);
                }
                walk(left, dim, out);
                walk(right, dim, out);
            }
        }
        let mut out = Vec::new();
        walk(&self.root, dim, &mut out);
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    /// Leaves with their boxes and uniform measures, left to right.
    pub fn leaves(&self) -> Vec<Leaf> {
        fn walk(n: &TreeNode, bounds: &mut LeafBox, out: &mut Vec<Leaf>) {
            match n {
                TreeNode::Leaf { value, .. } => out.push(Leaf {
                    measure: bounds.iter().map(Extent::measure).product(),
                    bounds: bounds.clone(),
                    value: *value,
                }),
                TreeNode::Split {
                    dim,
                    rule,
                    left,
                    right,
                } => {
                    let saved = bounds[*dim];
                    let (l, r) = saved.split(rule);
                    bounds[*dim] = l;
                    walk(left, bounds, out);
                    bounds[*dim] = r;
                    walk(right, bounds, out);
                    bounds[*dim] = saved;
                }
            }
        }
        let mut bounds: LeafBox = self.axes.iter().map(|a| a.full_extent()).collect();
        let mut out = Vec::new();
        walk(&self.root, &mut bounds, &mut out);
        out
    }

    /// Mean of the tree function under the uniform measure.
    pub fn mean(&self) -> f64 {
        self.leaves().iter().map(|l| l.value * l.measure).sum()
    }
}

/// Leaves of `tree` with box, value and measure. Measures sum to one.
pub fn enumerate_leaves(tree: &RegressionTree) -> Vec<Leaf> {
    tree.leaves()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ForestParams {
    pub n_trees: usize,
    /// `None` grows trees until the leaf-size limit stops them.
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    /// Fraction of dimensions considered at each split, in `(0, 1]`.
    pub features_per_split: f64,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: 32,
            max_depth: None,
            min_samples_leaf: 3,
            features_per_split: 0.8,
            bootstrap: true,
            seed: 0,
        }
    }
}

impl ForestParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        if self.n_trees == 0 {
            return bad("n_trees must be positive");
        }
        if self.max_depth == Some(0) {
            return bad("max_depth must be positive");
        }
        if self.min_samples_leaf == 0 {
            return bad("min_samples_leaf must be positive");
        }
        if !(self.features_per_split > 0.0 && self.features_per_split <= 1.0) {
            return bad("features_per_split must lie in (0, 1]");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Forest {
    trees: Vec<RegressionTree>,
    #[serde(skip)]
    space: Arc<ConfigurationSpace>,
    params: ForestParams,
}

impl Forest {
    /// Assembles a forest from prebuilt trees over `space`.
    pub fn from_trees(
        space: Arc<ConfigurationSpace>,
        trees: Vec<RegressionTree>,
        params: ForestParams,
    ) -> Result<Self> {
        if trees.is_empty() {
            return Err(Error::InvalidParameter("forest needs at least one tree".into()));
        }
        let axes = Axis::for_space(&space);
        if trees.iter().any(|t| t.axes != axes) {
            return Err(Error::InvalidParameter(
                "tree axes do not match the configuration space".into(),
            ));
        }
        Ok(Self {
            trees,
            space,
            params,
        })
    }

    pub fn trees(&self) -> &[RegressionTree] {
        &self.trees
    }

    pub fn space(&self) -> &ConfigurationSpace {
        &self.space
    }

    pub fn params(&self) -> &ForestParams {
        &self.params
    }

    /// Mean and across-tree standard deviation at an internal point.
    pub fn predict_internal(&self, x: &[f64]) -> (f64, f64) {
        let preds: Vec<f64> = self.trees.iter().map(|t| t.predict(x)).collect();
        let n = preds.len() as f64;
        let mean = preds.iter().sum::<f64>() / n;
        let var = preds.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / n;
        (mean, var.sqrt())
    }

    pub fn predict(&self, config: &Configuration) -> Result<(f64, f64)> {
        Ok(self.predict_internal(&self.space.to_internal(config)?))
    }

    /// Debug dump of the tree structures.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("forest serializes")
    }
}

pub fn fit_forest(table: &PerformanceTable, params: &ForestParams) -> Result<Forest> {
    params.validate()?;
    if table.len() < 2 {
        return Err(Error::TooFewRecords {
            needed: 2,
            got: table.len(),
        });
    }
    let axes = Axis::for_space(table.space());
    let x: Vec<&[f64]> = table.records().iter().map(|r| r.internal.as_slice()).collect();
    let y: Vec<f64> = table.scores().collect();
    let builder = TreeBuilder {
        axes: &axes,
        x: &x,
        y: &y,
        params,
    };
    let trees = (0..params.n_trees)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed.wrapping_add(i as u64));
            builder.build(&mut rng)
        })
        .collect();
    Ok(Forest {
        trees,
        space: table.space_arc(),
        params: params.clone(),
    })
}

struct TreeBuilder<'a> {
    axes: &'a [Axis],
    x: &'a [&'a [f64]],
    y: &'a [f64],
    params: &'a ForestParams,
}

struct Candidate {
    dim: usize,
    rule: SplitRule,
    gain: f64,
}

impl TreeBuilder<'_> {
    fn build(&self, rng: &mut ChaCha8Rng) -> RegressionTree {
        let n = self.y.len();
        let mut idx: Vec<usize> = if self.params.bootstrap {
            (0..n).map(|_| rng.gen_range(0..n)).collect()
        } else {
            (0..n).collect()
        };
        let mut bounds: LeafBox = self.axes.iter().map(|a| a.full_extent()).collect();
        let root = self.grow(&mut idx, &mut bounds, 0, rng);
        RegressionTree {
            axes: self.axes.to_vec(),
            root,
        }
    }

    fn grow(
        &self,
        idx: &mut [usize],
        bounds: &mut LeafBox,
        depth: usize,
        rng: &mut ChaCha8Rng,
    ) -> TreeNode {
        let n = idx.len();
        let sum: f64 = idx.iter().map(|&i| self.y[i]).sum();
        let leaf = TreeNode::Leaf {
            value: sum / n as f64,
            count: n,
        };
        let first = self.y[idx[0]];
        let constant = idx.iter().all(|&i| self.y[i] == first);
        let depth_ok = self.params.max_depth.map_or(true, |m| depth < m);
        if constant || !depth_ok || n < 2 * self.params.min_samples_leaf {
            return leaf;
        }

        let Some(best) = self.best_split(idx, bounds, rng) else {
            return leaf;
        };

        // stable partition keeps the sample order deterministic
        let (mut left, mut right): (Vec<usize>, Vec<usize>) = idx
            .iter()
            .partition(|&&i| best.rule.goes_left(self.x[i][best.dim]));
        let saved = bounds[best.dim];
        let (lb, rb) = saved.split(&best.rule);
        bounds[best.dim] = lb;
        let l = self.grow(&mut left, bounds, depth + 1, rng);
        bounds[best.dim] = rb;
        let r = self.grow(&mut right, bounds, depth + 1, rng);
        bounds[best.dim] = saved;
        TreeNode::Split {
            dim: best.dim,
            rule: best.rule,
            left: Box::new(l),
            right: Box::new(r),
        }
    }

    /// Best split over a random subset of dimensions; falls through to the
    /// remaining dimensions when the sampled ones admit no valid split.
    fn best_split(
        &self,
        idx: &[usize],
        bounds: &LeafBox,
        rng: &mut ChaCha8Rng,
    ) -> Option<Candidate> {
        let d = self.axes.len();
        let k = ((self.params.features_per_split * d as f64).ceil() as usize).clamp(1, d);
        let mut dims: Vec<usize> = (0..d).collect();
        dims.shuffle(rng);
        let total: f64 = idx.iter().map(|&i| self.y[i]).sum();
        let base = total * total / idx.len() as f64;

        let mut best: Option<Candidate> = None;
        for (pos, &dim) in dims.iter().enumerate() {
            if pos >= k && best.is_some() {
                break;
            }
            let cand = match (self.axes[dim], bounds[dim]) {
                (Axis::Numeric, _) => self.numeric_split(idx, dim, total, base),
                (Axis::Categorical(_), Extent::Categories { mask, .. }) => {
                    self.categorical_split(idx, dim, mask, total, base)
                }
                _ => None,
            };
            if let Some(c) = cand {
                if best.as_ref().map_or(true, |b| c.gain > b.gain) {
                    best = Some(c);
                }
            }
        }
        best
    }

    fn numeric_split(&self, idx: &[usize], dim: usize, total: f64, base: f64) -> Option<Candidate> {
        let min_leaf = self.params.min_samples_leaf;
        let mut order: Vec<(f64, f64)> = idx.iter().map(|&i| (self.x[i][dim], self.y[i])).collect();
        order.sort_by(|a, b| a.0.total_cmp(&b.0));
        let n = order.len();
        let mut best: Option<Candidate> = None;
        let mut left_sum = 0.0;
        for i in 1..n {
            left_sum += order[i - 1].1;
            if order[i - 1].0 == order[i].0 || i < min_leaf || n - i < min_leaf {
                continue;
            }
            let right_sum = total - left_sum;
            let gain = left_sum * left_sum / i as f64 + right_sum * right_sum / (n - i) as f64 - base;
            if best.as_ref().map_or(true, |b| gain > b.gain) {
                best = Some(Candidate {
                    dim,
                    rule: SplitRule::Threshold(0.5 * (order[i - 1].0 + order[i].0)),
                    gain,
                });
            }
        }
        best
    }

    fn categorical_split(
        &self,
        idx: &[usize],
        dim: usize,
        allowed: u64,
        total: f64,
        base: f64,
    ) -> Option<Candidate> {
        let min_leaf = self.params.min_samples_leaf;
        let mut count = [0usize; 64];
        let mut sum = [0f64; 64];
        for &i in idx {
            let c = self.x[i][dim] as usize;
            count[c] += 1;
            sum[c] += self.y[i];
        }
        let n = idx.len();
        let members: Vec<usize> = (0..64).filter(|c| allowed >> c & 1 == 1).collect();
        if members.len() < 2 {
            return None;
        }
        let evaluate = |left: u64, best: &mut Option<Candidate>| {
            let (mut nl, mut sl) = (0usize, 0f64);
            for &c in &members {
                if left >> c & 1 == 1 {
                    nl += count[c];
                    sl += sum[c];
                }
            }
            let nr = n - nl;
            if nl < min_leaf || nr < min_leaf {
                return;
            }
            let sr = total - sl;
            let gain = sl * sl / nl as f64 + sr * sr / nr as f64 - base;
            if best.as_ref().map_or(true, |b| gain > b.gain) {
                *best = Some(Candidate {
                    dim,
                    rule: SplitRule::Categories(left),
                    gain,
                });
            }
        };
        let mut best = None;
        if members.len() <= EXHAUSTIVE_CATEGORIES {
            // the first member always sits on the left, so each bipartition
            // is visited once
            let m = members.len();
            for code in 0..(1u64 << (m - 1)) - 1 {
                let mut left = 1u64 << members[0];
                for (b, &c) in members[1..].iter().enumerate() {
                    if code >> b & 1 == 1 {
                        left |= 1 << c;
                    }
                }
                evaluate(left, &mut best);
            }
        } else {
            for &c in &members {
                evaluate(1u64 << c, &mut best);
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config_space::{HyperparameterDomain, Value};

    fn space_1d() -> Arc<ConfigurationSpace> {
        Arc::new(
            ConfigurationSpace::new("one", vec![HyperparameterDomain::continuous("x", 0.0, 1.0)])
                .unwrap(),
        )
    }

    fn table_1d(points: &[(f64, f64)]) -> PerformanceTable {
        let rows = points
            .iter()
            .map(|&(x, y)| (Configuration(vec![Value::Real(x)]), y))
            .collect();
        PerformanceTable::new(space_1d(), "d", rows).unwrap()
    }

    fn exact_params() -> ForestParams {
        ForestParams {
            n_trees: 1,
            max_depth: None,
            min_samples_leaf: 1,
            features_per_split: 1.0,
            bootstrap: false,
            seed: 0,
        }
    }

    #[test]
    fn constant_scores_give_single_leaves() {
        let t = table_1d(&[(0.1, 0.5), (0.4, 0.5), (0.8, 0.5), (0.9, 0.5)]);
        let f = fit_forest(&t, &ForestParams::default()).unwrap();
        assert_eq!(f.trees().len(), 32);
        for tree in f.trees() {
            assert_eq!(tree.leaf_count(), 1);
            assert_eq!(tree.predict(&[0.3]), 0.5);
        }
    }

    #[test]
    fn two_point_perfect_fit() {
        let t = table_1d(&[(0.1, 0.0), (0.9, 1.0)]);
        let f = fit_forest(&t, &exact_params()).unwrap();
        let tree = &f.trees()[0];
        let TreeNode::Split { rule, .. } = tree.root() else {
            panic!("expected a root split");
        };
        assert_eq!(*rule, SplitRule::Threshold(0.5));
        assert_eq!(f.predict(&Configuration(vec![Value::Real(0.1)])).unwrap(), (0.0, 0.0));
        assert_eq!(f.predict(&Configuration(vec![Value::Real(0.9)])).unwrap(), (1.0, 0.0));
    }

    #[test]
    fn too_few_records() {
        let t = table_1d(&[(0.1, 0.0)]);
        assert!(matches!(
            fit_forest(&t, &ForestParams::default()),
            Err(Error::TooFewRecords { .. })
        ));
    }

    #[test]
    fn invalid_params_rejected() {
        let t = table_1d(&[(0.1, 0.0), (0.2, 0.3)]);
        for p in [
            ForestParams { n_trees: 0, ..Default::default() },
            ForestParams { min_samples_leaf: 0, ..Default::default() },
            ForestParams { features_per_split: 0.0, ..Default::default() },
            ForestParams { max_depth: Some(0), ..Default::default() },
        ] {
            assert!(fit_forest(&t, &p).is_err());
        }
    }

    #[test]
    fn leaf_measures_for_simple_split() {
        let tree = RegressionTree::new(
            vec![Axis::Numeric, Axis::Numeric],
            TreeNode::threshold(0, 0.25, TreeNode::leaf(1.0), TreeNode::leaf(2.0)),
        )
        .unwrap();
        let m: Vec<f64> = tree.leaves().iter().map(|l| l.measure).collect();
        assert_eq!(m, vec![0.25, 0.75]);
        let single = RegressionTree::new(vec![Axis::Numeric], TreeNode::leaf(3.0)).unwrap();
        assert_eq!(single.leaves().len(), 1);
        assert_eq!(single.leaves()[0].measure, 1.0);
    }

    #[test]
    fn hand_built_trees_are_checked() {
        assert!(RegressionTree::new(
            vec![Axis::Numeric],
            TreeNode::threshold(0, 1.5, TreeNode::leaf(0.0), TreeNode::leaf(1.0)),
        )
        .is_err());
        // nested threshold outside the parent's interval
        assert!(RegressionTree::new(
            vec![Axis::Numeric],
            TreeNode::threshold(
                0,
                0.5,
                TreeNode::threshold(0, 0.7, TreeNode::leaf(0.0), TreeNode::leaf(1.0)),
                TreeNode::leaf(1.0)
            ),
        )
        .is_err());
        assert!(RegressionTree::new(
            vec![Axis::Categorical(3)],
            TreeNode::categories(0, 0b111, TreeNode::leaf(0.0), TreeNode::leaf(1.0)),
        )
        .is_err());
        assert!(RegressionTree::new(
            vec![Axis::Categorical(3)],
            TreeNode::threshold(0, 0.5, TreeNode::leaf(0.0), TreeNode::leaf(1.0)),
        )
        .is_err());
    }

    #[test]
    fn categorical_split_found() {
        let space = Arc::new(
            ConfigurationSpace::new(
                "c",
                vec![HyperparameterDomain::categorical("k", &["a", "b", "c"])],
            )
            .unwrap(),
        );
        let rows = ["a", "b", "c", "a", "b", "c"]
            .iter()
            .map(|l| {
                let y = if *l == "b" { 0.9 } else { 0.1 };
                (Configuration(vec![Value::Label(l.to_string())]), y)
            })
            .collect();
        let t = PerformanceTable::new(space, "d", rows).unwrap();
        let f = fit_forest(&t, &exact_params()).unwrap();
        let tree = &f.trees()[0];
        assert_eq!(tree.predict(&[1.0]), 0.9);
        assert_eq!(tree.predict(&[0.0]), 0.1);
        assert_eq!(tree.predict(&[2.0]), 0.1);
        let total: f64 = tree.leaves().iter().map(|l| l.measure).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fitting_is_deterministic() {
        let pts: Vec<(f64, f64)> = (0..40)
            .map(|i| {
                let x = (i as f64 * 0.618).fract();
                (x, x * x)
            })
            .collect();
        let t = table_1d(&pts);
        let a = fit_forest(&t, &ForestParams { seed: 5, ..Default::default() }).unwrap();
        let b = fit_forest(&t, &ForestParams { seed: 5, ..Default::default() }).unwrap();
        assert_eq!(a.trees(), b.trees());
    }

    #[test]
    fn max_depth_limits_growth() {
        let pts: Vec<(f64, f64)> = (0..32).map(|i| (i as f64 / 31.0, (i % 7) as f64 / 7.0)).collect();
        let t = table_1d(&pts);
        let p = ForestParams {
            max_depth: Some(2),
            ..exact_params()
        };
        let f = fit_forest(&t, &p).unwrap();
        assert!(f.trees()[0].leaf_count() <= 4);
    }

    #[test]
    fn min_samples_leaf_respected() {
        let pts: Vec<(f64, f64)> = (0..30).map(|i| (i as f64 / 29.0, (i as f64 * 0.37).sin().abs())).collect();
        let t = table_1d(&pts);
        let p = ForestParams {
            min_samples_leaf: 4,
            ..exact_params()
        };
        let f = fit_forest(&t, &p).unwrap();
        fn check(n: &TreeNode) {
            match n {
                TreeNode::Leaf { count, .. } => assert!(*count >= 4),
                TreeNode::Split { left, right, .. } => {
                    check(left);
                    check(right)
                }
            }
        }
        check(f.trees()[0].root());
    }
}
