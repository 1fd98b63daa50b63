#![allow(dead_code)]

use std::sync::Arc;

use hyperimp_core::config_space::{ConfigurationSpace, HyperparameterDomain};
use hyperimp_core::forest::{RegressionTree, SplitRule, TreeNode};
use hyperimp_core::perfdata::{KnowledgeBase, PerformanceTable};
use hyperimp_core::synthetic::{generate_table, GroundTruthFunction};

pub fn unit_space(algorithm: &str, dims: usize) -> Arc<ConfigurationSpace> {
    let domains = (0..dims)
        .map(|d| HyperparameterDomain::continuous(&format!("x{d}"), 0.0, 1.0))
        .collect();
    Arc::new(ConfigurationSpace::new(algorithm, domains).unwrap())
}

/// Tables for `datasets` datasets, all scored by `f` plus noise.
pub fn kb_from_function(
    space: &Arc<ConfigurationSpace>,
    f: &GroundTruthFunction,
    datasets: usize,
    samples: usize,
    noise: f64,
    seed: u64,
) -> KnowledgeBase {
    let mut kb = KnowledgeBase::new();
    for d in 0..datasets {
        let t = generate_table(f, Arc::clone(space), &format!("ds{d:02}"), samples, noise, seed + d as u64).unwrap();
        kb.insert(t).unwrap();
    }
    kb
}

pub fn single_table(space: &Arc<ConfigurationSpace>, f: &GroundTruthFunction, samples: usize, seed: u64) -> PerformanceTable {
    generate_table(f, Arc::clone(space), "ds", samples, 0.0, seed).unwrap()
}

/// Tree lookup written against the node structure only.
pub fn walk(node: &TreeNode, x: &[f64]) -> f64 {
    match node {
        TreeNode::Leaf { value, .. } => *value,
        TreeNode::Split { dim, rule, left, right } => {
            let go_left = match *rule {
                SplitRule::Threshold(t) => x[*dim] <= t,
                SplitRule::Categories(mask) => mask & (1u64 << (x[*dim] as u64)) != 0,
            };
            walk(if go_left { left } else { right }, x)
        }
    }
}

/// The same tree with dimension `d` renamed to `perm[d]`.
pub fn permute_tree(tree: &RegressionTree, perm: &[usize]) -> RegressionTree {
    fn remap(node: &TreeNode, perm: &[usize]) -> TreeNode {
        match node {
            TreeNode::Leaf { .. } => node.clone(),
            TreeNode::Split { dim, rule, left, right } => TreeNode::Split {
                dim: perm[*dim],
                rule: *rule,
                left: Box::new(remap(left, perm)),
                right: Box::new(remap(right, perm)),
            },
        }
    }
    let mut axes = tree.axes().to_vec();
    for (d, &p) in perm.iter().enumerate() {
        axes[p] = tree.axes()[d];
    }
    RegressionTree::new(axes, remap(tree.root(), perm)).unwrap()
}

pub fn midpoints(r: usize) -> impl Iterator<Item = f64> + Clone {
    (0..r).map(move |i| (i as f64 + 0.5) / r as f64)
}
