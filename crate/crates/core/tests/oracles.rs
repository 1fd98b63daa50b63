//! Independent oracles for the worked examples: each expected value is
//! computed here by a method that shares no code with the library path.

mod common;

use std::sync::Arc;

use hyperimp_core::analytics::{
    mean_rank, significance_report, tunability, wilcoxon_signed_rank, win_matrix, ReferenceMode, TieBand,
};
use hyperimp_core::analytics::wilcoxon::{average_ranks, exact_p_value, normal_p_value};
use hyperimp_core::config_space::{builtin_space, Configuration, HyperparameterSubset, Value};
use hyperimp_core::fanova::{
    component_value, decompose_tree, importance_table, marginal, DatasetImportance, ImportanceReport,
    MarginalQuery, SubsetImportance,
};
use hyperimp_core::forest::{fit_forest, Axis, ForestParams, RegressionTree, TreeNode};
use hyperimp_core::perfdata::{best_record, KnowledgeBase, PerformanceTable};
use hyperimp_core::priors::{collect_best_values, fit_density, recommend_default, Selection};
use hyperimp_core::synthetic::{
    brute_force_fanova, generate_table, planted_kb, random_tree, GroundTruthFunction, SynthSpec,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{kb_from_function, midpoints, single_table, unit_space, walk};

#[test]
fn log_learning_rate_mean_matches_midpoint() {
    let space = builtin_space("adaboost").unwrap();
    let lr = space.index_of("learning_rate").unwrap();
    let samples = space.sample_uniform(100_000, 1);
    let mean = samples
        .iter()
        .map(|c| match &c.0[lr] {
            Value::Real(v) => v.ln(),
            other => panic!("unexpected {other:?}"),
        })
        .sum::<f64>()
        / samples.len() as f64;
    let midpoint = 0.5 * (0.01f64.ln() + 2.0f64.ln());
    assert!((mean - midpoint).abs() < 0.01 * midpoint.abs(), "{mean} vs {midpoint}");
}

#[test]
fn svm_c_log_midpoint() {
    let space = builtin_space("svm").unwrap();
    let c = space.domain(space.index_of("C").unwrap());
    let u = c.to_internal(&Value::Real(32.0)).unwrap();
    assert!((u - (5.0 - -5.0) / (15.0 - -5.0)).abs() < 1e-12);
}

#[test]
fn best_record_equals_exhaustive_scan() {
    let space = unit_space("a", 2);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let rows: Vec<(Configuration, f64)> = space
        .sample_uniform(500, 4)
        .into_iter()
        // coarse scores so ties occur
        .map(|c| (c, (rng.gen_range(0..50) as f64) / 50.0))
        .collect();
    let table = PerformanceTable::new(Arc::clone(&space), "d", rows.clone()).unwrap();
    let mut scan = 0;
    for (i, (_, s)) in rows.iter().enumerate() {
        if *s > rows[scan].1 {
            scan = i;
        }
    }
    let best = best_record(&table);
    assert_eq!(best.score, rows[scan].1);
    assert_eq!(best.config, rows[scan].0);
}

#[test]
fn forest_fits_square() {
    let space = unit_space("sq", 1);
    let f = GroundTruthFunction::new(1, "x^2", |u| u[0] * u[0]);
    let table = single_table(&space, &f, 200, 11);
    let forest = fit_forest(&table, &ForestParams::default()).unwrap();
    let rmse = (midpoints(100)
        .map(|x| (forest.predict_internal(&[x]).0 - x * x).powi(2))
        .sum::<f64>()
        / 100.0)
        .sqrt();
    assert!(rmse < 0.05, "rmse {rmse}");
}

#[test]
fn forest_prediction_is_mean_of_tree_walks() {
    let space = unit_space("w", 3);
    let f = GroundTruthFunction::new(3, "mix", |u| (u[0] * 3.0).sin().abs() * u[1] + 0.2 * u[2]);
    let table = single_table(&space, &f, 300, 2);
    let forest = fit_forest(&table, &ForestParams { n_trees: 10, ..ForestParams::default() }).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..50 {
        let x: Vec<f64> = (0..3).map(|_| rng.gen()).collect();
        let expected = forest.trees().iter().map(|t| walk(t.root(), &x)).sum::<f64>() / 10.0;
        assert!((forest.predict_internal(&x).0 - expected).abs() < 1e-12);
    }
}

#[test]
fn random_fifty_leaf_tree_measures_sum_to_one() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let tree = random_tree(&mut rng, &[Axis::Numeric, Axis::Numeric, Axis::Categorical(4)], 50, None);
    let total: f64 = tree.leaves().iter().map(|l| l.measure).sum();
    assert!((total - 1.0).abs() < 1e-9);
}

#[test]
fn marginal_matches_restricted_grid_average() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let tree = random_tree(&mut rng, &[Axis::Numeric; 3], 6, Some(200));
    let query = MarginalQuery::new(HyperparameterSubset::new(vec![0], 3).unwrap(), vec![0.3]).unwrap();
    let mut sum = 0.0;
    for y in midpoints(200) {
        for z in midpoints(200) {
            sum += tree.predict(&[0.3, y, z]);
        }
    }
    let grid = sum / 40_000.0;
    assert!((marginal(&tree, &query) - grid).abs() < 1e-6);
}

#[test]
fn additive_tree_has_no_interaction_component() {
    let (a1, a2, b1, b2) = (0.1, 0.7, 0.05, 0.4);
    let branch = |a: f64| TreeNode::threshold(1, 0.3, TreeNode::leaf(a + b1), TreeNode::leaf(a + b2));
    let tree = RegressionTree::new(
        vec![Axis::Numeric, Axis::Numeric],
        TreeNode::threshold(0, 0.5, branch(a1), branch(a2)),
    )
    .unwrap();
    let pair = HyperparameterSubset::new(vec![0, 1], 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..100 {
        let x = [rng.gen::<f64>(), rng.gen::<f64>()];
        assert!(component_value(&tree, &pair, &x).abs() < 1e-9);
    }
}

#[test]
fn three_dim_tree_matches_hundred_grid() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let tree = random_tree(&mut rng, &[Axis::Numeric; 3], 20, Some(100));
    let exact = decompose_tree(&tree, 3);
    let oracle = brute_force_fanova(&GroundTruthFunction::from_tree(tree), 100).unwrap();
    for ((subset, _), fr) in exact.variances.iter().zip(exact.fractions()) {
        let o = oracle.fraction(subset.indices()).unwrap();
        assert!((fr - o).abs() < 2e-3, "{subset:?}: {fr} vs {o}");
    }
}

#[test]
fn planted_lr_dominates_importance() {
    let spec = SynthSpec::from_json(
        r#"{"algorithms": [{
            "name": "adaboost", "space": "adaboost", "datasets": 20, "configs": 300, "noise_sd": 0.005,
            "response": {"offset": 0.5, "terms": [
                {"hyperparameters": ["learning_rate"], "shape": "linear", "weight": 0.4}
            ]},
            "weight_jitter": 0.3
        }]}"#,
    )
    .unwrap();
    let planted = planted_kb(&spec, 21).unwrap();
    let rows = importance_table(&planted.kb, "adaboost", &ForestParams::default(), 2).unwrap();
    let mut fr: Vec<f64> = rows
        .iter()
        .map(|r| r.report.entry("learning_rate").unwrap().fraction_mean)
        .collect();
    fr.sort_by(f64::total_cmp);
    let median = 0.5 * (fr[9] + fr[10]);
    assert!(median > 0.8, "median {median}");
    let first = rows
        .iter()
        .filter(|r| r.report.ranked_singletons()[0].name == "learning_rate")
        .count();
    assert!(first >= 18, "ranked first on {first}/20");
}

#[test]
fn top_fraction_of_increasing_scores_sits_at_upper_end() {
    let space = unit_space("m", 1);
    let f = GroundTruthFunction::new(1, "x", |u| u[0]);
    let kb = kb_from_function(&space, &f, 3, 400, 0.0, 9);
    let values = collect_best_values(&kb, "m", "x0", Selection::TopFraction(0.02)).unwrap();
    assert_eq!(values.len(), 3 * 8);
    assert!(values.iter().all(|&v| v > 0.9), "{values:?}");
}

#[test]
fn uniform_grid_density_is_flat() {
    let values: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
    let density = fit_density(&values, None).unwrap();
    let heights: Vec<f64> = (10..=90).map(|i| density.pdf(i as f64 / 100.0)).collect();
    assert!(heights.iter().all(|h| (h - 1.0).abs() < 0.1), "{heights:?}");
    let max = heights.iter().cloned().fold(f64::MIN, f64::max);
    let min = heights.iter().cloned().fold(f64::MAX, f64::min);
    assert!(max / min < 1.3);
}

#[test]
fn bimodal_recommendation_matches_analytic_argmax() {
    let mut values = vec![0.2; 50];
    values.extend(vec![0.8; 30]);
    let density = fit_density(&values, None).unwrap();
    let h = density.bandwidth().unwrap();
    // plain Gaussian sum with mirror images at 0 and 1
    let kde = |x: f64| -> f64 {
        values
            .iter()
            .map(|&s| {
                [s, -s, 2.0 - s]
                    .iter()
                    .map(|c| (-0.5 * ((x - c) / h).powi(2)).exp())
                    .sum::<f64>()
            })
            .sum()
    };
    let argmax = (0..=1000)
        .map(|i| i as f64 / 1000.0)
        .fold((0.0, f64::MIN), |best, x| if kde(x) > best.1 { (x, kde(x)) } else { best })
        .0;
    let space = unit_space("b", 1);
    let rec = match recommend_default(&space, "x0", &density).unwrap() {
        Value::Real(v) => v,
        other => panic!("unexpected {other:?}"),
    };
    assert!((rec - argmax).abs() <= 1e-3, "{rec} vs {argmax}");
    assert!((rec - 0.2).abs() < 0.05);
}

#[test]
fn rank_sum_for_three_algorithms() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut kb = KnowledgeBase::new();
    for alg in ["a", "b", "c"] {
        let space = unit_space(alg, 1);
        for d in 0..8 {
            let rows = (0..5)
                .map(|_| (Configuration(vec![Value::Real(rng.gen())]), (rng.gen_range(0..20) as f64) / 20.0))
                .collect();
            kb.insert(PerformanceTable::new(Arc::clone(&space), &format!("d{d}"), rows).unwrap())
                .unwrap();
        }
    }
    let summary = mean_rank(&kb).unwrap();
    let total: f64 = summary.ranks.iter().map(|r| r.mean_rank).sum();
    assert!((total - 6.0).abs() < 1e-9);

    let m = win_matrix(&kb, TieBand::default()).unwrap();
    for (i, a) in m.algorithms.iter().enumerate() {
        for (j, b) in m.algorithms.iter().enumerate() {
            if i == j {
                continue;
            }
            let (mut w, mut t, mut l) = (0, 0, 0);
            for d in kb.datasets() {
                let x = best_record(kb.table(a, &d).unwrap()).score;
                let y = best_record(kb.table(b, &d).unwrap()).score;
                if (x - y).abs() <= 0.01 + 1e-12 {
                    t += 1;
                } else if x > y {
                    w += 1;
                } else {
                    l += 1;
                }
            }
            let e = m.entries[i][j].unwrap();
            assert_eq!(e.win_pct, 100.0 * w as f64 / 8.0);
            assert_eq!(e.tie_pct, 100.0 * t as f64 / 8.0);
            assert_eq!(e.loss_pct, 100.0 * l as f64 / 8.0);
        }
    }
}

#[test]
fn five_differences_exact_p() {
    let r = wilcoxon_signed_rank(&[1.0, 2.0, 3.0, 4.0, 5.0], &[0.0; 5]).unwrap();
    assert_eq!(r.statistic, 0.0);
    assert_eq!(r.p_value, 2.0 / 32.0);
}

#[test]
fn normal_approximation_close_to_exact_at_twenty_five() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..20 {
        let diffs: Vec<f64> = (0..25).map(|_| rng.gen_range(-1.0..1.2)).collect();
        let abs: Vec<f64> = diffs.iter().map(|d: &f64| d.abs()).collect();
        let ranks = average_ranks(&abs);
        let w_plus: f64 = diffs.iter().zip(&ranks).filter(|(d, _)| **d > 0.0).map(|(_, r)| r).sum();
        let stat = w_plus.min(325.0 - w_plus);
        let exact = exact_p_value(&ranks, stat);
        let approx = normal_p_value(&ranks, stat);
        assert!((exact - approx).abs() < 0.02, "{exact} vs {approx}");
    }
}

fn report_with(fractions: &[(&str, f64)]) -> ImportanceReport {
    ImportanceReport {
        entries: fractions
            .iter()
            .enumerate()
            .map(|(i, (name, f))| SubsetImportance {
                subset: HyperparameterSubset::new(vec![i], fractions.len()).unwrap(),
                name: name.to_string(),
                fraction_mean: *f,
                fraction_std: 0.0,
                raw_variance_mean: *f,
            })
            .collect(),
        total_variance_mean: 1.0,
        baseline_mean: 0.5,
        max_order: 1,
        degenerate: false,
    }
}

#[test]
fn planted_separation_is_significant() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let rows: Vec<DatasetImportance> = (0..30)
        .map(|d| {
            let b = rng.gen_range(0.0..0.3);
            let a = b + rng.gen_range(0.2..0.5);
            DatasetImportance {
                dataset: format!("d{d}"),
                report: report_with(&[("A", a), ("B", b)]),
            }
        })
        .collect();
    let pairs = significance_report(&rows, &["A".to_string(), "B".to_string()]);
    assert_eq!(pairs.len(), 1);
    assert!(pairs[0].p_value < 0.05);
    assert!(pairs[0].significant);
    assert_eq!(pairs[0].more_important.as_deref(), Some("A"));
}

#[test]
fn tunability_sample_std_of_two_deltas() {
    let space = unit_space("t", 1);
    let mut kb = KnowledgeBase::new();
    for (d, best) in [("d1", 0.6), ("d2", 0.8)] {
        let rows = [(0.1, 0.4), (0.5, 0.5), (0.9, best)]
            .iter()
            .map(|&(x, y)| (Configuration(vec![Value::Real(x)]), y))
            .collect();
        kb.insert(PerformanceTable::new(Arc::clone(&space), d, rows).unwrap()).unwrap();
    }
    let r = tunability(&kb, "t", ReferenceMode::PerDatasetMedian).unwrap();
    let deltas = [0.1f64, 0.3];
    let mean = deltas.iter().sum::<f64>() / 2.0;
    let sd = (deltas.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / 1.0).sqrt();
    assert!((r.aggregate_std - sd).abs() < 1e-12);
}

#[test]
fn additive_oracle_splits_evenly() {
    let f = GroundTruthFunction::new(2, "x0 + x1", |u| u[0] + u[1]);
    let o = brute_force_fanova(&f, 200).unwrap();
    assert!((o.fraction(&[0]).unwrap() - 0.5).abs() < 5e-3);
    assert!((o.fraction(&[1]).unwrap() - 0.5).abs() < 5e-3);
    assert!(o.fraction(&[0, 1]).unwrap() <= 1e-3);
}

#[test]
fn sample_mean_tracks_grid_mean() {
    let space = unit_space("g", 2);
    let f = GroundTruthFunction::new(2, "bowl", |u| 0.3 + 0.4 * u[0] * u[1]);
    let table = generate_table(&f, Arc::clone(&space), "d", 2000, 0.02, 15).unwrap();
    let scores: Vec<f64> = table.scores().collect();
    let n = scores.len() as f64;
    let mean = scores.iter().sum::<f64>() / n;
    let sd = (scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let grid = brute_force_fanova(&f, 200).unwrap().mean;
    assert!((mean - grid).abs() <= 3.0 * sd / n.sqrt(), "{mean} vs {grid}");
}

#[test]
fn planted_lr_not_depth_ranked_first() {
    let spec = SynthSpec::from_json(
        r#"{"algorithms": [{
            "name": "adaboost", "space": "adaboost", "datasets": 20, "configs": 300, "noise_sd": 0.01,
            "response": {"offset": 0.4, "terms": [
                {"hyperparameters": ["learning_rate"], "shape": "peak", "weight": 0.4}
            ]},
            "offset_jitter": 0.1
        }]}"#,
    )
    .unwrap();
    let planted = planted_kb(&spec, 5).unwrap();
    let rows = importance_table(&planted.kb, "adaboost", &ForestParams::default(), 1).unwrap();
    let first = rows
        .iter()
        .filter(|r| r.report.ranked_singletons()[0].name == "learning_rate")
        .count();
    assert!(first >= 18, "{first}/20");
    let depth = rows.iter().map(|r| r.report.entry("max_depth").unwrap().fraction_mean);
    assert!(depth.clone().all(|f| f < 0.2));
}

#[test]
fn flat_spec_tunability_is_noise_floor() {
    let spec = SynthSpec::from_json(
        r#"{"algorithms": [{
            "name": "decision_tree", "space": "decision_tree", "datasets": 20, "configs": 300,
            "noise_sd": 0.01, "response": {"offset": 0.6}
        }]}"#,
    )
    .unwrap();
    let planted = planted_kb(&spec, 6).unwrap();
    assert!(planted.truth.algorithms[0].degenerate);
    let r = tunability(&planted.kb, "decision_tree", ReferenceMode::PerDatasetMedian).unwrap();
    assert!(r.aggregate_std < 0.01, "{}", r.aggregate_std);
    // max of 300 draws sits roughly 2.5-3 sd above the median
    assert!(r.aggregate_mean > 0.015 && r.aggregate_mean < 0.04, "{}", r.aggregate_mean);
}
