//! Cross-algorithm comparisons on the best score each algorithm reached
//! per dataset.

use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;

use crate::analytics::wilcoxon::average_ranks;
use crate::error::{Error, Result};
use crate::perfdata::{best_record, KnowledgeBase};

/// `algorithm -> dataset -> best score`.
pub type BestScores = BTreeMap<String, BTreeMap<String, f64>>;

pub fn best_scores(kb: &KnowledgeBase) -> BestScores {
    let mut out = BestScores::new();
    for t in kb.tables() {
        out.entry(t.algorithm().to_string())
            .or_default()
            .insert(t.dataset().to_string(), best_record(t).score);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlgorithmRank {
    pub algorithm: String,
    pub mean_rank: f64,
    /// 95% normal-approximation half width, `1.96 * sd / sqrt(D)`.
    pub ci_halfwidth: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankSummary {
    /// In algorithm-name order.
    pub ranks: Vec<AlgorithmRank>,
    pub datasets_used: usize,
    /// Datasets missing at least one algorithm.
    pub datasets_excluded: usize,
}

impl RankSummary {
    /// Algorithms from best (lowest mean rank) to worst; names break ties.
    pub fn ordered(&self) -> Vec<&AlgorithmRank> {
        let mut v: Vec<_> = self.ranks.iter().collect();
        v.sort_by(|a, b| {
            a.mean_rank
                .total_cmp(&b.mean_rank)
                .then_with(|| a.algorithm.cmp(&b.algorithm))
        });
        v
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

/// Ranks algorithms per dataset (1 = best, ties averaged) over the
/// datasets every algorithm was evaluated on.
pub fn mean_rank(kb: &KnowledgeBase) -> Result<RankSummary> {
    let best = best_scores(kb);
    let algorithms: Vec<&String> = best.keys().collect();
    if algorithms.len() < 2 {
        return Err(Error::NoCommonDataset);
    }
    let all_datasets = kb.datasets();
    let complete: Vec<&String> = all_datasets
        .iter()
        .filter(|d| best.values().all(|m| m.contains_key(*d)))
        .collect();
    if complete.is_empty() {
        return Err(Error::NoCommonDataset);
    }
    let mut per_alg: Vec<Vec<f64>> = vec![Vec::with_capacity(complete.len()); algorithms.len()];
    for d in &complete {
        // rank the negated scores so that the highest score gets rank 1
        let neg: Vec<f64> = algorithms.iter().map(|a| -best[*a][*d]).collect();
        for (k, r) in average_ranks(&neg).into_iter().enumerate() {
            per_alg[k].push(r);
        }
    }
    let d = complete.len() as f64;
    let ranks = algorithms
        .iter()
        .zip(&per_alg)
        .map(|(a, r)| AlgorithmRank {
            algorithm: a.to_string(),
            mean_rank: r.iter().sum::<f64>() / d,
            ci_halfwidth: 1.96 * sample_sd(r) / d.sqrt(),
        })
        .collect();
    Ok(RankSummary {
        ranks,
        datasets_used: complete.len(),
        datasets_excluded: all_datasets.len() - complete.len(),
    })
}

/// Margin within which two best scores count as a tie.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "mode", content = "band", rename_all = "kebab-case")]
pub enum TieBand {
    /// In score units.
    Absolute(f64),
    /// As a fraction of the larger score.
    Relative(f64),
}

impl Default for TieBand {
    fn default() -> Self {
        TieBand::Absolute(0.01)
    }
}

impl TieBand {
    fn width(&self, a: f64, b: f64) -> f64 {
        match *self {
            TieBand::Absolute(w) => w,
            TieBand::Relative(w) => w * a.abs().max(b.abs()),
        }
    }

    pub fn value(&self) -> f64 {
        match *self {
            TieBand::Absolute(w) | TieBand::Relative(w) => w,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Win,
    Tie,
    Loss,
}

/// Absorbs rounding in score differences that sit exactly on the band edge.
const BAND_SLACK: f64 = 1e-12;

/// Outcome of `a` against `b`.
pub fn compare(a: f64, b: f64, band: TieBand) -> Outcome {
    let w = band.width(a, b);
    if (a - b).abs() <= w + BAND_SLACK {
        Outcome::Tie
    } else if a > b {
        Outcome::Win
    } else {
        Outcome::Loss
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WinEntry {
    pub win_pct: f64,
    pub tie_pct: f64,
    pub loss_pct: f64,
    pub n_common: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WinMatrix {
    /// Row/column order: best overall mean rank first.
    pub algorithms: Vec<String>,
    /// `entries[i][j]` compares row `i` against column `j`; `None` on the
    /// diagonal and for pairs without a common dataset.
    pub entries: Vec<Vec<Option<WinEntry>>>,
    pub tie_band: TieBand,
}

pub fn win_matrix(kb: &KnowledgeBase, band: TieBand) -> Result<WinMatrix> {
    if band.value() < 0.0 || !band.value().is_finite() {
        return Err(Error::InvalidParameter("tie band must be non-negative".into()));
    }
    let best = best_scores(kb);
    let algorithms: Vec<String> = match mean_rank(kb) {
        Ok(summary) => summary.ordered().iter().map(|r| r.algorithm.clone()).collect(),
        Err(_) => best.keys().cloned().collect(),
    };
    let entries = algorithms
        .iter()
        .map(|a| {
            algorithms
                .iter()
                .map(|b| {
                    if a == b {
                        return None;
                    }
                    let (sa, sb) = (&best[a], &best[b]);
                    let (mut win, mut tie, mut loss) = (0usize, 0usize, 0usize);
                    for (d, &x) in sa {
                        let Some(&y) = sb.get(d) else { continue };
                        match compare(x, y, band) {
                            Outcome::Win => win += 1,
                            Outcome::Tie => tie += 1,
                            Outcome::Loss => loss += 1,
                        }
                    }
                    let n = win + tie + loss;
                    (n > 0).then(|| {
                        let pct = |k: usize| 100.0 * k as f64 / n as f64;
                        WinEntry {
                            win_pct: pct(win),
                            tie_pct: pct(tie),
                            loss_pct: pct(loss),
                            n_common: n,
                        }
                    })
                })
                .collect()
        })
        .collect();
    Ok(WinMatrix {
        algorithms,
        entries,
        tie_band: band,
    })
}

/// CSV `algorithm,mean_rank,ci_halfwidth`, best first.
pub fn write_rank_csv<W: Write>(summary: &RankSummary, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["algorithm", "mean_rank", "ci_halfwidth"])?;
    for r in summary.ordered() {
        w.write_record([r.algorithm.clone(), r.mean_rank.to_string(), r.ci_halfwidth.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// CSV `algorithm_i,algorithm_j,win_pct,tie_pct,loss_pct,n_common`; pairs
/// without common datasets have empty percentage cells and `n_common = 0`.
pub fn write_win_csv<W: Write>(matrix: &WinMatrix, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["algorithm_i", "algorithm_j", "win_pct", "tie_pct", "loss_pct", "n_common"])?;
    for (i, a) in matrix.algorithms.iter().enumerate() {
        for (j, b) in matrix.algorithms.iter().enumerate() {
            if i == j {
                continue;
            }
            let row = match &matrix.entries[i][j] {
                Some(e) => [
                    a.clone(),
                    b.clone(),
                    e.win_pct.to_string(),
                    e.tie_pct.to_string(),
                    e.loss_pct.to_string(),
                    e.n_common.to_string(),
                ],
                None => [a.clone(), b.clone(), String::new(), String::new(), String::new(), "0".into()],
            };
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}
