//! Pairwise Wilcoxon comparisons between importance fractions of
//! hyperparameter subsets across datasets.

use std::io::Write;

use serde::Serialize;

use crate::analytics::wilcoxon::wilcoxon_signed_rank;
use crate::error::Result;
use crate::fanova::DatasetImportance;

pub const SIGNIFICANCE_LEVEL: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairSignificance {
    pub subset_a: String,
    pub subset_b: String,
    /// Datasets reporting both subsets.
    pub n_datasets: usize,
    pub statistic: f64,
    pub p_value: f64,
    pub significant: bool,
    /// Fewer than two common datasets.
    pub insufficient_data: bool,
    /// The subset with the larger signed-rank sum, if they differ at all.
    pub more_important: Option<String>,
}

/// Wilcoxon p-values for every unordered pair of `subsets` (names as
/// rendered in the reports), restricted to datasets reporting both.
pub fn significance_report(rows: &[DatasetImportance], subsets: &[String]) -> Vec<PairSignificance> {
    let mut out = Vec::new();
    for (i, a) in subsets.iter().enumerate() {
        for b in &subsets[i + 1..] {
            let (x, y): (Vec<f64>, Vec<f64>) = rows
                .iter()
                .filter_map(|r| {
                    let fa = r.report.entry(a)?.fraction_mean;
                    let fb = r.report.entry(b)?.fraction_mean;
                    Some((fa, fb))
                })
                .unzip();
            let n = x.len();
            let base = PairSignificance {
                subset_a: a.clone(),
                subset_b: b.clone(),
                n_datasets: n,
                statistic: 0.0,
                p_value: 1.0,
                significant: false,
                insufficient_data: n < 2,
                more_important: None,
            };
            if n < 2 {
                out.push(base);
                continue;
            }
            let w = wilcoxon_signed_rank(&x, &y).expect("paired vectors of equal nonzero length");
            let more_important = if w.w_plus > w.w_minus {
                Some(a.clone())
            } else if w.w_minus > w.w_plus {
                Some(b.clone())
            } else {
                None
            };
            out.push(PairSignificance {
                statistic: w.statistic,
                p_value: w.p_value,
                significant: w.p_value < SIGNIFICANCE_LEVEL,
                more_important,
                ..base
            });
        }
    }
    out
}

/// CSV `subset_a,subset_b,n_datasets,statistic,p_value,significant,more_important`.
pub fn write_significance_csv<W: Write>(pairs: &[PairSignificance], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "subset_a",
        "subset_b",
        "n_datasets",
        "statistic",
        "p_value",
        "significant",
        "more_important",
    ])?;
    for p in pairs {
        let significant = if p.insufficient_data {
            "insufficient-data".to_string()
        } else {
            p.significant.to_string()
        };
        w.write_record([
            p.subset_a.clone(),
            p.subset_b.clone(),
            p.n_datasets.to_string(),
            p.statistic.to_string(),
            p.p_value.to_string(),
            significant,
            p.more_important.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
