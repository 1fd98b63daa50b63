//! Tunability, cross-algorithm rankings and signed-rank significance.

pub mod ranking;
pub mod significance;
pub mod tunability;
pub mod wilcoxon;

pub use ranking::{
    best_scores, compare, mean_rank, win_matrix, write_rank_csv, write_win_csv, AlgorithmRank,
    Outcome, RankSummary, TieBand, WinEntry, WinMatrix,
};
pub use significance::{significance_report, write_significance_csv, PairSignificance};
pub use tunability::{
    recommended_configuration, tunability, write_tunability_csv, ReferenceMode, TunabilityResult,
};
pub use wilcoxon::{wilcoxon_signed_rank, PValueMethod, WilcoxonResult};
