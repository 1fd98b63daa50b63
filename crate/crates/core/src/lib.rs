//! Hyperparameter importance from empirical performance data.
//!
//! The pipeline: load a knowledge base of evaluated configurations
//! ([`perfdata`]), fit a random-forest surrogate per (algorithm, dataset)
//! table ([`forest`]), and decompose each tree's variance into
//! contributions of hyperparameter subsets ([`fanova`]). The same data
//! feeds priors over good values ([`priors`]) and cross-algorithm
//! comparisons ([`analytics`]). [`synthetic`] provides ground-truth
//! functions and planted knowledge bases for verification.

pub mod analytics;
pub mod config_space;
pub mod error;
pub mod fanova;
pub mod forest;
pub mod perfdata;
pub mod priors;
pub mod synthetic;

pub use config_space::{
    builtin_space, builtin_spaces, Configuration, ConfigurationSpace, DomainKind,
    HyperparameterDomain, HyperparameterSubset, SpaceMap, Value,
};
pub use error::{Error, Result};
pub use fanova::{
    importance_table, variance_decomposition, DatasetImportance, ImportanceReport,
    SubsetImportance,
};
pub use forest::{fit_forest, Forest, ForestParams, RegressionTree};
pub use perfdata::{KnowledgeBase, PerformanceRecord, PerformanceTable};
