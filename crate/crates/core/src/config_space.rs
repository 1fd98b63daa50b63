//! Hyperparameter domains, configuration spaces and the unit-cube encoding
//! shared by the surrogate trees and the density estimates.
//!
//! Every domain has an *internal* coordinate. Numeric domains map affinely
//! onto `[0, 1]` (after taking logs for `continuous-log`), categorical and
//! boolean domains map to their category index. Uniform sampling in the
//! external domain is uniform in internal coordinates, which is the measure
//! every integral in this crate is taken against.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Internal (unit-cube / category-index) representation of a configuration.
pub type InternalVector = Vec<f64>;

/// Spaces keyed by algorithm name.
pub type SpaceMap = BTreeMap<String, ConfigurationSpace>;

/// Slack allowed when checking numeric values against their bounds, in
/// internal units.
const BOUND_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DomainKind {
    Continuous,
    ContinuousLog,
    Integer,
    Categorical,
    Boolean,
}

impl DomainKind {
    pub fn is_numeric(self) -> bool {
        matches!(
            self,
            DomainKind::Continuous | DomainKind::ContinuousLog | DomainKind::Integer
        )
    }
}

impl fmt::Display for DomainKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            DomainKind::Continuous => "continuous",
            DomainKind::ContinuousLog => "continuous-log",
            DomainKind::Integer => "integer",
            DomainKind::Categorical => "categorical",
            DomainKind::Boolean => "boolean",
        };
        f.write_str(s)
    }
}

/// The value of one hyperparameter in external units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Integer(i64),
    Real(f64),
    Label(String),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Integer(v) => write!(f, "{v}"),
            Value::Real(v) => write!(f, "{v}"),
            Value::Label(v) => f.write_str(v),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperparameterDomain {
    pub name: String,
    pub kind: DomainKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub categories: Vec<String>,
}

impl HyperparameterDomain {
    fn numeric(name: &str, kind: DomainKind, lower: f64, upper: f64) -> Self {
        Self {
            name: name.to_string(),
            kind,
            lower: Some(lower),
            upper: Some(upper),
            categories: Vec::new(),
        }
    }

    pub fn continuous(name: &str, lower: f64, upper: f64) -> Self {
        Self::numeric(name, DomainKind::Continuous, lower, upper)
    }

    pub fn continuous_log(name: &str, lower: f64, upper: f64) -> Self {
        Self::numeric(name, DomainKind::ContinuousLog, lower, upper)
    }

    pub fn integer(name: &str, lower: i64, upper: i64) -> Self {
        Self::numeric(name, DomainKind::Integer, lower as f64, upper as f64)
    }

    pub fn categorical<S: AsRef<str>>(name: &str, categories: &[S]) -> Self {
        Self {
            name: name.to_string(),
            kind: DomainKind::Categorical,
            lower: None,
            upper: None,
            categories: categories.iter().map(|c| c.as_ref().to_string()).collect(),
        }
    }

    /// A two-label domain with labels `true` and `false`.
    pub fn boolean(name: &str) -> Self {
        Self {
            kind: DomainKind::Boolean,
            ..Self::categorical(name, &["true", "false"])
        }
    }

    /// Checks the type invariants and fills in the default boolean labels.
    pub fn validate(&mut self) -> Result<()> {
        let bad = |reason: &str| Error::InvalidDomain {
            name: self.name.clone(),
            reason: reason.to_string(),
        };
        if self.name.trim().is_empty() {
            return Err(bad("empty name"));
        }
        match self.kind {
            DomainKind::Continuous | DomainKind::ContinuousLog | DomainKind::Integer => {
                let (lo, hi) = match (self.lower, self.upper) {
                    (Some(lo), Some(hi)) => (lo, hi),
                    _ => return Err(bad("numeric domain needs lower and upper bounds")),
                };
                if !lo.is_finite() || !hi.is_finite() {
                    return Err(bad("bounds must be finite"));
                }
                if self.kind == DomainKind::Integer {
                    if lo.fract() != 0.0 || hi.fract() != 0.0 {
                        return Err(bad("integer bounds must be whole numbers"));
                    }
                    if lo > hi {
                        return Err(bad("lower bound exceeds upper bound"));
                    }
                } else if lo >= hi {
                    return Err(bad("lower bound must be strictly below upper bound"));
                }
                if self.kind == DomainKind::ContinuousLog && lo <= 0.0 {
                    return Err(bad("log-scaled domain needs a positive lower bound"));
                }
                if !self.categories.is_empty() {
                    return Err(bad("numeric domain cannot list categories"));
                }
            }
            DomainKind::Categorical | DomainKind::Boolean => {
                if self.kind == DomainKind::Boolean && self.categories.is_empty() {
                    self.categories = vec!["true".into(), "false".into()];
                }
                if self.categories.is_empty() {
                    return Err(bad("no categories"));
                }
                if self.kind == DomainKind::Boolean && self.categories.len() != 2 {
                    return Err(bad("boolean domain needs exactly two labels"));
                }
                if self.categories.len() > 64 {
                    return Err(bad("more than 64 categories"));
                }
                let mut seen = HashSet::new();
                if !self.categories.iter().all(|c| seen.insert(c.as_str())) {
                    return Err(bad("duplicate category label"));
                }
                if self.lower.is_some() || self.upper.is_some() {
                    return Err(bad("categorical domain cannot have bounds"));
                }
            }
        }
        Ok(())
    }

    pub fn is_numeric(&self) -> bool {
        self.kind.is_numeric()
    }

    /// Number of categories, or `None` for numeric kinds.
    pub fn cardinality(&self) -> Option<usize> {
        (!self.is_numeric()).then_some(self.categories.len())
    }

    fn bounds(&self) -> (f64, f64) {
        (self.lower.unwrap_or(0.0), self.upper.unwrap_or(1.0))
    }

    /// Bounds in the space where the affine map to `[0, 1]` applies.
    fn scaled_bounds(&self) -> (f64, f64) {
        let (lo, hi) = self.bounds();
        match self.kind {
            DomainKind::ContinuousLog => (lo.ln(), hi.ln()),
            _ => (lo, hi),
        }
    }

    fn out_of_domain(&self, value: impl fmt::Display) -> Error {
        Error::OutOfDomain {
            name: self.name.clone(),
            value: value.to_string(),
        }
    }

    pub fn category_index(&self, label: &str) -> Option<usize> {
        let exact = self.categories.iter().position(|c| c == label);
        if exact.is_some() || self.kind != DomainKind::Boolean {
            return exact;
        }
        self.categories
            .iter()
            .position(|c| c.eq_ignore_ascii_case(label))
    }

    fn numeric_to_internal(&self, v: f64) -> Result<f64> {
        if !v.is_finite() {
            return Err(self.out_of_domain(v));
        }
        let (lo, hi) = self.scaled_bounds();
        let x = match self.kind {
            DomainKind::ContinuousLog if v <= 0.0 => return Err(self.out_of_domain(v)),
            DomainKind::ContinuousLog => v.ln(),
            _ => v,
        };
        if hi == lo {
            // single-point integer domain
            return if (x - lo).abs() <= BOUND_SLACK {
                Ok(0.0)
            } else {
                Err(self.out_of_domain(v))
            };
        }
        let u = (x - lo) / (hi - lo);
        if !(-BOUND_SLACK..=1.0 + BOUND_SLACK).contains(&u) {
            return Err(self.out_of_domain(v));
        }
        Ok(u.clamp(0.0, 1.0))
    }

    /// Maps an external value to its internal coordinate.
    pub fn to_internal(&self, value: &Value) -> Result<f64> {
        match (self.kind, value) {
            (DomainKind::Integer, Value::Integer(v)) => self.numeric_to_internal(*v as f64),
            (DomainKind::Integer, Value::Real(v)) if v.fract() == 0.0 => {
                self.numeric_to_internal(*v)
            }
            (DomainKind::Continuous | DomainKind::ContinuousLog, Value::Real(v)) => {
                self.numeric_to_internal(*v)
            }
            (DomainKind::Continuous | DomainKind::ContinuousLog, Value::Integer(v)) => {
                self.numeric_to_internal(*v as f64)
            }
            (DomainKind::Categorical | DomainKind::Boolean, Value::Label(l)) => self
                .category_index(l)
                .map(|i| i as f64)
                .ok_or_else(|| self.out_of_domain(l)),
            (_, v) => Err(self.out_of_domain(v)),
        }
    }

    /// Maps an internal coordinate back to external units. Numeric inputs
    /// are clamped to `[0, 1]`; integers round to the nearest member.
    pub fn from_internal(&self, u: f64) -> Value {
        match self.kind {
            DomainKind::Categorical | DomainKind::Boolean => {
                let last = self.categories.len() - 1;
                let idx = (u.round().max(0.0) as usize).min(last);
                Value::Label(self.categories[idx].clone())
            }
            DomainKind::Continuous => {
                let (lo, hi) = self.bounds();
                if u <= 0.0 {
                    Value::Real(lo)
                } else if u >= 1.0 {
                    Value::Real(hi)
                } else {
                    Value::Real(lo + u * (hi - lo))
                }
            }
            DomainKind::ContinuousLog => {
                let (lo, hi) = self.bounds();
                let (llo, lhi) = self.scaled_bounds();
                if u <= 0.0 {
                    Value::Real(lo)
                } else if u >= 1.0 {
                    Value::Real(hi)
                } else {
                    Value::Real((llo + u * (lhi - llo)).exp().clamp(lo, hi))
                }
            }
            DomainKind::Integer => {
                let (lo, hi) = self.bounds();
                let v = (lo + u.clamp(0.0, 1.0) * (hi - lo)).round().clamp(lo, hi);
                Value::Integer(v as i64)
            }
        }
    }

    /// Parses a textual value (as found in a CSV cell) for this domain.
    pub fn parse_value(&self, text: &str) -> Result<Value> {
        let text = text.trim();
        let value = match self.kind {
            DomainKind::Categorical | DomainKind::Boolean => Value::Label(text.to_string()),
            DomainKind::Integer => {
                if let Ok(v) = text.parse::<i64>() {
                    Value::Integer(v)
                } else {
                    let v: f64 = text.parse().map_err(|_| self.out_of_domain(text))?;
                    if v.fract() != 0.0 || !v.is_finite() {
                        return Err(self.out_of_domain(text));
                    }
                    Value::Integer(v as i64)
                }
            }
            DomainKind::Continuous | DomainKind::ContinuousLog => {
                Value::Real(text.parse().map_err(|_| self.out_of_domain(text))?)
            }
        };
        self.to_internal(&value)?;
        Ok(self.canonical(value))
    }

    /// Normalizes a valid value to the variant this domain stores.
    fn canonical(&self, value: Value) -> Value {
        match (self.kind, value) {
            (DomainKind::Integer, Value::Real(v)) => Value::Integer(v as i64),
            (DomainKind::Continuous | DomainKind::ContinuousLog, Value::Integer(v)) => {
                Value::Real(v as f64)
            }
            (DomainKind::Categorical | DomainKind::Boolean, Value::Label(l)) => {
                match self.category_index(&l) {
                    Some(i) => Value::Label(self.categories[i].clone()),
                    None => Value::Label(l),
                }
            }
            (_, v) => v,
        }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Value {
        let (lo, hi) = self.bounds();
        match self.kind {
            DomainKind::Continuous => Value::Real(rng.gen_range(lo..=hi)),
            DomainKind::ContinuousLog => {
                let (llo, lhi) = self.scaled_bounds();
                Value::Real(rng.gen_range(llo..=lhi).exp().clamp(lo, hi))
            }
            DomainKind::Integer => Value::Integer(rng.gen_range(lo as i64..=hi as i64)),
            DomainKind::Categorical | DomainKind::Boolean => {
                let idx = rng.gen_range(0..self.categories.len());
                Value::Label(self.categories[idx].clone())
            }
        }
    }
}

/// One value per domain, in domain order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Configuration(pub Vec<Value>);

impl Configuration {
    pub fn values(&self) -> &[Value] {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpace", into = "RawSpace")]
pub struct ConfigurationSpace {
    algorithm: String,
    domains: Vec<HyperparameterDomain>,
}

#[derive(Serialize, Deserialize)]
struct RawSpace {
    algorithm: String,
    domains: Vec<HyperparameterDomain>,
}

impl TryFrom<RawSpace> for ConfigurationSpace {
    type Error = Error;

    fn try_from(raw: RawSpace) -> Result<Self> {
        ConfigurationSpace::new(&raw.algorithm, raw.domains)
    }
}

impl From<ConfigurationSpace> for RawSpace {
    fn from(space: ConfigurationSpace) -> Self {
        RawSpace {
            algorithm: space.algorithm,
            domains: space.domains,
        }
    }
}

impl ConfigurationSpace {
    /// Validates `domains` and fixes their order.
    pub fn new(algorithm: &str, mut domains: Vec<HyperparameterDomain>) -> Result<Self> {
        if domains.is_empty() {
            return Err(Error::EmptySpace(algorithm.to_string()));
        }
        let mut names = HashSet::new();
        for d in &mut domains {
            d.validate()?;
            if !names.insert(d.name.clone()) {
                return Err(Error::DuplicateHyperparameter(d.name.clone()));
            }
        }
        Ok(Self {
            algorithm: algorithm.to_string(),
            domains,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("space serializes")
    }

    pub fn algorithm(&self) -> &str {
        &self.algorithm
    }

    pub fn domains(&self) -> &[HyperparameterDomain] {
        &self.domains
    }

    pub fn domain(&self, index: usize) -> &HyperparameterDomain {
        &self.domains[index]
    }

    pub fn len(&self) -> usize {
        self.domains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.domains.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.domains.iter().position(|d| d.name == name)
    }

    pub fn require_index(&self, name: &str) -> Result<usize> {
        self.index_of(name)
            .ok_or_else(|| Error::UnknownHyperparameter {
                algorithm: self.algorithm.clone(),
                name: name.to_string(),
            })
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.domains.iter().map(|d| d.name.as_str())
    }

    /// Draws `count` configurations with every hyperparameter sampled
    /// independently and uniformly in internal coordinates.
    pub fn sample_uniform(&self, count: usize, seed: u64) -> Vec<Configuration> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| Configuration(self.domains.iter().map(|d| d.sample(&mut rng)).collect()))
            .collect()
    }

    pub fn validate(&self, config: &Configuration) -> Result<()> {
        self.to_internal(config).map(|_| ())
    }

    pub fn to_internal(&self, config: &Configuration) -> Result<InternalVector> {
        if config.0.len() != self.domains.len() {
            return Err(Error::DimensionMismatch {
                algorithm: self.algorithm.clone(),
                expected: self.domains.len(),
                got: config.0.len(),
            });
        }
        self.domains
            .iter()
            .zip(&config.0)
            .map(|(d, v)| d.to_internal(v))
            .collect()
    }

    pub fn from_internal(&self, internal: &[f64]) -> Configuration {
        Configuration(
            self.domains
                .iter()
                .zip(internal)
                .map(|(d, &u)| d.from_internal(u))
                .collect(),
        )
    }
}

/// A sorted set of domain positions.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct HyperparameterSubset(Vec<usize>);

impl HyperparameterSubset {
    pub fn new(indices: Vec<usize>, n: usize) -> Result<Self> {
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidSubset(format!(
                "indices {indices:?} are not strictly increasing"
            )));
        }
        if let Some(&i) = indices.iter().find(|&&i| i >= n) {
            return Err(Error::InvalidSubset(format!("index {i} out of range for {n} dims")));
        }
        if n > 64 {
            return Err(Error::InvalidSubset("more than 64 dimensions".into()));
        }
        Ok(Self(indices))
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn from_mask(mask: u64) -> Self {
        Self((0..64).filter(|i| mask >> i & 1 == 1).collect())
    }

    pub fn mask(&self) -> u64 {
        self.0.iter().fold(0, |m, &i| m | 1 << i)
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Resolves hyperparameter names against `space`.
    pub fn from_names<S: AsRef<str>>(space: &ConfigurationSpace, names: &[S]) -> Result<Self> {
        let mut idx = names
            .iter()
            .map(|n| space.require_index(n.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        idx.sort_unstable();
        let before = idx.len();
        idx.dedup();
        if idx.len() != before {
            return Err(Error::InvalidSubset("repeated hyperparameter".into()));
        }
        Self::new(idx, space.len())
    }

    /// `+`-joined hyperparameter names, e.g. `kernel+gamma`.
    pub fn render(&self, space: &ConfigurationSpace) -> String {
        self.0
            .iter()
            .map(|&i| space.domain(i).name.as_str())
            .collect::<Vec<_>>()
            .join("+")
    }

    /// Nonempty subsets of `{0..n}` with at most `max_order` members,
    /// ordered by size and then lexicographically.
    pub fn lattice(n: usize, max_order: usize) -> Vec<Self> {
        let mut out = Vec::new();
        let mut current = Vec::new();
        for size in 1..=max_order.min(n) {
            combinations(n, size, 0, &mut current, &mut out);
        }
        out
    }
}

fn combinations(
    n: usize,
    size: usize,
    start: usize,
    current: &mut Vec<usize>,
    out: &mut Vec<HyperparameterSubset>,
) {
    if current.len() == size {
        out.push(HyperparameterSubset(current.clone()));
        return;
    }
    for i in start..n {
        current.push(i);
        combinations(n, size, i + 1, current, out);
        current.pop();
    }
}

const BUILTIN_SPACES: [&str; 6] = [
    include_str!("../spaces/svm.json"),
    include_str!("../spaces/random_forest.json"),
    include_str!("../spaces/adaboost.json"),
    include_str!("../spaces/extra_trees.json"),
    include_str!("../spaces/decision_tree.json"),
    include_str!("../spaces/gradient_boosting.json"),
];

/// The six bundled classifier spaces.
pub fn builtin_spaces() -> SpaceMap {
    BUILTIN_SPACES
        .iter()
        .map(|text| {
            let space = ConfigurationSpace::from_json(text).expect("bundled space is valid");
            (space.algorithm().to_string(), space)
        })
        .collect()
}

pub fn builtin_space(algorithm: &str) -> Result<ConfigurationSpace> {
    builtin_spaces()
        .remove(algorithm)
        .ok_or_else(|| Error::UnknownSpace(algorithm.to_string()))
}

/// Loads every `*.json` space in `dir`, keyed by algorithm.
pub fn load_space_dir(dir: &Path) -> Result<SpaceMap> {
    let mut paths: Vec<_> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    paths.sort();
    let mut spaces = SpaceMap::new();
    for p in paths {
        let space = ConfigurationSpace::from_file(&p)?;
        spaces.insert(space.algorithm().to_string(), space);
    }
    Ok(spaces)
}
