//! The knowledge base of evaluated configurations.
//!
//! CSV layout: `algorithm,dataset,score,<hp1>,<hp2>,...`. A file may mix
//! algorithms; every column an algorithm's space does not use must be left
//! empty on that algorithm's rows.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use crate::config_space::{Configuration, ConfigurationSpace, InternalVector, SpaceMap};
use crate::error::{Error, Result, RowRejection};

#[derive(Debug, Clone, PartialEq)]
pub struct PerformanceRecord {
    pub algorithm: String,
    pub dataset: String,
    pub config: Configuration,
    pub score: f64,
    /// `config` in internal coordinates.
    pub internal: InternalVector,
}

#[derive(Debug, Clone)]
pub struct PerformanceTable {
    algorithm: String,
    dataset: String,
    space: Arc<ConfigurationSpace>,
    records: Vec<PerformanceRecord>,
}

impl PerformanceTable {
    /// Builds a table from `(configuration, score)` pairs, validating each
    /// configuration against `space` and each score against `[0, 1]`.
    pub fn new(
        space: Arc<ConfigurationSpace>,
        dataset: &str,
        rows: Vec<(Configuration, f64)>,
    ) -> Result<Self> {
        Self::with_bounds(space, dataset, rows, (0.0, 1.0))
    }

    pub fn with_bounds(
        space: Arc<ConfigurationSpace>,
        dataset: &str,
        rows: Vec<(Configuration, f64)>,
        bounds: (f64, f64),
    ) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::NoRecords);
        }
        let records = rows
            .into_iter()
            .map(|(config, score)| {
                check_score(score, bounds).map_err(Error::InvalidParameter)?;
                Ok(PerformanceRecord {
                    algorithm: space.algorithm().to_string(),
                    dataset: dataset.to_string(),
                    internal: space.to_internal(&config)?,
                    config,
                    score,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            algorithm: space.algorithm().to_string(),
            dataset: dataset.to_string(),
            space,
            records,
        })
    }

    pub fn algorithm(&self) -> &str {
        &self.algorithm
    }

    pub fn dataset(&self) -> &str {
        &self.dataset
    }

    pub fn space(&self) -> &ConfigurationSpace {
        &self.space
    }

    pub fn space_arc(&self) -> Arc<ConfigurationSpace> {
        Arc::clone(&self.space)
    }

    pub fn records(&self) -> &[PerformanceRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn scores(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().map(|r| r.score)
    }
}

/// The record with the highest score; ties go to the earliest record.
pub fn best_record(table: &PerformanceTable) -> &PerformanceRecord {
    let mut best = &table.records[0];
    for r in &table.records[1..] {
        if r.score > best.score {
            best = r;
        }
    }
    best
}

#[derive(Debug, Clone, Default)]
pub struct KnowledgeBase {
    tables: BTreeMap<(String, String), PerformanceTable>,
}

impl KnowledgeBase {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a table. Fails if a table with the same (algorithm, dataset)
    /// key already exists.
    pub fn insert(&mut self, table: PerformanceTable) -> Result<()> {
        let key = (table.algorithm.clone(), table.dataset.clone());
        if self.tables.contains_key(&key) {
            return Err(Error::InvalidParameter(format!(
                "duplicate table for algorithm `{}` dataset `{}`",
                key.0, key.1
            )));
        }
        self.tables.insert(key, table);
        Ok(())
    }

    pub fn table(&self, algorithm: &str, dataset: &str) -> Option<&PerformanceTable> {
        self.tables
            .get(&(algorithm.to_string(), dataset.to_string()))
    }

    /// All tables, ordered by (algorithm, dataset).
    pub fn tables(&self) -> impl Iterator<Item = &PerformanceTable> {
        self.tables.values()
    }

    pub fn len(&self) -> usize {
        self.tables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tables.is_empty()
    }

    pub fn record_count(&self) -> usize {
        self.tables.values().map(|t| t.len()).sum()
    }

    pub fn algorithms(&self) -> Vec<String> {
        let set: BTreeSet<_> = self.tables.keys().map(|(a, _)| a.clone()).collect();
        set.into_iter().collect()
    }

    pub fn datasets(&self) -> Vec<String> {
        let set: BTreeSet<_> = self.tables.keys().map(|(_, d)| d.clone()).collect();
        set.into_iter().collect()
    }

    pub fn space(&self, algorithm: &str) -> Option<&ConfigurationSpace> {
        self.tables
            .values()
            .find(|t| t.algorithm == algorithm)
            .map(|t| t.space())
    }
}

/// Tables matching the optional predicates, ordered by (algorithm, dataset).
pub fn filter<'a>(
    kb: &'a KnowledgeBase,
    algorithm: Option<&str>,
    dataset: Option<&str>,
) -> Vec<&'a PerformanceTable> {
    kb.tables()
        .filter(|t| algorithm.map_or(true, |a| t.algorithm == a))
        .filter(|t| dataset.map_or(true, |d| t.dataset == d))
        .collect()
}

#[derive(Debug, Clone)]
pub struct LoadOptions {
    /// Keep going when rows are rejected instead of failing the load.
    pub lenient: bool,
    /// Inclusive bounds every score must satisfy.
    pub score_bounds: (f64, f64),
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self {
            lenient: false,
            score_bounds: (0.0, 1.0),
        }
    }
}

#[derive(Debug)]
pub struct LoadReport {
    pub kb: KnowledgeBase,
    pub rejections: Vec<RowRejection>,
}

fn check_score(score: f64, (lo, hi): (f64, f64)) -> std::result::Result<(), String> {
    if !score.is_finite() {
        return Err(format!("score {score} is not finite"));
    }
    if score < lo || score > hi {
        return Err(format!("score {score} outside [{lo}, {hi}]"));
    }
    Ok(())
}

pub fn load_knowledge_base(
    path: &Path,
    spaces: &SpaceMap,
    options: &LoadOptions,
) -> Result<LoadReport> {
    read_knowledge_base(std::fs::File::open(path)?, spaces, options)
}

pub fn read_knowledge_base<R: Read>(
    reader: R,
    spaces: &SpaceMap,
    options: &LoadOptions,
) -> Result<LoadReport> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(reader);
    let header: Vec<String> = csv.headers()?.iter().map(|h| h.trim().to_string()).collect();
    if header.len() < 3 || header[0] != "algorithm" || header[1] != "dataset" || header[2] != "score"
    {
        return Err(Error::InvalidParameter(
            "header must start with `algorithm,dataset,score`".into(),
        ));
    }
    let column: HashMap<&str, usize> = header
        .iter()
        .enumerate()
        .skip(3)
        .map(|(i, h)| (h.as_str(), i))
        .collect();

    let arcs: HashMap<&str, Arc<ConfigurationSpace>> = spaces
        .iter()
        .map(|(k, v)| (k.as_str(), Arc::new(v.clone())))
        .collect();

    let mut grouped: BTreeMap<(String, String), Vec<PerformanceRecord>> = BTreeMap::new();
    let mut rejections = Vec::new();

    for (i, row) in csv.records().enumerate() {
        let line = i + 2;
        let row = match row {
            Ok(r) => r,
            Err(e) => {
                rejections.push(RowRejection {
                    line,
                    message: e.to_string(),
                });
                continue;
            }
        };
        match parse_row(&row, &column, &arcs, options) {
            Ok(rec) => grouped
                .entry((rec.algorithm.clone(), rec.dataset.clone()))
                .or_default()
                .push(rec),
            Err(message) => rejections.push(RowRejection { line, message }),
        }
    }

    if !rejections.is_empty() && !options.lenient {
        return Err(Error::RejectedRows(rejections));
    }
    if grouped.is_empty() {
        return Err(Error::NoRecords);
    }

    let mut kb = KnowledgeBase::new();
    for ((algorithm, dataset), records) in grouped {
        let space = Arc::clone(&arcs[algorithm.as_str()]);
        kb.insert(PerformanceTable {
            algorithm,
            dataset,
            space,
            records,
        })?;
    }
    Ok(LoadReport { kb, rejections })
}

fn parse_row(
    row: &csv::StringRecord,
    column: &HashMap<&str, usize>,
    spaces: &HashMap<&str, Arc<ConfigurationSpace>>,
    options: &LoadOptions,
) -> std::result::Result<PerformanceRecord, String> {
    let algorithm = row.get(0).unwrap_or("").trim();
    let dataset = row.get(1).unwrap_or("").trim();
    let space = spaces
        .get(algorithm)
        .ok_or_else(|| format!("unknown algorithm `{algorithm}`"))?;
    if dataset.is_empty() {
        return Err("empty dataset id".into());
    }
    let score_text = row.get(2).unwrap_or("").trim();
    let score: f64 = score_text
        .parse()
        .map_err(|_| format!("score `{score_text}` is not numeric"))?;
    check_score(score, options.score_bounds)?;

    let mut used = vec![false; row.len()];
    used[..3].iter_mut().for_each(|u| *u = true);
    let mut values = Vec::with_capacity(space.len());
    for d in space.domains() {
        let &col = column
            .get(d.name.as_str())
            .ok_or_else(|| format!("missing column `{}`", d.name))?;
        used[col] = true;
        let cell = row.get(col).unwrap_or("").trim();
        if cell.is_empty() {
            return Err(format!("empty value for `{}`", d.name));
        }
        values.push(d.parse_value(cell).map_err(|e| e.to_string())?);
    }
    if let Some((col, _)) = row
        .iter()
        .enumerate()
        .find(|(c, v)| !used[*c] && !v.trim().is_empty())
    {
        return Err(format!(
            "column {} is not a hyperparameter of `{algorithm}` and must be empty",
            col + 1
        ));
    }
    let config = Configuration(values);
    let internal = space.to_internal(&config).map_err(|e| e.to_string())?;
    Ok(PerformanceRecord {
        algorithm: algorithm.to_string(),
        dataset: dataset.to_string(),
        config,
        score,
        internal,
    })
}

/// Writes `kb` in the CSV schema. Hyperparameter columns follow the
/// algorithms' space order, algorithms taken alphabetically.
pub fn write_knowledge_base<W: Write>(kb: &KnowledgeBase, writer: W) -> Result<()> {
    let mut columns: Vec<String> = Vec::new();
    for alg in kb.algorithms() {
        if let Some(space) = kb.space(&alg) {
            for n in space.names() {
                if !columns.iter().any(|c| c == n) {
                    columns.push(n.to_string());
                }
            }
        }
    }
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["algorithm".to_string(), "dataset".into(), "score".into()];
    header.extend(columns.iter().cloned());
    w.write_record(&header)?;
    for table in kb.tables() {
        let positions: Vec<Option<usize>> =
            columns.iter().map(|c| table.space().index_of(c)).collect();
        for r in table.records() {
            let mut fields = vec![r.algorithm.clone(), r.dataset.clone(), r.score.to_string()];
            fields.extend(
                positions
                    .iter()
                    .map(|p| p.map(|i| r.config.0[i].to_string()).unwrap_or_default()),
            );
            w.write_record(&fields)?;
        }
    }
    w.flush()?;
    Ok(())
}
