//! Score comparison statistics.
//!
//! [`ScoreTable`] holds per-seed metric scores keyed by (task, method, seed,
//! metric). [`rank`] provides the Kruskal-Wallis test and Dunn's post-hoc
//! comparisons against the best method; [`bayes`] fits the additive linear
//! model (task effect + method effect + task noise) by
//! Metropolis-within-Gibbs and summarizes pairwise method contrasts.

pub mod bayes;
pub mod rank;

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use statrs::distribution::Normal;

use crate::{Error, Result};

pub use bayes::{fit_bayes_linear, pairwise_tau, PosteriorSummary, PriorConfig, SamplerConfig};
pub use rank::{dunns_test, kruskal_wallis, DunnEntry, DunnReport};

/// Which translation metric a score was computed with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Metric {
    Bleu,
    Chrf3,
}

impl Metric {
    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Bleu => "BLEU",
            Metric::Chrf3 => "CHRF3",
        }
    }
}

impl std::fmt::Display for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "BLEU" => Ok(Metric::Bleu),
            "CHRF3" | "CHRF" => Ok(Metric::Chrf3),
            other => Err(Error::InvalidInput(format!("unknown metric {other:?}"))),
        }
    }
}

/// One observed score.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRecord {
    pub task: String,
    pub method: String,
    pub seed: u64,
    pub metric: Metric,
    pub score: f64,
}

/// A collection of scores with unique (task, method, seed, metric) keys.
#[derive(Debug, Clone, Default)]
pub struct ScoreTable {
    records: Vec<ScoreRecord>,
    keys: HashSet<(String, String, u64, Metric)>,
}

impl ScoreTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, record: ScoreRecord) -> Result<()> {
        if !record.score.is_finite() {
            return Err(Error::InvalidInput(format!(
                "non-finite score for ({}, {}, seed {})",
                record.task, record.method, record.seed
            )));
        }
        let key = (
            record.task.clone(),
            record.method.clone(),
            record.seed,
            record.metric,
        );
        if !self.keys.insert(key) {
            return Err(Error::InvalidInput(format!(
                "duplicate record ({}, {}, seed {}, {})",
                record.task, record.method, record.seed, record.metric
            )));
        }
        self.records.push(record);
        Ok(())
    }

    pub fn records(&self) -> &[ScoreRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Sorted distinct task labels carrying the given metric.
    pub fn tasks(&self, metric: Metric) -> Vec<String> {
        let set: BTreeSet<&str> = self
            .records
            .iter()
            .filter(|r| r.metric == metric)
            .map(|r| r.task.as_str())
            .collect();
        set.into_iter().map(str::to_string).collect()
    }

    /// Sorted distinct method labels carrying the given metric.
    pub fn methods(&self, metric: Metric) -> Vec<String> {
        let set: BTreeSet<&str> = self
            .records
            .iter()
            .filter(|r| r.metric == metric)
            .map(|r| r.method.as_str())
            .collect();
        set.into_iter().map(str::to_string).collect()
    }

    /// Scores of one (task, method, metric) cell in ascending seed order.
    pub fn cell(&self, task: &str, method: &str, metric: Metric) -> Vec<f64> {
        let mut rows: Vec<(u64, f64)> = self
            .records
            .iter()
            .filter(|r| r.task == task && r.method == method && r.metric == metric)
            .map(|r| (r.seed, r.score))
            .collect();
        rows.sort_by_key(|&(seed, _)| seed);
        rows.into_iter().map(|(_, s)| s).collect()
    }

    /// Per-method score groups for one (task, metric), methods sorted.
    pub fn groups(&self, task: &str, metric: Metric) -> Vec<(String, Vec<f64>)> {
        let mut out = Vec::new();
        for method in self.methods(metric) {
            let scores = self.cell(task, &method, metric);
            if !scores.is_empty() {
                out.push((method, scores));
            }
        }
        out
    }

    /// Serializes to the `task,method,seed,metric,score` format.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("task,method,seed,metric,score\n");
        for r in &self.records {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                r.task, r.method, r.seed, r.metric, r.score
            );
        }
        out
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv_string()).map_err(|e| Error::io(path, e))
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, header)) if header.trim() == "task,method,seed,metric,score" => {}
            _ => {
                return Err(Error::parse(
                    path,
                    1,
                    "expected header `task,method,seed,metric,score`",
                ))
            }
        }
        let mut table = ScoreTable::new();
        for (idx, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 5 {
                return Err(Error::parse(
                    path,
                    idx + 1,
                    format!("expected 5 comma-separated fields, got {}", fields.len()),
                ));
            }
            let seed: u64 = fields[2]
                .trim()
                .parse()
                .map_err(|_| Error::parse(path, idx + 1, format!("bad seed {:?}", fields[2])))?;
            let metric: Metric = fields[3]
                .trim()
                .parse()
                .map_err(|e: Error| Error::parse(path, idx + 1, e.to_string()))?;
            let score: f64 = fields[4]
                .trim()
                .parse()
                .map_err(|_| Error::parse(path, idx + 1, format!("bad score {:?}", fields[4])))?;
            table
                .push(ScoreRecord {
                    task: fields[0].trim().to_string(),
                    method: fields[1].trim().to_string(),
                    seed,
                    metric,
                    score,
                })
                .map_err(|e| Error::parse(path, idx + 1, e.to_string()))?;
        }
        Ok(table)
    }
}

/// Published mean/sd aggregate for one (task, method, metric) cell.
#[derive(Debug, Clone)]
pub struct SummaryCell {
    pub task: String,
    pub method: String,
    pub metric: Metric,
    pub mean: f64,
    pub sd: f64,
}

/// Draws `seeds_per_cell` scores per cell from Normal(mean, sd), seeded.
/// This reconstructs plausible per-seed tables from published aggregates.
pub fn resample_from_summary(
    cells: &[SummaryCell],
    seeds_per_cell: usize,
    seed: u64,
) -> Result<ScoreTable> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut table = ScoreTable::new();
    for cell in cells {
        let dist = Normal::new(cell.mean, cell.sd)
            .map_err(|e| Error::InvalidInput(format!("bad summary cell: {e}")))?;
        for s in 0..seeds_per_cell {
            table.push(ScoreRecord {
                task: cell.task.clone(),
                method: cell.method.clone(),
                seed: s as u64,
                metric: cell.metric,
                score: rand::Rng::sample(&mut rng, dist),
            })?;
        }
    }
    Ok(table)
}

/// Counts how often each method is the best or statistically tied with the
/// best (p > alpha) across the given Dunn reports.
pub fn best_count_report(reports: &[DunnReport], alpha: f64) -> BTreeMap<(String, Metric), usize> {
    let mut counts: BTreeMap<(String, Metric), usize> = BTreeMap::new();
    for report in reports {
        for entry in &report.entries {
            let key = (entry.method.clone(), report.metric);
            let counted = entry.method == report.best_method || entry.p > alpha;
            *counts.entry(key).or_insert(0) += usize::from(counted);
        }
    }
    counts
}
