//! Rank-based nonparametric tests: Kruskal-Wallis and Dunn's post-hoc
//! comparison against the best-performing method.

use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use super::{Metric, ScoreTable};
use crate::{Error, Result};

/// Average ranks (1-based) of the pooled observations, ties sharing the
/// mean rank of their run. Also returns the tie term `Σ (t³ − t)`.
fn average_ranks(values: &[f64]) -> (Vec<f64>, f64) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("finite scores"));
    let mut ranks = vec![0.0; values.len()];
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let run = (j - i + 1) as f64;
        let mean_rank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = mean_rank;
        }
        tie_term += run * run * run - run;
        i = j + 1;
    }
    (ranks, tie_term)
}

/// Kruskal-Wallis H with tie correction and its chi-squared p-value
/// (k − 1 degrees of freedom).
pub fn kruskal_wallis(groups: &[Vec<f64>]) -> Result<(f64, f64)> {
    if groups.len() < 2 {
        return Err(Error::InvalidInput(
            "kruskal-wallis needs at least 2 groups".into(),
        ));
    }
    if groups.iter().any(Vec::is_empty) {
        return Err(Error::InvalidInput("empty group".into()));
    }
    let pooled: Vec<f64> = groups.iter().flatten().copied().collect();
    if pooled.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("scores must be finite".into()));
    }
    let n = pooled.len() as f64;
    let (ranks, tie_term) = average_ranks(&pooled);

    let mut h = 0.0;
    let mut offset = 0;
    for group in groups {
        let rank_sum: f64 = ranks[offset..offset + group.len()].iter().sum();
        h += rank_sum * rank_sum / group.len() as f64;
        offset += group.len();
    }
    h = 12.0 / (n * (n + 1.0)) * h - 3.0 * (n + 1.0);

    let correction = 1.0 - tie_term / (n * n * n - n);
    if correction <= 0.0 {
        // every observation identical
        return Ok((0.0, 1.0));
    }
    let h = h / correction;
    let df = (groups.len() - 1) as f64;
    let chi2 = ChiSquared::new(df).expect("positive degrees of freedom");
    let p = (1.0 - chi2.cdf(h.max(0.0))).clamp(0.0, 1.0);
    Ok((h.max(0.0), p))
}

/// One method's comparison against the best method.
#[derive(Debug, Clone)]
pub struct DunnEntry {
    pub method: String,
    pub mean_score: f64,
    pub mean_rank: f64,
    pub z: f64,
    /// Two-sided p-value vs. the best method, unadjusted for multiple
    /// comparisons. The best method's own entry has p = 1.
    pub p: f64,
}

/// Dunn's test for one (task, metric): every method compared against the
/// method with the highest mean score.
#[derive(Debug, Clone)]
pub struct DunnReport {
    pub task: String,
    pub metric: Metric,
    pub best_method: String,
    pub entries: Vec<DunnEntry>,
}

/// Runs Dunn's post-hoc test on the per-seed scores of one (task, metric).
///
/// Ranks are pooled over all methods with tie correction; for each method
/// `z = (R̄_best − R̄_m) / SE` with the standard Dunn standard error, and the
/// two-sided p-value comes from the normal distribution.
pub fn dunns_test(table: &ScoreTable, task: &str, metric: Metric) -> Result<DunnReport> {
    let groups = table.groups(task, metric);
    if groups.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "dunn's test needs at least 2 methods for task {task:?}, got {}",
            groups.len()
        )));
    }
    for (method, scores) in &groups {
        if scores.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "method {method:?} has {} seed(s) for task {task:?}; need at least 2",
                scores.len()
            )));
        }
    }

    let pooled: Vec<f64> = groups.iter().flat_map(|(_, s)| s.iter().copied()).collect();
    if pooled.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("scores must be finite".into()));
    }
    let n = pooled.len() as f64;
    let (ranks, tie_term) = average_ranks(&pooled);

    let mut offset = 0;
    let mut stats: Vec<(String, f64, f64, usize)> = Vec::new(); // method, mean score, mean rank, n
    for (method, scores) in &groups {
        let mean_score = scores.iter().sum::<f64>() / scores.len() as f64;
        let mean_rank =
            ranks[offset..offset + scores.len()].iter().sum::<f64>() / scores.len() as f64;
        stats.push((method.clone(), mean_score, mean_rank, scores.len()));
        offset += scores.len();
    }

    let best = stats
        .iter()
        .max_by(|a, b| {
            a.1.partial_cmp(&b.1)
                .expect("finite means")
                .then_with(|| b.0.cmp(&a.0))
        })
        .expect("at least two methods")
        .clone();

    let variance_term = n * (n + 1.0) / 12.0 - tie_term / (12.0 * (n - 1.0));
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut entries = Vec::new();
    for (method, mean_score, mean_rank, group_n) in &stats {
        let (z, p) = if *method == best.0 {
            (0.0, 1.0)
        } else {
            let se = (variance_term * (1.0 / best.3 as f64 + 1.0 / *group_n as f64)).sqrt();
            if se > 0.0 {
                let z = (best.2 - mean_rank) / se;
                let p = (2.0 * (1.0 - normal.cdf(z.abs()))).clamp(0.0, 1.0);
                (z, p)
            } else {
                (0.0, 1.0)
            }
        };
        entries.push(DunnEntry {
            method: method.clone(),
            mean_score: *mean_score,
            mean_rank: *mean_rank,
            z,
            p,
        });
    }

    Ok(DunnReport {
        task: task.to_string(),
        metric,
        best_method: best.0,
        entries,
    })
}
