use serde::{Deserialize, Serialize};

use super::studentized::studentized_range_quantile;
use crate::error::{Error, Result};

/// Errors for `models` (columns) across comparison rows such as (spec, horizon).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorTable {
    pub models: Vec<String>,
    pub row_labels: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McbModel {
    pub model: String,
    pub mean_rank: f64,
    pub lower: f64,
    pub upper: f64,
    /// Interval overlaps the best model's interval.
    pub indistinguishable_from_best: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McbResult {
    pub models: Vec<McbModel>,
    pub critical_distance: f64,
    pub theta: f64,
    pub best: String,
    /// Another model shares the best mean rank; `best` is then the
    /// lexicographically smallest of them.
    pub best_tied: bool,
    /// Pairs of models with identical mean ranks.
    pub ties: Vec<(String, String)>,
    pub alpha: f64,
    pub rows: usize,
}

impl McbResult {
    pub fn mean_rank(&self, model: &str) -> Option<f64> {
        self.models.iter().find(|m| m.model == model).map(|m| m.mean_rank)
    }
}

/// Ranks `1..=n` with ties sharing their average rank.
pub fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && v[order[j + 1]] == v[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Multiple comparisons with the best on mean ranks, `CD = Θ_α·√(M(M+1)/(6D))`.
pub fn mcb_test(table: &ErrorTable, alpha: f64, df: Option<f64>) -> Result<McbResult> {
    let m = table.models.len();
    if m < 2 {
        return Err(Error::NotEnoughModels(m));
    }
    let d = table.rows.len();
    if d < 2 {
        return Err(Error::InsufficientHistory(format!(
            "MCB needs at least two rows, got {d}"
        )));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let mut sums = vec![0.0; m];
    for r in &table.rows {
        if r.len() != m {
            return Err(Error::LengthMismatch {
                left: m,
                right: r.len(),
            });
        }
        if r.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("error table has non-finite entries".into()));
        }
        for (s, k) in sums.iter_mut().zip(average_ranks(r)) {
            *s += k;
        }
    }
    let mean: Vec<f64> = sums.iter().map(|s| s / d as f64).collect();
    let theta = studentized_range_quantile(alpha, m, df);
    let cd = theta * ((m * (m + 1)) as f64 / (6.0 * d as f64)).sqrt();

    let mut best = 0;
    for i in 1..m {
        if mean[i] < mean[best] || (mean[i] == mean[best] && table.models[i] < table.models[best]) {
            best = i;
        }
    }
    let mut ties = Vec::new();
    for i in 0..m {
        for j in i + 1..m {
            if mean[i] == mean[j] {
                ties.push((table.models[i].clone(), table.models[j].clone()));
            }
        }
    }
    let best_tied = (0..m).any(|i| i != best && mean[i] == mean[best]);
    let models = (0..m)
        .map(|i| McbModel {
            model: table.models[i].clone(),
            mean_rank: mean[i],
            lower: mean[i] - cd,
            upper: mean[i] + cd,
            indistinguishable_from_best: mean[i] - cd <= mean[best] + cd,
        })
        .collect();
    Ok(McbResult {
        models,
        critical_distance: cd,
        theta,
        best: table.models[best].clone(),
        best_tied,
        ties,
        alpha,
        rows: d,
    })
}
