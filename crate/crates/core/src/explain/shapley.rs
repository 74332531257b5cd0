use rand::seq::{index, SliceRandom};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{DesignMatrix, Predictor};
use crate::rng::{mix, substream};

pub const MAX_EXACT_FEATURES: usize = 15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AttributionMethod {
    Exact,
    MonteCarlo { samples: usize },
}

/// Shapley decomposition of one prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attribution {
    pub row_id: usize,
    pub features: Vec<String>,
    /// Feature values of the explained row.
    pub x: Vec<f64>,
    /// Mean prediction over the background.
    pub base_value: f64,
    pub prediction: f64,
    pub phi: Vec<f64>,
    /// Monte-Carlo standard errors; `None` for exact enumeration.
    pub se: Option<Vec<f64>>,
    pub method: AttributionMethod,
    /// `prediction − base_value − Σφ`.
    pub efficiency_gap: f64,
}

impl Attribution {
    fn new(
        row_id: usize,
        d: &DesignMatrix,
        base_value: f64,
        prediction: f64,
        phi: Vec<f64>,
        se: Option<Vec<f64>>,
        method: AttributionMethod,
    ) -> Self {
        let efficiency_gap = prediction - base_value - phi.iter().sum::<f64>();
        Self {
            row_id,
            features: d.feature_names.clone(),
            x: d.rows[row_id].clone(),
            base_value,
            prediction,
            phi,
            se,
            method,
            efficiency_gap,
        }
    }

    pub fn phi_of(&self, feature: &str) -> Option<f64> {
        self.features.iter().position(|f| f == feature).map(|k| self.phi[k])
    }
}

/// Up to `cap` rows of `d`, subsampled without replacement when `d` is larger.
pub fn background_rows(d: &DesignMatrix, cap: usize, seed: u64) -> Vec<Vec<f64>> {
    if d.n() <= cap {
        return d.rows.clone();
    }
    let mut idx = index::sample(&mut substream(seed, u64::MAX), d.n(), cap).into_vec();
    idx.sort_unstable();
    idx.into_iter().map(|i| d.rows[i].clone()).collect()
}

fn check(d: &DesignMatrix, row: usize, background: &[Vec<f64>]) -> Result<()> {
    if background.is_empty() {
        return Err(Error::InvalidArgument("background set is empty".into()));
    }
    if row >= d.n() {
        return Err(Error::InvalidArgument(format!(
            "row {row} is outside a design of {} rows",
            d.n()
        )));
    }
    if let Some(b) = background.iter().find(|b| b.len() != d.p()) {
        return Err(Error::LengthMismatch {
            left: d.p(),
            right: b.len(),
        });
    }
    Ok(())
}

fn mean_prediction(model: &dyn Predictor, background: &[Vec<f64>]) -> f64 {
    background.iter().map(|b| model.predict_row(b)).sum::<f64>() / background.len() as f64
}

/// Exact interventional Shapley values by enumerating all `2ⁿ` coalitions.
pub fn shapley_exact(
    model: &dyn Predictor,
    d: &DesignMatrix,
    row: usize,
    background: &[Vec<f64>],
) -> Result<Attribution> {
    check(d, row, background)?;
    let n = d.p();
    if n > MAX_EXACT_FEATURES {
        return Err(Error::TooManyFeaturesForExact {
            got: n,
            max: MAX_EXACT_FEATURES,
        });
    }
    let x = &d.rows[row];
    let prediction = model.predict_row(x);
    let full = (1usize << n) - 1;
    let v: Vec<f64> = (0..=full)
        .into_par_iter()
        .map(|mask| {
            let mut z = vec![0.0; n];
            let s: f64 = background
                .iter()
                .map(|b| {
                    for k in 0..n {
                        z[k] = if mask >> k & 1 == 1 { x[k] } else { b[k] };
                    }
                    model.predict_row(&z)
                })
                .sum();
            s / background.len() as f64
        })
        .collect();
    // w[s] = s!(n−s−1)!/n! = 1 / (n·C(n−1, s))
    let mut w = vec![0.0; n];
    let mut binom = 1.0;
    for (s, ws) in w.iter_mut().enumerate() {
        *ws = 1.0 / (n as f64 * binom);
        binom = binom * (n - 1 - s) as f64 / (s + 1) as f64;
    }
    let mut phi = vec![0.0; n];
    for (k, pk) in phi.iter_mut().enumerate() {
        let bit = 1usize << k;
        for mask in 0..=full {
            if mask & bit == 0 {
                *pk += w[mask.count_ones() as usize] * (v[mask | bit] - v[mask]);
            }
        }
    }
    Ok(Attribution::new(
        row,
        d,
        v[0],
        prediction,
        phi,
        None,
        AttributionMethod::Exact,
    ))
}

/// Permutation-sampling estimate: each draw pairs a random feature ordering
/// with a random background row and walks the ordering, switching features
/// to the explained values one at a time.
///
/// Draw `j` for row `i` uses `substream(seed, mix(i, j))`.
pub fn shapley_sampled(
    model: &dyn Predictor,
    d: &DesignMatrix,
    row: usize,
    background: &[Vec<f64>],
    samples: usize,
    seed: u64,
) -> Result<Attribution> {
    check(d, row, background)?;
    if samples < 100 {
        return Err(Error::InvalidArgument(format!(
            "at least 100 samples are required, got {samples}"
        )));
    }
    let n = d.p();
    let x = &d.rows[row];
    let draws: Vec<Vec<f64>> = (0..samples)
        .into_par_iter()
        .map(|j| {
            let mut rng = substream(seed, mix(row as u64, j as u64));
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut rng);
            let mut z = background[rng.gen_range(0..background.len())].clone();
            let mut prev = model.predict_row(&z);
            let mut c = vec![0.0; n];
            for &k in &order {
                z[k] = x[k];
                let cur = model.predict_row(&z);
                c[k] = cur - prev;
                prev = cur;
            }
            c
        })
        .collect();
    let m = samples as f64;
    let phi: Vec<f64> = (0..n).map(|k| draws.iter().map(|c| c[k]).sum::<f64>() / m).collect();
    let se = (0..n)
        .map(|k| {
            let ss: f64 = draws.iter().map(|c| (c[k] - phi[k]).powi(2)).sum();
            (ss / (m - 1.0)).sqrt() / m.sqrt()
        })
        .collect();
    Ok(Attribution::new(
        row,
        d,
        mean_prediction(model, background),
        model.predict_row(x),
        phi,
        Some(se),
        AttributionMethod::MonteCarlo { samples },
    ))
}

/// Attributions for several rows, computed in parallel.
pub fn shapley_rows(
    model: &dyn Predictor,
    d: &DesignMatrix,
    rows: &[usize],
    background: &[Vec<f64>],
    method: AttributionMethod,
    seed: u64,
) -> Result<Vec<Attribution>> {
    rows.par_iter()
        .map(|&r| match method {
            AttributionMethod::Exact => shapley_exact(model, d, r, background),
            AttributionMethod::MonteCarlo { samples } => shapley_sampled(model, d, r, background, samples, seed),
        })
        .collect()
}

/// Long format: `row,feature,value,phi`.
pub fn attributions_to_csv(attrs: &[Attribution]) -> String {
    let mut s = String::from("row,feature,value,phi\n");
    for a in attrs {
        for k in 0..a.features.len() {
            s.push_str(&format!("{},{},{},{}\n", a.row_id, a.features[k], a.x[k], a.phi[k]));
        }
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMagnitude {
    pub feature: String,
    pub mean_abs_phi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryPoint {
    pub feature: String,
    pub row_id: usize,
    pub value: f64,
    pub phi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapleySummary {
    /// Every feature, in design order.
    pub magnitudes: Vec<FeatureMagnitude>,
    /// Up to `top` features with nonzero mean |φ|, largest first.
    pub ranking: Vec<String>,
    /// `(value, φ)` pairs of the ranked features, for beeswarm plots.
    pub points: Vec<SummaryPoint>,
}

pub fn shapley_summary(attrs: &[Attribution], top: usize) -> Result<ShapleySummary> {
    let first = attrs
        .first()
        .ok_or_else(|| Error::InvalidArgument("no attributions to summarise".into()))?;
    let p = first.features.len();
    if let Some(a) = attrs.iter().find(|a| a.features != first.features) {
        return Err(Error::LengthMismatch {
            left: p,
            right: a.features.len(),
        });
    }
    let magnitudes: Vec<FeatureMagnitude> = (0..p)
        .map(|k| FeatureMagnitude {
            feature: first.features[k].clone(),
            mean_abs_phi: attrs.iter().map(|a| a.phi[k].abs()).sum::<f64>() / attrs.len() as f64,
        })
        .collect();
    let mut order: Vec<usize> = (0..p).filter(|&k| magnitudes[k].mean_abs_phi > 0.0).collect();
    order.sort_by(|&a, &b| {
        magnitudes[b]
            .mean_abs_phi
            .total_cmp(&magnitudes[a].mean_abs_phi)
            .then(a.cmp(&b))
    });
    order.truncate(top);
    let points = order
        .iter()
        .flat_map(|&k| {
            attrs.iter().map(move |a| SummaryPoint {
                feature: a.features[k].clone(),
                row_id: a.row_id,
                value: a.x[k],
                phi: a.phi[k],
            })
        })
        .collect();
    Ok(ShapleySummary {
        ranking: order.iter().map(|&k| magnitudes[k].feature.clone()).collect(),
        magnitudes,
        points,
    })
}
