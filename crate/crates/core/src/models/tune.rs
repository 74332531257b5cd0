//! Contiguous-block cross-validation and the hyperparameter grids.

use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::linear::fit_lasso_warm;
use super::{
    fit_forest, fit_gbt, fit_ridge, lasso_lambda_max, DesignMatrix, FittedModel, ForestParams, GbtParams, Predictor,
};
use crate::error::{Error, Result};

/// `k` contiguous blocks whose sizes differ by at most one.
pub fn contiguous_folds(n: usize, k: usize) -> Vec<Range<usize>> {
    let k = k.clamp(1, n.max(1));
    let (base, extra) = (n / k, n % k);
    let mut out = Vec::with_capacity(k);
    let mut start = 0;
    for i in 0..k {
        let len = base + usize::from(i < extra);
        out.push(start..start + len);
        start += len;
    }
    out
}

fn split(d: &DesignMatrix, fold: &Range<usize>) -> (DesignMatrix, DesignMatrix) {
    let train: Vec<usize> = (0..d.n()).filter(|i| !fold.contains(i)).collect();
    let test: Vec<usize> = fold.clone().collect();
    (d.select(&train), d.select(&test))
}

/// Pooled out-of-fold MSE; a failed fold makes the whole score infinite.
pub fn cv_mse<F>(d: &DesignMatrix, k: usize, fit: F) -> f64
where
    F: Fn(&DesignMatrix) -> Result<FittedModel> + Sync,
{
    let folds = contiguous_folds(d.n(), k);
    let sse: Vec<Option<f64>> = folds
        .par_iter()
        .map(|f| {
            let (train, test) = split(d, f);
            let m = fit(&train).ok()?;
            Some(
                test.rows
                    .iter()
                    .zip(&test.target)
                    .map(|(r, y)| (y - m.predict_row(r)).powi(2))
                    .sum(),
            )
        })
        .collect();
    if sse.iter().any(Option::is_none) {
        return f64::INFINITY;
    }
    sse.iter().flatten().sum::<f64>() / d.n() as f64
}

/// Grid for forest tuning; `mtry` entries of `None` mean `⌈p/3⌉`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct ForestGrid {
    pub n_trees: Vec<usize>,
    /// `0` means unlimited depth.
    pub max_depth: Vec<usize>,
    /// `"third"` for `⌈p/3⌉` or `"all"` for `p`.
    pub mtry: Vec<MtryRule>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum MtryRule {
    Third,
    All,
}

impl Default for ForestGrid {
    fn default() -> Self {
        Self {
            n_trees: vec![200, 500],
            max_depth: vec![3, 6, 0],
            mtry: vec![MtryRule::Third, MtryRule::All],
        }
    }
}

impl ForestGrid {
    pub fn candidates(&self, base: &ForestParams, p: usize) -> Vec<ForestParams> {
        let mut out = Vec::new();
        for &n_trees in &self.n_trees {
            for &max_depth in &self.max_depth {
                for &m in &self.mtry {
                    out.push(ForestParams {
                        n_trees,
                        max_depth: (max_depth > 0).then_some(max_depth),
                        mtry: Some(match m {
                            MtryRule::Third => p.div_ceil(3).max(1),
                            MtryRule::All => p,
                        }),
                        ..base.clone()
                    });
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct GbtGrid {
    pub n_rounds: Vec<usize>,
    pub learning_rate: Vec<f64>,
    /// `0` means unlimited depth.
    pub max_depth: Vec<usize>,
}

impl Default for GbtGrid {
    fn default() -> Self {
        Self {
            n_rounds: vec![100, 300],
            learning_rate: vec![0.05, 0.1],
            max_depth: vec![2, 3],
        }
    }
}

impl GbtGrid {
    pub fn candidates(&self, base: &GbtParams) -> Vec<GbtParams> {
        let mut out = Vec::new();
        for &n_rounds in &self.n_rounds {
            for &learning_rate in &self.learning_rate {
                for &max_depth in &self.max_depth {
                    out.push(GbtParams {
                        n_rounds,
                        learning_rate,
                        max_depth: (max_depth > 0).then_some(max_depth),
                        ..base.clone()
                    });
                }
            }
        }
        out
    }
}

/// One evaluated grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridScore<P> {
    pub params: P,
    pub cv_mse: f64,
}

fn pick<P: Clone>(scores: Vec<GridScore<P>>) -> Result<(P, Vec<GridScore<P>>)> {
    let mut best: Option<usize> = None;
    for (i, s) in scores.iter().enumerate() {
        if s.cv_mse.is_finite() && best.is_none_or(|b| s.cv_mse < scores[b].cv_mse) {
            best = Some(i);
        }
    }
    match best {
        Some(b) => Ok((scores[b].params.clone(), scores)),
        None => Err(Error::EstimationFailure(
            "every grid point failed in cross-validation".into(),
        )),
    }
}

pub fn tune_forest(
    d: &DesignMatrix,
    base: &ForestParams,
    grid: &ForestGrid,
    folds: usize,
) -> Result<(ForestParams, Vec<GridScore<ForestParams>>)> {
    let scores = grid
        .candidates(base, d.p())
        .into_par_iter()
        .map(|params| {
            let cv_mse = cv_mse(d, folds, |t| fit_forest(t, &params).map(FittedModel::Forest));
            GridScore { params, cv_mse }
        })
        .collect();
    pick(scores)
}

pub fn tune_gbt(
    d: &DesignMatrix,
    base: &GbtParams,
    grid: &GbtGrid,
    folds: usize,
) -> Result<(GbtParams, Vec<GridScore<GbtParams>>)> {
    let scores = grid
        .candidates(base)
        .into_par_iter()
        .map(|params| {
            let cv_mse = cv_mse(d, folds, |t| fit_gbt(t, &params).map(FittedModel::Gbt));
            GridScore { params, cv_mse }
        })
        .collect();
    pick(scores)
}

/// Log-spaced ridge penalties `10^-3 … 10^3` on the standardized scale.
pub fn ridge_grid() -> Vec<f64> {
    (0..13).map(|i| 10f64.powf(-3.0 + 0.5 * i as f64)).collect()
}

pub fn tune_ridge(d: &DesignMatrix, grid: &[f64], folds: usize) -> Result<(f64, Vec<GridScore<f64>>)> {
    let scores = grid
        .par_iter()
        .map(|&lambda| GridScore {
            params: lambda,
            cv_mse: cv_mse(d, folds, |t| fit_ridge(t, lambda).map(FittedModel::Linear)),
        })
        .collect();
    pick(scores)
}

/// Lasso path `λ_max · 10^{-3k/(m−1)}` for `k = 0..m`, tuned with warm starts per fold.
pub fn tune_lasso(d: &DesignMatrix, points: usize, folds: usize) -> Result<(f64, Vec<GridScore<f64>>)> {
    let lmax = lasso_lambda_max(d);
    let m = points.max(2);
    let path: Vec<f64> = (0..m)
        .map(|k| lmax * 10f64.powf(-3.0 * k as f64 / (m - 1) as f64))
        .collect();
    let fold_sse: Vec<Vec<Option<f64>>> = contiguous_folds(d.n(), folds)
        .par_iter()
        .map(|f| {
            let (train, test) = split(d, f);
            let mut warm: Option<Vec<f64>> = None;
            path.iter()
                .map(|&lam| {
                    let fit = fit_lasso_warm(&train, lam, warm.as_deref()).ok()?;
                    warm = fit.standardized_coefficients();
                    Some(
                        test.rows
                            .iter()
                            .zip(&test.target)
                            .map(|(r, y)| (y - fit.predict_row(r)).powi(2))
                            .sum(),
                    )
                })
                .collect()
        })
        .collect();
    let scores = path
        .iter()
        .enumerate()
        .map(|(k, &lam)| {
            let per: Option<f64> = fold_sse.iter().map(|f| f[k]).sum();
            GridScore {
                params: lam,
                cv_mse: per.map_or(f64::INFINITY, |s| s / d.n() as f64),
            }
        })
        .collect();
    pick(scores)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::fit_ols;

    #[test]
    fn folds_are_contiguous_and_cover() {
        let f = contiguous_folds(23, 5);
        assert_eq!(f.len(), 5);
        assert_eq!(f[0], 0..5);
        assert_eq!(f.last().unwrap().end, 23);
        assert!(f.windows(2).all(|w| w[0].end == w[1].start));
        assert!(f.iter().all(|r| r.len() == 4 || r.len() == 5));
    }

    #[test]
    fn cv_on_exact_linear_is_zero() {
        let rows: Vec<Vec<f64>> = (0..30).map(|i| vec![i as f64, ((i * 7) % 11) as f64]).collect();
        let y = rows.iter().map(|r| 1.0 + 2.0 * r[0] - r[1]).collect();
        let d = DesignMatrix::new(vec!["a".into(), "b".into()], rows, y).unwrap();
        let m = cv_mse(&d, 5, |t| fit_ols(t).map(FittedModel::Linear));
        assert!(m < 1e-20);
        let (lam, scores) = tune_ridge(&d, &ridge_grid(), 5).unwrap();
        assert_eq!(lam, 1e-3);
        assert_eq!(scores.len(), 13);
    }

    #[test]
    fn forest_grid_size() {
        assert_eq!(ForestGrid::default().candidates(&ForestParams::default(), 21).len(), 12);
        let mt: Vec<_> = ForestGrid::default()
            .candidates(&ForestParams::default(), 21)
            .iter()
            .map(|p| p.mtry.unwrap())
            .collect();
        assert!(mt.contains(&7) && mt.contains(&21));
    }
}
