//! Local-linear-trend unobserved-components model.
//!
//! ```text
//! y_t       = level_t + eps_t              eps  ~ N(0, var_obs)
//! level_t+1 = level_t + slope_t + eta_t    eta  ~ N(0, var_level)
//! slope_t+1 = slope_t + zeta_t             zeta ~ N(0, var_slope)
//! ```
//!
//! Variances are estimated by maximising the Gaussian likelihood from the
//! Kalman filter (Nelder–Mead over log-variances, several restarts). The
//! diffuse initial state is approximated by a large prior variance and the
//! first two prediction errors are left out of the objective. The trend is
//! the fixed-interval smoothed level.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Method, TrendCycleDecomposition};
use crate::data::Series;
use crate::error::{Error, Result};
use crate::optim::{nelder_mead, NelderMeadOptions};
use crate::rng::substream;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum UcmVariant {
    /// Level and slope both stochastic.
    LocalLinearTrend,
    /// Stochastic level with a fixed (diffuse) drift: `var_slope = 0`.
    LocalLevelDrift,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UcmParams {
    pub var_obs: f64,
    pub var_level: f64,
    pub var_slope: f64,
}

impl UcmParams {
    fn check(&self) -> Result<()> {
        let all = [self.var_obs, self.var_level, self.var_slope];
        if all.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) || all.iter().all(|v| *v == 0.0) {
            return Err(Error::InvalidArgument(format!("invalid UCM variances {self:?}")));
        }
        Ok(())
    }
}

/// Gaussian prior on the initial `(level, slope)` state with covariance `var·I`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StatePrior {
    pub mean: [f64; 2],
    pub var: f64,
}

impl StatePrior {
    pub fn diffuse(level: f64) -> Self {
        Self {
            mean: [level, 0.0],
            var: 1e7,
        }
    }
}

#[derive(Debug, Clone)]
pub struct KalmanOutput {
    pub log_likelihood: f64,
    /// One-step prediction errors `v_t = y_t − E[y_t | y_{<t}]`.
    pub innovations: Vec<f64>,
    /// Their variances `F_t`.
    pub innovation_vars: Vec<f64>,
    predicted: Vec<([f64; 2], [[f64; 2]; 2])>,
}

const LN_2PI: f64 = 1.837_877_066_409_345_3;

fn kalman_filter(y: &[f64], p: &UcmParams, prior: &StatePrior, skip: usize) -> KalmanOutput {
    let mut a = prior.mean;
    let mut pm = [[prior.var, 0.0], [0.0, prior.var]];
    let mut ll = 0.0;
    let mut innovations = Vec::with_capacity(y.len());
    let mut vars = Vec::with_capacity(y.len());
    let mut predicted = Vec::with_capacity(y.len());
    for (t, &yt) in y.iter().enumerate() {
        predicted.push((a, pm));
        let v = yt - a[0];
        let f = pm[0][0] + p.var_obs;
        innovations.push(v);
        vars.push(f);
        if t >= skip {
            ll -= 0.5 * (LN_2PI + f.ln() + v * v / f);
        }
        let k0 = pm[0][0] / f;
        let k1 = pm[1][0] / f;
        let af = [a[0] + k0 * v, a[1] + k1 * v];
        let p00 = pm[0][0] - pm[0][0] * k0;
        let p01 = pm[0][1] - pm[0][0] * k1;
        let p11 = pm[1][1] - pm[1][0] * k1;
        a = [af[0] + af[1], af[1]];
        let n00 = p00 + 2.0 * p01 + p11 + p.var_level;
        let n01 = p01 + p11;
        let n11 = p11 + p.var_slope;
        pm = [[n00, n01], [n01, n11]];
    }
    KalmanOutput {
        log_likelihood: ll,
        innovations,
        innovation_vars: vars,
        predicted,
    }
}

/// Exact Gaussian log-likelihood of `y` under the model and the given prior,
/// leaving out the first `skip` prediction-error terms.
pub fn kalman_log_likelihood(y: &[f64], params: &UcmParams, prior: &StatePrior, skip: usize) -> f64 {
    kalman_filter(y, params, prior, skip).log_likelihood
}

/// Fixed-interval smoothed level via the backward state-smoothing recursion.
fn smoothed_level(k: &KalmanOutput) -> Vec<f64> {
    let n = k.innovations.len();
    let mut r = [0.0f64; 2];
    let mut level = vec![0.0; n];
    for t in (0..n).rev() {
        let (a, pm) = k.predicted[t];
        let v = k.innovations[t];
        let f = k.innovation_vars[t];
        let kk0 = (pm[0][0] + pm[1][0]) / f;
        let kk1 = pm[1][0] / f;
        let r0 = v / f + (1.0 - kk0) * r[0] - kk1 * r[1];
        let r1 = r[0] + r[1];
        r = [r0, r1];
        level[t] = a[0] + pm[0][0] * r[0] + pm[0][1] * r[1];
    }
    level
}

#[derive(Debug, Clone)]
pub struct UcmOptions {
    pub variant: UcmVariant,
    pub restarts: usize,
    /// Places the restart points.
    pub seed: u64,
    pub prior_var: f64,
    pub max_evals: usize,
}

impl Default for UcmOptions {
    fn default() -> Self {
        Self {
            variant: UcmVariant::LocalLinearTrend,
            restarts: 5,
            seed: 0x00c0_ffee,
            prior_var: 1e7,
            max_evals: 3000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RestartTrace {
    pub start: Vec<f64>,
    pub log_likelihood: f64,
    pub evaluations: usize,
    pub converged: bool,
    /// Best objective (log-likelihood) after each simplex iteration.
    pub history: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct UcmFit {
    pub decomposition: TrendCycleDecomposition,
    pub params: UcmParams,
    /// Concentrated diffuse log-likelihood on the original scale.
    pub log_likelihood: f64,
    /// Standardised one-step prediction errors after the diffuse period.
    pub standardized_innovations: Vec<f64>,
    pub restarts: Vec<RestartTrace>,
}

pub fn ucm_smooth(s: &Series) -> Result<(TrendCycleDecomposition, UcmParams)> {
    let fit = ucm_smooth_with(s, &UcmOptions::default())?;
    Ok((fit.decomposition, fit.params))
}

const LOG_VAR_BOUNDS: (f64, f64) = (-18.0, 4.0);
const DIFFUSE_STATES: usize = 2;

pub fn ucm_smooth_with(s: &Series, opts: &UcmOptions) -> Result<UcmFit> {
    let y = s.values();
    let n = y.len();
    if n < 20 {
        return Err(Error::InsufficientHistory(format!(
            "UCM needs at least 20 observations, got {n}"
        )));
    }
    // Work on a unit-free copy so the log-variance bounds mean the same thing for every series.
    let diffs: Vec<f64> = y.windows(2).map(|w| w[1] - w[0]).collect();
    let mut scale = crate::linalg::sample_variance(&diffs).sqrt();
    if !(scale > 1e-12) {
        scale = crate::linalg::sample_variance(y).sqrt();
    }
    if !(scale > 1e-12) {
        scale = 1.0;
    }
    let origin = y[0];
    let z: Vec<f64> = y.iter().map(|v| (v - origin) / scale).collect();
    let prior = StatePrior {
        mean: [0.0, 0.0],
        var: opts.prior_var,
    };
    let free = match opts.variant {
        UcmVariant::LocalLinearTrend => 3,
        UcmVariant::LocalLevelDrift => 2,
    };
    let to_params = |x: &[f64]| -> UcmParams {
        let c = |v: f64| v.clamp(LOG_VAR_BOUNDS.0, LOG_VAR_BOUNDS.1).exp();
        UcmParams {
            var_obs: c(x[0]),
            var_level: c(x[1]),
            var_slope: if free == 3 { c(x[2]) } else { 0.0 },
        }
    };
    let objective = |x: &[f64]| -> f64 {
        let excess: f64 = x
            .iter()
            .map(|v| (LOG_VAR_BOUNDS.0 - v).max(0.0) + (v - LOG_VAR_BOUNDS.1).max(0.0))
            .map(|e| e * e)
            .sum();
        -kalman_log_likelihood(&z, &to_params(x), &prior, DIFFUSE_STATES) + excess
    };

    let mut rng = substream(opts.seed, 0);
    let starts: Vec<Vec<f64>> = (0..opts.restarts.max(1))
        .map(|_| (0..free).map(|_| rng.gen_range(-8.0..1.0)).collect())
        .collect();
    let nm = NelderMeadOptions {
        max_evals: opts.max_evals,
        initial_step: 1.5,
        ..NelderMeadOptions::default()
    };
    let results: Vec<_> = starts
        .par_iter()
        .map(|st| {
            let m = nelder_mead(objective, st, &nm);
            (st.clone(), m)
        })
        .collect();
    let mut best: Option<usize> = None;
    for (i, (_, m)) in results.iter().enumerate() {
        if m.value.is_finite() && best.is_none_or(|b| m.value < results[b].1.value) {
            best = Some(i);
        }
    }
    let Some(best) = best else {
        return Err(Error::EstimationFailure(format!(
            "no finite likelihood from {} restarts on `{}` (scale {scale:e})",
            results.len(),
            s.name
        )));
    };
    let scaled = to_params(&results[best].1.x);
    let kf = kalman_filter(&z, &scaled, &prior, DIFFUSE_STATES);
    let level_z = smoothed_level(&kf);
    let trend: Vec<f64> = level_z.iter().map(|l| origin + scale * l).collect();
    let s2 = scale * scale;
    let params = UcmParams {
        var_obs: scaled.var_obs * s2,
        var_level: scaled.var_level * s2,
        var_slope: scaled.var_slope * s2,
    };
    params.check()?;
    let standardized_innovations = kf.innovations[DIFFUSE_STATES..]
        .iter()
        .zip(&kf.innovation_vars[DIFFUSE_STATES..])
        .map(|(v, f)| v / f.sqrt())
        .collect();
    let restarts = results
        .into_iter()
        .map(|(start, m)| RestartTrace {
            start,
            log_likelihood: -m.value,
            evaluations: m.evaluations,
            converged: m.converged,
            history: m.history.iter().map(|v| -v).collect(),
        })
        .collect();
    Ok(UcmFit {
        decomposition: TrendCycleDecomposition::from_trend(
            s,
            trend,
            Method::Ucm {
                variant: opts.variant,
                params,
            },
        )?,
        params,
        log_likelihood: kf.log_likelihood - (n - DIFFUSE_STATES) as f64 * scale.ln(),
        standardized_innovations,
        restarts,
    })
}
