//! Trend/cycle extraction: trend inflation, the output gap and the
//! expectations proxy derived from them.

mod hp;
mod ucm;

pub use hp::{hp_bands, hp_filter, solve_symmetric_pentadiagonal, DEFAULT_LAMBDA};
pub use ucm::{
    kalman_log_likelihood, ucm_smooth, ucm_smooth_with, KalmanOutput, StatePrior, UcmFit, UcmOptions, UcmParams,
    UcmVariant,
};

use serde::{Deserialize, Serialize};

use crate::data::Series;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Method {
    Hp { lambda: f64 },
    Ucm { variant: UcmVariant, params: UcmParams },
}

/// Trend + cycle split sharing the input's index; `trend + cycle = input`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendCycleDecomposition {
    pub trend: Series,
    pub cycle: Series,
    pub method: Method,
}

impl TrendCycleDecomposition {
    pub(crate) fn from_trend(input: &Series, trend: Vec<f64>, method: Method) -> Result<Self> {
        let cycle: Vec<f64> = input.values().iter().zip(&trend).map(|(y, t)| y - t).collect();
        Ok(Self {
            trend: Series::new(format!("{}.trend", input.name), input.index().to_vec(), trend)?,
            cycle: Series::new(format!("{}.cycle", input.name), input.index().to_vec(), cycle)?,
            method,
        })
    }
}

/// How to extract a trend, as selected in configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum TrendMethod {
    Hp,
    Ucm,
}

/// Extract a trend with the given method. UCM uses `variant`; HP uses `lambda`.
pub fn decompose(s: &Series, method: TrendMethod, lambda: f64, variant: UcmVariant) -> Result<TrendCycleDecomposition> {
    match method {
        TrendMethod::Hp => hp_filter(s, lambda),
        TrendMethod::Ucm => Ok(ucm_smooth_with(
            s,
            &UcmOptions {
                variant,
                ..UcmOptions::default()
            },
        )?
        .decomposition),
    }
}

/// Percentage-point output gap `100·log gdp − trend(100·log gdp)`.
pub fn output_gap(gdp: &Series, method: TrendMethod, lambda: f64) -> Result<Series> {
    if let Some(i) = gdp.values().iter().position(|v| *v <= 0.0) {
        return Err(Error::DivisionDomain {
            at: gdp.index()[i].to_string(),
            value: gdp.values()[i],
        });
    }
    let log_gdp = gdp.map(format!("{}.log100", gdp.name), |v| 100.0 * v.ln());
    let dec = decompose(&log_gdp, method, lambda, UcmVariant::LocalLinearTrend)?;
    Ok(dec.cycle.renamed(format!("{}.gap", gdp.name)).with_units("% of trend"))
}

/// Expectations proxy: row t holds `trend_{t+1}`; the final row repeats `trend_t`.
pub fn expected_inflation(trend_inflation: &Series) -> Result<Series> {
    let v = trend_inflation.values();
    if v.is_empty() {
        return Err(Error::InsufficientHistory("empty trend series".into()));
    }
    let mut out: Vec<f64> = v[1..].to_vec();
    out.push(v[v.len() - 1]);
    Series::new("expected_inflation", trend_inflation.index().to_vec(), out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ser(v: Vec<f64>) -> Series {
        Series::from_start("x", "2000Q1".parse().unwrap(), v).unwrap()
    }

    #[test]
    fn expectations_shift_and_fill() {
        let e = expected_inflation(&ser(vec![3.0, 4.0, 5.0])).unwrap();
        assert_eq!(e.values(), &[4.0, 5.0, 5.0]);
        let c = expected_inflation(&ser(vec![2.0; 5])).unwrap();
        assert_eq!(c.values(), &[2.0; 5]);
    }

    #[test]
    fn gap_on_trend_is_zero_and_bump_is_log() {
        // 100·log(gdp) exactly linear: HP reproduces it, gap ≡ 0.
        let gdp: Vec<f64> = (0..40).map(|t| 100.0 * (0.015 * t as f64).exp()).collect();
        let g = output_gap(&ser(gdp.clone()), TrendMethod::Hp, 1600.0).unwrap();
        assert!(g.values().iter().all(|v| v.abs() < 1e-6));

        // One quarter 1% above a linear log-trend. With λ → ∞ the HP trend
        // becomes the OLS line through log gdp, whose residual at the bump is
        // 100·log(1.01)·(1 − h_tt) with h_tt the line's leverage.
        let mut bumped = gdp.clone();
        bumped[20] *= 1.01;
        let g = output_gap(&ser(bumped), TrendMethod::Hp, 1e8).unwrap();
        let n = 40.0;
        let tbar = 19.5;
        let sxx: f64 = (0..40).map(|t| (t as f64 - tbar).powi(2)).sum();
        let h = 1.0 / n + (20.0 - tbar).powi(2) / sxx;
        let expect = 100.0 * 1.01f64.ln() * (1.0 - h);
        assert!(
            (g.values()[20] - expect).abs() < 2e-3,
            "{} vs {}",
            g.values()[20],
            expect
        );
        assert!((100.0 * 1.01f64.ln() - 0.995).abs() < 1e-3);
    }

    #[test]
    fn gap_rejects_nonpositive_gdp() {
        let r = output_gap(&ser(vec![1.0, 2.0, -1.0, 3.0, 4.0]), TrendMethod::Hp, 1600.0);
        assert!(matches!(r, Err(Error::DivisionDomain { .. })));
    }
}
