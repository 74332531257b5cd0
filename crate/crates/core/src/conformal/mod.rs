//! Windowed split-conformal prediction intervals around ledger forecasts.
//!
//! At each origin the realized normalized residuals of earlier forecasts
//! form a score window; the interval half-width is the conformal quantile
//! of that window times the scale of the current point.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::backtest::ForecastRecord;
use crate::data::Quarter;
use crate::error::{Error, Result};
use crate::models::{fit_forest, DesignMatrix, ForestParams, Predictor};
use crate::rng::mix;

/// Scale Ξ̂ by which absolute residuals are normalized.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Uncertainty {
    /// Ξ̂ ≡ 1.
    #[default]
    Constant,
    /// A forest fitted on (features, |residual|) of realized earlier forecasts.
    ResidualForest {
        #[serde(default)]
        params: ForestParams,
        /// Realized points needed before the forest replaces the mean |residual|.
        #[serde(default = "default_min_train")]
        min_train: usize,
    },
}

fn default_min_train() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct ConformalConfig {
    pub kappa: usize,
    pub alpha: f64,
    pub uncertainty: Uncertainty,
}

impl Default for ConformalConfig {
    fn default() -> Self {
        Self {
            kappa: 20,
            alpha: 0.1,
            uncertainty: Uncertainty::Constant,
        }
    }
}

impl ConformalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.kappa < 2 {
            return Err(Error::InvalidArgument(format!(
                "kappa must be at least 2, got {}",
                self.kappa
            )));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        Ok(())
    }
}

/// JSON has no infinities; they round-trip as the strings `"inf"` / `"-inf"`.
mod extended_f64 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else if *v < 0.0 {
            s.serialize_str("-inf")
        } else {
            s.serialize_str("nan")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionInterval {
    pub origin: Quarter,
    /// Quarter being forecast.
    pub t: Quarter,
    pub center: f64,
    #[serde(with = "extended_f64")]
    pub lower: f64,
    #[serde(with = "extended_f64")]
    pub upper: f64,
    #[serde(with = "extended_f64")]
    pub quantile: f64,
    pub scale: f64,
    pub actual: f64,
    /// Scores available in the window.
    pub window: usize,
    /// `score ≤ quantile`.
    pub covered: bool,
}

impl PredictionInterval {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn score(&self) -> f64 {
        (self.actual - self.center).abs() / self.scale
    }
}

/// `|y − ŷ| / Ξ̂` elementwise.
pub fn conformal_scores(actual: &[f64], pred: &[f64], scale: &[f64]) -> Result<Vec<f64>> {
    if actual.len() != pred.len() || actual.len() != scale.len() {
        return Err(Error::LengthMismatch {
            left: actual.len(),
            right: if actual.len() != pred.len() {
                pred.len()
            } else {
                scale.len()
            },
        });
    }
    actual
        .iter()
        .zip(pred)
        .zip(scale)
        .map(|((y, p), s)| {
            if *s > 0.0 && s.is_finite() {
                Ok((y - p).abs() / s)
            } else {
                Err(Error::ScaleDomain(*s))
            }
        })
        .collect()
}

/// The `⌈(m+1)(1−α)⌉`-th smallest of the last `m = min(κ, len)` scores,
/// or `+∞` when that rank exceeds `m`.
pub fn windowed_quantile(prior: &[f64], kappa: usize, alpha: f64) -> Result<f64> {
    if prior.is_empty() {
        return Err(Error::ColdStart);
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let m = kappa.min(prior.len());
    let k = (((m + 1) as f64) * (1.0 - alpha) - 1e-9).ceil() as usize;
    if k > m {
        return Ok(f64::INFINITY);
    }
    let mut w = prior[prior.len() - m..].to_vec();
    w.sort_by(f64::total_cmp);
    Ok(w[k.max(1) - 1])
}

fn check_slice(records: &[ForecastRecord]) -> Result<()> {
    let Some(first) = records.first() else {
        return Err(Error::InsufficientHistory("no forecasts to conformalize".into()));
    };
    for w in records.windows(2) {
        if w[1].origin <= w[0].origin {
            return Err(Error::UnsortedIndex(w[1].origin.to_string()));
        }
    }
    if records
        .iter()
        .any(|r| r.model != first.model || r.spec != first.spec || r.horizon != first.horizon)
    {
        return Err(Error::InvalidArgument(
            "conformalize expects a single (model, spec, horizon) slice".into(),
        ));
    }
    Ok(())
}

/// Sequential pass over one ledger slice sorted by origin.
///
/// A forecast's score joins the window once its target quarter is no later
/// than the current origin. The first interval (no realized scores) is
/// infinite.
pub fn conformalize(records: &[ForecastRecord], config: &ConformalConfig) -> Result<Vec<PredictionInterval>> {
    config.validate()?;
    check_slice(records)?;
    let mut scales: Vec<f64> = Vec::with_capacity(records.len());
    let mut out = Vec::with_capacity(records.len());
    for (t, rec) in records.iter().enumerate() {
        let realized: Vec<usize> = (0..t).filter(|&s| records[s].target_quarter() <= rec.origin).collect();
        let scale = match &config.uncertainty {
            Uncertainty::Constant => 1.0,
            Uncertainty::ResidualForest { params, min_train } => {
                residual_scale(records, &realized, rec, params, *min_train, t)?
            }
        };
        scales.push(scale);
        let prior: Vec<f64> = realized
            .iter()
            .map(|&s| (records[s].actual - records[s].prediction).abs() / scales[s])
            .collect();
        let quantile = match windowed_quantile(&prior, config.kappa, config.alpha) {
            Ok(q) => q,
            Err(Error::ColdStart) => f64::INFINITY,
            Err(e) => return Err(e),
        };
        let half = quantile * scale;
        let score = (rec.actual - rec.prediction).abs() / scale;
        out.push(PredictionInterval {
            origin: rec.origin,
            t: rec.target_quarter(),
            center: rec.prediction,
            lower: rec.prediction - half,
            upper: rec.prediction + half,
            quantile,
            scale,
            actual: rec.actual,
            window: prior.len().min(config.kappa),
            covered: score <= quantile,
        });
    }
    Ok(out)
}

fn residual_scale(
    records: &[ForecastRecord],
    realized: &[usize],
    rec: &ForecastRecord,
    params: &ForestParams,
    min_train: usize,
    t: usize,
) -> Result<f64> {
    if rec.features.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "model `{}` stores no features; residual-forest scaling needs them",
            rec.model
        )));
    }
    let abs: Vec<f64> = realized.iter().map(|&s| records[s].error().abs()).collect();
    let scale = if realized.len() < min_train.max(2) {
        if abs.is_empty() {
            1.0
        } else {
            abs.iter().sum::<f64>() / abs.len() as f64
        }
    } else {
        let p = rec.features.len();
        let d = DesignMatrix::new(
            (0..p).map(|j| format!("x{j}")).collect(),
            realized.iter().map(|&s| records[s].features.clone()).collect(),
            abs,
        )?;
        let mut params = params.clone();
        params.seed = mix(params.seed, t as u64);
        fit_forest(&d, &params)?.predict_row(&rec.features)
    };
    // An all-zero residual history would otherwise give a zero scale.
    Ok(scale.max(1e-12))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub n: usize,
    pub finite: usize,
    pub infinite: usize,
    /// Over finite intervals; 1.0 when every interval is infinite.
    pub coverage: f64,
    #[serde(with = "extended_f64")]
    pub mean_width: f64,
    /// No finite interval was produced.
    pub degenerate: bool,
}

pub fn coverage_report(intervals: &[PredictionInterval]) -> CoverageReport {
    let finite: Vec<&PredictionInterval> = intervals.iter().filter(|i| i.width().is_finite()).collect();
    let nf = finite.len();
    CoverageReport {
        n: intervals.len(),
        finite: nf,
        infinite: intervals.len() - nf,
        coverage: if nf == 0 {
            1.0
        } else {
            finite.iter().filter(|i| i.covered).count() as f64 / nf as f64
        },
        mean_width: if nf == 0 {
            f64::INFINITY
        } else {
            finite.iter().map(|i| i.width()).sum::<f64>() / nf as f64
        },
        degenerate: nf == 0,
    }
}

/// `t,origin,center,lower,upper,quantile,scale,actual,covered`.
pub fn intervals_to_csv(intervals: &[PredictionInterval]) -> String {
    let mut s = String::from("t,origin,center,lower,upper,quantile,scale,actual,covered\n");
    for i in intervals {
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            i.t, i.origin, i.center, i.lower, i.upper, i.quantile, i.scale, i.actual, i.covered
        ));
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConformalSlice {
    pub model: String,
    pub spec: String,
    pub horizon: usize,
    pub intervals: Vec<PredictionInterval>,
    pub coverage: CoverageReport,
}

/// Conformalizes every (model, spec, horizon) slice of a ledger in parallel.
pub fn conformalize_ledger(records: &[ForecastRecord], config: &ConformalConfig) -> Result<Vec<ConformalSlice>> {
    let mut keys: Vec<(String, String, usize)> = Vec::new();
    for r in records {
        let k = (r.model.clone(), r.spec.clone(), r.horizon);
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    keys.into_par_iter()
        .map(|(model, spec, horizon)| {
            let mut slice: Vec<ForecastRecord> = records
                .iter()
                .filter(|r| r.model == model && r.spec == spec && r.horizon == horizon)
                .cloned()
                .collect();
            slice.sort_by_key(|r| r.origin);
            let intervals = conformalize(&slice, config)?;
            Ok(ConformalSlice {
                coverage: coverage_report(&intervals),
                model,
                spec,
                horizon,
                intervals,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn recs(errors: &[f64], horizon: usize) -> Vec<ForecastRecord> {
        let start: Quarter = "2010Q1".parse().unwrap();
        errors
            .iter()
            .enumerate()
            .map(|(i, e)| ForecastRecord {
                origin: start.offset(i as i64),
                horizon,
                model: "rf".into(),
                spec: "hybrid".into(),
                prediction: 2.0,
                actual: 2.0 + e,
                train_n: 40 + i,
                features: vec![i as f64, (i % 3) as f64],
            })
            .collect()
    }

    #[test]
    fn score_arithmetic() {
        assert_eq!(conformal_scores(&[3.0], &[1.0], &[0.5]).unwrap(), vec![4.0]);
        assert_eq!(
            conformal_scores(&[1.0, 2.0], &[1.0, 2.0], &[1.0, 1.0]).unwrap(),
            vec![0.0, 0.0]
        );
        assert!(matches!(
            conformal_scores(&[1.0], &[1.0], &[0.0]),
            Err(Error::ScaleDomain(_))
        ));
    }

    #[test]
    fn quantile_order_statistics() {
        let s: Vec<f64> = (1..=10).map(f64::from).collect();
        assert_eq!(windowed_quantile(&s, 10, 0.1).unwrap(), 10.0);
        assert_eq!(windowed_quantile(&s, 50, 0.5).unwrap(), 6.0);
        assert_eq!(windowed_quantile(&s[..3], 10, 0.1).unwrap(), f64::INFINITY);
        assert_eq!(windowed_quantile(&[2.5; 30], 20, 0.2).unwrap(), 2.5);
        assert!(matches!(windowed_quantile(&[], 5, 0.1), Err(Error::ColdStart)));
        // Only the last κ scores count.
        let mut w = vec![100.0; 5];
        w.extend((1..=9).map(f64::from));
        assert_eq!(windowed_quantile(&w, 9, 0.1).unwrap(), 9.0);
    }

    #[test]
    fn cold_start_then_coverage_identity() {
        let e: Vec<f64> = (0..40).map(|i| (i as f64 * 1.7).sin() * 2.0).collect();
        let iv = conformalize(&recs(&e, 1), &ConformalConfig::default()).unwrap();
        assert_eq!(iv[0].quantile, f64::INFINITY);
        assert!(iv[0].covered);
        for i in &iv {
            assert_eq!(i.covered, i.actual >= i.lower && i.actual <= i.upper);
            assert!(i.lower <= i.center && i.center <= i.upper);
        }
        let rep = coverage_report(&iv);
        assert!(rep.infinite >= 1 && rep.finite + rep.infinite == 40);
    }

    #[test]
    fn longer_horizons_wait_for_realization() {
        let e = vec![1.0; 10];
        let iv = conformalize(&recs(&e, 3), &ConformalConfig::default()).unwrap();
        // Origins 0..=2 have no realized target yet.
        assert!(iv[..3].iter().all(|i| i.window == 0));
        assert_eq!(iv[3].window, 1);
    }

    #[test]
    fn all_infinite_is_degenerate() {
        let iv = conformalize(&recs(&[0.5, 0.2], 1), &ConformalConfig::default()).unwrap();
        let rep = coverage_report(&iv);
        assert!(rep.degenerate);
        assert_eq!(rep.coverage, 1.0);
    }

    #[test]
    fn point_intervals_count_exact_hits() {
        let e = [
            0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 2.0,
        ];
        let cfg = ConformalConfig {
            kappa: 10,
            alpha: 0.5,
            ..Default::default()
        };
        let iv = conformalize(&recs(&e, 1), &cfg).unwrap();
        assert_eq!(iv[11].quantile, 0.0);
        assert!(!iv[11].covered && iv[12].covered);
    }

    #[test]
    fn residual_forest_scale_is_positive() {
        let e: Vec<f64> = (0..30).map(|i| if i % 3 == 0 { 2.0 } else { 0.1 }).collect();
        let cfg = ConformalConfig {
            uncertainty: Uncertainty::ResidualForest {
                params: ForestParams {
                    n_trees: 20,
                    min_samples_leaf: 2,
                    ..Default::default()
                },
                min_train: 10,
            },
            ..Default::default()
        };
        let iv = conformalize(&recs(&e, 1), &cfg).unwrap();
        assert!(iv.iter().all(|i| i.scale > 0.0));
        assert_ne!(iv[20].scale, iv[21].scale);
    }

    #[test]
    fn infinite_bounds_round_trip_json() {
        let iv = conformalize(&recs(&[0.5, 0.2, 0.1], 1), &ConformalConfig::default()).unwrap();
        let text = serde_json::to_string(&iv).unwrap();
        assert!(text.contains("\"-inf\""));
        let back: Vec<PredictionInterval> = serde_json::from_str(&text).unwrap();
        assert_eq!(back, iv);
    }

    #[test]
    fn mixed_slices_rejected() {
        let mut r = recs(&[1.0, 2.0], 1);
        r[1].model = "ols".into();
        assert!(conformalize(&r, &ConformalConfig::default()).is_err());
        let by_slice = conformalize_ledger(&r, &ConformalConfig::default()).unwrap();
        assert_eq!(by_slice.len(), 2);
    }
}
