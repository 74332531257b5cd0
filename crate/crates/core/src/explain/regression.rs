use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::Attribution;
use crate::error::{Error, Result};
use crate::models::{ols_summary, DesignMatrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapleyTerm {
    pub feature: String,
    /// `None` when the feature's Shapley values are identically zero and the
    /// column was left out of the regression.
    pub beta_s: Option<f64>,
    pub se: Option<f64>,
    /// One-sided p-value for `H₀: β_s ≤ 0`.
    pub p_one_sided: Option<f64>,
    /// Signed share of mean |φ|.
    pub gamma: f64,
    pub stars: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapleyRegressionResult {
    pub terms: Vec<ShapleyTerm>,
    pub intercept: f64,
    pub intercept_se: f64,
    /// `|base| / (|base| + Σ mean|φ|)`.
    pub intercept_share: f64,
    pub base_value: f64,
    pub n: usize,
    pub df: usize,
}

impl ShapleyRegressionResult {
    pub fn term(&self, feature: &str) -> Option<&ShapleyTerm> {
        self.terms.iter().find(|t| t.feature == feature)
    }

    /// Sum of |Γ| over features plus the intercept share.
    pub fn total_share(&self) -> f64 {
        self.intercept_share + self.terms.iter().map(|t| t.gamma.abs()).sum::<f64>()
    }

    /// `variable,beta_s,se,p_one_sided,gamma,stars`, intercept first.
    pub fn to_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
        let mut s = String::from("variable,beta_s,se,p_one_sided,gamma,stars\n");
        s.push_str(&format!(
            "intercept,{},{},,{},\n",
            self.intercept, self.intercept_se, self.intercept_share
        ));
        for t in &self.terms {
            s.push_str(&format!(
                "{},{},{},{},{},{}\n",
                t.feature,
                opt(t.beta_s),
                opt(t.se),
                opt(t.p_one_sided),
                t.gamma,
                t.stars
            ));
        }
        s
    }
}

/// `***` below 0.01, `**` below 0.05, `*` below 0.1.
pub fn stars(p: f64) -> &'static str {
    if p < 0.01 {
        "***"
    } else if p < 0.05 {
        "**"
    } else if p < 0.1 {
        "*"
    } else {
        ""
    }
}

fn slope_sign(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let cov: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if cov < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// OLS of `y` on the Shapley-value columns with one-sided tests and shares.
///
/// The share sign is the sign of the univariate slope of `y` on the raw
/// feature; a zero slope counts as positive.
pub fn shapley_regression(y: &[f64], attrs: &[Attribution]) -> Result<ShapleyRegressionResult> {
    if y.len() != attrs.len() {
        return Err(Error::LengthMismatch {
            left: y.len(),
            right: attrs.len(),
        });
    }
    let first = attrs
        .first()
        .ok_or_else(|| Error::InsufficientHistory("no attributions to regress on".into()))?;
    let p = first.features.len();
    if attrs.iter().any(|a| a.features != first.features) {
        return Err(Error::InvalidArgument(
            "attributions disagree on the feature set".into(),
        ));
    }
    let n = attrs.len();
    if n < p + 2 {
        return Err(Error::InsufficientHistory(format!(
            "Shapley regression on {p} features needs at least {} rows, got {n}",
            p + 2
        )));
    }
    let active: Vec<usize> = (0..p).filter(|&k| attrs.iter().any(|a| a.phi[k] != 0.0)).collect();
    let d = DesignMatrix::new(
        active.iter().map(|&k| first.features[k].clone()).collect(),
        attrs
            .iter()
            .map(|a| active.iter().map(|&k| a.phi[k]).collect())
            .collect(),
        y.to_vec(),
    )?;
    let fit = ols_summary(&d)?;
    let t_dist = StudentsT::new(0.0, 1.0, fit.df as f64).map_err(|e| Error::EstimationFailure(e.to_string()))?;

    let base_value = attrs.iter().map(|a| a.base_value).sum::<f64>() / n as f64;
    let mean_abs: Vec<f64> = (0..p)
        .map(|k| attrs.iter().map(|a| a.phi[k].abs()).sum::<f64>() / n as f64)
        .collect();
    let denom = base_value.abs() + mean_abs.iter().sum::<f64>();
    if denom == 0.0 {
        return Err(Error::SingularDesign {
            columns: first.features.clone(),
        });
    }
    let terms = (0..p)
        .map(|k| {
            let x: Vec<f64> = attrs.iter().map(|a| a.x[k]).collect();
            let gamma = slope_sign(&x, y) * mean_abs[k] / denom;
            let (beta_s, se, p_one_sided) = match active.iter().position(|&a| a == k) {
                Some(c) => {
                    let (b, s) = (fit.fit.coefficients[c], fit.standard_errors[c]);
                    let t = if s > 0.0 {
                        b / s
                    } else if b > 0.0 {
                        f64::INFINITY
                    } else if b < 0.0 {
                        f64::NEG_INFINITY
                    } else {
                        0.0
                    };
                    (Some(b), Some(s), Some(1.0 - t_dist.cdf(t)))
                }
                None => (None, None, None),
            };
            ShapleyTerm {
                feature: first.features[k].clone(),
                beta_s,
                se,
                p_one_sided,
                gamma,
                stars: p_one_sided.map_or("", stars).to_string(),
            }
        })
        .collect();
    Ok(ShapleyRegressionResult {
        terms,
        intercept: fit.fit.intercept,
        intercept_se: fit.intercept_se,
        intercept_share: base_value.abs() / denom,
        base_value,
        n,
        df: fit.df,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::explain::{shapley_rows, AttributionMethod};
    use crate::models::{fit_ols, Predictor};

    fn design() -> DesignMatrix {
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|i| {
                vec![
                    (i as f64 * 0.7).sin(),
                    ((i * 5) % 11) as f64 / 5.0,
                    (i as f64 * 0.13).cos(),
                ]
            })
            .collect();
        let y = rows
            .iter()
            .enumerate()
            .map(|(i, r)| 1.0 + 2.0 * r[0] - 0.5 * r[1] + 0.3 * ((i * 7 % 5) as f64 - 2.0))
            .collect();
        DesignMatrix::new(vec!["a".into(), "b".into(), "c".into()], rows, y).unwrap()
    }

    #[test]
    fn own_fit_gives_unit_betas() {
        let d = design();
        let m = fit_ols(&d).unwrap();
        let yhat = m.predict(&d.rows);
        let attrs = shapley_rows(
            &m,
            &d,
            &(0..40).collect::<Vec<_>>(),
            &d.rows,
            AttributionMethod::Exact,
            0,
        )
        .unwrap();
        let r = shapley_regression(&yhat, &attrs).unwrap();
        for t in &r.terms {
            assert!((t.beta_s.unwrap() - 1.0).abs() < 1e-8, "{t:?}");
        }
        let ybar = yhat.iter().sum::<f64>() / 40.0;
        assert!((r.intercept - ybar).abs() < 1e-8);
        assert!((r.total_share() - 1.0).abs() < 1e-12);
        assert_eq!(r.term("b").unwrap().gamma.signum(), -1.0);
    }

    #[test]
    fn zero_columns_are_reported_not_regressed() {
        let d = design();
        let f = |x: &[f64]| 3.0 * x[0];
        let attrs = shapley_rows(
            &f,
            &d,
            &(0..40).collect::<Vec<_>>(),
            &d.rows,
            AttributionMethod::Exact,
            0,
        )
        .unwrap();
        let r = shapley_regression(&d.target, &attrs).unwrap();
        assert!(r.term("c").unwrap().beta_s.is_none());
        assert_eq!(r.term("c").unwrap().gamma, 0.0);
        assert_eq!(r.term("a").unwrap().stars, "***");
        assert!((r.total_share() - 1.0).abs() < 1e-12);
        assert!(r.to_csv().starts_with("variable,beta_s"));
    }

    #[test]
    fn star_thresholds() {
        assert_eq!(stars(0.005), "***");
        assert_eq!(stars(0.03), "**");
        assert_eq!(stars(0.07), "*");
        assert_eq!(stars(0.2), "");
    }

    #[test]
    fn length_checks() {
        let d = design();
        let f = |x: &[f64]| x[0];
        let attrs = shapley_rows(&f, &d, &[0, 1, 2, 3], &d.rows, AttributionMethod::Exact, 0).unwrap();
        assert!(shapley_regression(&[1.0, 2.0], &attrs).is_err());
        assert!(matches!(
            shapley_regression(&[1.0, 2.0, 3.0, 4.0], &attrs),
            Err(Error::InsufficientHistory(_))
        ));
    }
}
