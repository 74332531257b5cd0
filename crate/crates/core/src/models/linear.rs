use serde::{Deserialize, Serialize};

use super::{DesignMatrix, Predictor};
use crate::error::{Error, Result};
use crate::linalg::{cholesky, cholesky_inverse, cholesky_solve, dot, mean, Matrix};

const LASSO_TOL: f64 = 1e-8;
const LASSO_MAX_SWEEPS: usize = 10_000;
const PIVOT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "lambda", rename_all = "snake_case")]
pub enum Penalty {
    None,
    L2(f64),
    L1(f64),
}

/// Feature centring and scaling learned on the training window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub means: Vec<f64>,
    /// Population standard deviations; zero marks a constant column.
    pub sds: Vec<f64>,
}

impl Standardization {
    fn fit(d: &DesignMatrix) -> Self {
        let n = d.n() as f64;
        let means: Vec<f64> = (0..d.p()).map(|j| mean(&d.column(j))).collect();
        let sds = (0..d.p())
            .map(|j| {
                let ss: f64 = d.rows.iter().map(|r| (r[j] - means[j]).powi(2)).sum();
                let sd = (ss / n).sqrt();
                if sd > 1e-12 * (1.0 + means[j].abs()) {
                    sd
                } else {
                    0.0
                }
            })
            .collect();
        Self { means, sds }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub feature_names: Vec<String>,
    pub intercept: f64,
    /// Slopes on the original feature scale.
    pub coefficients: Vec<f64>,
    pub penalty: Penalty,
    pub standardization: Option<Standardization>,
}

impl Predictor for LinearFit {
    fn predict_row(&self, x: &[f64]) -> f64 {
        self.intercept + dot(&self.coefficients, x)
    }
}

impl LinearFit {
    pub fn residuals(&self, d: &DesignMatrix) -> Vec<f64> {
        d.rows
            .iter()
            .zip(&d.target)
            .map(|(r, y)| y - self.predict_row(r))
            .collect()
    }
}

fn centered_gram(d: &DesignMatrix, means: &[f64], ybar: f64) -> (Matrix, Vec<f64>) {
    let p = d.p();
    let mut g = Matrix::zeros(p, p);
    let mut xy = vec![0.0; p];
    for (r, y) in d.rows.iter().zip(&d.target) {
        let c: Vec<f64> = r.iter().zip(means).map(|(v, m)| v - m).collect();
        for i in 0..p {
            xy[i] += c[i] * (y - ybar);
            for j in 0..=i {
                g[(i, j)] += c[i] * c[j];
            }
        }
    }
    for i in 0..p {
        for j in 0..i {
            g[(j, i)] = g[(i, j)];
        }
    }
    (g, xy)
}

/// Columns implicated when Cholesky breaks down at column `k`: `k` itself plus
/// every earlier column with a material weight in its projection.
fn collinear_columns(d: &DesignMatrix, g: &Matrix, k: usize) -> Vec<String> {
    let mut names = Vec::new();
    if k > 0 {
        let lead = Matrix::from_rows(&(0..k).map(|i| (0..k).map(|j| g[(i, j)]).collect()).collect::<Vec<_>>());
        if let Ok(l) = cholesky(&lead, PIVOT_TOL) {
            let rhs: Vec<f64> = (0..k).map(|i| g[(i, k)]).collect();
            let w = cholesky_solve(&l, &rhs);
            let sk = g[(k, k)].sqrt().max(f64::MIN_POSITIVE);
            for (i, wi) in w.iter().enumerate() {
                if (wi * g[(i, i)].sqrt() / sk).abs() > 1e-6 {
                    names.push(d.feature_names[i].clone());
                }
            }
        }
    }
    names.push(d.feature_names[k].clone());
    names
}

fn solve_ols(d: &DesignMatrix) -> Result<(LinearFit, Matrix)> {
    let (n, p) = (d.n(), d.p());
    if n <= p + 1 {
        return Err(Error::InsufficientHistory(format!(
            "OLS needs n > p + 1, got n = {n}, p = {p}"
        )));
    }
    let means: Vec<f64> = (0..p).map(|j| mean(&d.column(j))).collect();
    let ybar = mean(&d.target);
    let (g, xy) = centered_gram(d, &means, ybar);
    let l = cholesky(&g, PIVOT_TOL).map_err(|k| Error::SingularDesign {
        columns: collinear_columns(d, &g, k),
    })?;
    let beta = cholesky_solve(&l, &xy);
    let intercept = ybar - dot(&beta, &means);
    let fit = LinearFit {
        feature_names: d.feature_names.clone(),
        intercept,
        coefficients: beta,
        penalty: Penalty::None,
        standardization: None,
    };
    Ok((fit, l))
}

pub fn fit_ols(d: &DesignMatrix) -> Result<LinearFit> {
    solve_ols(d).map(|(f, _)| f)
}

/// OLS point estimates with classical standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct OlsSummary {
    pub fit: LinearFit,
    pub intercept_se: f64,
    pub standard_errors: Vec<f64>,
    pub residual_variance: f64,
    pub df: usize,
}

pub fn ols_summary(d: &DesignMatrix) -> Result<OlsSummary> {
    let (fit, l) = solve_ols(d)?;
    let (n, p) = (d.n(), d.p());
    let df = n - p - 1;
    let rss: f64 = fit.residuals(d).iter().map(|r| r * r).sum();
    let s2 = rss / df as f64;
    let inv = cholesky_inverse(&l);
    let standard_errors: Vec<f64> = (0..p).map(|j| (s2 * inv[(j, j)]).sqrt()).collect();
    let means: Vec<f64> = (0..p).map(|j| mean(&d.column(j))).collect();
    let inv_m = inv.mul_vec(&means);
    let intercept_se = (s2 * (1.0 / n as f64 + dot(&means, &inv_m))).sqrt();
    Ok(OlsSummary {
        fit,
        intercept_se,
        standard_errors,
        residual_variance: s2,
        df,
    })
}

fn standardized(d: &DesignMatrix, st: &Standardization) -> Vec<Vec<f64>> {
    d.rows
        .iter()
        .map(|r| {
            r.iter()
                .zip(st.means.iter().zip(&st.sds))
                .map(|(v, (m, s))| if *s > 0.0 { (v - m) / s } else { 0.0 })
                .collect()
        })
        .collect()
}

fn to_original(d: &DesignMatrix, st: Standardization, beta_z: &[f64], ybar: f64, penalty: Penalty) -> LinearFit {
    let coefficients: Vec<f64> = beta_z
        .iter()
        .zip(&st.sds)
        .map(|(b, s)| if *s > 0.0 { b / s } else { 0.0 })
        .collect();
    let intercept = ybar - dot(&coefficients, &st.means);
    LinearFit {
        feature_names: d.feature_names.clone(),
        intercept,
        coefficients,
        penalty,
        standardization: Some(st),
    }
}

fn check_penalized(d: &DesignMatrix, lambda: f64) -> Result<()> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "penalty must be finite and >= 0, got {lambda}"
        )));
    }
    if d.n() < 2 {
        return Err(Error::InsufficientHistory(
            "penalized fit needs at least two rows".into(),
        ));
    }
    Ok(())
}

/// Ridge on standardized features: `(ZᵀZ + λI)β = Zᵀ(y − ȳ)`.
pub fn fit_ridge(d: &DesignMatrix, lambda: f64) -> Result<LinearFit> {
    check_penalized(d, lambda)?;
    let st = Standardization::fit(d);
    let z = standardized(d, &st);
    let ybar = mean(&d.target);
    let p = d.p();
    let mut g = Matrix::zeros(p, p);
    let mut zy = vec![0.0; p];
    for (r, y) in z.iter().zip(&d.target) {
        for i in 0..p {
            zy[i] += r[i] * (y - ybar);
            for j in 0..p {
                g[(i, j)] += r[i] * r[j];
            }
        }
    }
    for j in 0..p {
        // Constant columns are zeroed in Z; a unit pivot keeps their slope at 0.
        g[(j, j)] += if st.sds[j] > 0.0 { lambda } else { 1.0 };
    }
    let l = cholesky(&g, PIVOT_TOL).map_err(|k| Error::SingularDesign {
        columns: collinear_columns(d, &g, k),
    })?;
    let beta = cholesky_solve(&l, &zy);
    Ok(to_original(d, st, &beta, ybar, Penalty::L2(lambda)))
}

fn soft_threshold(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

/// Smallest λ at which every standardized lasso coefficient is zero.
pub fn lasso_lambda_max(d: &DesignMatrix) -> f64 {
    let st = Standardization::fit(d);
    let z = standardized(d, &st);
    let ybar = mean(&d.target);
    let n = d.n() as f64;
    (0..d.p())
        .map(|j| (z.iter().zip(&d.target).map(|(r, y)| r[j] * (y - ybar)).sum::<f64>() / n).abs())
        .fold(0.0, f64::max)
}

/// Lasso minimising `(1/2n)‖y − ȳ − Zβ‖² + λ‖β‖₁` by cyclic coordinate descent.
pub fn fit_lasso(d: &DesignMatrix, lambda: f64) -> Result<LinearFit> {
    fit_lasso_warm(d, lambda, None)
}

pub(crate) fn fit_lasso_warm(d: &DesignMatrix, lambda: f64, warm: Option<&[f64]>) -> Result<LinearFit> {
    check_penalized(d, lambda)?;
    let st = Standardization::fit(d);
    let z = standardized(d, &st);
    let ybar = mean(&d.target);
    let (n, p) = (d.n(), d.p());
    let cols: Vec<Vec<f64>> = (0..p).map(|j| z.iter().map(|r| r[j]).collect()).collect();
    let norms: Vec<f64> = cols.iter().map(|c| dot(c, c) / n as f64).collect();
    let mut beta = match warm {
        Some(w) if w.len() == p => w.to_vec(),
        _ => vec![0.0; p],
    };
    let mut resid: Vec<f64> = (0..n)
        .map(|i| d.target[i] - ybar - (0..p).map(|j| cols[j][i] * beta[j]).sum::<f64>())
        .collect();
    let mut delta = f64::INFINITY;
    for _ in 0..LASSO_MAX_SWEEPS {
        delta = 0.0;
        for j in 0..p {
            if norms[j] == 0.0 {
                beta[j] = 0.0;
                continue;
            }
            let rho = dot(&cols[j], &resid) / n as f64 + norms[j] * beta[j];
            let new = soft_threshold(rho, lambda) / norms[j];
            let step = new - beta[j];
            if step != 0.0 {
                for (r, x) in resid.iter_mut().zip(&cols[j]) {
                    *r -= x * step;
                }
                beta[j] = new;
                delta = delta.max(step.abs());
            }
        }
        if delta < LASSO_TOL {
            return Ok(to_original(d, st, &beta, ybar, Penalty::L1(lambda)));
        }
    }
    Err(Error::ConvergenceFailure { delta })
}

impl LinearFit {
    /// Slopes on the standardized scale, when the fit was penalized.
    pub fn standardized_coefficients(&self) -> Option<Vec<f64>> {
        self.standardization
            .as_ref()
            .map(|st| self.coefficients.iter().zip(&st.sds).map(|(b, s)| b * s).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn dm(names: &[&str], rows: Vec<Vec<f64>>, y: Vec<f64>) -> DesignMatrix {
        DesignMatrix::new(names.iter().map(|s| s.to_string()).collect(), rows, y).unwrap()
    }

    fn random_design(seed: u64, n: usize, p: usize) -> DesignMatrix {
        let mut rng = substream(seed, 1);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..p).map(|_| rng.sample(StandardNormal)).collect())
            .collect();
        let y = rows
            .iter()
            .map(|r: &Vec<f64>| {
                1.0 + r.iter().enumerate().map(|(j, v)| (j as f64 - 1.0) * v).sum::<f64>()
                    + 0.5 * rng.sample::<f64, _>(StandardNormal)
            })
            .collect();
        let names: Vec<String> = (0..p).map(|j| format!("x{j}")).collect();
        DesignMatrix::new(names, rows, y).unwrap()
    }

    #[test]
    fn ols_exact_line_and_constant() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let y: Vec<f64> = (0..10).map(|i| 2.0 * i as f64).collect();
        let f = fit_ols(&dm(&["x"], rows.clone(), y.clone())).unwrap();
        assert!((f.coefficients[0] - 2.0).abs() < 1e-12 && f.intercept.abs() < 1e-12);
        assert!(f
            .residuals(&dm(&["x"], rows.clone(), y))
            .iter()
            .all(|r| r.abs() < 1e-12));

        let f = fit_ols(&dm(&["x"], rows, vec![3.0; 10])).unwrap();
        assert!(f.coefficients[0].abs() < 1e-14 && (f.intercept - 3.0).abs() < 1e-12);
    }

    #[test]
    fn ols_names_collinear_columns() {
        let rows: Vec<Vec<f64>> = (0..12)
            .map(|i| {
                let a = i as f64;
                let b = ((i * 7) % 5) as f64;
                vec![a, b, (i % 3) as f64, 2.0 * a - b]
            })
            .collect();
        let y = (0..12).map(|i| i as f64).collect();
        match fit_ols(&dm(&["a", "b", "c", "d"], rows, y)) {
            Err(Error::SingularDesign { columns }) => assert_eq!(columns, vec!["a", "b", "d"]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn ols_requires_more_rows_than_params() {
        let d = random_design(1, 4, 3);
        assert!(matches!(fit_ols(&d), Err(Error::InsufficientHistory(_))));
    }

    #[test]
    fn ols_residuals_orthogonal() {
        let d = random_design(5, 40, 4);
        let f = fit_ols(&d).unwrap();
        let r = f.residuals(&d);
        assert!(r.iter().sum::<f64>().abs() < 1e-8);
        for j in 0..4 {
            assert!(dot(&r, &d.column(j)).abs() < 1e-8);
        }
    }

    #[test]
    fn ridge_zero_is_ols_and_large_kills() {
        let d = random_design(2, 30, 3);
        let o = fit_ols(&d).unwrap();
        let r = fit_ridge(&d, 0.0).unwrap();
        for (a, b) in o.coefficients.iter().zip(&r.coefficients) {
            assert!((a - b).abs() < 1e-10);
        }
        assert!((o.intercept - r.intercept).abs() < 1e-10);
        let big = fit_ridge(&d, 1e9).unwrap();
        assert!(big.coefficients.iter().all(|b| b.abs() < 1e-6));
    }

    #[test]
    fn ridge_one_dimensional_closed_form() {
        let d = random_design(3, 25, 1);
        let x = d.column(0);
        let mx = mean(&x);
        let my = mean(&d.target);
        let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
        let sxy: f64 = x.iter().zip(&d.target).map(|(v, y)| (v - mx) * (y - my)).sum();
        let b_ols = sxy / sxx;
        // On the standardized scale Σz² = n, so the shrink factor is n/(n+λ).
        let lambda = 7.0;
        let n = 25.0;
        let r = fit_ridge(&d, lambda).unwrap();
        let bz = r.standardized_coefficients().unwrap()[0];
        let sd = (sxx / n).sqrt();
        assert!((bz - b_ols * sd * n / (n + lambda)).abs() < 1e-10);
    }

    #[test]
    fn ridge_norm_decreases() {
        let d = random_design(4, 30, 4);
        let mut prev = f64::INFINITY;
        for lam in [0.0, 0.1, 1.0, 10.0, 100.0] {
            let b = fit_ridge(&d, lam).unwrap().standardized_coefficients().unwrap();
            let nrm = dot(&b, &b).sqrt();
            assert!(nrm <= prev + 1e-12);
            prev = nrm;
        }
    }

    #[test]
    fn lasso_kill_ols_limit_and_soft_threshold() {
        let d = random_design(6, 40, 3);
        let lmax = lasso_lambda_max(&d);
        let f = fit_lasso(&d, lmax * 1.0001).unwrap();
        assert!(f.coefficients.iter().all(|b| *b == 0.0));

        let o = fit_ols(&d).unwrap();
        let l = fit_lasso(&d, 0.0).unwrap();
        for (a, b) in o.coefficients.iter().zip(&l.coefficients) {
            assert!((a - b).abs() < 1e-6);
        }

        let d1 = random_design(7, 30, 1);
        let z = d1.column(0);
        let mz = mean(&z);
        let sd = (z.iter().map(|v| (v - mz).powi(2)).sum::<f64>() / 30.0).sqrt();
        let my = mean(&d1.target);
        let xty = z
            .iter()
            .zip(&d1.target)
            .map(|(v, y)| (v - mz) / sd * (y - my))
            .sum::<f64>()
            / 30.0;
        let lam = xty.abs() / 3.0;
        let b = fit_lasso(&d1, lam).unwrap().standardized_coefficients().unwrap()[0];
        assert!((b - soft_threshold(xty, lam)).abs() < 1e-12);
    }

    #[test]
    fn lasso_l1_path_monotone() {
        let d = random_design(8, 50, 5);
        let lmax = lasso_lambda_max(&d);
        let mut prev = f64::INFINITY;
        for k in 0..8 {
            let lam = lmax * 0.5f64.powi(k);
            let b = fit_lasso(&d, lam).unwrap().standardized_coefficients().unwrap();
            let l1: f64 = b.iter().map(|v| v.abs()).sum();
            assert!(l1 >= -1e-12);
            if k > 0 {
                assert!(l1 >= prev - 1e-9);
            }
            prev = l1;
        }
    }

    #[test]
    fn penalty_rejects_negative() {
        let d = random_design(9, 20, 2);
        assert!(fit_ridge(&d, -1.0).is_err());
        assert!(fit_lasso(&d, f64::NAN).is_err());
    }
}
