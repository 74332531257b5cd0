use serde::{Deserialize, Serialize};

use super::linear::fit_ols;
use super::{DesignMatrix, LinearFit, Predictor};
use crate::data::Series;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArFit {
    pub p: usize,
    /// Regressors ordered `L1, …, Lp`.
    pub fit: LinearFit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarFit {
    pub variables: Vec<String>,
    pub p: usize,
    /// One equation per variable; regressors ordered lag-major, `v.L1` for every `v`, then `L2`, ….
    pub equations: Vec<LinearFit>,
}

fn check_length(n: usize, p: usize) -> Result<()> {
    if p == 0 {
        return Err(Error::InvalidArgument("lag order must be at least 1".into()));
    }
    if n <= 20.max(3 * p) {
        return Err(Error::InsufficientHistory(format!(
            "lag order {p} needs more than {} observations, got {n}",
            20.max(3 * p)
        )));
    }
    Ok(())
}

pub fn fit_ar(s: &Series, p: usize) -> Result<ArFit> {
    let y = s.values();
    check_length(y.len(), p)?;
    let names = (1..=p).map(|k| format!("{}.L{k}", s.name)).collect();
    let rows = (p..y.len()).map(|t| (1..=p).map(|k| y[t - k]).collect()).collect();
    let d = DesignMatrix::with_index(names, rows, y[p..].to_vec(), s.index()[p..].to_vec())?;
    Ok(ArFit { p, fit: fit_ols(&d)? })
}

pub fn fit_var(cols: &[Series], p: usize) -> Result<VarFit> {
    let Some(first) = cols.first() else {
        return Err(Error::InvalidArgument("VAR needs at least one variable".into()));
    };
    for c in cols {
        if c.index() != first.index() {
            return Err(Error::LengthMismatch {
                left: first.len(),
                right: c.len(),
            });
        }
    }
    let n = first.len();
    check_length(n, p)?;
    let mut names = Vec::new();
    for k in 1..=p {
        for c in cols {
            names.push(format!("{}.L{k}", c.name));
        }
    }
    let rows: Vec<Vec<f64>> = (p..n).map(|t| lag_row(cols.iter().map(|c| c.values()), t, p)).collect();
    let equations = cols
        .iter()
        .map(|c| {
            let d = DesignMatrix::with_index(
                names.clone(),
                rows.clone(),
                c.values()[p..].to_vec(),
                first.index()[p..].to_vec(),
            )?;
            fit_ols(&d)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(VarFit {
        variables: cols.iter().map(|c| c.name.clone()).collect(),
        p,
        equations,
    })
}

fn lag_row<'a>(vars: impl Iterator<Item = &'a [f64]> + Clone, t: usize, p: usize) -> Vec<f64> {
    let mut row = Vec::new();
    for k in 1..=p {
        for v in vars.clone() {
            row.push(v[t - k]);
        }
    }
    row
}

/// Iterate the fitted AR equation `h` steps past the end of `history`.
pub fn predict_recursive_ar(m: &ArFit, history: &[f64], h: usize) -> Result<Vec<f64>> {
    if history.len() < m.p {
        return Err(Error::InsufficientHistory(format!("AR({}) needs {} lags", m.p, m.p)));
    }
    let mut path = history[history.len() - m.p..].to_vec();
    let mut out = Vec::with_capacity(h);
    for _ in 0..h {
        let x: Vec<f64> = (1..=m.p).map(|k| path[path.len() - k]).collect();
        let y = m.fit.predict_row(&x);
        path.push(y);
        out.push(y);
    }
    Ok(out)
}

/// Iterate the VAR `h` steps; `history[v]` is the observed path of variable `v`.
/// Returns one vector of all variables per step.
pub fn predict_recursive_var(m: &VarFit, history: &[Vec<f64>], h: usize) -> Result<Vec<Vec<f64>>> {
    if history.len() != m.variables.len() {
        return Err(Error::LengthMismatch {
            left: m.variables.len(),
            right: history.len(),
        });
    }
    let mut paths: Vec<Vec<f64>> = history
        .iter()
        .map(|v| {
            if v.len() < m.p {
                Err(Error::InsufficientHistory(format!("VAR({}) needs {} lags", m.p, m.p)))
            } else {
                Ok(v[v.len() - m.p..].to_vec())
            }
        })
        .collect::<Result<_>>()?;
    let mut out = Vec::with_capacity(h);
    for _ in 0..h {
        let t = paths[0].len();
        let x = lag_row(paths.iter().map(|v| v.as_slice()), t, m.p);
        let step: Vec<f64> = m.equations.iter().map(|e| e.predict_row(&x)).collect();
        for (path, y) in paths.iter_mut().zip(&step) {
            path.push(*y);
        }
        out.push(step);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn ser(name: &str, v: Vec<f64>) -> Series {
        Series::from_start(name, "1990Q1".parse().unwrap(), v).unwrap()
    }

    #[test]
    fn noiseless_ar1() {
        let y: Vec<f64> = (0..30).map(|t| 10.0 * 0.5f64.powi(t)).collect();
        let m = fit_ar(&ser("y", y), 1).unwrap();
        assert!((m.fit.coefficients[0] - 0.5).abs() < 1e-9);
        assert!(m.fit.intercept.abs() < 1e-9);
    }

    #[test]
    fn white_noise_ar1_near_zero() {
        let mut rng = substream(11, 0);
        let n = 400;
        let y: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let m = fit_ar(&ser("e", y), 1).unwrap();
        assert!(m.fit.coefficients[0].abs() < 2.0 / (n as f64).sqrt());
    }

    #[test]
    fn length_precondition() {
        let y = vec![1.0; 20];
        assert!(matches!(fit_ar(&ser("y", y), 1), Err(Error::InsufficientHistory(_))));
        let y: Vec<f64> = (0..30).map(|t| t as f64).collect();
        assert!(matches!(fit_ar(&ser("y", y), 10), Err(Error::InsufficientHistory(_))));
    }

    #[test]
    fn recursive_closed_forms() {
        let m = ArFit {
            p: 1,
            fit: LinearFit {
                feature_names: vec!["y.L1".into()],
                intercept: 0.0,
                coefficients: vec![0.8],
                penalty: super::super::Penalty::None,
                standardization: None,
            },
        };
        let f = predict_recursive_ar(&m, &[1.0, 2.0], 4).unwrap();
        for (h, v) in f.iter().enumerate() {
            assert!((v - 0.8f64.powi(h as i32 + 1) * 2.0).abs() < 1e-12);
        }
        let rw = ArFit {
            fit: LinearFit {
                coefficients: vec![1.0],
                ..m.fit.clone()
            },
            ..m
        };
        assert_eq!(predict_recursive_ar(&rw, &[3.5], 5).unwrap(), vec![3.5; 5]);
    }

    #[test]
    fn var_recovers_companion_and_two_step() {
        let a = [[0.5, 0.2], [-0.1, 0.4]];
        let c = [0.3, -0.2];
        let mut rng = substream(21, 0);
        let (mut x, mut z) = (vec![0.0], vec![0.0]);
        for t in 1..300 {
            let e1: f64 = rng.sample(StandardNormal);
            let e2: f64 = rng.sample(StandardNormal);
            x.push(c[0] + a[0][0] * x[t - 1] + a[0][1] * z[t - 1] + 0.5 * e1);
            z.push(c[1] + a[1][0] * x[t - 1] + a[1][1] * z[t - 1] + 0.5 * e2);
        }
        let m = fit_var(&[ser("x", x.clone()), ser("z", z.clone())], 1).unwrap();
        for (eq, row) in m.equations.iter().zip(&a) {
            for (b, want) in eq.coefficients.iter().zip(row) {
                assert!((b - want).abs() < 0.1);
            }
        }
        let ah: Vec<[f64; 2]> = m
            .equations
            .iter()
            .map(|e| [e.coefficients[0], e.coefficients[1]])
            .collect();
        let ch: Vec<f64> = m.equations.iter().map(|e| e.intercept).collect();
        let y = [*x.last().unwrap(), *z.last().unwrap()];
        let f = predict_recursive_var(&m, &[x, z], 2).unwrap();
        for i in 0..2 {
            let a2y: f64 = (0..2)
                .map(|k| (0..2).map(|j| ah[i][j] * ah[j][k]).sum::<f64>() * y[k])
                .sum();
            let ipa_c: f64 = ch[i] + (0..2).map(|j| ah[i][j] * ch[j]).sum::<f64>();
            assert!((f[1][i] - (a2y + ipa_c)).abs() < 1e-10);
        }
    }
}
