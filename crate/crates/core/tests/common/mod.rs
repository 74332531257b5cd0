//! Dense reference computations shared by the oracle and acceptance targets.

use nalgebra::{DMatrix, DVector};

use nkpc::trend::{StatePrior, UcmParams};

/// Solves `(I + λDᵀD)τ = y` with `D` the second-difference matrix.
pub fn hp_dense(y: &[f64], lambda: f64) -> Vec<f64> {
    let n = y.len();
    let mut d = DMatrix::<f64>::zeros(n - 2, n);
    for i in 0..n - 2 {
        d[(i, i)] = 1.0;
        d[(i, i + 1)] = -2.0;
        d[(i, i + 2)] = 1.0;
    }
    let a = DMatrix::<f64>::identity(n, n) + lambda * d.transpose() * &d;
    let x = a.lu().solve(&DVector::from_column_slice(y)).unwrap();
    x.iter().copied().collect()
}

/// Log-density of y under the local linear trend, built from the full covariance.
pub fn llt_mvn_loglik(y: &[f64], p: &UcmParams, prior: &StatePrior) -> f64 {
    let n = y.len();
    let t = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
    let q = DMatrix::from_row_slice(2, 2, &[p.var_level, 0.0, 0.0, p.var_slope]);
    let mut means = Vec::with_capacity(n);
    let mut covs = Vec::with_capacity(n);
    let mut m = DVector::from_column_slice(&prior.mean);
    let mut c = DMatrix::<f64>::identity(2, 2) * prior.var;
    for _ in 0..n {
        means.push(m.clone());
        covs.push(c.clone());
        m = &t * &m;
        c = &t * &c * t.transpose() + &q;
    }
    let mut sigma = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            // Cov(α_i, α_j) = C_i (T^{j−i})ᵀ
            let mut tp = DMatrix::<f64>::identity(2, 2);
            for _ in i..j {
                tp = &t * tp;
            }
            let cross = &covs[i] * tp.transpose();
            sigma[(i, j)] = cross[(0, 0)];
            sigma[(j, i)] = cross[(0, 0)];
        }
        sigma[(i, i)] += p.var_obs;
    }
    let mu = DVector::from_iterator(n, means.iter().map(|m| m[0]));
    let r = DVector::from_column_slice(y) - mu;
    let chol = sigma.cholesky().expect("positive definite");
    let logdet: f64 = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    let z = chol.solve(&r);
    -0.5 * (n as f64 * (2.0 * std::f64::consts::PI).ln() + logdet + r.dot(&z))
}
