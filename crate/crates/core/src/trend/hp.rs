use super::{Method, TrendCycleDecomposition};
use crate::data::Series;
use crate::error::{Error, Result};

pub const DEFAULT_LAMBDA: f64 = 1600.0;

/// Coefficient bands of `I + λ·DᵀD` where `D` is the (n−2)×n second-difference operator.
///
/// Returns `(diag, off1, off2)` with `off1[i] = A[i][i+1]`, `off2[i] = A[i][i+2]`.
pub fn hp_bands(n: usize, lambda: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let mut d = vec![1.0; n];
    let mut e = vec![0.0; n.saturating_sub(1)];
    let mut f = vec![0.0; n.saturating_sub(2)];
    // Each row r of D is (1, −2, 1) at columns r, r+1, r+2.
    let row = [1.0, -2.0, 1.0];
    for r in 0..n.saturating_sub(2) {
        for a in 0..3 {
            for b in a..3 {
                let v = lambda * row[a] * row[b];
                match b - a {
                    0 => d[r + a] += v,
                    1 => e[r + a] += v,
                    _ => f[r + a] += v,
                }
            }
        }
    }
    (d, e, f)
}

/// Solve a symmetric pentadiagonal system by banded LDLᵀ elimination.
pub fn solve_symmetric_pentadiagonal(diag: &[f64], off1: &[f64], off2: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    // L is unit lower triangular with two sub-diagonals (l1, l2), D diagonal.
    let mut dd = vec![0.0; n];
    let mut l1 = vec![0.0; n];
    let mut l2 = vec![0.0; n];
    for i in 0..n {
        let a1 = if i >= 1 { off1[i - 1] } else { 0.0 };
        let a2 = if i >= 2 { off2[i - 2] } else { 0.0 };
        // A[i][i-2] = l2[i]·d[i-2]
        if i >= 2 {
            l2[i] = a2 / dd[i - 2];
        }
        // A[i][i-1] = l1[i]·d[i-1] + l2[i]·d[i-2]·l1[i-1]
        if i >= 1 {
            let corr = if i >= 2 { l2[i] * dd[i - 2] * l1[i - 1] } else { 0.0 };
            l1[i] = (a1 - corr) / dd[i - 1];
        }
        let mut di = diag[i];
        if i >= 1 {
            di -= l1[i] * l1[i] * dd[i - 1];
        }
        if i >= 2 {
            di -= l2[i] * l2[i] * dd[i - 2];
        }
        dd[i] = di;
    }
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut s = rhs[i];
        if i >= 1 {
            s -= l1[i] * y[i - 1];
        }
        if i >= 2 {
            s -= l2[i] * y[i - 2];
        }
        y[i] = s;
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = y[i] / dd[i];
        if i + 1 < n {
            s -= l1[i + 1] * x[i + 1];
        }
        if i + 2 < n {
            s -= l2[i + 2] * x[i + 2];
        }
        x[i] = s;
    }
    x
}

/// Hodrick–Prescott filter: the trend minimises Σ(s−τ)² + λΣ(Δ²τ)².
pub fn hp_filter(s: &Series, lambda: f64) -> Result<TrendCycleDecomposition> {
    if s.len() < 4 {
        return Err(Error::InsufficientHistory(format!(
            "HP filter needs at least 4 observations, got {}",
            s.len()
        )));
    }
    if !(lambda > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "HP lambda must be positive, got {lambda}"
        )));
    }
    let (d, e, f) = hp_bands(s.len(), lambda);
    let trend = solve_symmetric_pentadiagonal(&d, &e, &f, s.values());
    TrendCycleDecomposition::from_trend(s, trend, Method::Hp { lambda })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_series_is_its_own_trend() {
        let s = Series::from_start(
            "x",
            "2000Q1".parse().unwrap(),
            (0..30).map(|t| 2.0 - 0.3 * t as f64).collect(),
        )
        .unwrap();
        for lambda in [1.0, 1600.0, 1e6] {
            let d = hp_filter(&s, lambda).unwrap();
            for c in d.cycle.values() {
                assert!(c.abs() < 1e-8, "lambda {lambda}: cycle {c}");
            }
        }
    }

    #[test]
    fn constant_series() {
        let s = Series::from_start("x", "2000Q1".parse().unwrap(), vec![4.2; 12]).unwrap();
        let d = hp_filter(&s, 1600.0).unwrap();
        for t in d.trend.values() {
            assert!((t - 4.2).abs() < 1e-10);
        }
    }

    #[test]
    fn too_short() {
        let s = Series::from_start("x", "2000Q1".parse().unwrap(), vec![1.0, 2.0, 3.0]).unwrap();
        assert!(matches!(hp_filter(&s, 1600.0), Err(Error::InsufficientHistory(_))));
    }
}
