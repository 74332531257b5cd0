//! Studentized range distribution by numerical quadrature.

use statrs::function::erf::erfc;
use statrs::function::gamma::ln_gamma;

fn phi(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

fn big_phi(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, intervals: usize) -> f64 {
    let m = intervals + intervals % 2;
    let h = (b - a) / m as f64;
    let mut s = f(a) + f(b);
    for i in 1..m {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + h * i as f64);
    }
    s * h / 3.0
}

/// `P(range of k iid N(0,1) ≤ q)`.
fn range_cdf_normal(q: f64, k: usize) -> f64 {
    if q <= 0.0 {
        return 0.0;
    }
    let kf = k as f64;
    let v = simpson(
        |z| phi(z) * (big_phi(z) - big_phi(z - q)).max(0.0).powi(k as i32 - 1),
        -8.5,
        8.5 + q,
        4000,
    );
    (kf * v).clamp(0.0, 1.0)
}

/// CDF of the studentized range for `k` means; `df = None` is the limit `ν → ∞`.
pub fn studentized_range_cdf(q: f64, k: usize, df: Option<f64>) -> f64 {
    match df {
        None => range_cdf_normal(q, k),
        Some(nu) => {
            let log_c = 0.5 * nu * nu.ln() - ln_gamma(nu / 2.0) - (nu / 2.0 - 1.0) * 2f64.ln();
            let dens = |s: f64| {
                if s <= 0.0 {
                    0.0
                } else {
                    (log_c + (nu - 1.0) * s.ln() - nu * s * s / 2.0).exp()
                }
            };
            let hi = 1.0 + 12.0 / nu.sqrt();
            simpson(|s| dens(s) * range_cdf_normal(q * s, k), 0.0, hi, 600).clamp(0.0, 1.0)
        }
    }
}

/// Upper-α critical value of the studentized range, by bisection.
pub fn studentized_range_quantile(alpha: f64, k: usize, df: Option<f64>) -> f64 {
    let target = 1.0 - alpha;
    let (mut lo, mut hi) = (0.0, 30.0);
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if studentized_range_cdf(mid, k, df) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
