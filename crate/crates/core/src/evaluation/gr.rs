use serde::{Deserialize, Serialize};

use crate::data::{Quarter, Series};
use crate::error::{Error, Result};

const BUNDLED: &str = include_str!("../../data/gr_critical_values.csv");

/// Two-sided fluctuation-test critical values keyed by window fraction μ and level α.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrTable {
    pub entries: Vec<GrEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrEntry {
    pub mu: f64,
    pub alpha: f64,
    pub critical_value: f64,
}

impl GrTable {
    /// Table shipped in `data/gr_critical_values.csv`.
    pub fn bundled() -> Self {
        Self::from_csv(BUNDLED).expect("bundled table parses")
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(text.as_bytes());
        let entries = rdr.deserialize().collect::<std::result::Result<Vec<GrEntry>, _>>()?;
        if entries.is_empty() {
            return Err(Error::Config("critical value table is empty".into()));
        }
        Ok(Self { entries })
    }

    /// Linear interpolation in μ at a tabulated α.
    pub fn lookup(&self, mu: f64, alpha: f64) -> Result<f64> {
        let mut pts: Vec<(f64, f64)> = self
            .entries
            .iter()
            .filter(|e| (e.alpha - alpha).abs() < 1e-9)
            .map(|e| (e.mu, e.critical_value))
            .collect();
        if pts.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "no critical values tabulated for alpha = {alpha}"
            )));
        }
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (lo, hi) = (pts[0].0, pts[pts.len() - 1].0);
        if mu < lo - 1e-12 || mu > hi + 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "mu = {mu} outside the tabulated range [{lo}, {hi}]"
            )));
        }
        for w in pts.windows(2) {
            if mu <= w[1].0 {
                let t = if w[1].0 > w[0].0 {
                    (mu - w[0].0) / (w[1].0 - w[0].0)
                } else {
                    0.0
                };
                return Ok(w[0].1 + t.clamp(0.0, 1.0) * (w[1].1 - w[0].1));
            }
        }
        Ok(pts[pts.len() - 1].1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrResult {
    pub window_fraction: f64,
    pub window: usize,
    pub bandwidth: usize,
    /// Indexed by the last quarter of each window.
    pub rolling_stats: Series,
    pub critical_value: f64,
    pub alpha: f64,
    pub rejections: Vec<Quarter>,
}

/// Bartlett-kernel long-run variance with `bandwidth` lags.
pub fn hac_variance(d: &[f64], bandwidth: usize) -> f64 {
    let m = d.len() as f64;
    let mean = d.iter().sum::<f64>() / m;
    let gamma = |l: usize| -> f64 { (l..d.len()).map(|t| (d[t] - mean) * (d[t - l] - mean)).sum::<f64>() / m };
    let mut v = gamma(0);
    for l in 1..=bandwidth.min(d.len().saturating_sub(1)) {
        v += 2.0 * (1.0 - l as f64 / (bandwidth as f64 + 1.0)) * gamma(l);
    }
    v
}

/// Rolling standardized mean of `loss_a − loss_b` over windows of `⌈μ·n⌉`.
pub fn gr_fluctuation_test(loss_a: &Series, loss_b: &Series, mu: f64, alpha: f64, table: &GrTable) -> Result<GrResult> {
    if loss_a.index() != loss_b.index() {
        return Err(Error::LengthMismatch {
            left: loss_a.len(),
            right: loss_b.len(),
        });
    }
    let n = loss_a.len();
    if !(mu > 0.0 && mu < 1.0) {
        return Err(Error::InvalidArgument(format!("mu must lie in (0, 1), got {mu}")));
    }
    let m = (mu * n as f64 - 1e-9).ceil() as usize;
    if m > n || m < 4 {
        return Err(Error::WindowTooLarge { window: m.max(4), n });
    }
    let critical_value = table.lookup(mu, alpha)?;
    let bandwidth = ((m as f64).cbrt() - 1e-9).ceil() as usize;
    let d: Vec<f64> = loss_a
        .values()
        .iter()
        .zip(loss_b.values())
        .map(|(a, b)| a - b)
        .collect();
    let mut stats = Vec::with_capacity(n - m + 1);
    for end in m..=n {
        let w = &d[end - m..end];
        let mean = w.iter().sum::<f64>() / m as f64;
        let var = hac_variance(w, bandwidth);
        let stat = if mean == 0.0 {
            0.0
        } else if var <= 1e-14 * w.iter().map(|x| x * x).sum::<f64>() / m as f64 {
            return Err(Error::DegenerateVariance);
        } else {
            (m as f64).sqrt() * mean / var.sqrt()
        };
        stats.push(stat);
    }
    let index: Vec<Quarter> = loss_a.index()[m - 1..].to_vec();
    let rejections = index
        .iter()
        .zip(&stats)
        .filter(|(_, s)| s.abs() > critical_value)
        .map(|(q, _)| *q)
        .collect();
    Ok(GrResult {
        window_fraction: mu,
        window: m,
        bandwidth,
        rolling_stats: Series::new("gr_statistic", index, stats)?,
        critical_value,
        alpha,
        rejections,
    })
}
