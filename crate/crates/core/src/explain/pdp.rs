use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{DesignMatrix, Predictor};

/// One- or two-feature partial dependence.
///
/// 1-D: `grid` has one axis, `mean_response` one row and `ice[i][g]` is row
/// `i` evaluated at grid point `g`. 2-D: `mean_response[a][b]` pairs
/// `grid[0][a]` with `grid[1][b]` and `ice` is empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdpCurve {
    pub features: Vec<String>,
    pub grid: Vec<Vec<f64>>,
    pub mean_response: Vec<Vec<f64>>,
    pub ice: Vec<Vec<f64>>,
    pub grid_resolution: usize,
}

impl PdpCurve {
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        if self.features.len() == 1 {
            s.push_str(&format!("{},pdp", self.features[0]));
            for i in 0..self.ice.len() {
                s.push_str(&format!(",ice_{i}"));
            }
            s.push('\n');
            for (g, v) in self.grid[0].iter().enumerate() {
                s.push_str(&format!("{v},{}", self.mean_response[0][g]));
                for line in &self.ice {
                    s.push_str(&format!(",{}", line[g]));
                }
                s.push('\n');
            }
        } else {
            s.push_str(&format!("{},{},pdp\n", self.features[0], self.features[1]));
            for (a, va) in self.grid[0].iter().enumerate() {
                for (b, vb) in self.grid[1].iter().enumerate() {
                    s.push_str(&format!("{va},{vb},{}\n", self.mean_response[a][b]));
                }
            }
        }
        s
    }
}

fn grid(d: &DesignMatrix, j: usize, res: usize) -> Result<Vec<f64>> {
    let col = d.column(j);
    let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return Err(Error::DegenerateFeature(d.feature_names[j].clone()));
    }
    Ok((0..res)
        .map(|g| {
            if g + 1 == res {
                hi
            } else {
                lo + (hi - lo) * g as f64 / (res - 1) as f64
            }
        })
        .collect())
}

fn check(d: &DesignMatrix, res: usize) -> Result<()> {
    if res < 2 {
        return Err(Error::InvalidArgument(format!(
            "grid resolution must be at least 2, got {res}"
        )));
    }
    if d.n() == 0 {
        return Err(Error::InsufficientHistory(
            "partial dependence needs background rows".into(),
        ));
    }
    Ok(())
}

fn responses(model: &dyn Predictor, d: &DesignMatrix, sub: &[(usize, f64)]) -> Vec<f64> {
    d.rows
        .iter()
        .map(|r| {
            let mut x = r.clone();
            for &(j, v) in sub {
                x[j] = v;
            }
            model.predict_row(&x)
        })
        .collect()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Sweeps `feature` over an equally spaced grid from its observed min to max.
pub fn pdp(model: &dyn Predictor, d: &DesignMatrix, feature: &str, grid_resolution: usize) -> Result<PdpCurve> {
    check(d, grid_resolution)?;
    let j = d.feature_index(feature)?;
    let g = grid(d, j, grid_resolution)?;
    let cols: Vec<Vec<f64>> = g.par_iter().map(|&v| responses(model, d, &[(j, v)])).collect();
    let ice: Vec<Vec<f64>> = (0..d.n()).map(|i| cols.iter().map(|c| c[i]).collect()).collect();
    Ok(PdpCurve {
        features: vec![feature.to_string()],
        mean_response: vec![cols.iter().map(|c| mean(c)).collect()],
        grid: vec![g],
        ice,
        grid_resolution,
    })
}

pub fn pdp2(model: &dyn Predictor, d: &DesignMatrix, f1: &str, f2: &str, grid_resolution: usize) -> Result<PdpCurve> {
    check(d, grid_resolution)?;
    let (j1, j2) = (d.feature_index(f1)?, d.feature_index(f2)?);
    if j1 == j2 {
        return Err(Error::InvalidArgument(
            "two-way partial dependence needs two distinct features".into(),
        ));
    }
    let (g1, g2) = (grid(d, j1, grid_resolution)?, grid(d, j2, grid_resolution)?);
    let mean_response = g1
        .par_iter()
        .map(|&a| {
            g2.iter()
                .map(|&b| mean(&responses(model, d, &[(j1, a), (j2, b)])))
                .collect()
        })
        .collect();
    Ok(PdpCurve {
        features: vec![f1.to_string(), f2.to_string()],
        grid: vec![g1, g2],
        mean_response,
        ice: Vec::new(),
        grid_resolution,
    })
}

/// `max |PD₁₂(a,b) − PD₁(a) − PD₂(b) − c|` with `c` the mean of the residual
/// surface; zero for any model additive in the pair.
pub fn pdp_interaction(
    model: &dyn Predictor,
    d: &DesignMatrix,
    f1: &str,
    f2: &str,
    grid_resolution: usize,
) -> Result<f64> {
    let p12 = pdp2(model, d, f1, f2, grid_resolution)?;
    let p1 = pdp(model, d, f1, grid_resolution)?;
    let p2 = pdp(model, d, f2, grid_resolution)?;
    let mut r = Vec::with_capacity(grid_resolution * grid_resolution);
    for a in 0..grid_resolution {
        for b in 0..grid_resolution {
            r.push(p12.mean_response[a][b] - p1.mean_response[0][a] - p2.mean_response[0][b]);
        }
    }
    let c = mean(&r);
    Ok(r.iter().map(|v| (v - c).abs()).fold(0.0, f64::max))
}
