use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::models::DesignMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum SpecKind {
    Backward,
    Forward,
    Hybrid,
}

impl SpecKind {
    pub fn id(self) -> &'static str {
        match self {
            SpecKind::Backward => "backward",
            SpecKind::Forward => "forward",
            SpecKind::Hybrid => "hybrid",
        }
    }

    pub fn all() -> [SpecKind; 3] {
        [SpecKind::Backward, SpecKind::Forward, SpecKind::Hybrid]
    }
}

/// Regressor layout of one Phillips-curve variant.
///
/// For target `π_{t+h−1}` with `t = r + 1` and information row `r`:
/// `inflation.L1 = π_r`, `expected_inflation` is the proxy column at `r`,
/// `gap.Lk = y_{r+1−k}` and `<control>.Lk = X_{r−k}` (controls are lagged
/// from the information row, so `L0` is the latest observed value).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhillipsSpec {
    pub kind: SpecKind,
    pub gap_lags: Vec<usize>,
    pub control_lags: Vec<usize>,
    pub controls: Vec<String>,
}

impl PhillipsSpec {
    pub fn new(kind: SpecKind) -> Self {
        Self {
            kind,
            gap_lags: vec![1, 2, 3, 4],
            control_lags: vec![0, 1, 2, 3, 4],
            controls: vec!["exchange_rate".into(), "crude".into(), "rainfall".into()],
        }
    }

    pub fn id(&self) -> &'static str {
        self.kind.id()
    }

    pub fn has_lagged_inflation(&self) -> bool {
        matches!(self.kind, SpecKind::Backward | SpecKind::Hybrid)
    }

    pub fn has_expectations(&self) -> bool {
        matches!(self.kind, SpecKind::Forward | SpecKind::Hybrid)
    }

    pub fn feature_names(&self) -> Vec<String> {
        let mut names = Vec::new();
        if self.has_lagged_inflation() {
            names.push("inflation.L1".to_string());
        }
        if self.has_expectations() {
            names.push("expected_inflation".to_string());
        }
        for k in &self.gap_lags {
            names.push(format!("gap.L{k}"));
        }
        for c in &self.controls {
            for k in &self.control_lags {
                names.push(format!("{c}.L{k}"));
            }
        }
        names
    }

    fn validate(&self) -> Result<()> {
        if self.gap_lags.contains(&0) {
            return Err(Error::InvalidArgument(
                "gap lag 0 is not observed at the forecast origin; use lags >= 1".into(),
            ));
        }
        Ok(())
    }

    /// First information row at which every lag is defined.
    pub fn first_row(&self) -> usize {
        let g = self.gap_lags.iter().map(|k| k - 1).max().unwrap_or(0);
        let c = if self.controls.is_empty() {
            0
        } else {
            self.control_lags.iter().copied().max().unwrap_or(0)
        };
        g.max(c)
    }
}

struct Columns<'a> {
    inflation: Option<&'a [f64]>,
    expected: Option<&'a [f64]>,
    gap: &'a [f64],
    controls: Vec<&'a [f64]>,
}

fn columns<'a>(d: &'a Dataset, spec: &PhillipsSpec) -> Result<Columns<'a>> {
    spec.validate()?;
    Ok(Columns {
        inflation: if spec.has_lagged_inflation() {
            Some(d.column("inflation")?)
        } else {
            None
        },
        expected: if spec.has_expectations() {
            Some(d.column("expected_inflation")?)
        } else {
            None
        },
        gap: d.column("gap")?,
        controls: spec.controls.iter().map(|c| d.column(c)).collect::<Result<_>>()?,
    })
}

fn row(c: &Columns, spec: &PhillipsSpec, r: usize) -> Vec<f64> {
    let mut x = Vec::new();
    if let Some(pi) = c.inflation {
        x.push(pi[r]);
    }
    if let Some(e) = c.expected {
        x.push(e[r]);
    }
    for k in &spec.gap_lags {
        x.push(c.gap[r + 1 - k]);
    }
    for col in &c.controls {
        for k in &spec.control_lags {
            x.push(col[r - k]);
        }
    }
    x
}

/// Direct `horizon`-step design: row `r` pairs regressors known at `r` with `π_{r+horizon}`.
pub fn build_design(d: &Dataset, spec: &PhillipsSpec, horizon: usize) -> Result<DesignMatrix> {
    if horizon == 0 {
        return Err(Error::InvalidArgument("horizon must be at least 1".into()));
    }
    let c = columns(d, spec)?;
    let target = d.column("inflation")?;
    let first = spec.first_row();
    let n = d.len();
    if n < first + horizon + 1 {
        return Err(Error::InsufficientHistory(format!(
            "{} rows leave no usable design rows for horizon {horizon}",
            n
        )));
    }
    let rows: Vec<Vec<f64>> = (first..n - horizon).map(|r| row(&c, spec, r)).collect();
    let y: Vec<f64> = (first..n - horizon).map(|r| target[r + horizon]).collect();
    let idx = d.index()[first..n - horizon].to_vec();
    DesignMatrix::with_index(spec.feature_names(), rows, y, idx)
}

/// Regressors for a forecast made at the final row of `d`.
pub fn origin_features(d: &Dataset, spec: &PhillipsSpec) -> Result<Vec<f64>> {
    let c = columns(d, spec)?;
    let n = d.len();
    if n <= spec.first_row() {
        return Err(Error::InsufficientHistory("too few rows for the lag structure".into()));
    }
    Ok(row(&c, spec, n - 1))
}
