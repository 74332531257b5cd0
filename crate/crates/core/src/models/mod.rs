//! Forecasters behind one fit/predict contract.

mod forest;
mod gbt;
mod linear;
mod tree;
mod ts;
pub mod tune;

pub use forest::{fit_forest, fit_forest_tree, Forest, ForestParams};
pub use gbt::{fit_gbt, GbtModel, GbtParams};
pub use linear::{fit_lasso, fit_ols, fit_ridge, lasso_lambda_max, ols_summary, LinearFit, OlsSummary, Penalty};
pub use tree::{best_split, fit_tree, Split, Tree, TreeNode, TreeParams};
pub use ts::{fit_ar, fit_var, predict_recursive_ar, predict_recursive_var, ArFit, VarFit};

use serde::{Deserialize, Serialize};

use crate::data::Quarter;
use crate::error::{Error, Result};

/// Regressor matrix plus target, one row per observation.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    pub feature_names: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub target: Vec<f64>,
    pub origin_index: Vec<Quarter>,
}

impl DesignMatrix {
    pub fn new(feature_names: Vec<String>, rows: Vec<Vec<f64>>, target: Vec<f64>) -> Result<Self> {
        let start: Quarter = "2000Q1".parse().expect("literal quarter");
        let idx = (0..rows.len() as i64).map(|k| start.offset(k)).collect();
        Self::with_index(feature_names, rows, target, idx)
    }

    pub fn with_index(
        feature_names: Vec<String>,
        rows: Vec<Vec<f64>>,
        target: Vec<f64>,
        origin_index: Vec<Quarter>,
    ) -> Result<Self> {
        if rows.len() != target.len() {
            return Err(Error::LengthMismatch {
                left: rows.len(),
                right: target.len(),
            });
        }
        if origin_index.len() != rows.len() {
            return Err(Error::LengthMismatch {
                left: rows.len(),
                right: origin_index.len(),
            });
        }
        let p = feature_names.len();
        for (i, r) in rows.iter().enumerate() {
            if r.len() != p {
                return Err(Error::LengthMismatch {
                    left: p,
                    right: r.len(),
                });
            }
            if r.iter().any(|v| !v.is_finite()) || !target[i].is_finite() {
                return Err(Error::InvalidArgument(format!("non-finite entry in design row {i}")));
            }
        }
        Ok(Self {
            feature_names,
            rows,
            target,
            origin_index,
        })
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn p(&self) -> usize {
        self.feature_names.len()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[j]).collect()
    }

    pub fn feature_index(&self, name: &str) -> Result<usize> {
        self.feature_names
            .iter()
            .position(|f| f == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    }

    /// Rows selected by position (repeats allowed).
    pub fn select(&self, idx: &[usize]) -> DesignMatrix {
        DesignMatrix {
            feature_names: self.feature_names.clone(),
            rows: idx.iter().map(|&i| self.rows[i].clone()).collect(),
            target: idx.iter().map(|&i| self.target[i]).collect(),
            origin_index: idx.iter().map(|&i| self.origin_index[i]).collect(),
        }
    }
}

/// Anything that maps a feature row to a prediction.
pub trait Predictor: Sync {
    fn predict_row(&self, x: &[f64]) -> f64;

    fn predict(&self, rows: &[Vec<f64>]) -> Vec<f64> {
        rows.iter().map(|r| self.predict_row(r)).collect()
    }
}

impl<F: Fn(&[f64]) -> f64 + Sync> Predictor for F {
    fn predict_row(&self, x: &[f64]) -> f64 {
        self(x)
    }
}

/// A fitted cross-sectional model, serialisable for re-scoring.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FittedModel {
    Linear(LinearFit),
    Tree(Tree),
    Forest(Forest),
    Gbt(GbtModel),
}

impl Predictor for FittedModel {
    fn predict_row(&self, x: &[f64]) -> f64 {
        match self {
            FittedModel::Linear(m) => m.predict_row(x),
            FittedModel::Tree(m) => m.predict_row(x),
            FittedModel::Forest(m) => m.predict_row(x),
            FittedModel::Gbt(m) => m.predict_row(x),
        }
    }
}

impl FittedModel {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}
