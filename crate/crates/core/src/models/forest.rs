use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{canonical_order, check_tree_input, grow_tree};
use super::{DesignMatrix, Predictor, Tree, TreeParams};
use crate::error::{Error, Result};
use crate::rng::substream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct ForestParams {
    pub n_trees: usize,
    /// `None` grows trees to purity.
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    /// Features tried per split; `None` means `⌈p/3⌉`.
    pub mtry: Option<usize>,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: 500,
            max_depth: None,
            min_samples_leaf: 5,
            mtry: None,
            bootstrap: true,
            seed: 0,
        }
    }
}

impl ForestParams {
    pub fn resolved_mtry(&self, p: usize) -> usize {
        self.mtry.unwrap_or_else(|| p.div_ceil(3)).clamp(1, p.max(1))
    }

    fn validate(&self, p: usize) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::InvalidArgument("n_trees must be at least 1".into()));
        }
        if let Some(m) = self.mtry {
            if m == 0 || m > p {
                return Err(Error::InvalidArgument(format!("mtry must lie in 1..={p}, got {m}")));
            }
        }
        Ok(())
    }

    fn tree_params(&self, p: usize) -> TreeParams {
        TreeParams {
            max_depth: self.max_depth,
            min_samples_leaf: self.min_samples_leaf,
            mtry: Some(self.resolved_mtry(p)),
            l2_leaf: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub params: ForestParams,
    pub trees: Vec<Tree>,
}

impl Predictor for Forest {
    fn predict_row(&self, x: &[f64]) -> f64 {
        let s: f64 = self.trees.iter().map(|t| t.predict_row(x)).sum();
        s / self.trees.len() as f64
    }
}

fn tree_b(d: &DesignMatrix, rows: &[Vec<f64>], y: &[f64], params: &ForestParams, b: usize) -> Tree {
    let mut rng = substream(params.seed, b as u64);
    let n = rows.len();
    let idx: Vec<usize> = if params.bootstrap {
        (0..n).map(|_| rng.gen_range(0..n)).collect()
    } else {
        (0..n).collect()
    };
    grow_tree(rows, y, idx, &params.tree_params(d.p()), &mut rng)
}

fn canonical(d: &DesignMatrix) -> (Vec<Vec<f64>>, Vec<f64>) {
    let order = canonical_order(d);
    (
        order.iter().map(|&i| d.rows[i].clone()).collect(),
        order.iter().map(|&i| d.target[i]).collect(),
    )
}

/// Tree `b` of the forest `fit_forest(d, params)` would grow.
pub fn fit_forest_tree(d: &DesignMatrix, params: &ForestParams, b: usize) -> Result<Tree> {
    check_tree_input(d, params.min_samples_leaf)?;
    params.validate(d.p())?;
    let (rows, y) = canonical(d);
    Ok(tree_b(d, &rows, &y, params, b))
}

/// Bagged CART forest; tree `b` draws from `substream(seed, b)`.
pub fn fit_forest(d: &DesignMatrix, params: &ForestParams) -> Result<Forest> {
    check_tree_input(d, params.min_samples_leaf)?;
    params.validate(d.p())?;
    let (rows, y) = canonical(d);
    let trees = (0..params.n_trees)
        .into_par_iter()
        .map(|b| tree_b(d, &rows, &y, params, b))
        .collect();
    Ok(Forest {
        params: params.clone(),
        trees,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::fit_tree;

    fn data(n: usize, seed: u64) -> DesignMatrix {
        let mut rng = substream(seed, 9);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..4).map(|_| rng.gen::<f64>()).collect()).collect();
        let y = rows
            .iter()
            .map(|r| 3.0 * r[0] + (r[1] > 0.5) as u8 as f64 + 0.1 * rng.gen::<f64>())
            .collect();
        DesignMatrix::new((0..4).map(|j| format!("x{j}")).collect(), rows, y).unwrap()
    }

    #[test]
    fn no_bootstrap_full_mtry_is_single_tree() {
        let d = data(40, 1);
        let p = ForestParams {
            n_trees: 7,
            bootstrap: false,
            mtry: Some(4),
            min_samples_leaf: 2,
            ..Default::default()
        };
        let f = fit_forest(&d, &p).unwrap();
        let t = fit_tree(
            &d,
            &TreeParams {
                min_samples_leaf: 2,
                ..Default::default()
            },
            0,
        )
        .unwrap();
        for r in &d.rows {
            assert!((f.predict_row(r) - t.predict_row(r)).abs() < 1e-12);
        }
    }

    #[test]
    fn predictions_within_target_range() {
        let d = data(50, 2);
        let f = fit_forest(
            &d,
            &ForestParams {
                n_trees: 30,
                ..Default::default()
            },
        )
        .unwrap();
        let lo = d.target.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = d.target.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        for x in [vec![-5.0; 4], vec![5.0; 4], vec![0.5; 4]] {
            let v = f.predict_row(&x);
            assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
        }
    }

    #[test]
    fn row_order_invariant() {
        let d = data(45, 3);
        let mut rev = d.clone();
        rev.rows.reverse();
        rev.target.reverse();
        let p = ForestParams {
            n_trees: 20,
            seed: 5,
            ..Default::default()
        };
        let a = fit_forest(&d, &p).unwrap();
        let b = fit_forest(&rev, &p).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_bad_params() {
        let d = data(20, 4);
        assert!(fit_forest(
            &d,
            &ForestParams {
                n_trees: 0,
                ..Default::default()
            }
        )
        .is_err());
        assert!(fit_forest(
            &d,
            &ForestParams {
                mtry: Some(9),
                ..Default::default()
            }
        )
        .is_err());
    }
}
