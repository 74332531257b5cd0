use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use super::tree::{canonical_order, check_tree_input, grow_tree};
use super::{DesignMatrix, Predictor, Tree, TreeParams};
use crate::error::{Error, Result};
use crate::linalg::canonical_sum;
use crate::rng::substream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct GbtParams {
    pub n_rounds: usize,
    /// Shrinkage η in (0, 1].
    pub learning_rate: f64,
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    /// L2 penalty λ on leaf values.
    pub l2_leaf: f64,
    /// Fraction of rows drawn without replacement per round.
    pub subsample: f64,
    pub seed: u64,
}

impl Default for GbtParams {
    fn default() -> Self {
        Self {
            n_rounds: 200,
            learning_rate: 0.05,
            max_depth: Some(3),
            min_samples_leaf: 3,
            l2_leaf: 1.0,
            subsample: 1.0,
            seed: 0,
        }
    }
}

impl GbtParams {
    fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "learning_rate must lie in (0, 1], got {}",
                self.learning_rate
            )));
        }
        if !(self.l2_leaf >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "l2_leaf must be >= 0, got {}",
                self.l2_leaf
            )));
        }
        if !(self.subsample > 0.0 && self.subsample <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "subsample must lie in (0, 1], got {}",
                self.subsample
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbtModel {
    pub params: GbtParams,
    pub base_score: f64,
    pub trees: Vec<Tree>,
}

impl Predictor for GbtModel {
    fn predict_row(&self, x: &[f64]) -> f64 {
        let s: f64 = self.trees.iter().map(|t| t.predict_row(x)).sum();
        self.base_score + self.params.learning_rate * s
    }
}

/// Squared-error gradient boosting.
///
/// The squared-loss Hessian is the constant 1, so the second-order objective
/// with penalty `Ω(f) = λ/2·Σw²` reduces to least-squares trees on the residuals
/// whose leaves are `Σr/(n+λ)` and whose split gain is `Σ_side S²/(n+λ)`.
pub fn fit_gbt(d: &DesignMatrix, params: &GbtParams) -> Result<GbtModel> {
    check_tree_input(d, params.min_samples_leaf)?;
    params.validate()?;
    let order = canonical_order(d);
    let rows: Vec<Vec<f64>> = order.iter().map(|&i| d.rows[i].clone()).collect();
    let y: Vec<f64> = order.iter().map(|&i| d.target[i]).collect();
    let n = y.len();
    let base_score = canonical_sum(&y) / n as f64;
    let tp = TreeParams {
        max_depth: params.max_depth,
        min_samples_leaf: params.min_samples_leaf,
        mtry: None,
        l2_leaf: params.l2_leaf,
    };
    let keep = ((params.subsample * n as f64).ceil() as usize).clamp(2 * params.min_samples_leaf.max(1), n);
    let mut fitted = vec![base_score; n];
    let mut trees = Vec::with_capacity(params.n_rounds);
    for round in 0..params.n_rounds {
        let mut rng = substream(params.seed, round as u64);
        let resid: Vec<f64> = y.iter().zip(&fitted).map(|(a, b)| a - b).collect();
        let idx: Vec<usize> = if keep < n {
            let mut s = sample(&mut rng, n, keep).into_vec();
            s.sort_unstable();
            s
        } else {
            (0..n).collect()
        };
        let tree = grow_tree(&rows, &resid, idx, &tp, &mut rng);
        for (f, r) in fitted.iter_mut().zip(&rows) {
            *f += params.learning_rate * tree.predict_row(r);
        }
        trees.push(tree);
    }
    Ok(GbtModel {
        params: params.clone(),
        base_score,
        trees,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::TreeNode;

    fn dm(rows: Vec<Vec<f64>>, y: Vec<f64>) -> DesignMatrix {
        let p = rows[0].len();
        DesignMatrix::new((0..p).map(|j| format!("x{j}")).collect(), rows, y).unwrap()
    }

    #[test]
    fn zero_rounds_predicts_mean() {
        let d = dm((0..5).map(|i| vec![i as f64]).collect(), vec![1.0, 2.0, 3.0, 4.0, 10.0]);
        let m = fit_gbt(
            &d,
            &GbtParams {
                n_rounds: 0,
                min_samples_leaf: 1,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(m.predict_row(&[2.0]), 4.0);
    }

    #[test]
    fn exact_interpolation_two_values() {
        let d = dm(
            vec![vec![0.0], vec![0.0], vec![1.0], vec![1.0], vec![1.0]],
            vec![2.0, 2.0, 7.0, 7.0, 7.0],
        );
        let p = GbtParams {
            n_rounds: 1,
            learning_rate: 1.0,
            max_depth: None,
            min_samples_leaf: 1,
            l2_leaf: 0.0,
            ..Default::default()
        };
        let m = fit_gbt(&d, &p).unwrap();
        for (r, y) in d.rows.iter().zip(&d.target) {
            assert!((m.predict_row(r) - y).abs() < 1e-12);
        }
    }

    #[test]
    fn regularised_leaf_value() {
        let y = vec![1.0, 2.0, 3.0, 4.0, 10.0, 11.0, 12.0, 20.0];
        let d = dm((0..8).map(|i| vec![i as f64]).collect(), y.clone());
        let lambda = 2.5;
        let p = GbtParams {
            n_rounds: 1,
            learning_rate: 1.0,
            max_depth: Some(1),
            min_samples_leaf: 4,
            l2_leaf: lambda,
            ..Default::default()
        };
        let m = fit_gbt(&d, &p).unwrap();
        let base = y.iter().sum::<f64>() / 8.0;
        let left: f64 = y[..4].iter().map(|v| v - base).sum();
        let right: f64 = y[4..].iter().map(|v| v - base).sum();
        let t = &m.trees[0];
        assert!(matches!(t.nodes[0], TreeNode::Split { .. }));
        let leaves: Vec<(f64, usize)> = t.leaves().collect();
        assert_eq!(leaves.len(), 2);
        assert!(leaves.iter().all(|l| l.1 == 4));
        assert!((t.predict_row(&[0.0]) - left / (4.0 + lambda)).abs() < 1e-12);
        assert!((t.predict_row(&[7.0]) - right / (4.0 + lambda)).abs() < 1e-12);
    }

    #[test]
    fn deterministic_and_order_free() {
        let rows: Vec<Vec<f64>> = (0..30).map(|i| vec![(i as f64 * 0.37).sin(), (i % 4) as f64]).collect();
        let y: Vec<f64> = rows.iter().map(|r| r[0] * 2.0 + r[1]).collect();
        let d = dm(rows, y);
        let p = GbtParams {
            n_rounds: 20,
            subsample: 0.7,
            seed: 3,
            ..Default::default()
        };
        let a = fit_gbt(&d, &p).unwrap();
        let mut rev = d.clone();
        rev.rows.reverse();
        rev.target.reverse();
        assert_eq!(a, fit_gbt(&rev, &p).unwrap());
        assert!(fit_gbt(
            &d,
            &GbtParams {
                learning_rate: 0.0,
                ..p
            }
        )
        .is_err());
    }
}
