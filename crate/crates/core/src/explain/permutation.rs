use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::rmse;
use crate::models::{DesignMatrix, Predictor};
use crate::rng::{mix, substream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Importance {
    pub feature: String,
    pub mean: f64,
    /// Sample standard deviation over repeats (0 for a single repeat).
    pub sd: f64,
    pub values: Vec<f64>,
}

/// Increase in RMSE after shuffling each column, so positive means the feature helps.
///
/// Repeat `r` of feature `j` shuffles with `substream(seed, mix(j, r))`.
pub fn permutation_importance(
    model: &dyn Predictor,
    d: &DesignMatrix,
    repeats: usize,
    seed: u64,
) -> Result<Vec<Importance>> {
    if repeats == 0 {
        return Err(Error::InvalidArgument("repeats must be at least 1".into()));
    }
    let base = rmse(&d.target, &model.predict(&d.rows))?;
    (0..d.p())
        .map(|j| {
            let values: Vec<f64> = (0..repeats)
                .into_par_iter()
                .map(|r| {
                    let mut col = d.column(j);
                    col.shuffle(&mut substream(seed, mix(j as u64, r as u64)));
                    let rows: Vec<Vec<f64>> = d
                        .rows
                        .iter()
                        .zip(&col)
                        .map(|(row, v)| {
                            let mut x = row.clone();
                            x[j] = *v;
                            x
                        })
                        .collect();
                    rmse(&d.target, &model.predict(&rows)).map(|m| m - base)
                })
                .collect::<Result<_>>()?;
            let mean = values.iter().sum::<f64>() / repeats as f64;
            let sd = if repeats > 1 {
                (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (repeats - 1) as f64).sqrt()
            } else {
                0.0
            };
            Ok(Importance {
                feature: d.feature_names[j].clone(),
                mean,
                sd,
                values,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn design() -> DesignMatrix {
        let rows: Vec<Vec<f64>> = (0..60)
            .map(|i| vec![(i as f64 * 0.37).sin(), ((i * 7 % 13) as f64) / 13.0])
            .collect();
        let y = rows.iter().map(|r| r[0]).collect();
        DesignMatrix::new(vec!["x1".into(), "noise".into()], rows, y).unwrap()
    }

    #[test]
    fn used_feature_matters_unused_does_not() {
        let d = design();
        let f = |x: &[f64]| x[0];
        let imp = permutation_importance(&f, &d, 20, 3).unwrap();
        assert!(imp[0].mean > 0.3);
        assert_eq!(imp[1].mean, 0.0);
        assert_eq!(imp[1].sd, 0.0);
        assert_eq!(imp[0].values.len(), 20);
    }

    #[test]
    fn seeded_and_validated() {
        let d = design();
        let f = |x: &[f64]| x[0] + x[1];
        assert_eq!(
            permutation_importance(&f, &d, 5, 9).unwrap(),
            permutation_importance(&f, &d, 5, 9).unwrap()
        );
        assert!(permutation_importance(&f, &d, 0, 9).is_err());
    }
}
