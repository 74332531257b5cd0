use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use super::{DesignMatrix, Predictor};
use crate::error::{Error, Result};
use crate::linalg::canonical_sum;
use crate::rng::{substream, StreamRng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct TreeParams {
    /// `None` grows until leaves are pure or too small.
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    /// Features drawn per split; `None` uses all.
    pub mtry: Option<usize>,
    /// Leaf value is `Σy / (n + l2_leaf)`; split gain uses the same shrinkage.
    pub l2_leaf: f64,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            max_depth: None,
            min_samples_leaf: 1,
            mtry: None,
            l2_leaf: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    Leaf {
        value: f64,
        n: usize,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// Binary regression tree in a flat arena; node 0 is the root and rows with
/// `x[feature] <= threshold` go left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "TreeArrays", try_from = "TreeArrays")]
pub struct Tree {
    pub nodes: Vec<TreeNode>,
    pub n_features: usize,
}

/// Column layout used for serialisation; `feature = -1` marks a leaf.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct TreeArrays {
    n_features: usize,
    feature: Vec<i64>,
    threshold: Vec<f64>,
    left: Vec<i64>,
    right: Vec<i64>,
    value: Vec<f64>,
    n: Vec<usize>,
}

impl From<Tree> for TreeArrays {
    fn from(t: Tree) -> Self {
        let mut a = TreeArrays {
            n_features: t.n_features,
            feature: vec![],
            threshold: vec![],
            left: vec![],
            right: vec![],
            value: vec![],
            n: vec![],
        };
        for node in &t.nodes {
            match *node {
                TreeNode::Leaf { value, n } => {
                    a.feature.push(-1);
                    a.threshold.push(0.0);
                    a.left.push(-1);
                    a.right.push(-1);
                    a.value.push(value);
                    a.n.push(n);
                }
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    a.feature.push(feature as i64);
                    a.threshold.push(threshold);
                    a.left.push(left as i64);
                    a.right.push(right as i64);
                    a.value.push(0.0);
                    a.n.push(0);
                }
            }
        }
        a
    }
}

impl TryFrom<TreeArrays> for Tree {
    type Error = String;

    fn try_from(a: TreeArrays) -> std::result::Result<Self, String> {
        let m = a.feature.len();
        if [a.threshold.len(), a.left.len(), a.right.len(), a.value.len(), a.n.len()]
            .iter()
            .any(|&l| l != m)
        {
            return Err("tree arrays have unequal lengths".into());
        }
        let mut nodes = Vec::with_capacity(m);
        for i in 0..m {
            if a.feature[i] < 0 {
                nodes.push(TreeNode::Leaf {
                    value: a.value[i],
                    n: a.n[i],
                });
            } else {
                let (l, r) = (a.left[i], a.right[i]);
                if l <= i as i64 || r <= i as i64 || l as usize >= m || r as usize >= m {
                    return Err(format!("node {i} has invalid children"));
                }
                if a.feature[i] as usize >= a.n_features {
                    return Err(format!("node {i} splits on unknown feature"));
                }
                nodes.push(TreeNode::Split {
                    feature: a.feature[i] as usize,
                    threshold: a.threshold[i],
                    left: l as usize,
                    right: r as usize,
                });
            }
        }
        if nodes.is_empty() {
            return Err("tree has no nodes".into());
        }
        Ok(Tree {
            nodes,
            n_features: a.n_features,
        })
    }
}

impl Predictor for Tree {
    fn predict_row(&self, x: &[f64]) -> f64 {
        let mut k = 0;
        loop {
            match self.nodes[k] {
                TreeNode::Leaf { value, .. } => return value,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => k = if x[feature] <= threshold { left } else { right },
            }
        }
    }
}

impl Tree {
    pub fn depth(&self) -> usize {
        fn go(t: &Tree, k: usize) -> usize {
            match t.nodes[k] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + go(t, left).max(go(t, right)),
            }
        }
        go(self, 0)
    }

    pub fn leaves(&self) -> impl Iterator<Item = (f64, usize)> + '_ {
        self.nodes.iter().filter_map(|n| match *n {
            TreeNode::Leaf { value, n } => Some((value, n)),
            _ => None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Split {
    pub feature: usize,
    pub threshold: f64,
    /// `S_L²/(n_L+λ) + S_R²/(n_R+λ)`; larger is better.
    pub score: f64,
    pub n_left: usize,
}

fn midpoint(a: f64, b: f64) -> f64 {
    let m = a + (b - a) / 2.0;
    if m >= b {
        a
    } else {
        m
    }
}

/// Best split of rows `idx` over `features`. Candidates are midpoints between
/// consecutive distinct values; ties go to the lower feature index, then the
/// lower threshold.
pub fn best_split(
    rows: &[Vec<f64>],
    y: &[f64],
    idx: &[usize],
    features: &[usize],
    min_samples_leaf: usize,
    l2_leaf: f64,
) -> Option<Split> {
    let n = idx.len();
    let msl = min_samples_leaf.max(1);
    if n < 2 * msl {
        return None;
    }
    let mut best: Option<Split> = None;
    let mut pairs: Vec<(f64, f64)> = Vec::with_capacity(n);
    for &f in features {
        pairs.clear();
        pairs.extend(idx.iter().map(|&i| (rows[i][f], y[i])));
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        let total: f64 = pairs.iter().map(|p| p.1).sum();
        let mut left = 0.0;
        for i in 0..n - 1 {
            left += pairs[i].1;
            let nl = i + 1;
            let nr = n - nl;
            if nl < msl || nr < msl || !(pairs[i].0 < pairs[i + 1].0) {
                continue;
            }
            let right = total - left;
            let score = left * left / (nl as f64 + l2_leaf) + right * right / (nr as f64 + l2_leaf);
            if best.is_none_or(|b| score > b.score) {
                best = Some(Split {
                    feature: f,
                    threshold: midpoint(pairs[i].0, pairs[i + 1].0),
                    score,
                    n_left: nl,
                });
            }
        }
    }
    best
}

struct Grower<'a> {
    rows: &'a [Vec<f64>],
    y: &'a [f64],
    params: &'a TreeParams,
    p: usize,
    nodes: Vec<TreeNode>,
}

impl Grower<'_> {
    fn leaf(&mut self, idx: &[usize]) -> usize {
        let vals: Vec<f64> = idx.iter().map(|&i| self.y[i]).collect();
        let value = canonical_sum(&vals) / (idx.len() as f64 + self.params.l2_leaf);
        self.nodes.push(TreeNode::Leaf { value, n: idx.len() });
        self.nodes.len() - 1
    }

    fn grow(&mut self, idx: Vec<usize>, depth: usize, rng: &mut StreamRng) -> usize {
        let at_depth = self.params.max_depth.is_some_and(|d| depth >= d);
        let (lo, hi) = idx.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
            (lo.min(self.y[i]), hi.max(self.y[i]))
        });
        if at_depth || lo == hi || idx.len() < 2 * self.params.min_samples_leaf.max(1) {
            return self.leaf(&idx);
        }
        let features: Vec<usize> = match self.params.mtry {
            Some(m) if m < self.p => {
                let mut f = sample(rng, self.p, m.max(1)).into_vec();
                f.sort_unstable();
                f
            }
            _ => (0..self.p).collect(),
        };
        let Some(split) = best_split(
            self.rows,
            self.y,
            &idx,
            &features,
            self.params.min_samples_leaf,
            self.params.l2_leaf,
        ) else {
            return self.leaf(&idx);
        };
        let vals: Vec<f64> = idx.iter().map(|&i| self.y[i]).collect();
        let s = canonical_sum(&vals);
        let parent = s * s / (idx.len() as f64 + self.params.l2_leaf);
        let scale: f64 = vals.iter().map(|v| v * v).sum::<f64>() + 1.0;
        if split.score - parent <= 1e-12 * scale {
            return self.leaf(&idx);
        }
        let (l, r): (Vec<usize>, Vec<usize>) = idx
            .iter()
            .partition(|&&i| self.rows[i][split.feature] <= split.threshold);
        let k = self.nodes.len();
        self.nodes.push(TreeNode::Leaf { value: 0.0, n: 0 });
        let left = self.grow(l, depth + 1, rng);
        let right = self.grow(r, depth + 1, rng);
        self.nodes[k] = TreeNode::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        k
    }
}

pub(crate) fn check_tree_input(d: &DesignMatrix, min_samples_leaf: usize) -> Result<()> {
    if d.n() < 2 * min_samples_leaf.max(1) {
        return Err(Error::InsufficientHistory(format!(
            "tree needs at least {} rows, got {}",
            2 * min_samples_leaf.max(1),
            d.n()
        )));
    }
    if d.p() == 0 {
        return Err(Error::InvalidArgument("design has no features".into()));
    }
    Ok(())
}

pub(crate) fn grow_tree(
    rows: &[Vec<f64>],
    y: &[f64],
    idx: Vec<usize>,
    params: &TreeParams,
    rng: &mut StreamRng,
) -> Tree {
    let p = rows.first().map_or(0, |r| r.len());
    let mut g = Grower {
        rows,
        y,
        params,
        p,
        nodes: Vec::new(),
    };
    g.grow(idx, 0, rng);
    Tree {
        nodes: g.nodes,
        n_features: p,
    }
}

/// Greedy CART on the full design. `seed` only matters when `mtry < p`.
pub fn fit_tree(d: &DesignMatrix, params: &TreeParams, seed: u64) -> Result<Tree> {
    check_tree_input(d, params.min_samples_leaf)?;
    let mut rng = substream(seed, 0);
    Ok(grow_tree(&d.rows, &d.target, (0..d.n()).collect(), params, &mut rng))
}

/// Row permutation sorting by `(target, features)`; fitting on it makes results
/// independent of the caller's row order.
pub(crate) fn canonical_order(d: &DesignMatrix) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..d.n()).collect();
    idx.sort_by(|&a, &b| {
        d.target[a].total_cmp(&d.target[b]).then_with(|| {
            d.rows[a]
                .iter()
                .zip(&d.rows[b])
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
    });
    idx
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn dm(rows: Vec<Vec<f64>>, y: Vec<f64>) -> DesignMatrix {
        let p = rows[0].len();
        DesignMatrix::new((0..p).map(|j| format!("x{j}")).collect(), rows, y).unwrap()
    }

    #[test]
    fn depth_zero_is_mean() {
        let d = dm(
            (0..6).map(|i| vec![i as f64]).collect(),
            vec![1.0, 2.0, 3.0, 4.0, 5.0, 9.0],
        );
        let t = fit_tree(
            &d,
            &TreeParams {
                max_depth: Some(0),
                ..Default::default()
            },
            0,
        )
        .unwrap();
        assert_eq!(t.nodes.len(), 1);
        assert_eq!(t.predict_row(&[100.0]), 4.0);
    }

    #[test]
    fn step_function_split() {
        let xs = [0.1, 0.2, 0.35, 0.45, 0.6, 0.7, 0.9];
        let d = dm(
            xs.iter().map(|x| vec![*x]).collect(),
            xs.iter().map(|x| (*x > 0.5) as u8 as f64).collect(),
        );
        let t = fit_tree(
            &d,
            &TreeParams {
                max_depth: Some(1),
                ..Default::default()
            },
            0,
        )
        .unwrap();
        match t.nodes[0] {
            TreeNode::Split { threshold, .. } => assert!((threshold - 0.525).abs() < 1e-15),
            _ => panic!(),
        }
        assert_eq!(t.predict_row(&[0.0]), 0.0);
        assert_eq!(t.predict_row(&[1.0]), 1.0);
    }

    #[test]
    fn leaf_sizes_respected_and_thresholds_between_values() {
        let mut rng = substream(3, 0);
        let rows: Vec<Vec<f64>> = (0..50).map(|_| vec![rng.gen::<f64>(), rng.gen::<f64>()]).collect();
        let y: Vec<f64> = rows.iter().map(|r| r[0].sin() + r[1] * r[1]).collect();
        let d = dm(rows.clone(), y);
        let t = fit_tree(
            &d,
            &TreeParams {
                min_samples_leaf: 4,
                ..Default::default()
            },
            0,
        )
        .unwrap();
        assert!(t.leaves().all(|(_, n)| n >= 4));
        for node in &t.nodes {
            if let TreeNode::Split { feature, threshold, .. } = *node {
                assert!(!rows.iter().any(|r| r[feature] == threshold));
            }
        }
    }

    #[test]
    fn serde_round_trip() {
        let d = dm(
            (0..10).map(|i| vec![i as f64, (i % 3) as f64]).collect(),
            (0..10).map(|i| (i * i) as f64).collect(),
        );
        let t = fit_tree(&d, &TreeParams::default(), 0).unwrap();
        let s = serde_json::to_string(&t).unwrap();
        assert!(s.contains("\"threshold\""));
        let back: Tree = serde_json::from_str(&s).unwrap();
        assert_eq!(t, back);
        assert!(serde_json::from_str::<Tree>(
            r#"{"n_features":1,"feature":[0],"threshold":[0],"left":[0],"right":[0],"value":[0],"n":[0]}"#
        )
        .is_err());
    }

    #[test]
    fn too_few_rows() {
        let d = dm(vec![vec![1.0], vec![2.0], vec![3.0]], vec![1.0, 2.0, 3.0]);
        let p = TreeParams {
            min_samples_leaf: 2,
            ..Default::default()
        };
        assert!(matches!(fit_tree(&d, &p, 0), Err(Error::InsufficientHistory(_))));
    }
}
