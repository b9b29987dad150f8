//! Weighted CART regression tree.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative slack under which two split gains count as tied.
const GAIN_TIE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TreeNode {
    Leaf {
        value: f64,
        weight: f64,
        n_samples: usize,
    },
    Split {
        feature: usize,
        /// Samples with `x[feature] <= threshold` go left.
        threshold: f64,
        /// Weighted squared-error reduction of this split.
        gain: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurrogateTree {
    pub root: TreeNode,
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub n_features: usize,
}

impl SurrogateTree {
    /// Fits on rows `x`, targets `y` and nonnegative weights `w`.
    pub fn fit(x: &[Vec<f64>], y: &[f64], w: &[f64], max_depth: usize, min_samples_split: usize) -> Result<Self> {
        let n = x.len();
        if n == 0 {
            return Err(Error::invalid("cannot fit a tree on zero samples"));
        }
        if y.len() != n || w.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: if y.len() != n { y.len() } else { w.len() } });
        }
        let n_features = x[0].len();
        if let Some(bad) = x.iter().find(|r| r.len() != n_features) {
            return Err(Error::DimensionMismatch { expected: n_features, got: bad.len() });
        }
        if w.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(Error::invalid("sample weights must be finite and nonnegative"));
        }
        if !(w.iter().sum::<f64>() > 0.0) {
            return Err(Error::Degenerate("sample weights sum to zero".into()));
        }
        if y.iter().chain(x.iter().flatten()).any(|v| !v.is_finite()) {
            return Err(Error::invalid("tree inputs must be finite"));
        }
        if min_samples_split < 2 {
            return Err(Error::Config("min_samples_split must be at least 2".into()));
        }
        let builder = Builder { x, y, w, max_depth, min_samples_split };
        let idx: Vec<usize> = (0..n).collect();
        Ok(Self { root: builder.grow(idx, 0), max_depth, min_samples_split, n_features })
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut node = &self.root;
        loop {
            match node {
                TreeNode::Leaf { value, .. } => return *value,
                TreeNode::Split { feature, threshold, left, right, .. } => {
                    node = if x[*feature] <= *threshold { left } else { right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn d(n: &TreeNode) -> usize {
            match n {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + d(left).max(d(right)),
            }
        }
        d(&self.root)
    }

    pub fn n_leaves(&self) -> usize {
        fn l(n: &TreeNode) -> usize {
            match n {
                TreeNode::Leaf { .. } => 1,
                TreeNode::Split { left, right, .. } => l(left) + l(right),
            }
        }
        l(&self.root)
    }

    /// Total split gain per feature.
    pub fn importances(&self) -> Vec<f64> {
        fn walk(n: &TreeNode, acc: &mut [f64]) {
            if let TreeNode::Split { feature, gain, left, right, .. } = n {
                acc[*feature] += gain;
                walk(left, acc);
                walk(right, acc);
            }
        }
        let mut acc = vec![0.0; self.n_features];
        walk(&self.root, &mut acc);
        acc
    }

    /// `sum w (y - h(x))^2 / sum w`.
    pub fn weighted_loss(&self, x: &[Vec<f64>], y: &[f64], w: &[f64]) -> f64 {
        let total: f64 = w.iter().sum();
        x.iter().zip(y).zip(w).map(|((xi, yi), wi)| wi * (yi - self.predict(xi)).powi(2)).sum::<f64>() / total
    }
}

struct Builder<'a> {
    x: &'a [Vec<f64>],
    y: &'a [f64],
    w: &'a [f64],
    max_depth: usize,
    min_samples_split: usize,
}

struct Candidate {
    feature: usize,
    threshold: f64,
    gain: f64,
    left: Vec<usize>,
    right: Vec<usize>,
}

impl Builder<'_> {
    fn leaf(&self, idx: &[usize]) -> TreeNode {
        let weight: f64 = idx.iter().map(|&i| self.w[i]).sum();
        let value = if weight > 0.0 {
            idx.iter().map(|&i| self.w[i] * self.y[i]).sum::<f64>() / weight
        } else {
            idx.iter().map(|&i| self.y[i]).sum::<f64>() / idx.len() as f64
        };
        TreeNode::Leaf { value, weight, n_samples: idx.len() }
    }

    fn grow(&self, idx: Vec<usize>, depth: usize) -> TreeNode {
        if depth >= self.max_depth || idx.len() < self.min_samples_split {
            return self.leaf(&idx);
        }
        match self.best_split(&idx) {
            Some(c) => TreeNode::Split {
                feature: c.feature,
                threshold: c.threshold,
                gain: c.gain,
                left: Box::new(self.grow(c.left, depth + 1)),
                right: Box::new(self.grow(c.right, depth + 1)),
            },
            None => self.leaf(&idx),
        }
    }

    fn best_split(&self, idx: &[usize]) -> Option<Candidate> {
        let total_w: f64 = idx.iter().map(|&i| self.w[i]).sum();
        if !(total_w > 0.0) {
            return None;
        }
        let total_wy: f64 = idx.iter().map(|&i| self.w[i] * self.y[i]).sum();
        let total_wyy: f64 = idx.iter().map(|&i| self.w[i] * self.y[i] * self.y[i]).sum();
        let node_sse = (total_wyy - total_wy * total_wy / total_w).max(0.0);
        if node_sse <= 1e-14 * total_wyy.max(f64::MIN_POSITIVE) {
            return None;
        }

        let n_features = self.x[idx[0]].len();
        let mut best: Option<Candidate> = None;
        for feature in 0..n_features {
            let mut order = idx.to_vec();
            order.sort_by(|&a, &b| self.x[a][feature].total_cmp(&self.x[b][feature]).then(a.cmp(&b)));
            let (mut lw, mut lwy, mut lwyy) = (0.0, 0.0, 0.0);
            let mut local: Option<(f64, usize)> = None;
            for k in 0..order.len() - 1 {
                let i = order[k];
                lw += self.w[i];
                lwy += self.w[i] * self.y[i];
                lwyy += self.w[i] * self.y[i] * self.y[i];
                let (here, next) = (self.x[i][feature], self.x[order[k + 1]][feature]);
                if here == next {
                    continue;
                }
                let rw = total_w - lw;
                if lw <= 0.0 || rw <= 0.0 {
                    continue;
                }
                let rwy = total_wy - lwy;
                let rwyy = total_wyy - lwyy;
                let sse = (lwyy - lwy * lwy / lw).max(0.0) + (rwyy - rwy * rwy / rw).max(0.0);
                let gain = node_sse - sse;
                if local.is_none_or(|(g, _)| gain > g) {
                    local = Some((gain, k));
                }
            }
            let Some((gain, k)) = local else { continue };
            if !(gain > 1e-12 * node_sse) {
                continue;
            }
            // Gains equal up to rounding keep the lower feature index.
            let replace = best.as_ref().is_none_or(|b| gain > b.gain + GAIN_TIE * node_sse);
            if replace {
                let threshold = 0.5 * (self.x[order[k]][feature] + self.x[order[k + 1]][feature]);
                best = Some(Candidate {
                    feature,
                    threshold,
                    gain,
                    left: {
                        let mut l = order[..=k].to_vec();
                        l.sort_unstable();
                        l
                    },
                    right: {
                        let mut r = order[k + 1..].to_vec();
                        r.sort_unstable();
                        r
                    },
                });
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_function_recovered() {
        let x: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, (i * 7 % 10) as f64]).collect();
        let y: Vec<f64> = (0..10).map(|i| if i < 4 { 1.0 } else { 3.0 }).collect();
        let w = vec![1.0; 10];
        let t = SurrogateTree::fit(&x, &y, &w, 3, 2).unwrap();
        assert_eq!(t.depth(), 1);
        match &t.root {
            TreeNode::Split { feature, threshold, .. } => {
                assert_eq!(*feature, 0);
                assert_eq!(*threshold, 3.5);
            }
            _ => panic!("expected a split"),
        }
        assert_eq!(t.weighted_loss(&x, &y, &w), 0.0);
        let imp = t.importances();
        assert!(imp[0] > 0.0 && imp[1] == 0.0);
        // SSE of {1 x4, 3 x6} about its mean 2.2.
        assert!((imp[0] - (4.0 * 1.44 + 6.0 * 0.64)).abs() < 1e-12);
    }

    #[test]
    fn constant_target_is_a_leaf() {
        let x: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64]).collect();
        let t = SurrogateTree::fit(&x, &[2.0; 6], &[1.0; 6], 4, 2).unwrap();
        assert_eq!(t.depth(), 0);
        assert_eq!(t.predict(&[100.0]), 2.0);
    }

    #[test]
    fn leaves_are_weighted_means() {
        let x = vec![vec![0.0], vec![0.0], vec![1.0]];
        let t = SurrogateTree::fit(&x, &[1.0, 4.0, 9.0], &[3.0, 1.0, 1.0], 0, 2).unwrap();
        assert_eq!(t.predict(&[0.0]), (3.0 + 4.0 + 9.0) / 5.0);
    }

    #[test]
    fn respects_limits() {
        let x: Vec<Vec<f64>> = (0..32).map(|i| vec![i as f64]).collect();
        let y: Vec<f64> = (0..32).map(|i| ((i * 13) % 7) as f64).collect();
        let w = vec![1.0; 32];
        for depth in 0..4 {
            assert!(SurrogateTree::fit(&x, &y, &w, depth, 2).unwrap().depth() <= depth);
        }
        let t = SurrogateTree::fit(&x, &y, &w, 10, 40).unwrap();
        assert_eq!(t.depth(), 0);
    }

    #[test]
    fn tied_partitions_keep_lower_index() {
        // Both features order the samples identically.
        let x: Vec<Vec<f64>> = (1..=8).map(|i| vec![(i as f64).powi(3), i as f64]).collect();
        let y: Vec<f64> = (1..=8).map(|i| i as f64).collect();
        let t = SurrogateTree::fit(&x, &y, &[1.0; 8], 1, 2).unwrap();
        let imp = t.importances();
        assert!(imp[0] > 0.0 && imp[1] == 0.0);
    }

    #[test]
    fn input_errors() {
        let x = vec![vec![0.0], vec![1.0]];
        assert!(SurrogateTree::fit(&x, &[1.0], &[1.0, 1.0], 1, 2).is_err());
        assert!(SurrogateTree::fit(&x, &[1.0, 2.0], &[0.0, 0.0], 1, 2).is_err());
        assert!(SurrogateTree::fit(&x, &[1.0, 2.0], &[1.0, -1.0], 1, 2).is_err());
        assert!(SurrogateTree::fit(&x, &[1.0, 2.0], &[1.0, 1.0], 1, 1).is_err());
        assert!(SurrogateTree::fit(&[], &[], &[], 1, 2).is_err());
    }
}
