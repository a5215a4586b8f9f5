use serde::{Deserialize, Serialize};

use super::{check_training_data, FeatureMatrix, Probe};
use crate::error::ClassifyError;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct TreeHyper {
    pub max_depth: usize,
    pub min_leaf: usize,
}

impl Default for TreeHyper {
    fn default() -> Self {
        TreeHyper {
            max_depth: 8,
            min_leaf: 5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TreeNode {
    /// `x[feature] <= threshold` goes left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        /// Weighted child impurity achieved by this split.
        gini: f64,
        parent_gini: f64,
    },
    Leaf {
        p_true: f64,
        n: usize,
    },
}

/// Flat node list; node 0 is the root.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeModel {
    pub nodes: Vec<TreeNode>,
    pub hyper: TreeHyper,
}

impl TreeModel {
    pub fn depth(&self) -> usize {
        fn go(nodes: &[TreeNode], i: usize) -> usize {
            match &nodes[i] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + go(nodes, *left).max(go(nodes, *right)),
            }
        }
        go(&self.nodes, 0)
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, TreeNode::Leaf { .. })).count()
    }
}

impl Probe for TreeModel {
    fn predict_proba(&self, x: &[f64]) -> Result<f64, ClassifyError> {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                TreeNode::Leaf { p_true, .. } => return Ok(*p_true),
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => {
                    let v = x.get(*feature).ok_or(ClassifyError::FeatureOutOfRange {
                        index: *feature,
                        len: x.len(),
                    })?;
                    i = if *v <= *threshold { *left } else { *right };
                }
            }
        }
    }
}

/// `n * gini` for a node with `t` true out of `n`: `n - (t^2 + f^2) / n`.
/// Kept unnormalized so comparisons scale exactly when counts are doubled.
fn scaled_gini(t: usize, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let (t, f, n) = (t as f64, (n - t) as f64, n as f64);
    n - (t * t + f * f) / n
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    gini: f64,
}

struct Builder<'a> {
    x: &'a FeatureMatrix,
    y: &'a [bool],
    hyper: &'a TreeHyper,
    nodes: Vec<TreeNode>,
    // Scratch buffer of (value, label) reused across features.
    column: Vec<(f64, bool)>,
}

impl Builder<'_> {
    fn build(&mut self, idx: &[usize], depth: usize) -> usize {
        let n = idx.len();
        let t = idx.iter().filter(|&&i| self.y[i]).count();
        let slot = self.nodes.len();
        self.nodes.push(TreeNode::Leaf {
            p_true: t as f64 / n as f64,
            n,
        });
        if t == 0 || t == n || depth >= self.hyper.max_depth || n < 2 * self.hyper.min_leaf {
            return slot;
        }
        let parent_gini = scaled_gini(t, n) / n as f64;
        let Some(best) = self.best_split(idx, t) else {
            return slot;
        };
        // Gini is concave, so a real split can't worsen impurity; the slack
        // only absorbs rounding.
        if best.gini > parent_gini + 1e-12 {
            return slot;
        }
        let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = idx
            .iter()
            .partition(|&&i| self.x.row(i)[best.feature] <= best.threshold);
        let left = self.build(&left_idx, depth + 1);
        let right = self.build(&right_idx, depth + 1);
        self.nodes[slot] = TreeNode::Split {
            feature: best.feature,
            threshold: best.threshold,
            left,
            right,
            gini: best.gini,
            parent_gini,
        };
        slot
    }

    /// Lowest weighted Gini over every feature and every midpoint between
    /// consecutive distinct values, honoring `min_leaf`. Ties keep the lowest
    /// feature index, then the lowest threshold.
    fn best_split(&mut self, idx: &[usize], total_true: usize) -> Option<BestSplit> {
        let n = idx.len();
        let min_leaf = self.hyper.min_leaf.max(1);
        let mut best: Option<BestSplit> = None;
        for feature in 0..self.x.dim() {
            self.column.clear();
            self.column
                .extend(idx.iter().map(|&i| (self.x.row(i)[feature], self.y[i])));
            self.column.sort_by(|a, b| a.0.total_cmp(&b.0));
            if self.column[0].0 == self.column[n - 1].0 {
                continue;
            }
            let mut left_true = 0;
            for k in 0..n - 1 {
                left_true += self.column[k].1 as usize;
                let (v, next) = (self.column[k].0, self.column[k + 1].0);
                if v == next {
                    continue;
                }
                let n_left = k + 1;
                let n_right = n - n_left;
                if n_left < min_leaf || n_right < min_leaf {
                    continue;
                }
                let gini = (scaled_gini(left_true, n_left) + scaled_gini(total_true - left_true, n_right)) / n as f64;
                if best.as_ref().is_none_or(|b| gini < b.gini) {
                    best = Some(BestSplit {
                        feature,
                        threshold: v + (next - v) / 2.0,
                        gini,
                    });
                }
            }
        }
        best
    }
}

/// Greedy CART on Gini impurity.
pub fn train_tree(x: &FeatureMatrix, y: &[bool], hyper: &TreeHyper) -> Result<TreeModel, ClassifyError> {
    check_training_data(x, y)?;
    if hyper.min_leaf == 0 {
        return Err(ClassifyError::InvalidHyper("min_leaf must be positive".into()));
    }
    let mut builder = Builder {
        x,
        y,
        hyper,
        nodes: Vec::new(),
        column: Vec::with_capacity(y.len()),
    };
    let all: Vec<usize> = (0..y.len()).collect();
    builder.build(&all, 0);
    Ok(TreeModel {
        nodes: builder.nodes,
        hyper: hyper.clone(),
    })
}
