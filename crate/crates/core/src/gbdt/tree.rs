//! Regression tree growth: exact greedy split search over sorted feature
//! values with learned missing-value routing and Newton leaf values.

use serde::{Deserialize, Serialize};

/// Fixed L2 regularizer on leaf weights.
pub(crate) const LAMBDA: f64 = 1.0;
/// Splits whose gain does not exceed this are discarded.
pub(crate) const MIN_GAIN: f64 = 1e-12;

/// A trained tree node. Internal nodes route on a named feature; leaves
/// carry a log-odds increment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TreeNode {
    Internal {
        feature: String,
        threshold: f64,
        missing_goes_left: bool,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Leaf {
        value: f64,
    },
}

impl TreeNode {
    pub fn is_leaf(&self) -> bool {
        matches!(self, TreeNode::Leaf { .. })
    }

    /// Number of split levels below this node.
    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Internal { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }
}

/// Index-based mirror of [`TreeNode`] used during training and batch
/// prediction, with the feature resolved to a column position.
#[derive(Debug, Clone)]
pub(crate) enum BuiltNode {
    Split {
        feature: usize,
        threshold: f64,
        missing_goes_left: bool,
        left: Box<BuiltNode>,
        right: Box<BuiltNode>,
    },
    Leaf(f64),
}

impl BuiltNode {
    /// Leaf value reached by `row` through the routing rule: missing cells
    /// follow the learned default direction, present values go left iff
    /// strictly below the threshold.
    pub(crate) fn value_for_row(&self, columns: &[&[Option<f64>]], row: usize) -> f64 {
        let mut node = self;
        loop {
            match node {
                BuiltNode::Leaf(v) => return *v,
                BuiltNode::Split {
                    feature,
                    threshold,
                    missing_goes_left,
                    left,
                    right,
                } => {
                    let go_left = match columns[*feature][row] {
                        None => *missing_goes_left,
                        Some(v) => v < *threshold,
                    };
                    node = if go_left { left } else { right };
                }
            }
        }
    }

    pub(crate) fn to_named(&self, names: &[String]) -> TreeNode {
        match self {
            BuiltNode::Leaf(v) => TreeNode::Leaf { value: *v },
            BuiltNode::Split {
                feature,
                threshold,
                missing_goes_left,
                left,
                right,
            } => TreeNode::Internal {
                feature: names[*feature].clone(),
                threshold: *threshold,
                missing_goes_left: *missing_goes_left,
                left: Box::new(left.to_named(names)),
                right: Box::new(right.to_named(names)),
            },
        }
    }

    /// Resolve feature names back to column positions. Fails when a node
    /// references a feature that is not in `names`.
    pub(crate) fn from_named(node: &TreeNode, names: &[String]) -> Option<BuiltNode> {
        match node {
            TreeNode::Leaf { value } => Some(BuiltNode::Leaf(*value)),
            TreeNode::Internal {
                feature,
                threshold,
                missing_goes_left,
                left,
                right,
            } => {
                let index = names.iter().position(|n| n == feature)?;
                Some(BuiltNode::Split {
                    feature: index,
                    threshold: *threshold,
                    missing_goes_left: *missing_goes_left,
                    left: Box::new(Self::from_named(left, names)?),
                    right: Box::new(Self::from_named(right, names)?),
                })
            }
        }
    }
}

/// Winning split candidate for one node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Split {
    pub feature: usize,
    pub threshold: f64,
    pub missing_goes_left: bool,
    pub gain: f64,
}

/// Exact greedy split search.
///
/// Scans every feature, every midpoint between consecutive distinct sorted
/// non-missing values, and both missing-routing directions, maximizing
///
/// `gain = G_L^2/(H_L+l) + G_R^2/(H_R+l) - (G_L+G_R)^2/(H_L+H_R+l)`
///
/// with `l = 1`. Ties resolve to the smallest feature index, then the
/// smallest threshold, then `missing_goes_left = true`. Returns `None` when
/// no candidate improves the gain beyond 1e-12 or when `rows` cannot supply
/// both leaves with `min_samples_leaf` rows.
pub fn best_split(
    rows: &[usize],
    columns: &[&[Option<f64>]],
    grad: &[f64],
    hess: &[f64],
    min_samples_leaf: usize,
) -> Option<Split> {
    let min_leaf = min_samples_leaf.max(1);
    if rows.len() < 2 * min_leaf {
        return None;
    }

    let total_g: f64 = rows.iter().map(|&r| grad[r]).sum();
    let total_h: f64 = rows.iter().map(|&r| hess[r]).sum();
    let parent_term = total_g * total_g / (total_h + LAMBDA);

    let mut best: Option<Split> = None;
    let mut present: Vec<(f64, f64, f64)> = Vec::with_capacity(rows.len());
    for (feature, column) in columns.iter().enumerate() {
        present.clear();
        let mut g_miss = 0.0;
        let mut h_miss = 0.0;
        let mut n_miss = 0usize;
        for &r in rows {
            match column[r] {
                Some(v) => present.push((v, grad[r], hess[r])),
                None => {
                    g_miss += grad[r];
                    h_miss += hess[r];
                    n_miss += 1;
                }
            }
        }
        if present.len() < 2 {
            continue;
        }
        present.sort_unstable_by(|a, b| a.0.partial_cmp(&b.0).expect("finite feature values"));

        let mut g_left = 0.0;
        let mut h_left = 0.0;
        let mut n_left = 0usize;
        for i in 0..present.len() - 1 {
            g_left += present[i].1;
            h_left += present[i].2;
            n_left += 1;
            let lo = present[i].0;
            let hi = present[i + 1].0;
            if lo == hi {
                continue;
            }
            // Midpoint can collapse onto `lo` for adjacent floats; nudge to
            // `hi` so the strict `< threshold` rule still separates the two.
            let mut threshold = 0.5 * (lo + hi);
            if threshold <= lo {
                threshold = hi;
            }
            for missing_goes_left in [true, false] {
                let (gl, hl, nl) = if missing_goes_left {
                    (g_left + g_miss, h_left + h_miss, n_left + n_miss)
                } else {
                    (g_left, h_left, n_left)
                };
                let nr = rows.len() - nl;
                if nl < min_leaf || nr < min_leaf {
                    continue;
                }
                let gr = total_g - gl;
                let hr = total_h - hl;
                let gain = gl * gl / (hl + LAMBDA) + gr * gr / (hr + LAMBDA) - parent_term;
                if gain > best.map_or(MIN_GAIN, |b| b.gain) {
                    best = Some(Split {
                        feature,
                        threshold,
                        missing_goes_left,
                        gain,
                    });
                }
                if n_miss == 0 {
                    // Both routings are the same candidate.
                    break;
                }
            }
        }
    }
    best
}

pub(crate) fn newton_leaf_value(rows: &[usize], grad: &[f64], hess: &[f64]) -> f64 {
    let g: f64 = rows.iter().map(|&r| grad[r]).sum();
    let h: f64 = rows.iter().map(|&r| hess[r]).sum();
    -g / (h + LAMBDA)
}

/// Grow one regression tree depth-first over `rows`.
pub(crate) fn grow_tree(
    rows: Vec<usize>,
    columns: &[&[Option<f64>]],
    grad: &[f64],
    hess: &[f64],
    max_depth: usize,
    min_samples_leaf: usize,
) -> BuiltNode {
    if rows.len() >= 2 && max_depth > 0 {
        if let Some(split) = best_split(&rows, columns, grad, hess, min_samples_leaf) {
            let column = columns[split.feature];
            let (left_rows, right_rows): (Vec<usize>, Vec<usize>) =
                rows.into_iter().partition(|&r| match column[r] {
                    None => split.missing_goes_left,
                    Some(v) => v < split.threshold,
                });
            let left = grow_tree(
                left_rows,
                columns,
                grad,
                hess,
                max_depth - 1,
                min_samples_leaf,
            );
            let right = grow_tree(
                right_rows,
                columns,
                grad,
                hess,
                max_depth - 1,
                min_samples_leaf,
            );
            return BuiltNode::Split {
                feature: split.feature,
                threshold: split.threshold,
                missing_goes_left: split.missing_goes_left,
                left: Box::new(left),
                right: Box::new(right),
            };
        }
    }
    BuiltNode::Leaf(newton_leaf_value(&rows, grad, hess))
}
