//! Regression tree on the numeric NAICS code.
//!
//! Each occupation gets its own tree; the leaves are the industry classes that
//! stratify the baseline hazard. Splits are chosen greedily to maximize the
//! reduction in the sum of squared errors of the response (the establishment's
//! observed mean occupational wage).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_MIN_LEAF: usize = 80;
pub const DEFAULT_REL_TOL: f64 = 1e-4;

/// Binary tree; `naics < split` descends left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TreeNode {
    Split {
        split: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Leaf {
        class: u32,
        count: usize,
        mean: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndustryTree {
    pub min_leaf: usize,
    pub rel_tol: f64,
    pub root: TreeNode,
}

/// Best admissible split of a node whose members are sorted by code.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitChoice {
    pub split: f64,
    /// Number of members that go left.
    pub n_left: usize,
    pub sse_reduction: f64,
    pub node_sse: f64,
}

fn node_sse(ys: &[f64]) -> (f64, f64) {
    let n = ys.len() as f64;
    let mean = ys.iter().sum::<f64>() / n;
    (mean, ys.iter().map(|y| (y - mean).powi(2)).sum())
}

/// Scan every midpoint between consecutive distinct codes. `pairs` must be
/// sorted by code.
pub fn best_split(pairs: &[(u32, f64)], min_leaf: usize) -> Option<SplitChoice> {
    let n = pairs.len();
    if n < 2 * min_leaf.max(1) {
        return None;
    }
    let (mean, sse) = node_sse(&pairs.iter().map(|p| p.1).collect::<Vec<_>>());
    // centered prefix sums limit cancellation in sum-of-squares arithmetic
    let mut prefix = Vec::with_capacity(n + 1);
    let mut prefix_sq = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    prefix_sq.push(0.0);
    for &(_, y) in pairs {
        let d = y - mean;
        prefix.push(prefix.last().unwrap() + d);
        prefix_sq.push(prefix_sq.last().unwrap() + d * d);
    }
    let (tot, tot_sq) = (prefix[n], prefix_sq[n]);

    let mut best: Option<SplitChoice> = None;
    for k in min_leaf.max(1)..=(n - min_leaf.max(1)) {
        if pairs[k - 1].0 == pairs[k].0 {
            continue;
        }
        let (nl, nr) = (k as f64, (n - k) as f64);
        let (sl, sr) = (prefix[k], tot - prefix[k]);
        let sse_l = prefix_sq[k] - sl * sl / nl;
        let sse_r = (tot_sq - prefix_sq[k]) - sr * sr / nr;
        let reduction = sse - sse_l - sse_r;
        if best.is_none_or(|b| reduction > b.sse_reduction) {
            best = Some(SplitChoice {
                split: (f64::from(pairs[k - 1].0) + f64::from(pairs[k].0)) / 2.0,
                n_left: k,
                sse_reduction: reduction,
                node_sse: sse,
            });
        }
    }
    best
}

/// Fit a tree to `(naics, response)` pairs. Fitting is insensitive to input
/// order.
pub fn fit_industry_tree(pairs: &[(u32, f64)], min_leaf: usize, rel_tol: f64) -> Result<IndustryTree> {
    if pairs.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut sorted = pairs.to_vec();
    sorted.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut next_class = 0;
    let root = grow(&sorted, min_leaf, rel_tol, &mut next_class);
    Ok(IndustryTree { min_leaf, rel_tol, root })
}

fn grow(pairs: &[(u32, f64)], min_leaf: usize, rel_tol: f64, next_class: &mut u32) -> TreeNode {
    match best_split(pairs, min_leaf) {
        Some(s) if s.node_sse > 0.0 && s.sse_reduction > rel_tol * s.node_sse => {
            let left = grow(&pairs[..s.n_left], min_leaf, rel_tol, next_class);
            let right = grow(&pairs[s.n_left..], min_leaf, rel_tol, next_class);
            TreeNode::Split {
                split: s.split,
                left: Box::new(left),
                right: Box::new(right),
            }
        }
        _ => {
            let class = *next_class;
            *next_class += 1;
            TreeNode::Leaf {
                class,
                count: pairs.len(),
                mean: pairs.iter().map(|p| p.1).sum::<f64>() / pairs.len() as f64,
            }
        }
    }
}

impl IndustryTree {
    /// A tree with a single class covering every code.
    pub fn single_leaf(count: usize, mean: f64) -> Self {
        IndustryTree {
            min_leaf: DEFAULT_MIN_LEAF,
            rel_tol: DEFAULT_REL_TOL,
            root: TreeNode::Leaf { class: 0, count, mean },
        }
    }

    pub fn assign_class(&self, naics: u32) -> u32 {
        let code = f64::from(naics);
        let mut node = &self.root;
        loop {
            match node {
                TreeNode::Split { split, left, right } => {
                    node = if code < *split { left } else { right };
                }
                TreeNode::Leaf { class, .. } => return *class,
            }
        }
    }

    /// Leaves in left-to-right order as `(class, count, mean)`.
    pub fn leaves(&self) -> Vec<(u32, usize, f64)> {
        fn walk(n: &TreeNode, out: &mut Vec<(u32, usize, f64)>) {
            match n {
                TreeNode::Split { left, right, .. } => {
                    walk(left, out);
                    walk(right, out);
                }
                TreeNode::Leaf { class, count, mean } => out.push((*class, *count, *mean)),
            }
        }
        let mut out = Vec::new();
        walk(&self.root, &mut out);
        out
    }

    pub fn n_leaves(&self) -> usize {
        self.leaves().len()
    }

    pub fn root_split(&self) -> Option<f64> {
        match &self.root {
            TreeNode::Split { split, .. } => Some(*split),
            TreeNode::Leaf { .. } => None,
        }
    }
}
