//! Least-squares gradient boosting over axis-aligned regression trees.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct GbmConfig {
    pub n_trees: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub min_samples_leaf: usize,
    /// Kept for interface stability. Split ties are resolved by fixed rules
    /// (lowest feature, then lowest threshold), so fitting does not draw
    /// random numbers.
    pub seed: u64,
}

impl Default for GbmConfig {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: 3,
            learning_rate: 0.1,
            min_samples_leaf: 1,
            seed: 0,
        }
    }
}

impl GbmConfig {
    fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) || self.min_samples_leaf == 0 {
            return Err(Error::InvalidConfig(alloc::format!("invalid GBM settings {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "type", rename_all = "lowercase"))]
pub enum TreeNode {
    /// Rows with `x[feature] < threshold` go to `left`.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
        samples: usize,
    },
}

/// Nodes in depth-first order; node 0 is the root.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RegressionTree {
    pub nodes: Vec<TreeNode>,
}

impl RegressionTree {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                TreeNode::Leaf { value, .. } => return *value,
                TreeNode::Split { feature, threshold, left, right } => {
                    at = if row[*feature] < *threshold { *left } else { *right };
                }
            }
        }
    }

    pub fn leaves(&self) -> impl Iterator<Item = (f64, usize)> + '_ {
        self.nodes.iter().filter_map(|n| match n {
            TreeNode::Leaf { value, samples } => Some((*value, *samples)),
            TreeNode::Split { .. } => None,
        })
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[TreeNode], at: usize) -> usize {
            match &nodes[at] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GbmModel {
    pub base_prediction: f64,
    pub learning_rate: f64,
    pub trees: Vec<RegressionTree>,
    pub input_dim: usize,
}

impl GbmModel {
    pub fn predict(&self, x: &Matrix) -> Result<Vec<f64>> {
        if x.cols() != self.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim,
                actual: x.cols(),
            });
        }
        Ok(x.row_iter()
            .map(|row| {
                let sum: f64 = self.trees.iter().map(|t| t.predict_row(row)).sum();
                self.base_prediction + self.learning_rate * sum
            })
            .collect())
    }
}

/// The chosen split of a node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitCandidate {
    pub feature: usize,
    pub threshold: f64,
    /// `SSE(node) − SSE(left) − SSE(right)`, each SSE taken around its own
    /// mean and summed in ascending row order.
    pub sse_reduction: f64,
    pub n_left: usize,
}

fn sse(targets: &[f64], rows: impl Iterator<Item = usize> + Clone) -> f64 {
    let (mut sum, mut count) = (0.0, 0usize);
    for i in rows.clone() {
        sum += targets[i];
        count += 1;
    }
    if count == 0 {
        return 0.0;
    }
    let mean = sum / count as f64;
    rows.map(|i| (targets[i] - mean) * (targets[i] - mean)).sum()
}

fn midpoint(a: f64, b: f64) -> f64 {
    let t = a + (b - a) / 2.0;
    // rows at `a` must go left, rows at `b` right
    if t > a && t <= b {
        t
    } else {
        b
    }
}

/// Scans one feature. `order` holds the node's rows sorted by that feature.
fn scan_feature(
    x: &Matrix,
    targets: &[f64],
    feature: usize,
    order: &[usize],
    total: f64,
    min_leaf: usize,
    best: &mut Option<(f64, usize, f64, usize)>,
) {
    let n = order.len();
    let parent_term = total * total / n as f64;
    let mut left_sum = 0.0;
    for p in 1..n {
        left_sum += targets[order[p - 1]];
        if p < min_leaf || n - p < min_leaf {
            continue;
        }
        let (a, b) = (x[(order[p - 1], feature)], x[(order[p], feature)]);
        if a == b {
            continue;
        }
        let right_sum = total - left_sum;
        let gain = left_sum * left_sum / p as f64 + right_sum * right_sum / (n - p) as f64 - parent_term;
        // strict comparison keeps the earliest feature and threshold on ties
        if best.is_none_or(|(g, ..)| gain > g) {
            *best = Some((gain, feature, midpoint(a, b), p));
        }
    }
}

fn finish(x: &Matrix, targets: &[f64], rows: &[usize], found: Option<(f64, usize, f64, usize)>) -> Option<SplitCandidate> {
    let (_, feature, threshold, n_left) = found?;
    let mut sorted = rows.to_vec();
    sorted.sort_unstable();
    let goes_left = |i: &usize| x[(*i, feature)] < threshold;
    let reduction = sse(targets, sorted.iter().copied())
        - sse(targets, sorted.iter().filter(|i| goes_left(i)).copied())
        - sse(targets, sorted.iter().filter(|i| !goes_left(i)).copied());
    Some(SplitCandidate {
        feature,
        threshold,
        sse_reduction: reduction,
        n_left,
    })
}

/// Best least-squares split of the rows `rows` of `x` against `targets`
/// (indexed by row), or `None` when no split leaves `min_samples_leaf` rows
/// on both sides. Thresholds sit midway between consecutive distinct values.
pub fn best_split(x: &Matrix, targets: &[f64], rows: &[usize], min_samples_leaf: usize) -> Option<SplitCandidate> {
    let total: f64 = rows.iter().map(|&i| targets[i]).sum();
    let mut best = None;
    let mut order = rows.to_vec();
    for f in 0..x.cols() {
        order.sort_by(|&i, &j| x[(i, f)].total_cmp(&x[(j, f)]).then(i.cmp(&j)));
        scan_feature(x, targets, f, &order, total, min_samples_leaf.max(1), &mut best);
    }
    finish(x, targets, rows, best)
}

struct TreeBuilder<'a> {
    x: &'a Matrix,
    residuals: &'a [f64],
    /// Per feature, all training rows sorted by that feature.
    presorted: &'a [Vec<usize>],
    max_depth: usize,
    min_leaf: usize,
    member: Vec<bool>,
    nodes: Vec<TreeNode>,
}

impl TreeBuilder<'_> {
    fn node_split(&mut self, rows: &[usize]) -> Option<SplitCandidate> {
        let total: f64 = rows.iter().map(|&i| self.residuals[i]).sum();
        let mut best = None;
        let small = rows.len() * 16 < self.x.rows();
        for &i in rows {
            self.member[i] = true;
        }
        let mut order = Vec::with_capacity(rows.len());
        for f in 0..self.x.cols() {
            order.clear();
            if small {
                order.extend_from_slice(rows);
                order.sort_by(|&i, &j| self.x[(i, f)].total_cmp(&self.x[(j, f)]).then(i.cmp(&j)));
            } else {
                order.extend(self.presorted[f].iter().copied().filter(|&i| self.member[i]));
            }
            scan_feature(self.x, self.residuals, f, &order, total, self.min_leaf, &mut best);
        }
        for &i in rows {
            self.member[i] = false;
        }
        finish(self.x, self.residuals, rows, best)
    }

    fn build(&mut self, rows: Vec<usize>, depth: usize) -> usize {
        let at = self.nodes.len();
        let value = rows.iter().map(|&i| self.residuals[i]).sum::<f64>() / rows.len() as f64;
        self.nodes.push(TreeNode::Leaf {
            value,
            samples: rows.len(),
        });
        let first = self.residuals[rows[0]];
        let pure = rows.iter().all(|&i| self.residuals[i] == first);
        if depth >= self.max_depth || pure || rows.len() < 2 * self.min_leaf {
            return at;
        }
        let Some(split) = self.node_split(&rows) else {
            return at;
        };
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) =
            rows.into_iter().partition(|&i| self.x[(i, split.feature)] < split.threshold);
        let left = self.build(left_rows, depth + 1);
        let right = self.build(right_rows, depth + 1);
        self.nodes[at] = TreeNode::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        at
    }
}

pub fn fit_gbm(x: &Matrix, y: &[f64], config: &GbmConfig) -> Result<GbmModel> {
    config.validate()?;
    let n = x.rows();
    if n == 0 {
        return Err(Error::DegenerateData("GBM needs at least one sample".into()));
    }
    if y.len() != n {
        return Err(Error::DimensionMismatch { expected: n, actual: y.len() });
    }
    if n < config.min_samples_leaf {
        return Err(Error::InvalidConfig(alloc::format!(
            "min_samples_leaf {} exceeds sample count {n}",
            config.min_samples_leaf
        )));
    }
    if !x.is_finite() || y.iter().any(|v| !v.is_finite()) {
        return Err(Error::DegenerateData("GBM inputs must be finite".into()));
    }
    let base = crate::matrix::mean(y);
    let presorted: Vec<Vec<usize>> = (0..x.cols())
        .map(|f| {
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&i, &j| x[(i, f)].total_cmp(&x[(j, f)]).then(i.cmp(&j)));
            order
        })
        .collect();

    let mut current = alloc::vec![base; n];
    let mut residuals = alloc::vec![0.0; n];
    let mut trees = Vec::with_capacity(config.n_trees);
    for _ in 0..config.n_trees {
        for ((r, yi), c) in residuals.iter_mut().zip(y).zip(&current) {
            *r = yi - c;
        }
        let mut builder = TreeBuilder {
            x,
            residuals: &residuals,
            presorted: &presorted,
            max_depth: config.max_depth,
            min_leaf: config.min_samples_leaf,
            member: alloc::vec![false; n],
            nodes: Vec::new(),
        };
        builder.build((0..n).collect(), 0);
        let tree = RegressionTree { nodes: builder.nodes };
        for (c, row) in current.iter_mut().zip(x.row_iter()) {
            *c += config.learning_rate * tree.predict_row(row);
        }
        trees.push(tree);
    }
    Ok(GbmModel {
        base_prediction: base,
        learning_rate: config.learning_rate,
        trees,
        input_dim: x.cols(),
    })
}
