//! CART-style decision trees grown on bootstrap samples with random
//! feature subsets and Gini-gain splits; the building block of the
//! forest.

use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        /// Class-vote counts over the bootstrap sample that reached here.
        counts: Vec<u32>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<Node>,
}

impl DecisionTree {
    /// Walk to a leaf; values `<= threshold` go left.
    pub fn leaf_counts<'a>(&'a self, x: &[f64]) -> &'a [u32] {
        let mut idx = 0;
        loop {
            match &self.nodes[idx] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    idx = if x[*feature] <= *threshold { *left } else { *right };
                }
                Node::Leaf { counts } => return counts,
            }
        }
    }

    /// The class this tree votes for; ties break to the lowest index.
    pub fn vote(&self, x: &[f64]) -> usize {
        argmax(self.leaf_counts(x))
    }
}

pub fn argmax(counts: &[u32]) -> usize {
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = i;
        }
    }
    best
}

/// Columns view of the training data: row-major values, `dim` features,
/// class index per row.
pub struct TrainingData<'a> {
    pub values: &'a [f64],
    pub dim: usize,
    pub labels: &'a [usize],
    pub n_classes: usize,
}

impl TrainingData<'_> {
    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    #[inline]
    fn at(&self, row: usize, feature: usize) -> f64 {
        self.values[row * self.dim + feature]
    }
}

pub struct GrowParams {
    pub features_per_split: usize,
    pub max_depth: Option<usize>,
}

/// Grow one tree on a bootstrap sample drawn with the provided rng.
pub fn grow_tree<R: Rng>(data: &TrainingData, params: &GrowParams, rng: &mut R) -> DecisionTree {
    let n = data.n_rows();
    let mut rows: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
    let mut tree = DecisionTree { nodes: Vec::new() };
    grow_node(data, params, rng, &mut tree, &mut rows, 0);
    tree
}

fn class_counts(data: &TrainingData, rows: &[usize]) -> Vec<u32> {
    let mut counts = vec![0u32; data.n_classes];
    for &r in rows {
        counts[data.labels[r]] += 1;
    }
    counts
}

fn gini(counts: &[u32], total: f64) -> f64 {
    let mut sum_sq = 0.0;
    for &c in counts {
        let p = f64::from(c) / total;
        sum_sq += p * p;
    }
    1.0 - sum_sq
}

/// Recursively grow; `rows` is the node's bootstrap subset and is
/// partitioned in place. Returns the node index.
fn grow_node<R: Rng>(
    data: &TrainingData,
    params: &GrowParams,
    rng: &mut R,
    tree: &mut DecisionTree,
    rows: &mut [usize],
    depth: usize,
) -> usize {
    let counts = class_counts(data, rows);
    let total = rows.len() as f64;
    let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
    let depth_capped = params.max_depth.is_some_and(|d| depth >= d);
    if pure || depth_capped || rows.len() < 2 {
        tree.nodes.push(Node::Leaf { counts });
        return tree.nodes.len() - 1;
    }

    let parent_impurity = gini(&counts, total);
    let mut best: Option<(f64, usize, f64)> = None; // (gain, feature, threshold)

    // Sample features without replacement. When none of the first mtry
    // yields a positive-gain split, keep inspecting further features
    // until one does or all are exhausted; sparse vectors would
    // otherwise degenerate into majority-vote stumps.
    let mut candidates: Vec<usize> = (0..data.dim).collect();
    let mtry = params.features_per_split.min(data.dim);
    let mut sorted: Vec<usize> = Vec::with_capacity(rows.len());
    let mut inspected = 0;
    while inspected < data.dim && (inspected < mtry || best.is_none()) {
        let pick = rng.gen_range(inspected..data.dim);
        candidates.swap(inspected, pick);
        let feature = candidates[inspected];
        inspected += 1;
        sorted.clear();
        sorted.extend_from_slice(rows);
        sorted.sort_by(|&a, &b| {
            data.at(a, feature)
                .partial_cmp(&data.at(b, feature))
                .expect("feature values are finite")
        });

        let mut left_counts = vec![0u32; data.n_classes];
        let mut left_total = 0.0;
        for window in 0..sorted.len() - 1 {
            let row = sorted[window];
            left_counts[data.labels[row]] += 1;
            left_total += 1.0;
            let here = data.at(row, feature);
            let next = data.at(sorted[window + 1], feature);
            if here == next {
                continue;
            }
            let mut right_counts = counts.clone();
            for (r, l) in right_counts.iter_mut().zip(&left_counts) {
                *r -= l;
            }
            let right_total = total - left_total;
            let weighted = (left_total / total) * gini(&left_counts, left_total)
                + (right_total / total) * gini(&right_counts, right_total);
            let gain = parent_impurity - weighted;
            if gain > 1e-12 && best.is_none_or(|(g, _, _)| gain > g) {
                best = Some((gain, feature, (here + next) / 2.0));
            }
        }
    }

    let Some((_, feature, threshold)) = best else {
        tree.nodes.push(Node::Leaf { counts });
        return tree.nodes.len() - 1;
    };

    let split_at = partition(rows, |r| data.at(r, feature) <= threshold);
    let node_idx = tree.nodes.len();
    tree.nodes.push(Node::Leaf { counts: Vec::new() }); // placeholder
    let (left_rows, right_rows) = rows.split_at_mut(split_at);
    let left = grow_node(data, params, rng, tree, left_rows, depth + 1);
    let right = grow_node(data, params, rng, tree, right_rows, depth + 1);
    tree.nodes[node_idx] = Node::Split {
        feature,
        threshold,
        left,
        right,
    };
    node_idx
}

/// Stable partition: rows satisfying the predicate first; returns the
/// boundary.
fn partition<F: Fn(usize) -> bool>(rows: &mut [usize], pred: F) -> usize {
    let mut buf: Vec<usize> = Vec::with_capacity(rows.len());
    buf.extend(rows.iter().copied().filter(|&r| pred(r)));
    let boundary = buf.len();
    buf.extend(rows.iter().copied().filter(|&r| !pred(r)));
    rows.copy_from_slice(&buf);
    boundary
}
