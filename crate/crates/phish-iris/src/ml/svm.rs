//! Soft-margin RBF-kernel SVM trained per class pair with an SMO-style
//! maximal-violating-pair solver; multiclass prediction is one-vs-one
//! majority vote.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// One binary problem: the lower-indexed class maps to +1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairModel {
    pub class_lo: usize,
    pub class_hi: usize,
    /// Indices into the shared support-vector table.
    pub sv_indices: Vec<u32>,
    /// alpha_i * y_i per support vector.
    pub alpha_y: Vec<f64>,
    pub bias: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub cost: f64,
    pub gamma: f64,
    /// Deduplicated support vectors shared across the pairwise models.
    pub support_vectors: Vec<Vec<f64>>,
    pub pairs: Vec<PairModel>,
}

pub const KKT_TOLERANCE: f64 = 1e-3;
const MAX_ITERATIONS: usize = 20_000_000;

#[inline]
pub fn rbf_kernel(a: &[f64], b: &[f64], gamma: f64) -> f64 {
    let mut dist = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        dist += d * d;
    }
    (-gamma * dist).exp()
}

/// Solve the soft-margin dual for labels y in {+1,-1}:
/// minimize 1/2 a'Qa - e'a subject to 0 <= a <= C, y'a = 0, with
/// Q_ij = y_i y_j K_ij. Returns (alpha, bias).
pub fn smo_solve(kernel: &[Vec<f64>], y: &[f64], cost: f64, tolerance: f64) -> (Vec<f64>, f64) {
    let n = y.len();
    let mut alpha = vec![0.0f64; n];
    let mut grad = vec![-1.0f64; n]; // gradient of the dual objective

    let mut iterations = 0;
    let (m_final, m_low_final) = loop {
        // maximal violating pair over -y*grad
        let mut m = f64::NEG_INFINITY;
        let mut m_low = f64::INFINITY;
        let mut i_up = usize::MAX;
        let mut i_low = usize::MAX;
        for t in 0..n {
            let v = -y[t] * grad[t];
            let in_up = (y[t] > 0.0 && alpha[t] < cost) || (y[t] < 0.0 && alpha[t] > 0.0);
            let in_low = (y[t] > 0.0 && alpha[t] > 0.0) || (y[t] < 0.0 && alpha[t] < cost);
            if in_up && v > m {
                m = v;
                i_up = t;
            }
            if in_low && v < m_low {
                m_low = v;
                i_low = t;
            }
        }
        if i_up == usize::MAX || i_low == usize::MAX || m - m_low < tolerance {
            break (m, m_low);
        }
        iterations += 1;
        if iterations > MAX_ITERATIONS {
            break (m, m_low);
        }

        let (i, j) = (i_up, i_low);
        let eta = (kernel[i][i] + kernel[j][j] - 2.0 * kernel[i][j]).max(1e-12);
        let mut step = (m - m_low) / eta;

        // clip the step so both alphas stay in [0, C]
        let (lo_i, hi_i) = if y[i] > 0.0 {
            (-alpha[i], cost - alpha[i])
        } else {
            (alpha[i] - cost, alpha[i])
        };
        let (lo_j, hi_j) = if y[j] > 0.0 {
            (alpha[j] - cost, alpha[j])
        } else {
            (-alpha[j], cost - alpha[j])
        };
        step = step.clamp(lo_i.max(lo_j), hi_i.min(hi_j));
        if step == 0.0 {
            break (m, m_low);
        }

        alpha[i] += y[i] * step;
        alpha[j] -= y[j] * step;
        for t in 0..n {
            grad[t] += y[t] * step * (kernel[t][i] - kernel[t][j]);
        }
    };

    // bias from the free support vectors, or the bound midpoint
    let mut free_sum = 0.0;
    let mut free_count = 0usize;
    let margin = 1e-8 * cost;
    for t in 0..n {
        if alpha[t] > margin && alpha[t] < cost - margin {
            free_sum += -y[t] * grad[t];
            free_count += 1;
        }
    }
    let bias = if free_count > 0 {
        free_sum / free_count as f64
    } else if m_final.is_finite() && m_low_final.is_finite() {
        (m_final + m_low_final) / 2.0
    } else {
        0.0
    };
    (alpha, bias)
}

/// Train every class pair; `rows_by_class[c]` lists row indices of class
/// `c` in the flattened `values` (row-major, `dim` wide).
pub fn train_one_vs_one(
    values: &[f64],
    dim: usize,
    rows_by_class: &[Vec<usize>],
    cost: f64,
    gamma: f64,
) -> SvmModel {
    let n_classes = rows_by_class.len();
    let mut pair_list = Vec::new();
    for lo in 0..n_classes {
        for hi in lo + 1..n_classes {
            if !rows_by_class[lo].is_empty() && !rows_by_class[hi].is_empty() {
                pair_list.push((lo, hi));
            }
        }
    }

    // (class_lo, class_hi, support rows, alpha*y, bias)
    type SolvedPair = (usize, usize, Vec<usize>, Vec<f64>, f64);

    let row = |r: usize| &values[r * dim..(r + 1) * dim];
    let solved: Vec<SolvedPair> = pair_list
        .par_iter()
        .map(|&(lo, hi)| {
            let rows: Vec<usize> = rows_by_class[lo]
                .iter()
                .chain(&rows_by_class[hi])
                .copied()
                .collect();
            let y: Vec<f64> = rows_by_class[lo]
                .iter()
                .map(|_| 1.0)
                .chain(rows_by_class[hi].iter().map(|_| -1.0))
                .collect();
            let n = rows.len();
            let mut kernel = vec![vec![0.0; n]; n];
            for a in 0..n {
                for b in a..n {
                    let k = rbf_kernel(row(rows[a]), row(rows[b]), gamma);
                    kernel[a][b] = k;
                    kernel[b][a] = k;
                }
            }
            let (alpha, bias) = smo_solve(&kernel, &y, cost, KKT_TOLERANCE);
            let mut sv_rows = Vec::new();
            let mut alpha_y = Vec::new();
            for t in 0..n {
                if alpha[t] > 1e-12 {
                    sv_rows.push(rows[t]);
                    alpha_y.push(alpha[t] * y[t]);
                }
            }
            (lo, hi, sv_rows, alpha_y, bias)
        })
        .collect();

    // dedupe support vectors across pairs
    let mut sv_slot: std::collections::HashMap<usize, u32> = std::collections::HashMap::new();
    let mut support_vectors = Vec::new();
    let mut pairs = Vec::with_capacity(solved.len());
    for (class_lo, class_hi, sv_rows, alpha_y, bias) in solved {
        let sv_indices = sv_rows
            .into_iter()
            .map(|r| {
                *sv_slot.entry(r).or_insert_with(|| {
                    support_vectors.push(row(r).to_vec());
                    (support_vectors.len() - 1) as u32
                })
            })
            .collect();
        pairs.push(PairModel {
            class_lo,
            class_hi,
            sv_indices,
            alpha_y,
            bias,
        });
    }
    SvmModel {
        cost,
        gamma,
        support_vectors,
        pairs,
    }
}

impl SvmModel {
    /// Pairwise wins per class; ties on the decision boundary go to the
    /// lower class index.
    pub fn wins(&self, x: &[f64], n_classes: usize) -> Vec<u32> {
        let mut wins = vec![0u32; n_classes];
        for pair in &self.pairs {
            let mut f = pair.bias;
            for (&sv, &ay) in pair.sv_indices.iter().zip(&pair.alpha_y) {
                f += ay * rbf_kernel(&self.support_vectors[sv as usize], x, self.gamma);
            }
            let winner = if f >= 0.0 { pair.class_lo } else { pair.class_hi };
            wins[winner] += 1;
        }
        wins
    }

    pub fn n_pairs(&self) -> usize {
        self.pairs.len()
    }
}
