//! Isolation forest over embedding rows.
//!
//! Scores follow `s(x) = 2^(-E[h(x)] / c(psi))` where `h` is the path
//! length of `x` through a tree (leaf depth plus the average-path
//! adjustment for the leaf's size) and `c(n)` is the expected path length
//! of an unsuccessful search in a binary search tree over `n` points,
//! computed from exact harmonic numbers.

use alloc::vec::Vec;
use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::mathx;
use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IsolationForestParams {
    pub n_trees: usize,
    pub subsample: usize,
}

impl Default for IsolationForestParams {
    fn default() -> IsolationForestParams {
        IsolationForestParams {
            n_trees: 100,
            subsample: 256,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum TreeNode {
    Split {
        dim: u32,
        threshold: f64,
        left: u32,
        right: u32,
    },
    Leaf {
        size: u32,
        /// `c(size)`, precomputed at build time.
        path_adjust: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct IsoTree {
    nodes: Vec<TreeNode>,
}

impl IsoTree {
    fn path_length(&self, x: &[f64]) -> f64 {
        let mut idx = 0usize;
        let mut depth = 0.0;
        loop {
            match &self.nodes[idx] {
                TreeNode::Split {
                    dim,
                    threshold,
                    left,
                    right,
                } => {
                    idx = if x[*dim as usize] < *threshold {
                        *left as usize
                    } else {
                        *right as usize
                    };
                    depth += 1.0;
                }
                TreeNode::Leaf { path_adjust, .. } => return depth + path_adjust,
            }
        }
    }
}

/// Fitted forest. Serializes to a self-contained JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsolationForest {
    trees: Vec<IsoTree>,
    dims: usize,
    /// Effective subsample size (capped at the dataset size).
    sample_size: usize,
    /// `c(sample_size)`, the score denominator.
    normalizer: f64,
}

/// Expected unsuccessful-search path length `c(n)` with exact harmonics:
/// `c(n) = 2 H(n-1) - 2 (n-1) / n` for `n > 2`, `c(2) = 1`, else 0.
pub fn average_path_length(n: usize) -> f64 {
    match n {
        0 | 1 => 0.0,
        2 => 1.0,
        _ => {
            let mut harmonic = 0.0;
            for k in 1..n {
                harmonic += 1.0 / k as f64;
            }
            2.0 * harmonic - 2.0 * (n as f64 - 1.0) / n as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IForestError {
    EmptyDataset,
    /// Every row of the dataset is identical; no split can isolate anything.
    DegenerateData,
}

impl fmt::Display for IForestError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IForestError::EmptyDataset => f.write_str("cannot fit a forest on an empty dataset"),
            IForestError::DegenerateData => {
                f.write_str("all dataset rows are identical; anomaly scores would be meaningless")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for IForestError {}

impl IsolationForest {
    /// Fit on the rows of `data`. Each tree draws its own subsample
    /// without replacement from an independent stream of the seed.
    pub fn fit(
        data: &Matrix,
        params: &IsolationForestParams,
        seed: u64,
    ) -> Result<IsolationForest, IForestError> {
        let n = data.rows();
        if n == 0 {
            return Err(IForestError::EmptyDataset);
        }
        let first = data.row(0);
        if (1..n).all(|r| data.row(r) == first) {
            return Err(IForestError::DegenerateData);
        }
        let sample_size = params.subsample.min(n).max(2);
        let height_limit = mathx::ceil(mathx::log2(sample_size as f64)) as usize;

        let mut trees = Vec::with_capacity(params.n_trees);
        for t in 0..params.n_trees {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(t as u64);
            let mut rows: Vec<usize> = if sample_size == n {
                (0..n).collect()
            } else {
                let mut picked = rand::seq::index::sample(&mut rng, n, sample_size).into_vec();
                picked.sort_unstable();
                picked
            };
            let mut nodes = Vec::new();
            build_node(data, &mut rows, 0, height_limit, &mut rng, &mut nodes);
            trees.push(IsoTree { nodes });
        }

        Ok(IsolationForest {
            trees,
            dims: data.cols(),
            sample_size,
            normalizer: average_path_length(sample_size),
        })
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    pub fn sample_size(&self) -> usize {
        self.sample_size
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    /// Anomaly score of one row, always in (0, 1).
    pub fn score(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.dims, "query width mismatch");
        let total: f64 = self.trees.iter().map(|t| t.path_length(x)).sum();
        let mean = total / self.trees.len() as f64;
        mathx::powf(2.0, -mean / self.normalizer)
    }

    /// Scores for every row of `data`, in row order.
    pub fn scores(&self, data: &Matrix) -> Vec<f64> {
        (0..data.rows()).map(|r| self.score(data.row(r))).collect()
    }
}

/// Anomaly probability of a score: the identity map. The iForest score
/// already lives in (0, 1) and orders samples by anomalousness, so no
/// extra calibration layer is applied.
pub fn to_anomaly_probability(score: f64) -> f64 {
    score
}

/// Verdict threshold shared across the pipeline: malicious strictly above
/// one half.
pub fn is_malicious(probability: f64) -> bool {
    probability > 0.5
}

fn build_node(
    data: &Matrix,
    rows: &mut [usize],
    depth: usize,
    height_limit: usize,
    rng: &mut ChaCha8Rng,
    nodes: &mut Vec<TreeNode>,
) -> u32 {
    let idx = nodes.len() as u32;
    nodes.push(TreeNode::Leaf {
        size: rows.len() as u32,
        path_adjust: average_path_length(rows.len()),
    });
    if rows.len() <= 1 || depth >= height_limit {
        return idx;
    }

    // Pick a split dimension with spread, retrying constant dimensions up
    // to one pass over the feature count.
    let dims = data.cols();
    let mut chosen: Option<(usize, f64, f64)> = None;
    for _ in 0..dims {
        let dim = rng.gen_range(0..dims);
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &r in rows.iter() {
            let v = data.get(r, dim);
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if lo < hi {
            chosen = Some((dim, lo, hi));
            break;
        }
    }
    let Some((dim, lo, hi)) = chosen else {
        return idx; // all sampled dimensions constant: keep the leaf
    };
    let threshold = lo + rng.gen::<f64>() * (hi - lo);

    // Partition in place: rows below the threshold first.
    let mut split = 0;
    for i in 0..rows.len() {
        if data.get(rows[i], dim) < threshold {
            rows.swap(i, split);
            split += 1;
        }
    }
    let (left_rows, right_rows) = rows.split_at_mut(split);
    let left = build_node(data, left_rows, depth + 1, height_limit, rng, nodes);
    let right = build_node(data, right_rows, depth + 1, height_limit, rng, nodes);
    nodes[idx as usize] = TreeNode::Split {
        dim: dim as u32,
        threshold,
        left,
        right,
    };
    idx
}
