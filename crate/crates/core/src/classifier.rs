//! Supervised confidence classifier used by the collaborative trainer: a
//! bagged ensemble of depth-limited decision trees with class weighting.
//!
//! Probabilities are vote fractions over the ensemble, so they land on
//! multiples of `1/n_trees`. The ensemble sits behind
//! [`BinaryClassifier`] so alternative models can be swapped in.

use alloc::vec::Vec;
use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::matrix::Matrix;

/// A fitted binary model emitting the probability of the malicious class.
pub trait BinaryClassifier {
    /// P(malicious) in [0, 1].
    fn predict_proba(&self, x: &[f64]) -> f64;

    fn predict(&self, x: &[f64]) -> bool {
        self.predict_proba(x) > 0.5
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BaggedTreesParams {
    pub n_trees: usize,
    pub max_depth: usize,
}

impl Default for BaggedTreesParams {
    fn default() -> BaggedTreesParams {
        BaggedTreesParams {
            n_trees: 50,
            max_depth: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TrainError {
    EmptyDataset,
    /// Training labels contain only one class.
    SingleClass { malicious: bool },
}

impl fmt::Display for TrainError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TrainError::EmptyDataset => f.write_str("cannot fit a classifier without samples"),
            TrainError::SingleClass { malicious } => write!(
                f,
                "training labels are all {}; both classes are required",
                if *malicious { "malicious" } else { "benign" }
            ),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for TrainError {}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum TreeNode {
    Split {
        dim: u32,
        threshold: f64,
        left: u32,
        right: u32,
    },
    Leaf {
        malicious: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Tree {
    nodes: Vec<TreeNode>,
}

impl Tree {
    fn vote(&self, x: &[f64]) -> bool {
        let mut idx = 0usize;
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
                }
                TreeNode::Leaf { malicious } => return *malicious,
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaggedTreesClassifier {
    trees: Vec<Tree>,
    dims: usize,
}

struct FitContext<'a> {
    data: &'a Matrix,
    labels: &'a [bool],
    /// Per-class sample weights (inverse frequency).
    weight_malicious: f64,
    weight_benign: f64,
    max_depth: usize,
    feature_samples: usize,
}

impl<'a> FitContext<'a> {
    fn weight(&self, row: usize) -> f64 {
        if self.labels[row] {
            self.weight_malicious
        } else {
            self.weight_benign
        }
    }
}

impl BaggedTreesClassifier {
    /// Fit on rows of `data` with boolean labels (`true` = malicious).
    /// Each tree bootstraps its own sample on an independent stream of
    /// the seed and subsamples `ceil(sqrt(d))` features per split.
    pub fn fit(
        data: &Matrix,
        labels: &[bool],
        params: &BaggedTreesParams,
        seed: u64,
    ) -> Result<BaggedTreesClassifier, TrainError> {
        let n = data.rows();
        assert_eq!(n, labels.len(), "label count mismatch");
        if n == 0 {
            return Err(TrainError::EmptyDataset);
        }
        let positives = labels.iter().filter(|&&l| l).count();
        if positives == 0 || positives == n {
            return Err(TrainError::SingleClass {
                malicious: positives == n,
            });
        }

        let ctx = FitContext {
            data,
            labels,
            weight_malicious: n as f64 / (2.0 * positives as f64),
            weight_benign: n as f64 / (2.0 * (n - positives) as f64),
            max_depth: params.max_depth,
            feature_samples: (crate::mathx::sqrt(data.cols() as f64).ceil() as usize)
                .clamp(1, data.cols()),
        };

        let mut trees = Vec::with_capacity(params.n_trees);
        for t in 0..params.n_trees {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(t as u64);
            let mut rows: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
            rows.sort_unstable();
            let mut nodes = Vec::new();
            grow(&ctx, &mut rows, 0, &mut rng, &mut nodes);
            trees.push(Tree { nodes });
        }

        Ok(BaggedTreesClassifier {
            trees,
            dims: data.cols(),
        })
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    pub fn dims(&self) -> usize {
        self.dims
    }
}

impl BinaryClassifier for BaggedTreesClassifier {
    fn predict_proba(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.dims, "query width mismatch");
        let votes = self.trees.iter().filter(|t| t.vote(x)).count();
        votes as f64 / self.trees.len() as f64
    }
}

/// Weighted counts of a row set.
fn class_weights(ctx: &FitContext, rows: &[usize]) -> (f64, f64) {
    let mut wm = 0.0;
    let mut wb = 0.0;
    for &r in rows {
        if ctx.labels[r] {
            wm += ctx.weight_malicious;
        } else {
            wb += ctx.weight_benign;
        }
    }
    (wm, wb)
}

fn gini(wm: f64, wb: f64) -> f64 {
    let total = wm + wb;
    if total <= 0.0 {
        return 0.0;
    }
    let pm = wm / total;
    let pb = wb / total;
    1.0 - pm * pm - pb * pb
}

fn leaf(ctx: &FitContext, rows: &[usize], nodes: &mut Vec<TreeNode>) -> u32 {
    let (wm, wb) = class_weights(ctx, rows);
    // Weighted-tie leaves vote benign.
    let idx = nodes.len() as u32;
    nodes.push(TreeNode::Leaf { malicious: wm > wb });
    idx
}

fn grow(
    ctx: &FitContext,
    rows: &mut [usize],
    depth: usize,
    rng: &mut ChaCha8Rng,
    nodes: &mut Vec<TreeNode>,
) -> u32 {
    let (wm, wb) = class_weights(ctx, rows);
    if depth >= ctx.max_depth || rows.len() < 2 || wm == 0.0 || wb == 0.0 {
        return leaf(ctx, rows, nodes);
    }

    // Evaluate candidate splits on a random subset of features; keep the
    // lowest weighted child impurity.
    let mut dims = rand::seq::index::sample(rng, ctx.data.cols(), ctx.feature_samples).into_vec();
    dims.sort_unstable();
    let parent = gini(wm, wb);
    let mut best: Option<(f64, usize, f64)> = None; // (score, dim, threshold)
    for &dim in &dims {
        let mut values: Vec<f64> = rows.iter().map(|&r| ctx.data.get(r, dim)).collect();
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        values.dedup();
        if values.len() < 2 {
            continue;
        }
        for pair in values.windows(2) {
            let threshold = (pair[0] + pair[1]) / 2.0;
            let mut lm = 0.0;
            let mut lb = 0.0;
            for &r in rows.iter() {
                if ctx.data.get(r, dim) < threshold {
                    if ctx.labels[r] {
                        lm += ctx.weight_malicious;
                    } else {
                        lb += ctx.weight_benign;
                    }
                }
            }
            let rm = wm - lm;
            let rb = wb - lb;
            let wl = lm + lb;
            let wr = rm + rb;
            if wl == 0.0 || wr == 0.0 {
                continue;
            }
            let total = wl + wr;
            let score = (wl / total) * gini(lm, lb) + (wr / total) * gini(rm, rb);
            if best.map_or(score < parent, |(s, _, _)| score < s) {
                best = Some((score, dim, threshold));
            }
        }
    }

    let Some((_, dim, threshold)) = best else {
        return leaf(ctx, rows, nodes);
    };

    let idx = nodes.len() as u32;
    nodes.push(TreeNode::Leaf { malicious: false }); // placeholder
    let mut split = 0;
    for i in 0..rows.len() {
        if ctx.data.get(rows[i], dim) < threshold {
            rows.swap(i, split);
            split += 1;
        }
    }
    let (left_rows, right_rows) = rows.split_at_mut(split);
    let left = grow(ctx, left_rows, depth + 1, rng, nodes);
    let right = grow(ctx, right_rows, depth + 1, rng, nodes);
    nodes[idx as usize] = TreeNode::Split {
        dim: dim as u32,
        threshold,
        left,
        right,
    };
    idx
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn blobs(seed: u64, n_benign: usize, n_malicious: usize) -> (Matrix, Vec<bool>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for _ in 0..n_benign {
            rows.push(vec![rng.gen::<f64>(), rng.gen::<f64>()]);
            labels.push(false);
        }
        for _ in 0..n_malicious {
            rows.push(vec![5.0 + rng.gen::<f64>(), 5.0 + rng.gen::<f64>()]);
            labels.push(true);
        }
        (Matrix::from_rows(&rows), labels)
    }

    #[test]
    fn separable_blobs_are_fit_exactly() {
        let (data, labels) = blobs(1, 60, 40);
        let model =
            BaggedTreesClassifier::fit(&data, &labels, &BaggedTreesParams::default(), 7).unwrap();
        for r in 0..data.rows() {
            assert_eq!(model.predict(data.row(r)), labels[r], "row {r}");
        }
    }

    #[test]
    fn probabilities_are_vote_fractions() {
        let (data, labels) = blobs(2, 50, 50);
        let model =
            BaggedTreesClassifier::fit(&data, &labels, &BaggedTreesParams::default(), 3).unwrap();
        for r in 0..data.rows() {
            let p = model.predict_proba(data.row(r));
            assert!((0.0..=1.0).contains(&p));
            let scaled = p * model.n_trees() as f64;
            assert!((scaled - scaled.round()).abs() < 1e-9, "p = {p}");
        }
    }

    #[test]
    fn single_class_labels_are_rejected() {
        let (data, _) = blobs(3, 10, 0);
        let labels = vec![false; 10];
        let err = BaggedTreesClassifier::fit(&data, &labels, &BaggedTreesParams::default(), 1)
            .unwrap_err();
        assert_eq!(err, TrainError::SingleClass { malicious: false });
    }

    #[test]
    fn minority_class_is_still_learned() {
        // 190 benign vs 10 malicious, well separated: class weighting must
        // keep the minority region correctly labeled.
        let (data, labels) = blobs(4, 190, 10);
        let model =
            BaggedTreesClassifier::fit(&data, &labels, &BaggedTreesParams::default(), 11).unwrap();
        for r in 0..data.rows() {
            assert_eq!(model.predict(data.row(r)), labels[r], "row {r}");
        }
    }

    #[test]
    fn same_seed_is_deterministic() {
        let (data, labels) = blobs(5, 30, 30);
        let params = BaggedTreesParams::default();
        let a = BaggedTreesClassifier::fit(&data, &labels, &params, 42).unwrap();
        let b = BaggedTreesClassifier::fit(&data, &labels, &params, 42).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn serde_round_trip_preserves_votes() {
        let (data, labels) = blobs(6, 40, 20);
        let model =
            BaggedTreesClassifier::fit(&data, &labels, &BaggedTreesParams::default(), 9).unwrap();
        let json = serde_json::to_string(&model).unwrap();
        let back: BaggedTreesClassifier = serde_json::from_str(&json).unwrap();
        for r in 0..data.rows() {
            assert_eq!(
                model.predict_proba(data.row(r)),
                back.predict_proba(data.row(r))
            );
        }
    }
}
