//! Verdict fusion across the two trained sub-models.
//!
//! Four strategies: benign voting (both views must agree on malicious),
//! malicious voting (either view suffices), soft voting (probability
//! averaging with ties resolved benign), and stacking (a regularized
//! linear meta-model trained on the agreement set).

use core::fmt;

use serde::{Deserialize, Serialize};

use crate::mathx;

/// Per-view probability vectors, malicious component first.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbPair {
    /// Structural sub-model `[MP, BP]`.
    pub sm: [f64; 2],
    /// Behavioral sub-model `[MP, BP]`.
    pub bm: [f64; 2],
}

impl ProbPair {
    /// Build from the two malicious probabilities.
    pub fn from_malicious(sm_mp: f64, bm_mp: f64) -> ProbPair {
        ProbPair {
            sm: [sm_mp, 1.0 - sm_mp],
            bm: [bm_mp, 1.0 - bm_mp],
        }
    }

    pub fn validate(&self) -> Result<(), FusionError> {
        for (view, pair) in [("sm", self.sm), ("bm", self.bm)] {
            if pair.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return Err(FusionError::InvalidPair { view });
            }
            if mathx::abs(pair[0] + pair[1] - 1.0) > 1e-9 {
                return Err(FusionError::InvalidPair { view });
            }
        }
        Ok(())
    }

    /// Concatenated 4-dim feature vector for the meta-model.
    pub fn features(&self) -> [f64; 4] {
        [self.sm[0], self.sm[1], self.bm[0], self.bm[1]]
    }

    /// Structural view's hard label: malicious iff MP > 0.5.
    pub fn sm_label(&self) -> bool {
        self.sm[0] > 0.5
    }

    pub fn bm_label(&self) -> bool {
        self.bm[0] > 0.5
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FusionStrategy {
    Bv,
    Mv,
    Sv,
    St,
}

impl FusionStrategy {
    pub const ALL: [FusionStrategy; 4] = [
        FusionStrategy::Bv,
        FusionStrategy::Mv,
        FusionStrategy::Sv,
        FusionStrategy::St,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            FusionStrategy::Bv => "bv",
            FusionStrategy::Mv => "mv",
            FusionStrategy::Sv => "sv",
            FusionStrategy::St => "st",
        }
    }
}

impl fmt::Display for FusionStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FusionError {
    InvalidPair { view: &'static str },
    /// The agreement set is empty or single-class; stacking cannot train.
    AgreementStarvation { classes_present: usize },
}

impl fmt::Display for FusionError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FusionError::InvalidPair { view } => {
                write!(f, "{view} probabilities are not a distribution")
            }
            FusionError::AgreementStarvation { classes_present } => write!(
                f,
                "stacking needs both classes in the agreement set, found {classes_present}"
            ),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for FusionError {}

/// Benign voting: malicious only when both views say malicious.
pub fn fuse_bv(p: &ProbPair) -> bool {
    p.sm_label() && p.bm_label()
}

/// Malicious voting: one malicious view suffices.
pub fn fuse_mv(p: &ProbPair) -> bool {
    p.sm_label() || p.bm_label()
}

/// Soft voting: average the vectors, label by the larger component, exact
/// ties resolve benign.
pub fn fuse_sv(p: &ProbPair) -> (bool, f64, f64) {
    let mp = (p.sm[0] + p.bm[0]) / 2.0;
    let bp = (p.sm[1] + p.bm[1]) / 2.0;
    (mp > bp, mp, bp)
}

/// Regularized logistic regression over the concatenated probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaModel {
    pub weights: [f64; 4],
    pub bias: f64,
}

impl MetaModel {
    pub fn probability(&self, p: &ProbPair) -> f64 {
        let x = p.features();
        let z: f64 = self
            .weights
            .iter()
            .zip(&x)
            .map(|(w, v)| w * v)
            .sum::<f64>()
            + self.bias;
        mathx::sigmoid(z)
    }
}

const META_ITERS: usize = 500;
const META_LR: f64 = 0.5;
const META_L2: f64 = 1e-3;

/// Train the stacking meta-model on the agreement set: pairs where both
/// views emit the same hard label, using that label as supervision.
/// Disagreement pairs are excluded.
pub fn train_stacking(pairs: &[ProbPair]) -> Result<MetaModel, FusionError> {
    let agreement: alloc::vec::Vec<(&ProbPair, bool)> = pairs
        .iter()
        .filter(|p| p.sm_label() == p.bm_label())
        .map(|p| (p, p.sm_label()))
        .collect();
    let positives = agreement.iter().filter(|(_, y)| *y).count();
    if agreement.is_empty() || positives == 0 || positives == agreement.len() {
        let classes = match (positives > 0, positives < agreement.len()) {
            (true, true) => 2,
            (false, false) => 0,
            _ => 1,
        };
        return Err(FusionError::AgreementStarvation {
            classes_present: classes,
        });
    }

    let m = agreement.len() as f64;
    let mut model = MetaModel {
        weights: [0.0; 4],
        bias: 0.0,
    };
    for _ in 0..META_ITERS {
        let mut gw = [0.0f64; 4];
        let mut gb = 0.0f64;
        for (p, y) in &agreement {
            let err = model.probability(p) - if *y { 1.0 } else { 0.0 };
            let x = p.features();
            for (g, v) in gw.iter_mut().zip(&x) {
                *g += err * v;
            }
            gb += err;
        }
        for (w, g) in model.weights.iter_mut().zip(&gw) {
            *w -= META_LR * (g / m + META_L2 * *w);
        }
        model.bias -= META_LR * gb / m;
    }
    Ok(model)
}

/// Stacking verdict: meta-model probability thresholded strictly at 0.5.
pub fn fuse_st(meta: &MetaModel, p: &ProbPair) -> (bool, f64) {
    let prob = meta.probability(p);
    (prob > 0.5, prob)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn bv_requires_both_views() {
        assert!(fuse_bv(&ProbPair::from_malicious(0.9, 0.8)));
        assert!(!fuse_bv(&ProbPair::from_malicious(0.9, 0.2)));
        assert!(!fuse_bv(&ProbPair::from_malicious(0.2, 0.2)));
    }

    #[test]
    fn mv_accepts_either_view() {
        assert!(fuse_mv(&ProbPair::from_malicious(0.9, 0.2)));
        assert!(fuse_mv(&ProbPair::from_malicious(0.2, 0.9)));
        assert!(!fuse_mv(&ProbPair::from_malicious(0.2, 0.2)));
    }

    #[test]
    fn sv_examples_and_tie_break() {
        let (label, mp, bp) = fuse_sv(&ProbPair::from_malicious(0.9, 0.2));
        assert!(label);
        assert!((mp - 0.55).abs() < 1e-12);
        assert!((mp + bp - 1.0).abs() < 1e-9);

        let (label, mp, bp) = fuse_sv(&ProbPair::from_malicious(0.5, 0.5));
        assert!(!label, "exact tie resolves benign");
        assert_eq!(mp, bp);
    }

    #[test]
    fn sv_equals_argmax_over_the_probability_grid() {
        // Exhaustive 0.01-resolution grid; oracle computes the averaged
        // vector independently and takes its argmax with benign ties.
        for i in 0..=100u32 {
            for j in 0..=100u32 {
                let p = ProbPair::from_malicious(i as f64 / 100.0, j as f64 / 100.0);
                let (label, _, _) = fuse_sv(&p);
                let avg = [(p.sm[0] + p.bm[0]) / 2.0, (p.sm[1] + p.bm[1]) / 2.0];
                let oracle = avg[0] > avg[1];
                assert_eq!(label, oracle, "i={i} j={j}");
            }
        }
    }

    #[test]
    fn sv_is_symmetric_in_the_views() {
        let p = ProbPair::from_malicious(0.7, 0.3);
        let q = ProbPair::from_malicious(0.3, 0.7);
        assert_eq!(fuse_sv(&p), fuse_sv(&q));
    }

    fn random_pairs(seed: u64, n: usize) -> Vec<ProbPair> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| ProbPair::from_malicious(rng.gen(), rng.gen()))
            .collect()
    }

    #[test]
    fn bv_mv_are_exact_set_operations() {
        let pairs = random_pairs(1, 2000);
        for p in &pairs {
            assert_eq!(fuse_bv(p), p.sm_label() && p.bm_label());
            assert_eq!(fuse_mv(p), p.sm_label() || p.bm_label());
            // BV subset of MV
            if fuse_bv(p) {
                assert!(fuse_mv(p));
            }
        }
    }

    #[test]
    fn validation_rejects_malformed_pairs() {
        let bad = ProbPair {
            sm: [0.6, 0.6],
            bm: [0.5, 0.5],
        };
        assert!(bad.validate().is_err());
        assert!(ProbPair::from_malicious(0.3, 0.9).validate().is_ok());
    }

    /// Separable synthetic distribution: malicious mass near (0.9, 0.9),
    /// benign near (0.1, 0.1), with a little jitter.
    fn agreement_heavy_pairs(seed: u64, n: usize) -> Vec<ProbPair> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|i| {
                let base = if i % 3 == 0 { 0.85 } else { 0.12 };
                ProbPair::from_malicious(
                    (base + rng.gen::<f64>() * 0.1).clamp(0.0, 1.0),
                    (base + rng.gen::<f64>() * 0.1).clamp(0.0, 1.0),
                )
            })
            .collect()
    }

    #[test]
    fn stacking_reproduces_agreement_labels() {
        let pairs = agreement_heavy_pairs(3, 300);
        let meta = train_stacking(&pairs).unwrap();
        let agreement: Vec<&ProbPair> = pairs
            .iter()
            .filter(|p| p.sm_label() == p.bm_label())
            .collect();
        let hits = agreement
            .iter()
            .filter(|p| fuse_st(&meta, p).0 == p.sm_label())
            .count();
        let rate = hits as f64 / agreement.len() as f64;
        assert!(rate >= 0.95, "self-consistency {rate}");
        // Unanimous extremes follow the evidence.
        assert!(fuse_st(&meta, &ProbPair::from_malicious(0.99, 0.99)).0);
        assert!(!fuse_st(&meta, &ProbPair::from_malicious(0.01, 0.01)).0);
    }

    #[test]
    fn stacking_weights_the_informative_view() {
        // sm tracks the label, bm is uniform noise; the meta-model must
        // lean on sm's components.
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut pairs = Vec::new();
        for i in 0..400 {
            let y = i % 4 == 0;
            let sm = if y {
                0.8 + rng.gen::<f64>() * 0.15
            } else {
                0.05 + rng.gen::<f64>() * 0.15
            };
            pairs.push(ProbPair::from_malicious(sm, rng.gen()));
        }
        let meta = train_stacking(&pairs).unwrap();
        let sm_pull = (meta.weights[0] - meta.weights[1]).abs();
        let bm_pull = (meta.weights[2] - meta.weights[3]).abs();
        assert!(
            sm_pull > bm_pull,
            "informative view should dominate: sm {sm_pull} bm {bm_pull}"
        );
    }

    #[test]
    fn single_class_agreement_is_starvation() {
        let pairs: Vec<ProbPair> = (0..50)
            .map(|_| ProbPair::from_malicious(0.9, 0.9))
            .collect();
        let err = train_stacking(&pairs).unwrap_err();
        assert!(matches!(err, FusionError::AgreementStarvation { classes_present: 1 }));
    }

    #[test]
    fn disagreements_do_not_influence_training() {
        // Adding pure-disagreement pairs must leave the model unchanged.
        let pairs = agreement_heavy_pairs(5, 200);
        let mut extended = pairs.clone();
        for _ in 0..100 {
            extended.push(ProbPair::from_malicious(0.9, 0.1));
        }
        let a = train_stacking(&pairs).unwrap();
        let b = train_stacking(&extended).unwrap();
        assert_eq!(a, b);
    }
}
