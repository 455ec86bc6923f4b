//! Class-stratified 7:3 splitting and detection metrics.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::mathx;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub rng_seed: u64,
}

impl Default for SplitSpec {
    fn default() -> SplitSpec {
        SplitSpec {
            train_fraction: 0.7,
            rng_seed: 0,
        }
    }
}

/// Benign/malicious train and eval partitions, each sorted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    /// Benign training keys.
    pub nts: Vec<String>,
    /// Benign evaluation keys.
    pub nes: Vec<String>,
    /// Malicious training keys.
    pub mts: Vec<String>,
    /// Malicious evaluation keys.
    pub mes: Vec<String>,
}

/// Split each class independently: shuffle its sorted keys with a seeded
/// generator, take `round(fraction * n)` for training, the rest for
/// evaluation. Partitions are re-sorted so downstream iteration order is
/// canonical.
pub fn split(
    benign: &BTreeSet<String>,
    malicious: &BTreeSet<String>,
    spec: &SplitSpec,
) -> Split {
    let part = |keys: &BTreeSet<String>, stream: u64| -> (Vec<String>, Vec<String>) {
        let mut order: Vec<String> = keys.iter().cloned().collect();
        let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
        rng.set_stream(stream);
        order.shuffle(&mut rng);
        let take = (mathx::round(spec.train_fraction * order.len() as f64) as usize)
            .min(order.len());
        let eval = order.split_off(take);
        let mut train = order;
        train.sort_unstable();
        let mut eval = eval;
        eval.sort_unstable();
        (train, eval)
    };
    let (nts, nes) = part(benign, 0);
    let (mts, mes) = part(malicious, 1);
    Split { nts, nes, mts, mes }
}

/// Confusion counts plus the derived metrics. Metrics whose denominator
/// was zero are reported as 0 and listed in `undefined_metrics`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub true_positives: usize,
    pub false_positives: usize,
    pub true_negatives: usize,
    pub false_negatives: usize,
    pub precision: f64,
    pub recall: f64,
    pub accuracy: f64,
    pub fpr: f64,
    pub macro_f1: f64,
    pub undefined_metrics: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MetricsError {
    /// Predictions and ground truth cover different key sets.
    KeyMismatch {
        missing_prediction: Option<String>,
        missing_truth: Option<String>,
    },
    Empty,
}

impl fmt::Display for MetricsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricsError::KeyMismatch {
                missing_prediction,
                missing_truth,
            } => {
                if let Some(k) = missing_prediction {
                    write!(f, "no prediction for key {k:?}")
                } else if let Some(k) = missing_truth {
                    write!(f, "prediction for unknown key {k:?}")
                } else {
                    f.write_str("prediction/truth key mismatch")
                }
            }
            MetricsError::Empty => f.write_str("cannot score an empty test set"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for MetricsError {}

fn ratio(num: usize, den: usize, name: &str, undefined: &mut Vec<String>) -> f64 {
    if den == 0 {
        undefined.push(String::from(name));
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Build the report from raw confusion counts.
pub fn metrics_from_counts(
    true_positives: usize,
    false_positives: usize,
    true_negatives: usize,
    false_negatives: usize,
) -> MetricsReport {
    let (tp, fp, tn, fal_n) = (
        true_positives,
        false_positives,
        true_negatives,
        false_negatives,
    );
    let mut undefined = Vec::new();
    let precision = ratio(tp, tp + fp, "precision", &mut undefined);
    let recall = ratio(tp, tp + fal_n, "recall", &mut undefined);
    let fpr = ratio(fp, fp + tn, "fpr", &mut undefined);
    let total = tp + fp + tn + fal_n;
    let accuracy = ratio(tp + tn, total, "accuracy", &mut undefined);

    // Per-class F1 with the other class as positive for the benign side.
    let f1 = |p: f64, r: f64, name: &str, undefined: &mut Vec<String>| {
        if p + r == 0.0 {
            undefined.push(String::from(name));
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    };
    let f1_malicious = f1(precision, recall, "f1_malicious", &mut undefined);
    let mut u2 = Vec::new();
    let precision_b = ratio(tn, tn + fal_n, "precision_benign", &mut u2);
    let recall_b = ratio(tn, tn + fp, "recall_benign", &mut u2);
    let f1_benign = f1(precision_b, recall_b, "f1_benign", &mut undefined);
    let macro_f1 = (f1_malicious + f1_benign) / 2.0;

    MetricsReport {
        true_positives: tp,
        false_positives: fp,
        true_negatives: tn,
        false_negatives: fal_n,
        precision,
        recall,
        accuracy,
        fpr,
        macro_f1,
        undefined_metrics: undefined,
    }
}

/// Score `predictions` against `truth` (`true` = malicious). The two maps
/// must cover exactly the same keys.
pub fn compute_metrics(
    predictions: &BTreeMap<String, bool>,
    truth: &BTreeMap<String, bool>,
) -> Result<MetricsReport, MetricsError> {
    if truth.is_empty() {
        return Err(MetricsError::Empty);
    }
    for key in truth.keys() {
        if !predictions.contains_key(key) {
            return Err(MetricsError::KeyMismatch {
                missing_prediction: Some(key.clone()),
                missing_truth: None,
            });
        }
    }
    for key in predictions.keys() {
        if !truth.contains_key(key) {
            return Err(MetricsError::KeyMismatch {
                missing_prediction: None,
                missing_truth: Some(key.clone()),
            });
        }
    }

    let mut tp = 0;
    let mut fp = 0;
    let mut tn = 0;
    let mut fal_n = 0;
    for (key, &actual) in truth {
        match (predictions[key], actual) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, false) => tn += 1,
            (false, true) => fal_n += 1,
        }
    }
    Ok(metrics_from_counts(tp, fp, tn, fal_n))
}
