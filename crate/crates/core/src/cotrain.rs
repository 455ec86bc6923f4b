//! Collaborative training: turn the two unsupervised detectors into
//! supervised sub-models by exchanging pseudo labels between views.
//!
//! Seeding draws the most confident anomalies (probability above
//! `batch_thres`) and the most confident normals from each view, then the
//! loop retrains a per-view classifier on the labeled pool and lets each
//! view promote its own high-confidence picks until the unlabeled pool
//! empties, a round makes no progress, or the iteration cap is hit.
//!
//! Benign candidates are keys with anomaly probability below
//! `1 - batch_thres`. The source algorithm draws its benign picks from
//! the same above-threshold pool as the malicious ones, which would label
//! high-anomaly samples benign; this implementation keeps the evident
//! confidence symmetry instead. Selected counts are the `batch_prob`
//! fraction of each candidate pool, at least one when the pool is
//! non-empty.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::classifier::{BaggedTreesClassifier, BaggedTreesParams, BinaryClassifier, TrainError};
use crate::matrix::Matrix;

/// The per-process-key data co-training operates on: one row per key in
/// each view's embedding matrix, rows aligned with `keys`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub keys: Vec<String>,
    pub structural: Matrix,
    pub behavioral: Matrix,
}

impl SampleSet {
    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelSource {
    Usm,
    Ubm,
    Sm,
    Bm,
}

impl fmt::Display for LabelSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            LabelSource::Usm => "usm",
            LabelSource::Ubm => "ubm",
            LabelSource::Sm => "sm",
            LabelSource::Bm => "bm",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PseudoLabel {
    pub malicious: bool,
    pub source: LabelSource,
    /// Probability of the assigned class at selection time.
    pub confidence: f64,
    /// 0 = seeding, then 1-based loop rounds.
    pub iteration: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoTrainConfig {
    pub batch_thres: f64,
    pub batch_prob: f64,
    pub max_iterations: usize,
    pub trees: BaggedTreesParams,
    pub rng_seed: u64,
}

impl Default for CoTrainConfig {
    fn default() -> CoTrainConfig {
        CoTrainConfig {
            batch_thres: 0.65,
            batch_prob: 0.3,
            max_iterations: 50,
            trees: BaggedTreesParams::default(),
            rng_seed: 0,
        }
    }
}

/// Labeled and unlabeled pools over sample indices. Together they always
/// partition the initial key set.
#[derive(Debug, Clone, PartialEq)]
pub struct Pools {
    pub ld: BTreeMap<usize, PseudoLabel>,
    pub ud: BTreeSet<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    UdEmpty,
    NoProgress,
    MaxIterations,
}

/// One line of the training audit trail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub iteration: usize,
    pub ld_size: usize,
    pub ud_size: usize,
    pub selected_malicious: usize,
    pub selected_benign: usize,
    /// Keys selected by both views in one round with opposite labels.
    pub conflicts: usize,
    /// Opposite-label conflicts at equal confidence, left unlabeled.
    pub conflict_ties: usize,
    /// UD keys whose hard per-view predictions changed since the
    /// previous round (0 for seeding and the first round).
    pub prediction_flips: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoTrainResult {
    pub sm: BaggedTreesClassifier,
    pub bm: BaggedTreesClassifier,
    pub pools: Pools,
    pub audit: Vec<AuditEntry>,
    pub iterations: usize,
    pub termination: Termination,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CoTrainError {
    /// No sample cleared `batch_thres` in either view.
    ColdStart { batch_thres_hint: &'static str },
    /// The labeled pool holds a single class; supervised training cannot
    /// proceed.
    ClassStarvation { malicious_only: bool },
    ScoreLength { expected: usize, got: usize },
}

impl fmt::Display for CoTrainError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoTrainError::ColdStart { batch_thres_hint } => write!(
                f,
                "no sample cleared batch_thres in either view; {batch_thres_hint}"
            ),
            CoTrainError::ClassStarvation { malicious_only } => write!(
                f,
                "labeled pool is entirely {}; lower batch_thres so both classes seed",
                if *malicious_only { "malicious" } else { "benign" }
            ),
            CoTrainError::ScoreLength { expected, got } => {
                write!(f, "score vector length {got}, expected {expected}")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for CoTrainError {}

/// Number of samples the `batch_prob` fraction selects from a pool of
/// `len` candidates: `ceil` with a guard against float fuzz on exact
/// products, at least 1, at most the pool.
pub fn selection_count(len: usize, prob: f64) -> usize {
    if len == 0 {
        return 0;
    }
    let raw = crate::mathx::ceil(prob * len as f64 - 1e-9);
    (raw as usize).clamp(1, len)
}

/// A candidate pseudo-label emitted by one view in one round.
#[derive(Debug, Clone, Copy)]
struct Candidate {
    idx: usize,
    malicious: bool,
    source: LabelSource,
    confidence: f64,
}

/// Pick the malicious and benign selections of one view from its
/// per-sample probabilities over `pool`.
fn select_view(
    pool: &BTreeSet<usize>,
    probs: &BTreeMap<usize, f64>,
    config: &CoTrainConfig,
    source: LabelSource,
) -> Vec<Candidate> {
    let mut malicious: Vec<(usize, f64)> = pool
        .iter()
        .map(|&i| (i, probs[&i]))
        .filter(|&(_, p)| p > config.batch_thres)
        .collect();
    // Highest probability first; index breaks ties for determinism.
    malicious.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    malicious.truncate(selection_count(malicious.len(), config.batch_prob));

    let mut benign: Vec<(usize, f64)> = pool
        .iter()
        .map(|&i| (i, probs[&i]))
        .filter(|&(_, p)| p < 1.0 - config.batch_thres)
        .collect();
    benign.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)));
    benign.truncate(selection_count(benign.len(), config.batch_prob));

    malicious
        .into_iter()
        .map(|(idx, p)| Candidate {
            idx,
            malicious: true,
            source,
            confidence: p,
        })
        .chain(benign.into_iter().map(|(idx, p)| Candidate {
            idx,
            malicious: false,
            source,
            confidence: 1.0 - p,
        }))
        .collect()
}

/// Merge both views' candidates: same-label duplicates keep the
/// higher-confidence source; opposite labels go to the higher confidence,
/// or stay unlabeled on an exact tie. Returns (resolved, conflicts,
/// conflict_ties).
fn resolve(candidates: Vec<Candidate>) -> (BTreeMap<usize, Candidate>, usize, usize) {
    let mut resolved: BTreeMap<usize, Candidate> = BTreeMap::new();
    let mut dropped: BTreeSet<usize> = BTreeSet::new();
    let mut conflicts = 0;
    let mut ties = 0;
    for cand in candidates {
        if dropped.contains(&cand.idx) {
            continue;
        }
        match resolved.get(&cand.idx) {
            None => {
                resolved.insert(cand.idx, cand);
            }
            Some(prev) if prev.malicious == cand.malicious => {
                if cand.confidence > prev.confidence {
                    resolved.insert(cand.idx, cand);
                }
            }
            Some(prev) => {
                conflicts += 1;
                if cand.confidence > prev.confidence {
                    resolved.insert(cand.idx, cand);
                } else if cand.confidence == prev.confidence {
                    ties += 1;
                    resolved.remove(&cand.idx);
                    dropped.insert(cand.idx);
                }
            }
        }
    }
    (resolved, conflicts, ties)
}

fn apply_selection(
    pools: &mut Pools,
    resolved: BTreeMap<usize, Candidate>,
    iteration: usize,
) -> (usize, usize) {
    let mut n_malicious = 0;
    let mut n_benign = 0;
    for (idx, cand) in resolved {
        pools.ud.remove(&idx);
        pools.ld.insert(
            idx,
            PseudoLabel {
                malicious: cand.malicious,
                source: cand.source,
                confidence: cand.confidence,
                iteration,
            },
        );
        if cand.malicious {
            n_malicious += 1;
        } else {
            n_benign += 1;
        }
    }
    (n_malicious, n_benign)
}

/// Seed the labeled pool from the unsupervised detectors' anomaly
/// probabilities. `usm_scores[i]`/`ubm_scores[i]` belong to
/// `samples.keys[i]`.
pub fn seed_pools(
    samples: &SampleSet,
    usm_scores: &[f64],
    ubm_scores: &[f64],
    config: &CoTrainConfig,
) -> Result<(Pools, AuditEntry), CoTrainError> {
    let n = samples.len();
    for scores in [usm_scores, ubm_scores] {
        if scores.len() != n {
            return Err(CoTrainError::ScoreLength {
                expected: n,
                got: scores.len(),
            });
        }
    }
    let ud: BTreeSet<usize> = (0..n).collect();
    let usm: BTreeMap<usize, f64> = usm_scores.iter().copied().enumerate().collect();
    let ubm: BTreeMap<usize, f64> = ubm_scores.iter().copied().enumerate().collect();

    let any_above = |probs: &BTreeMap<usize, f64>| {
        probs.values().any(|&p| p > config.batch_thres)
    };
    if !any_above(&usm) && !any_above(&ubm) {
        return Err(CoTrainError::ColdStart {
            batch_thres_hint: "reduce batch_thres so confident anomalies exist",
        });
    }

    let mut candidates = select_view(&ud, &usm, config, LabelSource::Usm);
    candidates.extend(select_view(&ud, &ubm, config, LabelSource::Ubm));
    let (resolved, conflicts, ties) = resolve(candidates);

    let mut pools = Pools {
        ld: BTreeMap::new(),
        ud,
    };
    let (n_malicious, n_benign) = apply_selection(&mut pools, resolved, 0);
    let audit = AuditEntry {
        iteration: 0,
        ld_size: pools.ld.len(),
        ud_size: pools.ud.len(),
        selected_malicious: n_malicious,
        selected_benign: n_benign,
        conflicts,
        conflict_ties: ties,
        prediction_flips: 0,
    };
    Ok((pools, audit))
}

fn round_seed(base: u64, iteration: usize, view: u64) -> u64 {
    base.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(iteration as u64 * 2 + view)
}

fn fit_on_pool(
    samples: &SampleSet,
    pools: &Pools,
    view: LabelSource,
    config: &CoTrainConfig,
    iteration: usize,
) -> Result<BaggedTreesClassifier, CoTrainError> {
    let idx: Vec<usize> = pools.ld.keys().copied().collect();
    let labels: Vec<bool> = pools.ld.values().map(|l| l.malicious).collect();
    let (matrix, stream) = match view {
        LabelSource::Sm => (&samples.structural, 0),
        LabelSource::Bm => (&samples.behavioral, 1),
        _ => unreachable!("only sub-model views train"),
    };
    let rows = matrix.select_rows(&idx);
    BaggedTreesClassifier::fit(
        &rows,
        &labels,
        &config.trees,
        round_seed(config.rng_seed, iteration, stream),
    )
    .map_err(|e| match e {
        TrainError::SingleClass { malicious } => CoTrainError::ClassStarvation {
            malicious_only: malicious,
        },
        TrainError::EmptyDataset => CoTrainError::ColdStart {
            batch_thres_hint: "no labeled samples were seeded",
        },
    })
}

/// Everything one loop round produces.
#[derive(Debug)]
pub struct RoundOutcome {
    pub sm: BaggedTreesClassifier,
    pub bm: BaggedTreesClassifier,
    pub audit: AuditEntry,
    pub moved: usize,
    /// Hard (sm, bm) predictions over the pre-selection UD, for flip
    /// accounting in the next round.
    pub predictions: BTreeMap<usize, (bool, bool)>,
}

/// Train both sub-models on the labeled pool, classify the unlabeled
/// pool, and promote each view's confident picks.
pub fn cotrain_round(
    samples: &SampleSet,
    pools: &mut Pools,
    config: &CoTrainConfig,
    iteration: usize,
    previous_predictions: Option<&BTreeMap<usize, (bool, bool)>>,
) -> Result<RoundOutcome, CoTrainError> {
    let sm = fit_on_pool(samples, pools, LabelSource::Sm, config, iteration)?;
    let bm = fit_on_pool(samples, pools, LabelSource::Bm, config, iteration)?;

    let sm_probs: BTreeMap<usize, f64> = pools
        .ud
        .iter()
        .map(|&i| (i, sm.predict_proba(samples.structural.row(i))))
        .collect();
    let bm_probs: BTreeMap<usize, f64> = pools
        .ud
        .iter()
        .map(|&i| (i, bm.predict_proba(samples.behavioral.row(i))))
        .collect();

    let predictions: BTreeMap<usize, (bool, bool)> = pools
        .ud
        .iter()
        .map(|&i| (i, (sm_probs[&i] > 0.5, bm_probs[&i] > 0.5)))
        .collect();
    let prediction_flips = previous_predictions.map_or(0, |prev| {
        predictions
            .iter()
            .filter(|(i, now)| prev.get(i).is_some_and(|was| was != *now))
            .count()
    });

    let mut candidates = select_view(&pools.ud, &sm_probs, config, LabelSource::Sm);
    candidates.extend(select_view(&pools.ud, &bm_probs, config, LabelSource::Bm));
    let (resolved, conflicts, ties) = resolve(candidates);
    let moved = resolved.len();
    let (n_malicious, n_benign) = apply_selection(pools, resolved, iteration);

    Ok(RoundOutcome {
        sm,
        bm,
        audit: AuditEntry {
            iteration,
            ld_size: pools.ld.len(),
            ud_size: pools.ud.len(),
            selected_malicious: n_malicious,
            selected_benign: n_benign,
            conflicts,
            conflict_ties: ties,
            prediction_flips,
        },
        moved,
        predictions,
    })
}

/// Run seeding plus the full loop. The returned sub-models are the ones
/// trained in the final executed round (the loop never retrains after its
/// last selection, mirroring the source algorithm); when the unlabeled
/// pool is already empty after seeding, one training pass on the seed
/// pool is performed.
pub fn run_cotraining(
    samples: &SampleSet,
    usm_scores: &[f64],
    ubm_scores: &[f64],
    config: &CoTrainConfig,
) -> Result<CoTrainResult, CoTrainError> {
    let (mut pools, seed_audit) = seed_pools(samples, usm_scores, ubm_scores, config)?;
    let mut audit = alloc::vec![seed_audit];

    if pools.ud.is_empty() {
        let sm = fit_on_pool(samples, &pools, LabelSource::Sm, config, 0)?;
        let bm = fit_on_pool(samples, &pools, LabelSource::Bm, config, 0)?;
        return Ok(CoTrainResult {
            sm,
            bm,
            pools,
            audit,
            iterations: 0,
            termination: Termination::UdEmpty,
        });
    }

    let mut iteration = 0;
    let mut previous_predictions: Option<BTreeMap<usize, (bool, bool)>> = None;
    let mut last_models: Option<(BaggedTreesClassifier, BaggedTreesClassifier)> = None;
    let mut termination = Termination::MaxIterations;
    while !pools.ud.is_empty() && iteration < config.max_iterations {
        iteration += 1;
        let outcome = cotrain_round(
            samples,
            &mut pools,
            config,
            iteration,
            previous_predictions.as_ref(),
        )?;
        audit.push(outcome.audit);
        previous_predictions = Some(outcome.predictions);
        last_models = Some((outcome.sm, outcome.bm));
        if outcome.moved == 0 {
            termination = Termination::NoProgress;
            break;
        }
    }
    if pools.ud.is_empty() {
        termination = Termination::UdEmpty;
    }

    let (sm, bm) = last_models.expect("loop ran at least once");
    Ok(CoTrainResult {
        sm,
        bm,
        pools,
        audit,
        iterations: iteration,
        termination,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::format;
    use alloc::vec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn config() -> CoTrainConfig {
        CoTrainConfig::default()
    }

    /// Two separable blobs in both views; first `n_mal` keys malicious.
    fn blob_samples(seed: u64, n_mal: usize, n_ben: usize) -> (SampleSet, Vec<bool>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = n_mal + n_ben;
        let mut structural = Vec::new();
        let mut behavioral = Vec::new();
        let mut truth = Vec::new();
        for i in 0..n {
            let malicious = i < n_mal;
            let center = if malicious { 4.0 } else { 0.0 };
            structural.push(vec![
                center + rng.gen::<f64>() * 0.5,
                center + rng.gen::<f64>() * 0.5,
            ]);
            behavioral.push(vec![
                center + rng.gen::<f64>() * 0.5,
                -center + rng.gen::<f64>() * 0.5,
            ]);
            truth.push(malicious);
        }
        let keys = (0..n).map(|i| format!("p{i:04}")).collect();
        (
            SampleSet {
                keys,
                structural: Matrix::from_rows(&structural),
                behavioral: Matrix::from_rows(&behavioral),
            },
            truth,
        )
    }

    /// Scores aligned with the blob layout: malicious keys high, benign
    /// low, with a deterministic spread for unambiguous ordering.
    fn blob_scores(truth: &[bool], high_base: f64, low_base: f64) -> Vec<f64> {
        truth
            .iter()
            .enumerate()
            .map(|(i, &m)| {
                let jitter = (i % 7) as f64 * 0.004;
                if m {
                    high_base + jitter
                } else {
                    low_base + jitter
                }
            })
            .collect()
    }

    #[test]
    fn selection_count_examples() {
        assert_eq!(selection_count(10, 0.3), 3);
        assert_eq!(selection_count(7, 0.3), 3); // ceil(2.1)
        assert_eq!(selection_count(25, 1.0), 25);
        assert_eq!(selection_count(3, 0.01), 1); // clamp to one
        assert_eq!(selection_count(0, 0.5), 0);
    }

    #[test]
    fn seed_selects_the_top_scorers() {
        let (samples, truth) = blob_samples(1, 10, 90);
        let usm = blob_scores(&truth, 0.8, 0.3);
        let ubm = blob_scores(&truth, 0.7, 0.32);
        let (pools, audit) = seed_pools(&samples, &usm, &ubm, &config()).unwrap();

        // 10 above threshold per view, batch_prob 0.3 -> 3 malicious per
        // view; overlapping picks merge.
        assert!(audit.selected_malicious >= 3);
        // Sort-and-compare oracle: every seeded malicious key outscores
        // every unseeded above-threshold key in its source view.
        for (idx, label) in &pools.ld {
            if !label.malicious {
                continue;
            }
            let scores = match label.source {
                LabelSource::Usm => &usm,
                LabelSource::Ubm => &ubm,
                _ => unreachable!("seeding uses only the unsupervised views"),
            };
            for &other in &pools.ud {
                if scores[other] > 0.65 {
                    assert!(
                        scores[*idx] >= scores[other],
                        "seeded {idx} outscored by unseeded {other}"
                    );
                }
            }
        }
        assert_eq!(pools.ld.len() + pools.ud.len(), samples.len());
    }

    #[test]
    fn cold_start_when_nothing_clears_the_threshold() {
        let (samples, truth) = blob_samples(2, 5, 45);
        let flat = blob_scores(&truth, 0.5, 0.45);
        let err = seed_pools(&samples, &flat, &flat, &config()).unwrap_err();
        assert!(matches!(err, CoTrainError::ColdStart { .. }));
    }

    #[test]
    fn benign_candidates_use_the_mirrored_threshold() {
        let (samples, truth) = blob_samples(3, 5, 45);
        // Benign scores at 0.4: above 1 - 0.65 = 0.35, so no benign seeds.
        let usm = blob_scores(&truth, 0.8, 0.4);
        let (pools, audit) = seed_pools(&samples, &usm, &usm, &config()).unwrap();
        assert_eq!(audit.selected_benign, 0);
        assert!(pools.ld.values().all(|l| l.malicious));
    }

    #[test]
    fn opposite_label_conflict_resolves_to_higher_confidence() {
        let (samples, _) = blob_samples(4, 2, 8);
        // Key 0: usm says malicious at 0.9; ubm says benign at 0.05
        // (confidence 0.95) -> benign wins.
        let mut usm = vec![0.4; 10];
        let mut ubm = vec![0.4; 10];
        usm[0] = 0.9;
        ubm[0] = 0.05;
        // Give each view one more candidate so pools aren't empty.
        usm[1] = 0.8;
        ubm[2] = 0.7;
        let (pools, audit) = seed_pools(&samples, &usm, &ubm, &config()).unwrap();
        assert_eq!(audit.conflicts, 1);
        let label = pools.ld.get(&0).expect("key 0 labeled");
        assert!(!label.malicious);
        assert_eq!(label.source, LabelSource::Ubm);
        assert_eq!(label.confidence, 0.95);
    }

    #[test]
    fn exact_tie_conflict_stays_unlabeled() {
        let (samples, _) = blob_samples(5, 2, 8);
        let mut usm = vec![0.4; 10];
        let mut ubm = vec![0.4; 10];
        // Key 0 is the sole candidate on each side: malicious at 0.7 vs
        // benign at 0.3 -> both confidence 0.7.
        usm[0] = 0.7;
        ubm[0] = 0.3;
        ubm[2] = 0.66;
        let (pools, audit) = seed_pools(&samples, &usm, &ubm, &config()).unwrap();
        assert_eq!(audit.conflict_ties, 1);
        assert!(!pools.ld.contains_key(&0));
        assert!(pools.ud.contains(&0));
    }

    #[test]
    fn dual_same_label_keeps_higher_confidence_source() {
        let (samples, _) = blob_samples(6, 2, 8);
        let mut usm = vec![0.3; 10];
        let mut ubm = vec![0.3; 10];
        usm[0] = 0.8;
        ubm[0] = 0.95;
        let (pools, _) = seed_pools(&samples, &usm, &ubm, &config()).unwrap();
        let label = pools.ld.get(&0).unwrap();
        assert_eq!(label.source, LabelSource::Ubm);
        assert_eq!(label.confidence, 0.95);
    }

    #[test]
    fn round_trains_accurately_and_single_view_suffices() {
        let (samples, truth) = blob_samples(7, 20, 80);
        let usm = blob_scores(&truth, 0.85, 0.2);
        let ubm = blob_scores(&truth, 0.82, 0.22);
        let (mut pools, _) = seed_pools(&samples, &usm, &ubm, &config()).unwrap();
        let outcome = cotrain_round(&samples, &mut pools, &config(), 1, None).unwrap();

        // Sub-models fit their labeled pool exactly (separable case).
        for (&idx, label) in &pools.ld {
            if label.iteration == 0 {
                assert_eq!(
                    outcome.sm.predict(samples.structural.row(idx)),
                    label.malicious
                );
            }
        }
        // Separable blobs: the loop selects from both sides.
        assert!(outcome.moved > 0);
    }

    #[test]
    fn starved_pool_aborts_the_round() {
        let (samples, truth) = blob_samples(8, 10, 40);
        // Only malicious candidates: benign all score 0.5 (above 0.35).
        let usm = blob_scores(&truth, 0.9, 0.5);
        let (mut pools, _) = seed_pools(&samples, &usm, &usm, &config()).unwrap();
        let err = cotrain_round(&samples, &mut pools, &config(), 1, None).unwrap_err();
        assert_eq!(err, CoTrainError::ClassStarvation { malicious_only: true });
    }

    #[test]
    fn full_run_conserves_and_terminates() {
        let (samples, truth) = blob_samples(9, 30, 170);
        let usm = blob_scores(&truth, 0.8, 0.25);
        let ubm = blob_scores(&truth, 0.78, 0.27);
        let result = run_cotraining(&samples, &usm, &ubm, &config()).unwrap();

        assert!(result.iterations <= config().max_iterations);
        assert_eq!(result.pools.ld.len() + result.pools.ud.len(), samples.len());
        for idx in result.pools.ld.keys() {
            assert!(!result.pools.ud.contains(idx), "pool overlap at {idx}");
        }
        // UD shrinks strictly across productive rounds.
        for pair in result.audit.windows(2) {
            if pair[1].selected_malicious + pair[1].selected_benign > 0 {
                assert!(pair[1].ud_size < pair[0].ud_size);
            }
        }
        // Pseudo labels on separable blobs should match the truth.
        let correct = result
            .pools
            .ld
            .iter()
            .filter(|(&i, l)| l.malicious == truth[i])
            .count();
        assert!(
            correct as f64 / result.pools.ld.len() as f64 >= 0.95,
            "pseudo-label quality degraded: {correct}/{}",
            result.pools.ld.len()
        );
    }

    #[test]
    fn consume_all_seeding_trains_once_with_zero_iterations() {
        let (samples, truth) = blob_samples(10, 5, 5);
        let usm = blob_scores(&truth, 0.9, 0.1);
        let cfg = CoTrainConfig {
            batch_prob: 1.0,
            ..config()
        };
        let result = run_cotraining(&samples, &usm, &usm, &cfg).unwrap();
        assert_eq!(result.iterations, 0);
        assert_eq!(result.termination, Termination::UdEmpty);
        assert!(result.pools.ud.is_empty());
    }

    #[test]
    fn unreachable_threshold_ends_with_no_progress() {
        let (samples, truth) = blob_samples(11, 10, 90);
        // Seeds exist at 0.97, but vote-fraction probabilities from the
        // sub-models cluster near the middle for the mixed mass, so later
        // rounds find nothing above 0.99.
        let mut usm = blob_scores(&truth, 0.97, 0.001);
        // Push most benign mass into an unselectable middle band.
        for (i, s) in usm.iter_mut().enumerate() {
            if !truth[i] && i % 3 != 0 {
                *s = 0.4;
            }
        }
        let cfg = CoTrainConfig {
            batch_thres: 0.99,
            max_iterations: 10,
            ..config()
        };
        let result = run_cotraining(&samples, &usm, &usm, &cfg);
        if let Ok(r) = result {
            assert!(matches!(
                r.termination,
                Termination::NoProgress | Termination::MaxIterations | Termination::UdEmpty
            ));
            assert!(r.iterations <= 10);
        }
    }

    #[test]
    fn same_seed_reproduces_the_whole_run() {
        let (samples, truth) = blob_samples(12, 25, 125);
        let usm = blob_scores(&truth, 0.8, 0.2);
        let ubm = blob_scores(&truth, 0.75, 0.25);
        let a = run_cotraining(&samples, &usm, &ubm, &config()).unwrap();
        let b = run_cotraining(&samples, &usm, &ubm, &config()).unwrap();
        assert_eq!(a.audit, b.audit);
        assert_eq!(a.pools, b.pools);
        assert_eq!(a.sm, b.sm);
        assert_eq!(a.bm, b.bm);
    }

    #[test]
    fn randomized_runs_uphold_the_safety_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for trial in 0..25 {
            let n_mal = rng.gen_range(3..20);
            let n_ben = rng.gen_range(20..120);
            let (samples, truth) = blob_samples(100 + trial, n_mal, n_ben);
            let usm = blob_scores(&truth, 0.7 + rng.gen::<f64>() * 0.25, rng.gen::<f64>() * 0.3);
            let ubm = blob_scores(&truth, 0.7 + rng.gen::<f64>() * 0.25, rng.gen::<f64>() * 0.3);
            let cfg = CoTrainConfig {
                batch_prob: 0.1 + rng.gen::<f64>() * 0.9,
                rng_seed: trial as u64,
                ..config()
            };
            let result = match run_cotraining(&samples, &usm, &ubm, &cfg) {
                Ok(r) => r,
                Err(CoTrainError::ColdStart { .. })
                | Err(CoTrainError::ClassStarvation { .. }) => continue,
                Err(e) => panic!("unexpected error: {e}"),
            };
            assert!(result.iterations <= cfg.max_iterations, "trial {trial}");
            assert_eq!(
                result.pools.ld.len() + result.pools.ud.len(),
                samples.len(),
                "conservation broke in trial {trial}"
            );
            for pair in result.audit.windows(2) {
                assert!(pair[1].ud_size <= pair[0].ud_size, "UD grew in trial {trial}");
            }
        }
    }
}
