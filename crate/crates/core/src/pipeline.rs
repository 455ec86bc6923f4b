//! End-to-end detection pipelines and the comparison experiment driver.
//!
//! The full pipeline embeds every node with one encoder per view, fits an
//! isolation forest per view on benign training embeddings, seeds
//! collaborative training from the forest scores, and fuses the resulting
//! sub-model verdicts. Ablation variants run one view alone or a single
//! encoder over the concatenated features; reference variants skip the
//! encoders entirely.
//!
//! When collaborative training cannot start (no confident seeds, or seeds
//! of only one class), the full pipeline falls back to fusing the raw
//! forest probabilities and says so in its notes rather than failing the
//! whole experiment.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::classifier::{BaggedTreesClassifier, BaggedTreesParams, BinaryClassifier};
use crate::cotrain::{
    run_cotraining, AuditEntry, CoTrainConfig, CoTrainError, SampleSet, Termination,
};
use crate::event::EventRecord;
use crate::features::{behavioral_features, structural_features, SensitivityConfig};
use crate::fusion::{
    fuse_bv, fuse_mv, fuse_st, fuse_sv, train_stacking, FusionError, FusionStrategy, MetaModel,
    ProbPair,
};
use crate::gnn::{train_encoder, EncoderModel, GnnError, TrainConfig};
use crate::graph::{build_graph, GraphError, ProvenanceGraph};
use crate::iforest::{to_anomaly_probability, IForestError, IsolationForest, IsolationForestParams};
use crate::matrix::Matrix;
use crate::metrics::{compute_metrics, split, MetricsError, MetricsReport, Split, SplitSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub train: TrainConfig,
    pub cotrain: CoTrainConfig,
    pub forest: IsolationForestParams,
    pub split: SplitSpec,
    pub sensitivity: SensitivityConfig,
    pub rng_seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> ExperimentConfig {
        ExperimentConfig {
            train: TrainConfig::default(),
            cotrain: CoTrainConfig::default(),
            forest: IsolationForestParams::default(),
            split: SplitSpec::default(),
            sensitivity: SensitivityConfig::default(),
            rng_seed: 11,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Structural view alone: encoder, forest, 0.5 probability cut.
    Structural,
    /// Behavioral view alone.
    Behavioral,
    /// One encoder over the 62-dim concatenated features.
    Concatenated,
    /// Both views, collaborative training, fused verdicts.
    Full,
    /// Forest on raw concatenated features, no encoder.
    UnsupervisedReference,
    /// Trees on raw concatenated features with true training labels.
    SupervisedReference,
}

impl Variant {
    pub fn name(&self) -> &'static str {
        match self {
            Variant::Structural => "structural",
            Variant::Behavioral => "behavioral",
            Variant::Concatenated => "concatenated",
            Variant::Full => "full",
            Variant::UnsupervisedReference => "unsupervised_reference",
            Variant::SupervisedReference => "supervised_reference",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantReport {
    pub variant: Variant,
    /// Set only for the full pipeline.
    pub strategy: Option<FusionStrategy>,
    /// Absent when the variant failed; see notes.
    pub metrics: Option<MetricsReport>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub reports: Vec<VariantReport>,
}

impl ExperimentReport {
    pub fn macro_f1(&self, variant: Variant, strategy: Option<FusionStrategy>) -> Option<f64> {
        self.reports
            .iter()
            .find(|r| r.variant == variant && r.strategy == strategy)
            .and_then(|r| r.metrics.as_ref())
            .map(|m| m.macro_f1)
    }

    pub fn find(&self, variant: Variant, strategy: Option<FusionStrategy>) -> Option<&VariantReport> {
        self.reports
            .iter()
            .find(|r| r.variant == variant && r.strategy == strategy)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExperimentError {
    Graph(GraphError),
    Encoder(GnnError),
    Forest(IForestError),
    Metrics(MetricsError),
    /// A ground-truth key has no process node in the graph.
    UnknownKey { key: String },
    EmptyTruth,
}

impl fmt::Display for ExperimentError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExperimentError::Graph(e) => write!(f, "graph construction failed: {e}"),
            ExperimentError::Encoder(e) => write!(f, "encoder training failed: {e}"),
            ExperimentError::Forest(e) => write!(f, "forest fitting failed: {e}"),
            ExperimentError::Metrics(e) => write!(f, "metric computation failed: {e}"),
            ExperimentError::UnknownKey { key } => {
                write!(f, "ground-truth key {key:?} is not a process in the graph")
            }
            ExperimentError::EmptyTruth => write!(f, "ground truth names no processes"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for ExperimentError {}

impl From<GraphError> for ExperimentError {
    fn from(e: GraphError) -> Self {
        ExperimentError::Graph(e)
    }
}
impl From<GnnError> for ExperimentError {
    fn from(e: GnnError) -> Self {
        ExperimentError::Encoder(e)
    }
}
impl From<IForestError> for ExperimentError {
    fn from(e: IForestError) -> Self {
        ExperimentError::Forest(e)
    }
}
impl From<MetricsError> for ExperimentError {
    fn from(e: MetricsError) -> Self {
        ExperimentError::Metrics(e)
    }
}

/// Mix a component salt into the experiment seed so each trained piece
/// gets an independent stream.
pub fn derive_seed(base: u64, salt: u64) -> u64 {
    base.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(salt)
}

const SALT_STRUCTURAL_ENCODER: u64 = 1;
const SALT_BEHAVIORAL_ENCODER: u64 = 2;
const SALT_STRUCTURAL_FOREST: u64 = 3;
const SALT_BEHAVIORAL_FOREST: u64 = 4;
const SALT_CONCAT_ENCODER: u64 = 5;
const SALT_CONCAT_FOREST: u64 = 6;
const SALT_RAW_FOREST: u64 = 7;
const SALT_SUPERVISED: u64 = 8;
const SALT_COTRAIN: u64 = 9;

/// Both views of the graph: raw per-process features and trained process
/// embeddings, plus the encoders that produced them.
#[derive(Debug, Clone)]
pub struct ViewData {
    /// Process keys in graph order; rows of every matrix align with this.
    pub keys: Vec<String>,
    pub row_of: BTreeMap<String, usize>,
    pub structural_embedding: Matrix,
    pub behavioral_embedding: Matrix,
    pub raw_structural: Matrix,
    pub raw_behavioral: Matrix,
    pub structural_encoder: EncoderModel,
    pub behavioral_encoder: EncoderModel,
}

/// Extract both feature views and train one encoder per view on the
/// node-type pretext task.
pub fn prepare_views(
    graph: &ProvenanceGraph,
    config: &ExperimentConfig,
) -> Result<ViewData, GnnError> {
    let structural = structural_features(graph);
    let behavioral = behavioral_features(graph, &config.sensitivity);
    let labels = graph.type_labels();

    let cfg_s = TrainConfig {
        rng_seed: derive_seed(config.rng_seed, SALT_STRUCTURAL_ENCODER),
        ..config.train
    };
    let (encoder_s, _) = train_encoder(graph, &structural, &labels, &cfg_s)?;
    let cfg_b = TrainConfig {
        rng_seed: derive_seed(config.rng_seed, SALT_BEHAVIORAL_ENCODER),
        ..config.train
    };
    let (encoder_b, _) = train_encoder(graph, &behavioral, &labels, &cfg_b)?;

    let (keys, structural_embedding) =
        crate::gnn::embed_processes(&encoder_s, graph, &structural)?;
    let (_, behavioral_embedding) = crate::gnn::embed_processes(&encoder_b, graph, &behavioral)?;

    let ids = graph.process_ids();
    let row_of = keys
        .iter()
        .enumerate()
        .map(|(i, k)| (k.clone(), i))
        .collect();
    Ok(ViewData {
        keys,
        row_of,
        structural_embedding,
        behavioral_embedding,
        raw_structural: structural.select_rows(&ids),
        raw_behavioral: behavioral.select_rows(&ids),
        structural_encoder: encoder_s,
        behavioral_encoder: encoder_b,
    })
}

impl ViewData {
    pub fn rows_for(&self, keys: &[String]) -> Result<Vec<usize>, ExperimentError> {
        keys.iter()
            .map(|k| {
                self.row_of
                    .get(k)
                    .copied()
                    .ok_or_else(|| ExperimentError::UnknownKey { key: k.clone() })
            })
            .collect()
    }
}

/// Outcome of the full two-view pipeline on one split.
#[derive(Debug, Clone)]
pub struct FullPipelineResult {
    /// Per evaluation key, the two views' class probabilities.
    pub pairs: BTreeMap<String, ProbPair>,
    /// Trained stacking model, absent when it could not be fit.
    pub meta: Option<MetaModel>,
    pub notes: Vec<String>,
    pub termination: Option<Termination>,
    pub iterations: usize,
    pub audit: Vec<AuditEntry>,
}

fn forest_probabilities(forest: &IsolationForest, data: &Matrix) -> Vec<f64> {
    forest
        .scores(data)
        .into_iter()
        .map(to_anomaly_probability)
        .collect()
}

/// Run forests, collaborative training, and stacking; produce probability
/// pairs for the evaluation keys.
pub fn run_full_pipeline(
    views: &ViewData,
    split: &Split,
    config: &ExperimentConfig,
) -> Result<FullPipelineResult, ExperimentError> {
    let nts_rows = views.rows_for(&split.nts)?;
    let usm = IsolationForest::fit(
        &views.structural_embedding.select_rows(&nts_rows),
        &config.forest,
        derive_seed(config.rng_seed, SALT_STRUCTURAL_FOREST),
    )?;
    let ubm = IsolationForest::fit(
        &views.behavioral_embedding.select_rows(&nts_rows),
        &config.forest,
        derive_seed(config.rng_seed, SALT_BEHAVIORAL_FOREST),
    )?;

    let ud_keys: Vec<String> = split
        .nts
        .iter()
        .chain(split.mts.iter())
        .cloned()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let ud_rows = views.rows_for(&ud_keys)?;
    let samples = SampleSet {
        keys: ud_keys,
        structural: views.structural_embedding.select_rows(&ud_rows),
        behavioral: views.behavioral_embedding.select_rows(&ud_rows),
    };
    let usm_scores = forest_probabilities(&usm, &samples.structural);
    let ubm_scores = forest_probabilities(&ubm, &samples.behavioral);

    let eval_keys: Vec<String> = split
        .nes
        .iter()
        .chain(split.mes.iter())
        .cloned()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let eval_rows = views.rows_for(&eval_keys)?;
    let eval_s = views.structural_embedding.select_rows(&eval_rows);
    let eval_b = views.behavioral_embedding.select_rows(&eval_rows);

    let cotrain_cfg = CoTrainConfig {
        rng_seed: derive_seed(config.rng_seed, SALT_COTRAIN),
        ..config.cotrain
    };
    match run_cotraining(&samples, &usm_scores, &ubm_scores, &cotrain_cfg) {
        Ok(result) => {
            let mut pairs = BTreeMap::new();
            for (i, key) in eval_keys.iter().enumerate() {
                pairs.insert(
                    key.clone(),
                    ProbPair::from_malicious(
                        result.sm.predict_proba(eval_s.row(i)),
                        result.bm.predict_proba(eval_b.row(i)),
                    ),
                );
            }
            let ld_pairs: Vec<ProbPair> = result
                .pools
                .ld
                .keys()
                .map(|&idx| {
                    ProbPair::from_malicious(
                        result.sm.predict_proba(samples.structural.row(idx)),
                        result.bm.predict_proba(samples.behavioral.row(idx)),
                    )
                })
                .collect();
            let mut notes = Vec::new();
            let meta = match train_stacking(&ld_pairs) {
                Ok(meta) => Some(meta),
                Err(FusionError::AgreementStarvation { classes_present }) => {
                    notes.push(format!(
                        "stacking unavailable: agreement set has {classes_present} class(es); \
                         st falls back to sv"
                    ));
                    None
                }
                Err(FusionError::InvalidPair { .. }) => {
                    unreachable!("sub-model probabilities are valid pairs")
                }
            };
            Ok(FullPipelineResult {
                pairs,
                meta,
                notes,
                termination: Some(result.termination),
                iterations: result.iterations,
                audit: result.audit,
            })
        }
        Err(err @ (CoTrainError::ColdStart { .. } | CoTrainError::ClassStarvation { .. })) => {
            let usm_eval = forest_probabilities(&usm, &eval_s);
            let ubm_eval = forest_probabilities(&ubm, &eval_b);
            let pairs = eval_keys
                .iter()
                .enumerate()
                .map(|(i, key)| {
                    (
                        key.clone(),
                        ProbPair::from_malicious(usm_eval[i], ubm_eval[i]),
                    )
                })
                .collect();
            Ok(FullPipelineResult {
                pairs,
                meta: None,
                notes: alloc::vec![format!(
                    "collaborative training aborted ({err}); fused raw forest probabilities \
                     instead; st falls back to sv"
                )],
                termination: None,
                iterations: 0,
                audit: Vec::new(),
            })
        }
        Err(e) => unreachable!("score vectors are aligned by construction: {e}"),
    }
}

/// Apply one fusion strategy to every pair. Returns the verdicts and a
/// note when the strategy silently degraded.
pub fn fuse_predictions(
    pairs: &BTreeMap<String, ProbPair>,
    strategy: FusionStrategy,
    meta: Option<&MetaModel>,
) -> (BTreeMap<String, bool>, Option<String>) {
    let mut note = None;
    let predictions = pairs
        .iter()
        .map(|(key, pair)| {
            let verdict = match strategy {
                FusionStrategy::Bv => fuse_bv(pair),
                FusionStrategy::Mv => fuse_mv(pair),
                FusionStrategy::Sv => fuse_sv(pair).0,
                FusionStrategy::St => match meta {
                    Some(m) => fuse_st(m, pair).0,
                    None => {
                        note = Some(String::from("st had no meta-model; applied sv"));
                        fuse_sv(pair).0
                    }
                },
            };
            (key.clone(), verdict)
        })
        .collect();
    (predictions, note)
}

pub fn classes(truth: &BTreeMap<String, bool>) -> (BTreeSet<String>, BTreeSet<String>) {
    let mut benign = BTreeSet::new();
    let mut malicious = BTreeSet::new();
    for (key, &m) in truth {
        if m {
            malicious.insert(key.clone());
        } else {
            benign.insert(key.clone());
        }
    }
    (benign, malicious)
}

fn eval_truth(truth: &BTreeMap<String, bool>, split: &Split) -> BTreeMap<String, bool> {
    split
        .nes
        .iter()
        .chain(split.mes.iter())
        .map(|k| (k.clone(), truth[k]))
        .collect()
}

/// Single-view or concatenated-view pipeline: forest on the benign
/// training rows of `embedding`, 0.5 probability cut on the rest.
fn forest_variant(
    embedding: &Matrix,
    views: &ViewData,
    split: &Split,
    params: &IsolationForestParams,
    seed: u64,
) -> Result<BTreeMap<String, bool>, ExperimentError> {
    let nts_rows = views.rows_for(&split.nts)?;
    let forest = IsolationForest::fit(&embedding.select_rows(&nts_rows), params, seed)?;
    let mut predictions = BTreeMap::new();
    for keys in [&split.nes, &split.mes] {
        let rows = views.rows_for(keys)?;
        let probs = forest_probabilities(&forest, &embedding.select_rows(&rows));
        for (key, p) in keys.iter().zip(probs) {
            predictions.insert(key.clone(), crate::iforest::is_malicious(p));
        }
    }
    Ok(predictions)
}

fn push_report(
    reports: &mut Vec<VariantReport>,
    variant: Variant,
    strategy: Option<FusionStrategy>,
    truth: &BTreeMap<String, bool>,
    outcome: Result<BTreeMap<String, bool>, ExperimentError>,
    mut notes: Vec<String>,
) {
    match outcome.and_then(|preds| compute_metrics(&preds, truth).map_err(Into::into)) {
        Ok(metrics) => reports.push(VariantReport {
            variant,
            strategy,
            metrics: Some(metrics),
            notes,
        }),
        Err(e) => {
            notes.push(format!("variant failed: {e}"));
            reports.push(VariantReport {
                variant,
                strategy,
                metrics: None,
                notes,
            });
        }
    }
}

/// Run every variant on one event stream and compare them.
pub fn run_experiment(
    events: &[EventRecord],
    truth: &BTreeMap<String, bool>,
    config: &ExperimentConfig,
) -> Result<ExperimentReport, ExperimentError> {
    if truth.is_empty() {
        return Err(ExperimentError::EmptyTruth);
    }
    let graph = build_graph(events.iter())?;
    let views = prepare_views(&graph, config)?;
    for key in truth.keys() {
        if !views.row_of.contains_key(key) {
            return Err(ExperimentError::UnknownKey { key: key.clone() });
        }
    }

    let (benign, malicious) = classes(truth);
    let split = split(&benign, &malicious, &config.split);
    let truth_eval = eval_truth(truth, &split);
    let mut reports = Vec::new();

    // Full pipeline, all four strategies.
    let full = run_full_pipeline(&views, &split, config)?;
    for &strategy in FusionStrategy::ALL.iter() {
        let (predictions, note) = fuse_predictions(&full.pairs, strategy, full.meta.as_ref());
        let mut notes = full.notes.clone();
        notes.extend(note);
        push_report(
            &mut reports,
            Variant::Full,
            Some(strategy),
            &truth_eval,
            Ok(predictions),
            notes,
        );
    }

    // Single-view ablations reuse the full pipeline's encoders.
    push_report(
        &mut reports,
        Variant::Structural,
        None,
        &truth_eval,
        forest_variant(
            &views.structural_embedding,
            &views,
            &split,
            &config.forest,
            derive_seed(config.rng_seed, SALT_STRUCTURAL_FOREST),
        ),
        Vec::new(),
    );
    push_report(
        &mut reports,
        Variant::Behavioral,
        None,
        &truth_eval,
        forest_variant(
            &views.behavioral_embedding,
            &views,
            &split,
            &config.forest,
            derive_seed(config.rng_seed, SALT_BEHAVIORAL_FOREST),
        ),
        Vec::new(),
    );

    // Concatenated ablation trains its own encoder over both views.
    let concat_outcome = (|| {
        let concat = Matrix::concat_cols(
            &structural_features(&graph),
            &behavioral_features(&graph, &config.sensitivity),
        );
        let cfg = TrainConfig {
            rng_seed: derive_seed(config.rng_seed, SALT_CONCAT_ENCODER),
            ..config.train
        };
        let (encoder, _) = train_encoder(&graph, &concat, &graph.type_labels(), &cfg)?;
        let (_, embedding) = crate::gnn::embed_processes(&encoder, &graph, &concat)?;
        forest_variant(
            &embedding,
            &views,
            &split,
            &config.forest,
            derive_seed(config.rng_seed, SALT_CONCAT_FOREST),
        )
    })();
    push_report(
        &mut reports,
        Variant::Concatenated,
        None,
        &truth_eval,
        concat_outcome,
        Vec::new(),
    );

    // References work on raw features without any encoder.
    let raw = Matrix::concat_cols(&views.raw_structural, &views.raw_behavioral);
    push_report(
        &mut reports,
        Variant::UnsupervisedReference,
        None,
        &truth_eval,
        forest_variant(
            &raw,
            &views,
            &split,
            &config.forest,
            derive_seed(config.rng_seed, SALT_RAW_FOREST),
        ),
        Vec::new(),
    );

    let mut supervised_notes = Vec::new();
    let supervised_outcome = (|| {
        let train_keys: Vec<String> = split
            .nts
            .iter()
            .chain(split.mts.iter())
            .cloned()
            .collect();
        let train_rows = views.rows_for(&train_keys)?;
        let labels: Vec<bool> = train_keys.iter().map(|k| truth[k]).collect();
        match BaggedTreesClassifier::fit(
            &raw.select_rows(&train_rows),
            &labels,
            &BaggedTreesParams::default(),
            derive_seed(config.rng_seed, SALT_SUPERVISED),
        ) {
            Ok(model) => {
                let mut predictions = BTreeMap::new();
                for key in truth_eval.keys() {
                    let row = views.row_of[key];
                    predictions.insert(key.clone(), model.predict(raw.row(row)));
                }
                Ok(predictions)
            }
            Err(e) => {
                supervised_notes.push(format!(
                    "supervised reference degraded to all-benign: {e}"
                ));
                Ok(truth_eval.keys().map(|k| (k.clone(), false)).collect())
            }
        }
    })();
    push_report(
        &mut reports,
        Variant::SupervisedReference,
        None,
        &truth_eval,
        supervised_outcome,
        supervised_notes,
    );

    Ok(ExperimentReport { reports })
}

/// Full-pipeline metrics under one confidence threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdOutcome {
    pub batch_thres: f64,
    pub strategy: FusionStrategy,
    pub metrics: MetricsReport,
    pub notes: Vec<String>,
}

/// Sweep the seeding confidence threshold, evaluating the full pipeline
/// with the stacking strategy at each value. Encoders are shared across
/// the sweep; only seeding and the loop change.
pub fn sweep_batch_thres(
    events: &[EventRecord],
    truth: &BTreeMap<String, bool>,
    config: &ExperimentConfig,
    thresholds: &[f64],
) -> Result<Vec<ThresholdOutcome>, ExperimentError> {
    if truth.is_empty() {
        return Err(ExperimentError::EmptyTruth);
    }
    let graph = build_graph(events.iter())?;
    let views = prepare_views(&graph, config)?;
    let (benign, malicious) = classes(truth);
    let split = split(&benign, &malicious, &config.split);
    let truth_eval = eval_truth(truth, &split);

    let mut outcomes = Vec::new();
    for &batch_thres in thresholds {
        let sweep_config = ExperimentConfig {
            cotrain: CoTrainConfig {
                batch_thres,
                ..config.cotrain
            },
            ..config.clone()
        };
        let full = run_full_pipeline(&views, &split, &sweep_config)?;
        let (predictions, note) =
            fuse_predictions(&full.pairs, FusionStrategy::St, full.meta.as_ref());
        let mut notes = full.notes.clone();
        notes.extend(note);
        let metrics = compute_metrics(&predictions, &truth_eval)?;
        outcomes.push(ThresholdOutcome {
            batch_thres,
            strategy: FusionStrategy::St,
            metrics,
            notes,
        });
    }
    Ok(outcomes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate_scenario, ScenarioKind, ScenarioSpec};

    fn small_config() -> (ScenarioSpec, ExperimentConfig) {
        let spec = ScenarioSpec {
            processes: 160,
            min_events: 500,
            ..ScenarioSpec::default()
        };
        let config = ExperimentConfig {
            sensitivity: spec.sensitivity(),
            ..ExperimentConfig::default()
        };
        (spec, config)
    }

    #[test]
    fn experiment_produces_every_variant() {
        let (spec, config) = small_config();
        let scenario = generate_scenario(&spec).unwrap();
        let report = run_experiment(&scenario.events, &scenario.truth, &config).unwrap();

        assert_eq!(report.reports.len(), 4 + 5);
        for variant in [
            Variant::Structural,
            Variant::Behavioral,
            Variant::Concatenated,
            Variant::UnsupervisedReference,
            Variant::SupervisedReference,
        ] {
            assert!(report.find(variant, None).is_some(), "{variant:?} missing");
        }
        for &strategy in FusionStrategy::ALL.iter() {
            assert!(
                report.find(Variant::Full, Some(strategy)).is_some(),
                "{strategy:?} missing"
            );
        }
    }

    #[test]
    fn experiment_is_deterministic() {
        let (spec, config) = small_config();
        let scenario = generate_scenario(&spec).unwrap();
        let a = run_experiment(&scenario.events, &scenario.truth, &config).unwrap();
        let b = run_experiment(&scenario.events, &scenario.truth, &config).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn benign_only_truth_keeps_running() {
        let spec = ScenarioSpec {
            kind: ScenarioKind::BenignBackground,
            processes: 120,
            min_events: 500,
            ..ScenarioSpec::default()
        };
        let config = ExperimentConfig {
            sensitivity: spec.sensitivity(),
            ..ExperimentConfig::default()
        };
        let scenario = generate_scenario(&spec).unwrap();
        let report = run_experiment(&scenario.events, &scenario.truth, &config).unwrap();
        // Reports exist; metrics that need positives flag themselves.
        let sfv = report.find(Variant::Structural, None).unwrap();
        if let Some(m) = &sfv.metrics {
            assert!(m.undefined_metrics.contains(&String::from("recall")));
        }
    }

    #[test]
    fn unknown_truth_key_is_an_input_error() {
        let (spec, config) = small_config();
        let scenario = generate_scenario(&spec).unwrap();
        let mut truth = scenario.truth.clone();
        truth.insert(String::from("ghost-process"), true);
        let err = run_experiment(&scenario.events, &truth, &config).unwrap_err();
        assert!(matches!(err, ExperimentError::UnknownKey { .. }));
    }

    #[test]
    fn sweep_reports_one_outcome_per_threshold() {
        let (spec, config) = small_config();
        let scenario = generate_scenario(&spec).unwrap();
        let outcomes =
            sweep_batch_thres(&scenario.events, &scenario.truth, &config, &[0.5, 0.65, 0.8])
                .unwrap();
        assert_eq!(outcomes.len(), 3);
        assert_eq!(outcomes[0].batch_thres, 0.5);
        assert_eq!(outcomes[2].batch_thres, 0.8);
    }
}
