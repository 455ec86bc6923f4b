//! Two-layer mean-aggregation message-passing encoder trained
//! self-supervised on node-type classification.
//!
//! Each layer computes `h_v = ReLU([h_v || mean_{u in N(v)} h_u] W + b)`
//! where `N(v)` combines in- and out-neighbors; the embedding feeds a
//! two-layer perceptron whose softmax output is trained against the four
//! node types with negative log-likelihood. Gradients are computed
//! analytically and applied with adaptive-moment updates.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::graph::{NodeId, ProvenanceGraph};
use crate::mathx;
use crate::matrix::Matrix;

/// Node count above which neighbor aggregation switches from full
/// neighborhoods to fixed fan-out sampling during training.
pub const SAMPLING_THRESHOLD: usize = 50_000;

pub const NUM_CLASSES: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncoderDims {
    pub d_in: usize,
    pub d_hidden: usize,
    pub d_out: usize,
    pub classifier_hidden: usize,
}

impl EncoderDims {
    pub fn for_input(d_in: usize) -> EncoderDims {
        EncoderDims {
            d_in,
            d_hidden: 32,
            d_out: 15,
            classifier_hidden: 32,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub weight: Matrix,
    /// Stored as a 1-row matrix so updates share the weight code path.
    pub bias: Matrix,
}

impl Layer {
    fn glorot(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Layer {
        let bound = mathx::sqrt(6.0 / (rows + cols) as f64);
        let mut weight = Matrix::zeros(rows, cols);
        for v in weight.data_mut() {
            *v = (rng.gen::<f64>() * 2.0 - 1.0) * bound;
        }
        Layer {
            weight,
            bias: Matrix::zeros(1, cols),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderModel {
    pub dims: EncoderDims,
    /// Aggregation layer 1: (2 d_in) x d_hidden.
    pub layer1: Layer,
    /// Aggregation layer 2: (2 d_hidden) x d_out.
    pub layer2: Layer,
    /// Classifier hidden: d_out x classifier_hidden.
    pub cls_hidden: Layer,
    /// Classifier output: classifier_hidden x 4.
    pub cls_out: Layer,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub epochs: usize,
    pub minibatch_nodes: usize,
    pub dropout: f64,
    /// Fan-out per layer when sampling kicks in above
    /// [`SAMPLING_THRESHOLD`] nodes.
    pub neighbor_samples: [usize; 2],
    pub rng_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> TrainConfig {
        TrainConfig {
            learning_rate: 0.01,
            weight_decay: 5e-4,
            epochs: 30,
            minibatch_nodes: 5000,
            dropout: 0.5,
            neighbor_samples: [25, 10],
            rng_seed: 0,
        }
    }
}

/// Mean training loss per epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epoch_losses: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum GnnError {
    Dimension {
        context: &'static str,
        expected: usize,
        got: usize,
    },
    /// Training loss left the finite range.
    Diverged { epoch: usize },
    EmptyGraph,
}

impl fmt::Display for GnnError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GnnError::Dimension {
                context,
                expected,
                got,
            } => write!(f, "{context}: expected {expected}, got {got}"),
            GnnError::Diverged { epoch } => {
                write!(f, "training loss diverged at epoch {epoch}")
            }
            GnnError::EmptyGraph => f.write_str("cannot train on an empty graph"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for GnnError {}

impl EncoderModel {
    pub fn init(dims: EncoderDims, rng: &mut ChaCha8Rng) -> EncoderModel {
        EncoderModel {
            dims,
            layer1: Layer::glorot(2 * dims.d_in, dims.d_hidden, rng),
            layer2: Layer::glorot(2 * dims.d_hidden, dims.d_out, rng),
            cls_hidden: Layer::glorot(dims.d_out, dims.classifier_hidden, rng),
            cls_out: Layer::glorot(dims.classifier_hidden, NUM_CLASSES, rng),
        }
    }

    fn tensors(&self) -> [&Matrix; 8] {
        [
            &self.layer1.weight,
            &self.layer1.bias,
            &self.layer2.weight,
            &self.layer2.bias,
            &self.cls_hidden.weight,
            &self.cls_hidden.bias,
            &self.cls_out.weight,
            &self.cls_out.bias,
        ]
    }

    fn tensors_mut(&mut self) -> [&mut Matrix; 8] {
        [
            &mut self.layer1.weight,
            &mut self.layer1.bias,
            &mut self.layer2.weight,
            &mut self.layer2.bias,
            &mut self.cls_hidden.weight,
            &mut self.cls_hidden.bias,
            &mut self.cls_out.weight,
            &mut self.cls_out.bias,
        ]
    }

    /// Total number of scalar parameters.
    pub fn param_count(&self) -> usize {
        self.tensors().iter().map(|t| t.data().len()).sum()
    }

    pub fn get_param(&self, idx: usize) -> f64 {
        let mut idx = idx;
        for t in self.tensors() {
            if idx < t.data().len() {
                return t.data()[idx];
            }
            idx -= t.data().len();
        }
        panic!("parameter index out of range");
    }

    pub fn nudge_param(&mut self, idx: usize, delta: f64) {
        let mut idx = idx;
        for t in self.tensors_mut() {
            if idx < t.data().len() {
                t.data_mut()[idx] += delta;
                return;
            }
            idx -= t.data().len();
        }
        panic!("parameter index out of range");
    }
}

/// Analytic gradients, tensor-for-tensor with [`EncoderModel`].
#[derive(Debug, Clone)]
pub struct Grads {
    pub layer1_w: Matrix,
    pub layer1_b: Matrix,
    pub layer2_w: Matrix,
    pub layer2_b: Matrix,
    pub cls_hidden_w: Matrix,
    pub cls_hidden_b: Matrix,
    pub cls_out_w: Matrix,
    pub cls_out_b: Matrix,
}

impl Grads {
    fn tensors(&self) -> [&Matrix; 8] {
        [
            &self.layer1_w,
            &self.layer1_b,
            &self.layer2_w,
            &self.layer2_b,
            &self.cls_hidden_w,
            &self.cls_hidden_b,
            &self.cls_out_w,
            &self.cls_out_b,
        ]
    }

    /// Flat accessor matching [`EncoderModel::get_param`] indexing.
    pub fn flat(&self, idx: usize) -> f64 {
        let mut idx = idx;
        for t in self.tensors() {
            if idx < t.data().len() {
                return t.data()[idx];
            }
            idx -= t.data().len();
        }
        panic!("gradient index out of range");
    }
}

/// Per-layer neighbor lists: either the graph's full neighborhoods or a
/// sampled multiset drawn with replacement.
enum AggPlan {
    Full,
    Sampled(Vec<Vec<NodeId>>),
}

impl AggPlan {
    fn list<'a>(&'a self, graph: &'a ProvenanceGraph, v: NodeId) -> &'a [NodeId] {
        match self {
            AggPlan::Full => graph.neighbors(v),
            AggPlan::Sampled(lists) => &lists[v],
        }
    }

    fn sample(graph: &ProvenanceGraph, fan_out: usize, rng: &mut ChaCha8Rng) -> AggPlan {
        let lists = (0..graph.node_count())
            .map(|v| {
                let full = graph.neighbors(v);
                if full.is_empty() {
                    Vec::new()
                } else {
                    (0..fan_out)
                        .map(|_| full[rng.gen_range(0..full.len())])
                        .collect()
                }
            })
            .collect();
        AggPlan::Sampled(lists)
    }
}

/// Mean of neighbor rows of `h` per node; zero row when no neighbors.
fn neighbor_mean(graph: &ProvenanceGraph, h: &Matrix, plan: &AggPlan) -> Matrix {
    let mut out = Matrix::zeros(h.rows(), h.cols());
    for v in 0..h.rows() {
        let list = plan.list(graph, v);
        if list.is_empty() {
            continue;
        }
        let inv = 1.0 / list.len() as f64;
        let row = out.row_mut(v);
        for &u in list {
            for (o, &x) in row.iter_mut().zip(h.row(u)) {
                *o += x;
            }
        }
        for o in row {
            *o *= inv;
        }
    }
    out
}

/// Scatter the gradient of a neighbor-mean back onto `h`'s rows:
/// `d h[u] += sum_{v : u in list(v)} d mean[v] / |list(v)|`.
fn scatter_mean_grad(
    graph: &ProvenanceGraph,
    d_mean: &Matrix,
    plan: &AggPlan,
    out: &mut Matrix,
) {
    for v in 0..d_mean.rows() {
        let list = plan.list(graph, v);
        if list.is_empty() {
            continue;
        }
        let inv = 1.0 / list.len() as f64;
        for &u in list {
            let row = out.row_mut(u);
            for (o, &g) in row.iter_mut().zip(d_mean.row(v)) {
                *o += g * inv;
            }
        }
    }
}

struct DropoutMasks {
    h1: Matrix,
    h2: Matrix,
    z1: Matrix,
}

/// Inverted-dropout masks holding `1/keep` or `0` per entry.
fn make_masks(n: usize, dims: &EncoderDims, dropout: f64, rng: &mut ChaCha8Rng) -> DropoutMasks {
    let keep = 1.0 - dropout;
    let mut fill = |rows: usize, cols: usize| {
        let mut m = Matrix::zeros(rows, cols);
        for v in m.data_mut() {
            *v = if rng.gen::<f64>() < keep { 1.0 / keep } else { 0.0 };
        }
        m
    };
    DropoutMasks {
        h1: fill(n, dims.d_hidden),
        h2: fill(n, dims.d_out),
        z1: fill(n, dims.classifier_hidden),
    }
}

fn hadamard(a: &mut Matrix, b: &Matrix) {
    for (x, &y) in a.data_mut().iter_mut().zip(b.data()) {
        *x *= y;
    }
}

fn relu_mask_backward(grad: &mut Matrix, pre: &Matrix) {
    for (g, &s) in grad.data_mut().iter_mut().zip(pre.data()) {
        if s <= 0.0 {
            *g = 0.0;
        }
    }
}

fn colsum(m: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(1, m.cols());
    for r in 0..m.rows() {
        for (o, &v) in out.row_mut(0).iter_mut().zip(m.row(r)) {
            *o += v;
        }
    }
    out
}

/// All intermediate activations of one forward pass.
struct ForwardState {
    a1: Matrix,
    s1: Matrix,
    h1: Matrix,
    a2: Matrix,
    s2: Matrix,
    h2: Matrix,
    c1: Matrix,
    z1: Matrix,
    logits: Matrix,
}

fn check_dims(
    model: &EncoderModel,
    graph: &ProvenanceGraph,
    features: &Matrix,
) -> Result<(), GnnError> {
    if features.rows() != graph.node_count() {
        return Err(GnnError::Dimension {
            context: "feature rows vs node count",
            expected: graph.node_count(),
            got: features.rows(),
        });
    }
    if features.cols() != model.dims.d_in {
        return Err(GnnError::Dimension {
            context: "feature width vs encoder input",
            expected: model.dims.d_in,
            got: features.cols(),
        });
    }
    Ok(())
}

/// Log-compress raw feature values: event counts span several orders of
/// magnitude, and feeding them in directly saturates the first layer so
/// badly that training kills every count-sensitive unit. `ln(1 + x)`
/// keeps zeros at zero and tames the range; indicator bits map to a
/// constant `ln 2`. Applied at every encoder boundary, so callers always
/// pass raw feature matrices.
fn compress_inputs(features: &Matrix) -> Matrix {
    let mut out = features.clone();
    out.map_in_place(|v| crate::mathx::ln(1.0 + v));
    out
}

fn forward_full(
    model: &EncoderModel,
    graph: &ProvenanceGraph,
    features: &Matrix,
    plans: (&AggPlan, &AggPlan),
    masks: Option<&DropoutMasks>,
) -> ForwardState {
    let a1 = Matrix::concat_cols(features, &neighbor_mean(graph, features, plans.0));
    let mut s1 = a1.matmul(&model.layer1.weight);
    s1.add_row_broadcast(model.layer1.bias.row(0));
    let mut h1 = s1.clone();
    h1.map_in_place(|v| v.max(0.0));
    if let Some(m) = masks {
        hadamard(&mut h1, &m.h1);
    }

    let a2 = Matrix::concat_cols(&h1, &neighbor_mean(graph, &h1, plans.1));
    let mut s2 = a2.matmul(&model.layer2.weight);
    s2.add_row_broadcast(model.layer2.bias.row(0));
    let mut h2 = s2.clone();
    h2.map_in_place(|v| v.max(0.0));
    if let Some(m) = masks {
        hadamard(&mut h2, &m.h2);
    }

    let mut c1 = h2.matmul(&model.cls_hidden.weight);
    c1.add_row_broadcast(model.cls_hidden.bias.row(0));
    let mut z1 = c1.clone();
    z1.map_in_place(|v| v.max(0.0));
    if let Some(m) = masks {
        hadamard(&mut z1, &m.z1);
    }

    let mut logits = z1.matmul(&model.cls_out.weight);
    logits.add_row_broadcast(model.cls_out.bias.row(0));

    ForwardState {
        a1,
        s1,
        h1,
        a2,
        s2,
        h2,
        c1,
        z1,
        logits,
    }
}

/// Embeddings `E^(T)` for every node; inference mode, no dropout.
pub fn forward(
    model: &EncoderModel,
    graph: &ProvenanceGraph,
    features: &Matrix,
) -> Result<Matrix, GnnError> {
    check_dims(model, graph, features)?;
    let inputs = compress_inputs(features);
    let state = forward_full(model, graph, &inputs, (&AggPlan::Full, &AggPlan::Full), None);
    Ok(state.h2)
}

/// Softmax class probabilities of the classifier head, one row per
/// embedding row.
pub fn classify_types(model: &EncoderModel, embeddings: &Matrix) -> Result<Matrix, GnnError> {
    if embeddings.cols() != model.dims.d_out {
        return Err(GnnError::Dimension {
            context: "embedding width vs encoder output",
            expected: model.dims.d_out,
            got: embeddings.cols(),
        });
    }
    let mut c1 = embeddings.matmul(&model.cls_hidden.weight);
    c1.add_row_broadcast(model.cls_hidden.bias.row(0));
    c1.map_in_place(|v| v.max(0.0));
    let mut logits = c1.matmul(&model.cls_out.weight);
    logits.add_row_broadcast(model.cls_out.bias.row(0));
    Ok(softmax_rows(&logits))
}

pub fn softmax_rows(logits: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(logits.rows(), logits.cols());
    for r in 0..logits.rows() {
        let row = logits.row(r);
        let lse = mathx::log_sum_exp(row);
        for (o, &l) in out.row_mut(r).iter_mut().zip(row) {
            *o = mathx::exp(l - lse);
        }
    }
    out
}

/// Mean negative log-likelihood of the true class over `batch` rows.
fn nll_loss(logits: &Matrix, labels: &[usize], batch: &[usize]) -> f64 {
    let mut total = 0.0;
    for &v in batch {
        let row = logits.row(v);
        total += mathx::log_sum_exp(row) - row[labels[v]];
    }
    total / batch.len() as f64
}

/// Loss of the model on `batch`, dropout off. Shared by training
/// diagnostics and the finite-difference gradient check.
pub fn loss_at(
    model: &EncoderModel,
    graph: &ProvenanceGraph,
    features: &Matrix,
    labels: &[usize],
    batch: &[usize],
) -> Result<f64, GnnError> {
    check_dims(model, graph, features)?;
    let state = forward_full(model, graph, features, (&AggPlan::Full, &AggPlan::Full), None);
    Ok(nll_loss(&state.logits, labels, batch))
}

/// Analytic gradients of the batch NLL, dropout off; same computation the
/// training step uses with masks installed.
pub fn gradients_at(
    model: &EncoderModel,
    graph: &ProvenanceGraph,
    features: &Matrix,
    labels: &[usize],
    batch: &[usize],
) -> Result<Grads, GnnError> {
    check_dims(model, graph, features)?;
    let plans = (&AggPlan::Full, &AggPlan::Full);
    let state = forward_full(model, graph, features, plans, None);
    Ok(backward(model, graph, features, labels, batch, &state, plans, None))
}

#[allow(clippy::too_many_arguments)]
fn backward(
    model: &EncoderModel,
    graph: &ProvenanceGraph,
    _features: &Matrix,
    labels: &[usize],
    batch: &[usize],
    state: &ForwardState,
    plans: (&AggPlan, &AggPlan),
    masks: Option<&DropoutMasks>,
) -> Grads {
    let n = state.logits.rows();
    let m = batch.len() as f64;

    // d loss / d logits: (softmax - onehot) / m on batch rows, 0 elsewhere.
    let mut d_logits = Matrix::zeros(n, NUM_CLASSES);
    for &v in batch {
        let row = state.logits.row(v);
        let lse = mathx::log_sum_exp(row);
        let out = d_logits.row_mut(v);
        for c in 0..NUM_CLASSES {
            out[c] = mathx::exp(row[c] - lse) / m;
        }
        out[labels[v]] -= 1.0 / m;
    }

    let cls_out_w = state.z1.transpose().matmul(&d_logits);
    let cls_out_b = colsum(&d_logits);
    let mut d_z1 = d_logits.matmul(&model.cls_out.weight.transpose());
    if let Some(mk) = masks {
        hadamard(&mut d_z1, &mk.z1);
    }
    relu_mask_backward(&mut d_z1, &state.c1);

    let cls_hidden_w = state.h2.transpose().matmul(&d_z1);
    let cls_hidden_b = colsum(&d_z1);
    let mut d_h2 = d_z1.matmul(&model.cls_hidden.weight.transpose());
    if let Some(mk) = masks {
        hadamard(&mut d_h2, &mk.h2);
    }
    relu_mask_backward(&mut d_h2, &state.s2);

    let layer2_w = state.a2.transpose().matmul(&d_h2);
    let layer2_b = colsum(&d_h2);
    let d_a2 = d_h2.matmul(&model.layer2.weight.transpose());

    // Split the concatenation gradient into the self part and the
    // neighbor-mean part scattered back across the aggregation lists.
    let d_hid = model.dims.d_hidden;
    let mut d_h1 = Matrix::zeros(n, d_hid);
    let mut d_mean1 = Matrix::zeros(n, d_hid);
    for v in 0..n {
        d_h1.row_mut(v).copy_from_slice(&d_a2.row(v)[..d_hid]);
        d_mean1.row_mut(v).copy_from_slice(&d_a2.row(v)[d_hid..]);
    }
    scatter_mean_grad(graph, &d_mean1, plans.1, &mut d_h1);
    if let Some(mk) = masks {
        hadamard(&mut d_h1, &mk.h1);
    }
    relu_mask_backward(&mut d_h1, &state.s1);

    let layer1_w = state.a1.transpose().matmul(&d_h1);
    let layer1_b = colsum(&d_h1);

    Grads {
        layer1_w,
        layer1_b,
        layer2_w,
        layer2_b,
        cls_hidden_w,
        cls_hidden_b,
        cls_out_w,
        cls_out_b,
    }
}

struct AdamState {
    m: Vec<Matrix>,
    v: Vec<Matrix>,
    t: u64,
}

impl AdamState {
    fn new(model: &EncoderModel) -> AdamState {
        let shapes: Vec<Matrix> = model
            .tensors()
            .iter()
            .map(|t| Matrix::zeros(t.rows(), t.cols()))
            .collect();
        AdamState {
            m: shapes.clone(),
            v: shapes,
            t: 0,
        }
    }

    fn step(&mut self, model: &mut EncoderModel, grads: &Grads, config: &TrainConfig) {
        const BETA1: f64 = 0.9;
        const BETA2: f64 = 0.999;
        const EPS: f64 = 1e-8;
        self.t += 1;
        let t = self.t as i32;
        let bc1 = 1.0 - mathx::powf(BETA1, t as f64);
        let bc2 = 1.0 - mathx::powf(BETA2, t as f64);
        let grads = grads.tensors();
        for (slot, param) in model.tensors_mut().into_iter().enumerate() {
            let m = self.m[slot].data_mut();
            let v = self.v[slot].data_mut();
            let g = grads[slot].data();
            for (i, p) in param.data_mut().iter_mut().enumerate() {
                let gi = g[i] + config.weight_decay * *p;
                m[i] = BETA1 * m[i] + (1.0 - BETA1) * gi;
                v[i] = BETA2 * v[i] + (1.0 - BETA2) * gi * gi;
                let mhat = m[i] / bc1;
                let vhat = v[i] / bc2;
                *p -= config.learning_rate * mhat / (mathx::sqrt(vhat) + EPS);
            }
        }
    }
}

/// Train an encoder on node-type labels over the whole graph.
///
/// Initialization consumes stream 0 of the seed, the training loop
/// (shuffles, dropout masks, neighbor samples) stream 1, making runs
/// bit-reproducible per seed.
pub fn train_encoder(
    graph: &ProvenanceGraph,
    features: &Matrix,
    labels: &[usize],
    config: &TrainConfig,
) -> Result<(EncoderModel, TrainHistory), GnnError> {
    train_encoder_with_dims(
        graph,
        features,
        labels,
        EncoderDims::for_input(features.cols()),
        config,
    )
}

pub fn train_encoder_with_dims(
    graph: &ProvenanceGraph,
    features: &Matrix,
    labels: &[usize],
    dims: EncoderDims,
    config: &TrainConfig,
) -> Result<(EncoderModel, TrainHistory), GnnError> {
    let n = graph.node_count();
    if n == 0 {
        return Err(GnnError::EmptyGraph);
    }
    if labels.len() != n {
        return Err(GnnError::Dimension {
            context: "label count vs node count",
            expected: n,
            got: labels.len(),
        });
    }

    let mut init_rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    init_rng.set_stream(0);
    let mut model = EncoderModel::init(dims, &mut init_rng);
    check_dims(&model, graph, features)?;
    let inputs = compress_inputs(features);

    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    rng.set_stream(1);
    let mut adam = AdamState::new(&model);
    let mut history = TrainHistory {
        epoch_losses: Vec::with_capacity(config.epochs),
    };

    let sampling = n > SAMPLING_THRESHOLD;
    let mut order: Vec<usize> = (0..n).collect();
    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(config.minibatch_nodes.max(1)) {
            let plan1;
            let plan2;
            if sampling {
                plan1 = AggPlan::sample(graph, config.neighbor_samples[0], &mut rng);
                plan2 = AggPlan::sample(graph, config.neighbor_samples[1], &mut rng);
            } else {
                plan1 = AggPlan::Full;
                plan2 = AggPlan::Full;
            }
            let masks = if config.dropout > 0.0 {
                Some(make_masks(n, &model.dims, config.dropout, &mut rng))
            } else {
                None
            };
            let state = forward_full(
                &model,
                graph,
                &inputs,
                (&plan1, &plan2),
                masks.as_ref(),
            );
            let loss = nll_loss(&state.logits, labels, batch);
            epoch_loss += loss * batch.len() as f64;
            let grads = backward(
                &model,
                graph,
                &inputs,
                labels,
                batch,
                &state,
                (&plan1, &plan2),
                masks.as_ref(),
            );
            adam.step(&mut model, &grads, config);
        }
        epoch_loss /= n as f64;
        if !epoch_loss.is_finite() {
            return Err(GnnError::Diverged { epoch });
        }
        history.epoch_losses.push(epoch_loss);
    }

    Ok((model, history))
}

/// Fraction of nodes whose argmax class matches the label.
pub fn type_accuracy(
    model: &EncoderModel,
    graph: &ProvenanceGraph,
    features: &Matrix,
    labels: &[usize],
) -> Result<f64, GnnError> {
    let embeddings = forward(model, graph, features)?;
    let probs = classify_types(model, &embeddings)?;
    let mut hits = 0usize;
    for v in 0..probs.rows() {
        let row = probs.row(v);
        let mut best = 0;
        for c in 1..NUM_CLASSES {
            if row[c] > row[best] {
                best = c;
            }
        }
        if best == labels[v] {
            hits += 1;
        }
    }
    Ok(hits as f64 / probs.rows() as f64)
}

/// Embedding rows restricted to process nodes, with their keys in node-id
/// (sorted key) order.
pub fn embed_processes(
    model: &EncoderModel,
    graph: &ProvenanceGraph,
    features: &Matrix,
) -> Result<(Vec<String>, Matrix), GnnError> {
    let embeddings = forward(model, graph, features)?;
    let ids = graph.process_ids();
    let keys = ids.iter().map(|&id| String::from(graph.key(id))).collect();
    Ok((keys, embeddings.select_rows(&ids)))
}
