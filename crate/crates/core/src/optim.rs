//! Training loops.
//!
//! One round of the parallel surrogate optimizer draws an independent
//! minibatch per group, takes a per-group gradient step from the shared
//! model, and aggregates the two candidate models with the `alpha` weights.
//! Substituting the per-group steps into the aggregation shows the round is
//! equivalently a single step along the `alpha`-weighted combined gradient;
//! both forms are implemented and kept in agreement by tests.
//!
//! The minimax baseline runs simultaneous stochastic descent on the model
//! and projected ascent on the group-mixture weights.

use crate::data::{sample_minibatch, GroupedDataset};
use crate::error::{Error, Result};
use crate::loss::{
    beta_surrogate, surrogate_gradient_into, BatchGradStats, FairHyperParams, GroupBatch,
};
use crate::model::{init_model, predict_proba, Architecture, ModelParams};
use crate::rng::{stream_rng, STREAM_GROUP0, STREAM_GROUP1};
use crate::trace::{TraceRecord, TrainingTrace};
use rand_chacha::ChaCha8Rng;

/// State carried across rounds of the parallel surrogate optimizer.
#[derive(Debug, Clone)]
pub struct TrainState {
    pub round: u64,
    pub model: ModelParams,
    pub hp: FairHyperParams,
    /// Cumulative loss-cap events over all gradient evaluations so far.
    pub cap_events: u64,
    rng_group0: ChaCha8Rng,
    rng_group1: ChaCha8Rng,
}

impl TrainState {
    /// Fresh state at round 0: deterministic model init plus one independent
    /// sampling stream per group, all derived from `seed`.
    pub fn new(arch: &Architecture, hp: FairHyperParams, seed: u64) -> Self {
        TrainState {
            round: 0,
            model: init_model(arch, seed),
            hp,
            cap_events: 0,
            rng_group0: stream_rng(seed, STREAM_GROUP0),
            rng_group1: stream_rng(seed, STREAM_GROUP1),
        }
    }

    /// Draw this round's two minibatches (group 0 first, then group 1).
    fn draw_batches(&mut self, ds: &GroupedDataset) -> Result<(GroupBatch, GroupBatch)> {
        let b0 = sample_minibatch(ds, 0, self.hp.batch_size, &mut self.rng_group0)?;
        let b1 = sample_minibatch(ds, 1, self.hp.batch_size, &mut self.rng_group1)?;
        Ok((b0, b1))
    }
}

fn divergence(round: u64) -> Error {
    Error::Divergence {
        round,
        partial_trace: Box::new(TrainingTrace::default()),
    }
}

/// Gradients and stats for one round, in fixed (group 0, group 1) order.
struct RoundGradients {
    g0: Vec<f64>,
    g1: Vec<f64>,
    stats0: BatchGradStats,
    stats1: BatchGradStats,
}

fn round_gradients(state: &mut TrainState, ds: &GroupedDataset) -> Result<RoundGradients> {
    if state.round >= state.hp.rounds {
        return Err(Error::Config(format!(
            "round {} already reached the configured total {}",
            state.round, state.hp.rounds
        )));
    }
    let (b0, b1) = state.draw_batches(ds)?;
    let d = state.model.arch.param_count();
    let mut g0 = vec![0.0; d];
    let mut g1 = vec![0.0; d];
    let stats0 = surrogate_gradient_into(&state.model, ds, &b0.indices, state.hp.beta.0, &mut g0);
    let stats1 = surrogate_gradient_into(&state.model, ds, &b1.indices, state.hp.beta.1, &mut g1);
    Ok(RoundGradients {
        g0,
        g1,
        stats0,
        stats1,
    })
}

/// One training round in update-then-aggregate form: per-group candidate
/// models `w - gamma * g_i`, combined as `alpha0 * w0 + alpha1 * w1`.
pub fn psgds_round(mut state: TrainState, ds: &GroupedDataset) -> Result<TrainState> {
    let grads = round_gradients(&mut state, ds)?;
    let gamma = state.hp.learning_rate;
    let (a0, a1) = state.hp.alpha;
    for (i, w) in state.model.weights.iter_mut().enumerate() {
        let w0 = *w - gamma * grads.g0[i];
        let w1 = *w - gamma * grads.g1[i];
        *w = a0 * w0 + a1 * w1;
    }
    state.round += 1;
    state.cap_events += grads.stats0.cap_events + grads.stats1.cap_events;
    if !state.model.is_finite() {
        return Err(divergence(state.round));
    }
    Ok(state)
}

/// The same round as [`psgds_round`] in combined-gradient form:
/// `w - gamma * (alpha0 * g0 + alpha1 * g1)`. Kept as an independent code
/// path so the equivalence of the two forms is testable.
pub fn psgds_round_combined(mut state: TrainState, ds: &GroupedDataset) -> Result<TrainState> {
    let grads = round_gradients(&mut state, ds)?;
    let gamma = state.hp.learning_rate;
    let (a0, a1) = state.hp.alpha;
    for (i, w) in state.model.weights.iter_mut().enumerate() {
        *w -= gamma * (a0 * grads.g0[i] + a1 * grads.g1[i]);
    }
    state.round += 1;
    state.cap_events += grads.stats0.cap_events + grads.stats1.cap_events;
    if !state.model.is_finite() {
        return Err(divergence(state.round));
    }
    Ok(state)
}

/// Full-dataset gradient of the group-weighted surrogate objective,
/// `alpha0 * grad F_beta0 + alpha1 * grad F_beta1`.
pub fn objective_gradient(
    m: &ModelParams,
    ds: &GroupedDataset,
    alpha: (f64, f64),
    beta: (f64, f64),
) -> Vec<f64> {
    let d = m.arch.param_count();
    let mut g0 = vec![0.0; d];
    let mut g1 = vec![0.0; d];
    surrogate_gradient_into(m, ds, ds.group_indices(0), beta.0, &mut g0);
    surrogate_gradient_into(m, ds, ds.group_indices(1), beta.1, &mut g1);
    (0..d).map(|i| alpha.0 * g0[i] + alpha.1 * g1[i]).collect()
}

/// Evaluation-set metrics computed in one pass.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalMetrics {
    pub overall_acc: f64,
    pub acc_g0: f64,
    pub acc_g1: f64,
    pub worst_acc: f64,
    pub overall_loss: f64,
    pub surrogate_loss: f64,
    pub ea: f64,
    pub dp: f64,
    pub eo: Option<f64>,
}

/// Evaluate a model on a dataset: accuracy/fairness metrics, mean base loss,
/// and the `weights`/`betas`-weighted surrogate objective.
pub fn evaluate_model(
    m: &ModelParams,
    ds: &GroupedDataset,
    weights: (f64, f64),
    betas: (f64, f64),
) -> Result<EvalMetrics> {
    let mut n = [0u64; 2];
    let mut correct = [0u64; 2];
    let mut pred_pos = [0u64; 2];
    let mut positives = [0u64; 2];
    let mut true_pos = [0u64; 2];
    let mut surrogate_sum = [0.0f64; 2];
    let mut loss_sum = 0.0f64;

    for i in 0..ds.len() {
        let g = ds.group_of(i) as usize;
        let y = ds.label(i);
        let p = predict_proba(m, ds.row(i))?;
        let pred = u8::from(p >= 0.5);
        let loss = if y == 1 { -p.ln() } else { -(1.0 - p).ln() };
        n[g] += 1;
        if pred == y {
            correct[g] += 1;
        }
        if pred == 1 {
            pred_pos[g] += 1;
        }
        if y == 1 {
            positives[g] += 1;
            if pred == 1 {
                true_pos[g] += 1;
            }
        }
        loss_sum += loss;
        let beta = if g == 0 { betas.0 } else { betas.1 };
        surrogate_sum[g] += beta_surrogate(loss, beta);
    }
    for g in [0u8, 1] {
        if n[g as usize] == 0 {
            return Err(Error::DegenerateGroup { group: g });
        }
    }
    let acc_g0 = correct[0] as f64 / n[0] as f64;
    let acc_g1 = correct[1] as f64 / n[1] as f64;
    let eo = if positives[0] > 0 && positives[1] > 0 {
        let tpr0 = true_pos[0] as f64 / positives[0] as f64;
        let tpr1 = true_pos[1] as f64 / positives[1] as f64;
        Some((tpr0 - tpr1).abs())
    } else {
        None
    };
    Ok(EvalMetrics {
        overall_acc: (correct[0] + correct[1]) as f64 / ds.len() as f64,
        acc_g0,
        acc_g1,
        worst_acc: acc_g0.min(acc_g1),
        overall_loss: loss_sum / ds.len() as f64,
        surrogate_loss: weights.0 * surrogate_sum[0] / n[0] as f64
            + weights.1 * surrogate_sum[1] / n[1] as f64,
        ea: (acc_g0 - acc_g1).abs(),
        dp: (pred_pos[0] as f64 / n[0] as f64 - pred_pos[1] as f64 / n[1] as f64).abs(),
        eo,
    })
}

fn checkpoint(
    trace: &mut TrainingTrace,
    round: u64,
    metrics: EvalMetrics,
    acc_sum: &mut f64,
    cap_events: u64,
) {
    *acc_sum += metrics.overall_acc;
    let checkpoints = trace.records.len() as f64 + 1.0;
    trace.push(TraceRecord {
        round,
        overall_acc: metrics.overall_acc,
        acc_g0: metrics.acc_g0,
        acc_g1: metrics.acc_g1,
        worst_acc: metrics.worst_acc,
        overall_loss: metrics.overall_loss,
        surrogate_loss: metrics.surrogate_loss,
        ea: metrics.ea,
        dp: metrics.dp,
        eo: metrics.eo,
        running_avg_acc: *acc_sum / checkpoints,
        cap_events,
    });
}

fn check_compatible(
    train: &GroupedDataset,
    test: &GroupedDataset,
    arch: &Architecture,
) -> Result<()> {
    if train.dim() != arch.input_dim() {
        return Err(Error::Data(format!(
            "training data width {} does not match model input_dim {}",
            train.dim(),
            arch.input_dim()
        )));
    }
    if test.dim() != train.dim() {
        return Err(Error::Data(format!(
            "test data width {} does not match train width {}",
            test.dim(),
            train.dim()
        )));
    }
    if train.fingerprint() != test.fingerprint() {
        return Err(Error::Data(format!(
            "train/test encoder fingerprints differ: {:#x} vs {:#x}",
            train.fingerprint(),
            test.fingerprint()
        )));
    }
    Ok(())
}

/// Run the parallel surrogate optimizer for `hp.rounds` rounds, evaluating
/// on the test split at round 0, every `eval_every` rounds, and at the final
/// round. Fully deterministic given its arguments; training that diverges
/// returns the trace gathered so far inside the error.
pub fn run_psgds(
    train: &GroupedDataset,
    test: &GroupedDataset,
    hp: &FairHyperParams,
    arch: &Architecture,
    seed: u64,
    eval_every: u64,
) -> Result<(TrainingTrace, ModelParams)> {
    let hp = hp.validated()?;
    if eval_every == 0 {
        return Err(Error::Config("eval_every must be >= 1".into()));
    }
    check_compatible(train, test, arch)?;

    let mut state = TrainState::new(arch, hp, seed);
    let mut trace = TrainingTrace::default();
    let mut acc_sum = 0.0;
    let metrics = evaluate_model(&state.model, test, hp.alpha, hp.beta)?;
    checkpoint(&mut trace, 0, metrics, &mut acc_sum, 0);

    let total = hp.rounds;
    while state.round < total {
        state = match psgds_round(state, train) {
            Ok(s) => s,
            Err(Error::Divergence { round, .. }) => {
                return Err(Error::Divergence {
                    round,
                    partial_trace: Box::new(trace),
                });
            }
            Err(e) => return Err(e),
        };
        if state.round.is_multiple_of(eval_every) || state.round == total {
            let metrics = evaluate_model(&state.model, test, hp.alpha, hp.beta)?;
            checkpoint(
                &mut trace,
                state.round,
                metrics,
                &mut acc_sum,
                state.cap_events,
            );
        }
    }
    Ok((trace, state.model))
}

/// Plain parallel SGD: the optimizer with `beta = (0, 0)` and group weights
/// proportional to the group sizes. Delegates to [`run_psgds`], so its trace
/// is bit-identical to that call with the same seed.
#[allow(clippy::too_many_arguments)]
pub fn run_baseline_parallel_sgd(
    train: &GroupedDataset,
    test: &GroupedDataset,
    learning_rate: f64,
    batch_size: usize,
    rounds: u64,
    arch: &Architecture,
    seed: u64,
    eval_every: u64,
) -> Result<(TrainingTrace, ModelParams)> {
    let hp = FairHyperParams {
        alpha: train.proportional_alpha(),
        beta: (0.0, 0.0),
        learning_rate,
        batch_size,
        rounds,
    };
    run_psgds(train, test, &hp, arch, seed, eval_every)
}

/// Euclidean projection of a pair onto the probability simplex
/// `{(x, y) : x, y >= 0, x + y = 1}`.
pub fn project_simplex(v: (f64, f64)) -> (f64, f64) {
    // Projecting onto the line x + y = 1 gives x = (v0 - v1 + 1) / 2;
    // clamping to [0, 1] lands on the nearest vertex when that point
    // leaves the segment.
    let x = ((v.0 - v.1 + 1.0) / 2.0).clamp(0.0, 1.0);
    (x, 1.0 - x)
}

/// Hyperparameters of the minimax baseline.
#[derive(Debug, Clone, Copy)]
pub struct MinimaxParams {
    /// Descent step on the model.
    pub eta_w: f64,
    /// Ascent step on the mixture weights.
    pub eta_lambda: f64,
    pub batch_size: usize,
    pub rounds: u64,
}

impl MinimaxParams {
    pub fn validated(self) -> Result<Self> {
        if !self.eta_w.is_finite() || self.eta_w <= 0.0 {
            return Err(Error::Config("eta_w must be positive".into()));
        }
        if !self.eta_lambda.is_finite() || self.eta_lambda < 0.0 {
            return Err(Error::Config("eta_lambda must be nonnegative".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be >= 1".into()));
        }
        Ok(self)
    }
}

/// State of the stochastic descent-ascent loop.
#[derive(Debug, Clone)]
pub struct MinimaxState {
    pub round: u64,
    pub model: ModelParams,
    /// Mixture weights over groups, on the simplex.
    pub lambda: (f64, f64),
    pub params: MinimaxParams,
    pub cap_events: u64,
    rng_group0: ChaCha8Rng,
    rng_group1: ChaCha8Rng,
}

impl MinimaxState {
    /// Round-0 state with `lambda = (0.5, 0.5)`.
    pub fn new(arch: &Architecture, params: MinimaxParams, seed: u64) -> Self {
        MinimaxState {
            round: 0,
            model: init_model(arch, seed),
            lambda: (0.5, 0.5),
            params,
            cap_events: 0,
            rng_group0: stream_rng(seed, STREAM_GROUP0),
            rng_group1: stream_rng(seed, STREAM_GROUP1),
        }
    }
}

/// One descent-ascent round with simultaneous updates: the model descends
/// along the `lambda`-weighted base-loss gradient while `lambda` ascends
/// along the minibatch estimates of the per-group objectives, projected back
/// onto the simplex. Both updates read the pre-update state; the ascent
/// reuses the descent minibatches.
pub fn sgda_minimax_round(mut state: MinimaxState, ds: &GroupedDataset) -> Result<MinimaxState> {
    if state.round >= state.params.rounds {
        return Err(Error::Config(format!(
            "round {} already reached the configured total {}",
            state.round, state.params.rounds
        )));
    }
    let b0 = sample_minibatch(ds, 0, state.params.batch_size, &mut state.rng_group0)?;
    let b1 = sample_minibatch(ds, 1, state.params.batch_size, &mut state.rng_group1)?;
    let d = state.model.arch.param_count();
    let mut g0 = vec![0.0; d];
    let mut g1 = vec![0.0; d];
    let stats0 = surrogate_gradient_into(&state.model, ds, &b0.indices, 0.0, &mut g0);
    let stats1 = surrogate_gradient_into(&state.model, ds, &b1.indices, 0.0, &mut g1);

    let (l0, l1) = state.lambda;
    for (i, w) in state.model.weights.iter_mut().enumerate() {
        *w -= state.params.eta_w * (l0 * g0[i] + l1 * g1[i]);
    }
    state.lambda = project_simplex((
        l0 + state.params.eta_lambda * stats0.mean_surrogate,
        l1 + state.params.eta_lambda * stats1.mean_surrogate,
    ));
    state.round += 1;
    state.cap_events += stats0.cap_events + stats1.cap_events;
    if !state.model.is_finite() {
        return Err(divergence(state.round));
    }
    Ok(state)
}

/// Run the minimax baseline for `params.rounds` rounds with the same
/// checkpointing scheme as [`run_psgds`]. Trace objective values are the
/// current-`lambda`-weighted mean base surrogate on the test split.
pub fn run_minimax(
    train: &GroupedDataset,
    test: &GroupedDataset,
    params: MinimaxParams,
    arch: &Architecture,
    seed: u64,
    eval_every: u64,
) -> Result<(TrainingTrace, ModelParams)> {
    let params = params.validated()?;
    if eval_every == 0 {
        return Err(Error::Config("eval_every must be >= 1".into()));
    }
    check_compatible(train, test, arch)?;

    let mut state = MinimaxState::new(arch, params, seed);
    let mut trace = TrainingTrace::default();
    let mut acc_sum = 0.0;
    let metrics = evaluate_model(&state.model, test, state.lambda, (0.0, 0.0))?;
    checkpoint(&mut trace, 0, metrics, &mut acc_sum, 0);

    let total = params.rounds;
    while state.round < total {
        state = match sgda_minimax_round(state, train) {
            Ok(s) => s,
            Err(Error::Divergence { round, .. }) => {
                return Err(Error::Divergence {
                    round,
                    partial_trace: Box::new(trace),
                });
            }
            Err(e) => return Err(e),
        };
        if state.round.is_multiple_of(eval_every) || state.round == total {
            let metrics = evaluate_model(&state.model, test, state.lambda, (0.0, 0.0))?;
            checkpoint(
                &mut trace,
                state.round,
                metrics,
                &mut acc_sum,
                state.cap_events,
            );
        }
    }
    Ok((trace, state.model))
}
