//! Surrogate loss family for group-fair training.
//!
//! The surrogate of a base loss `l >= 0` at fairness strength `beta >= 0` is
//! `(1 + l)^(1+beta) / (1 + beta)`. It upper-bounds the base loss, and its
//! gradient weights each sample's gradient by `(1 + l)^beta`, so samples with
//! higher loss pull harder as `beta` grows. A convex combination of per-group
//! average surrogates (weights `alpha` on the simplex) is the training
//! objective; `beta = 0` with size-proportional `alpha` recovers plain
//! empirical risk up to a constant shift of 1.

use crate::data::GroupedDataset;
use crate::error::{Error, Result};
use crate::model::{loss_and_scaled_gradient, sample_loss, ModelParams};

/// Cap applied to the base loss before exponentiation. Cross-entropy is
/// unbounded; the surrogate theory presumes a bounded base loss, and 50 is
/// far above anything reached in practice. Capping events are counted and
/// surfaced in the training trace.
pub const LOSS_CAP: f64 = 50.0;

/// Hyperparameters of the group-weighted surrogate objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FairHyperParams {
    /// Group weights on the probability simplex.
    pub alpha: (f64, f64),
    /// Per-group surrogate strengths, both >= 0.
    pub beta: (f64, f64),
    /// Constant learning rate.
    pub learning_rate: f64,
    /// Per-group minibatch size.
    pub batch_size: usize,
    /// Number of training rounds.
    pub rounds: u64,
}

impl FairHyperParams {
    /// Validate ranges and return a copy with `alpha` normalized to sum to
    /// exactly 1. Inputs off the simplex by more than 1e-9 are rejected.
    pub fn validated(mut self) -> Result<Self> {
        let (a0, a1) = self.alpha;
        if !(a0.is_finite() && a1.is_finite()) || a0 < 0.0 || a1 < 0.0 {
            return Err(Error::Config(format!(
                "alpha must be nonnegative and finite, got ({a0}, {a1})"
            )));
        }
        let sum = a0 + a1;
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "alpha must lie on the simplex (sum 1), got sum {sum}"
            )));
        }
        self.alpha = (a0 / sum, a1 / sum);
        let (b0, b1) = self.beta;
        if !(b0.is_finite() && b1.is_finite()) || b0 < 0.0 || b1 < 0.0 {
            return Err(Error::Config(format!(
                "beta must be nonnegative, got ({b0}, {b1})"
            )));
        }
        if !self.learning_rate.is_finite() || self.learning_rate <= 0.0 {
            return Err(Error::Config(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be >= 1".into()));
        }
        Ok(self)
    }

    pub fn beta_for(&self, group: u8) -> f64 {
        if group == 0 {
            self.beta.0
        } else {
            self.beta.1
        }
    }

    pub fn alpha_for(&self, group: u8) -> f64 {
        if group == 0 {
            self.alpha.0
        } else {
            self.alpha.1
        }
    }
}

/// A minibatch drawn from a single group's index set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupBatch {
    pub group: u8,
    pub indices: Vec<usize>,
}

/// Surrogate value of a single base loss: `(1 + l)^(1+beta) / (1+beta)`,
/// with `l` capped at [`LOSS_CAP`] first.
pub fn beta_surrogate(loss_value: f64, beta: f64) -> f64 {
    debug_assert!(loss_value >= 0.0 && beta >= 0.0);
    let l = loss_value.min(LOSS_CAP);
    (1.0 + l).powf(1.0 + beta) / (1.0 + beta)
}

/// Per-sample gradient weight of the surrogate: `(1 + l)^beta`.
fn surrogate_weight(loss_value: f64, beta: f64) -> f64 {
    if beta == 0.0 {
        1.0
    } else {
        (1.0 + loss_value.min(LOSS_CAP)).powf(beta)
    }
}

/// Average surrogate loss over one group's full index set.
pub fn group_surrogate_loss(
    m: &ModelParams,
    dataset: &GroupedDataset,
    group: u8,
    beta: f64,
) -> Result<f64> {
    let indices = dataset.group_indices(group);
    if indices.is_empty() {
        return Err(Error::DegenerateGroup { group });
    }
    let mut sum = 0.0;
    for &i in indices {
        sum += beta_surrogate(sample_loss(m, &dataset.sample(i)), beta);
    }
    Ok(sum / indices.len() as f64)
}

/// The full training objective: `alpha0 * F_beta0 + alpha1 * F_beta1`.
pub fn alpha_beta_loss(
    m: &ModelParams,
    dataset: &GroupedDataset,
    hp: &FairHyperParams,
) -> Result<f64> {
    let f0 = group_surrogate_loss(m, dataset, 0, hp.beta.0)?;
    let f1 = group_surrogate_loss(m, dataset, 1, hp.beta.1)?;
    Ok(hp.alpha.0 * f0 + hp.alpha.1 * f1)
}

/// Per-batch bookkeeping produced alongside a gradient.
#[derive(Debug, Clone, Copy, Default)]
pub struct BatchGradStats {
    /// Mean base (cross-entropy) loss over the batch.
    pub mean_loss: f64,
    /// Mean surrogate loss over the batch, i.e. the minibatch estimate of
    /// the group objective.
    pub mean_surrogate: f64,
    /// How many samples exceeded [`LOSS_CAP`].
    pub cap_events: u64,
}

/// Accumulate the minibatch surrogate gradient into `out` (which is zeroed
/// first) and report batch statistics.
pub(crate) fn surrogate_gradient_into(
    m: &ModelParams,
    dataset: &GroupedDataset,
    indices: &[usize],
    beta: f64,
    out: &mut [f64],
) -> BatchGradStats {
    debug_assert!(!indices.is_empty());
    out.fill(0.0);
    let mut stats = BatchGradStats::default();
    for &i in indices {
        let s = dataset.sample(i);
        let l = loss_and_scaled_gradient(m, &s, |l| surrogate_weight(l, beta), out);
        stats.mean_loss += l;
        stats.mean_surrogate += beta_surrogate(l, beta);
        if l > LOSS_CAP {
            stats.cap_events += 1;
        }
    }
    let k = indices.len() as f64;
    for v in out.iter_mut() {
        *v /= k;
    }
    stats.mean_loss /= k;
    stats.mean_surrogate /= k;
    stats
}

/// Minibatch stochastic gradient of a group's surrogate objective:
/// the batch average of `(1 + l_j)^beta * grad l_j`.
pub fn stochastic_surrogate_gradient(
    m: &ModelParams,
    batch: &GroupBatch,
    beta: f64,
    dataset: &GroupedDataset,
) -> Vec<f64> {
    let mut out = vec![0.0; m.arch.param_count()];
    surrogate_gradient_into(m, dataset, &batch.indices, beta, &mut out);
    out
}
