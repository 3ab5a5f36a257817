//! Differentiable binary classifiers: logistic regression and a
//! one-hidden-layer ReLU MLP, with cross-entropy loss and hand-derived
//! gradients.
//!
//! Parameters live in a single flat `f64` vector so optimizers can treat
//! every model as a point in `R^d`. Layouts:
//!
//! - logistic regression: `[w_0 .. w_{d-1}, bias]`
//! - MLP: `[W1 row-major (hidden x input), b1 (hidden), W2 (hidden), b2]`
//!
//! Biases are always the trailing entries of their block.

use crate::error::{Error, Result};
use crate::rng::{stream_rng, STREAM_INIT};
use rand::Rng;

/// Probability clamp keeping cross-entropy finite.
pub const PROB_EPS: f64 = 1e-12;

/// Half-open init range for MLP weights.
const MLP_INIT_RANGE: f64 = 0.1;

/// Hypothesis class: which parametric family a weight vector belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Architecture {
    LogisticRegression {
        input_dim: usize,
    },
    Mlp {
        input_dim: usize,
        hidden_units: usize,
    },
}

impl Architecture {
    pub fn logistic_regression(input_dim: usize) -> Result<Self> {
        if input_dim == 0 {
            return Err(Error::Config("input_dim must be positive".into()));
        }
        Ok(Architecture::LogisticRegression { input_dim })
    }

    pub fn mlp(input_dim: usize, hidden_units: usize) -> Result<Self> {
        if input_dim == 0 {
            return Err(Error::Config("input_dim must be positive".into()));
        }
        if hidden_units == 0 {
            return Err(Error::Config("hidden_units must be >= 1".into()));
        }
        Ok(Architecture::Mlp {
            input_dim,
            hidden_units,
        })
    }

    pub fn input_dim(&self) -> usize {
        match *self {
            Architecture::LogisticRegression { input_dim } => input_dim,
            Architecture::Mlp { input_dim, .. } => input_dim,
        }
    }

    /// Total number of flat parameters, biases included.
    pub fn param_count(&self) -> usize {
        match *self {
            Architecture::LogisticRegression { input_dim } => input_dim + 1,
            Architecture::Mlp {
                input_dim,
                hidden_units,
            } => hidden_units * input_dim + hidden_units + hidden_units + 1,
        }
    }
}

/// A model: an architecture plus its flat parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub arch: Architecture,
    pub weights: Vec<f64>,
}

impl ModelParams {
    /// True when every parameter is finite.
    pub fn is_finite(&self) -> bool {
        self.weights.iter().all(|w| w.is_finite())
    }
}

/// One labeled, group-tagged example. Features are borrowed from the
/// dataset's storage.
#[derive(Debug, Clone, Copy)]
pub struct Sample<'a> {
    pub features: &'a [f32],
    pub label: u8,
    pub group: u8,
}

/// Deterministic model initialization.
///
/// Logistic regression starts at zero. The MLP draws every entry i.i.d.
/// uniform from [-0.1, 0.1] using a generator derived from `seed`, so
/// identical `(arch, seed)` pairs yield identical parameters.
pub fn init_model(arch: &Architecture, seed: u64) -> ModelParams {
    let d = arch.param_count();
    let weights = match arch {
        Architecture::LogisticRegression { .. } => vec![0.0; d],
        Architecture::Mlp { .. } => {
            let mut rng = stream_rng(seed, STREAM_INIT);
            (0..d)
                .map(|_| rng.random_range(-MLP_INIT_RANGE..=MLP_INIT_RANGE))
                .collect()
        }
    };
    ModelParams {
        arch: *arch,
        weights,
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_EPS, 1.0 - PROB_EPS)
}

/// Raw pre-sigmoid score plus whatever the backward pass needs.
enum ForwardPass {
    Lr,
    Mlp { pre: Vec<f64>, act: Vec<f64> },
}

fn forward(m: &ModelParams, x: &[f32]) -> (f64, ForwardPass) {
    match m.arch {
        Architecture::LogisticRegression { input_dim } => {
            let w = &m.weights;
            let mut z = w[input_dim]; // bias
            for i in 0..input_dim {
                z += w[i] * f64::from(x[i]);
            }
            (z, ForwardPass::Lr)
        }
        Architecture::Mlp {
            input_dim,
            hidden_units,
        } => {
            let w = &m.weights;
            let b1_off = hidden_units * input_dim;
            let w2_off = b1_off + hidden_units;
            let b2_off = w2_off + hidden_units;
            let mut pre = vec![0.0; hidden_units];
            let mut act = vec![0.0; hidden_units];
            let mut z = w[b2_off];
            for j in 0..hidden_units {
                let row = &w[j * input_dim..(j + 1) * input_dim];
                let mut s = w[b1_off + j];
                for i in 0..input_dim {
                    s += row[i] * f64::from(x[i]);
                }
                pre[j] = s;
                let a = if s > 0.0 { s } else { 0.0 };
                act[j] = a;
                z += w[w2_off + j] * a;
            }
            (z, ForwardPass::Mlp { pre, act })
        }
    }
}

/// Predicted probability of the positive class, clamped strictly inside
/// (0, 1).
pub fn predict_proba(m: &ModelParams, x: &[f32]) -> Result<f64> {
    let expected = m.arch.input_dim();
    if x.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            got: x.len(),
        });
    }
    let (z, _) = forward(m, x);
    Ok(clamp_prob(sigmoid(z)))
}

/// Hard 0/1 prediction; a probability of exactly 0.5 classifies as 1.
pub fn classify(m: &ModelParams, x: &[f32]) -> Result<u8> {
    Ok(if predict_proba(m, x)? >= 0.5 { 1 } else { 0 })
}

/// Cross-entropy loss of one sample. Always finite and nonnegative thanks
/// to the probability clamp.
pub fn sample_loss(m: &ModelParams, s: &Sample) -> f64 {
    debug_assert_eq!(s.features.len(), m.arch.input_dim());
    let (z, _) = forward(m, s.features);
    let p = clamp_prob(sigmoid(z));
    if s.label == 1 {
        -p.ln()
    } else {
        -(1.0 - p).ln()
    }
}

/// Analytic gradient of [`sample_loss`] with respect to the flat parameter
/// vector.
pub fn sample_loss_gradient(m: &ModelParams, s: &Sample) -> Vec<f64> {
    let mut out = vec![0.0; m.arch.param_count()];
    loss_and_scaled_gradient(m, s, |_| 1.0, &mut out);
    out
}

/// Core forward/backward pass shared by the plain and surrogate-weighted
/// gradients.
///
/// Adds `weight(loss) * grad(loss)` into `out` and returns the sample loss.
/// `weight` sees the loss value before it scales the gradient, which is how
/// loss-reweighting schemes hook in without a second forward pass.
pub(crate) fn loss_and_scaled_gradient(
    m: &ModelParams,
    s: &Sample,
    weight: impl FnOnce(f64) -> f64,
    out: &mut [f64],
) -> f64 {
    debug_assert_eq!(s.features.len(), m.arch.input_dim());
    debug_assert_eq!(out.len(), m.arch.param_count());
    let x = s.features;
    let (z, fw) = forward(m, x);
    let p = clamp_prob(sigmoid(z));
    let y = f64::from(s.label);
    let loss = if s.label == 1 {
        -p.ln()
    } else {
        -(1.0 - p).ln()
    };
    let g = weight(loss) * (p - y); // d loss / d z, scaled

    match (&m.arch, fw) {
        (Architecture::LogisticRegression { input_dim }, ForwardPass::Lr) => {
            for i in 0..*input_dim {
                out[i] += g * f64::from(x[i]);
            }
            out[*input_dim] += g;
        }
        (
            Architecture::Mlp {
                input_dim,
                hidden_units,
            },
            ForwardPass::Mlp { pre, act },
        ) => {
            let (d, h) = (*input_dim, *hidden_units);
            let b1_off = h * d;
            let w2_off = b1_off + h;
            let b2_off = w2_off + h;
            out[b2_off] += g;
            for j in 0..h {
                out[w2_off + j] += g * act[j];
                // relu'(0) := 0, hence the strict inequality
                if pre[j] > 0.0 {
                    let dh = g * m.weights[w2_off + j];
                    let row = &mut out[j * d..(j + 1) * d];
                    for i in 0..d {
                        row[i] += dh * f64::from(x[i]);
                    }
                    out[b1_off + j] += dh;
                }
            }
        }
        _ => unreachable!("forward pass kind always matches architecture"),
    }
    loss
}
