//! Group-fair binary classification at desk scale.
//!
//! The crate trains logistic-regression and small MLP classifiers under a
//! family of reweighted surrogate losses that trade accuracy against group
//! fairness, alongside two baselines: plain parallel SGD (the surrogate
//! optimizer's `beta = 0`, size-proportional special case) and a minimax
//! descent-ascent method that optimizes the worst mixture of the group
//! objectives. Evaluation covers per-group accuracy, worst-group accuracy,
//! and the standard accuracy / positive-rate / true-positive-rate gaps.
//!
//! Modules:
//!
//! - [`model`]: differentiable classifiers with analytic gradients
//! - [`loss`]: the surrogate loss family and its stochastic gradient
//! - [`optim`]: training loops (parallel surrogate SGD, baselines, minimax)
//! - [`metrics`]: group-fairness evaluation
//! - [`data`]: dataset loaders, encoding, group partitioning, synthesis
//! - [`config`] and [`experiment`]: the reproducible experiment harness

pub mod config;
pub mod data;
pub mod error;
pub mod experiment;
pub mod loss;
pub mod metrics;
pub mod model;
pub mod optim;
pub mod rng;
pub mod trace;

pub use error::{Error, Result};
