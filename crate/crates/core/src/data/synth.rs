//! In-process synthetic problems for convergence checks and tests.
//!
//! Both generators produce two groups of logistic data over 5 continuous
//! features with group-specific ground-truth weights, labeled through a
//! sigmoid so the data is linearly separable up to noise. The nonconvex
//! variant folds a quadratic interaction into the labels so a linear model
//! cannot realize the Bayes rule and a small MLP has structure to find.

use super::{descriptor_fingerprint, GroupedDataset, Split};
use crate::error::Result;
use crate::rng::{stream_rng, STREAM_SYNTH};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const FEATURES: usize = 5;
pub const TRAIN_PER_GROUP: usize = 500;
pub const TEST_PER_GROUP: usize = 250;

/// Sharpness of the labeling sigmoid: higher means closer to separable.
const LABEL_SCALE: f64 = 2.5;

const GROUP_WEIGHTS: [[f64; FEATURES]; 2] =
    [[1.2, -0.8, 0.5, 1.5, -0.4], [-0.6, 1.0, 1.1, -0.3, 0.8]];

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn generate(
    rng: &mut ChaCha8Rng,
    per_group: usize,
    split: Split,
    quadratic: f64,
    fp: u64,
) -> Result<GroupedDataset> {
    let n = 2 * per_group;
    let mut x = Vec::with_capacity(n * FEATURES);
    let mut y = Vec::with_capacity(n);
    let mut group = Vec::with_capacity(n);
    for g in [0u8, 1] {
        let w = &GROUP_WEIGHTS[g as usize];
        for _ in 0..per_group {
            let feats: Vec<f32> = (0..FEATURES).map(|_| rng.random_range(-1.0..1.0)).collect();
            let mut z: f64 = feats.iter().zip(w).map(|(a, b)| f64::from(*a) * b).sum();
            z += quadratic * f64::from(feats[0]) * f64::from(feats[1]) * 3.0;
            let p = sigmoid(LABEL_SCALE * z);
            y.push(u8::from(rng.random::<f64>() < p));
            group.push(g);
            x.extend_from_slice(&feats);
        }
    }
    GroupedDataset::from_parts(x, FEATURES, y, group, split, fp)
}

/// Two-group logistic problem for convex (linear model) experiments.
pub fn synthetic_convex(seed: u64) -> Result<(GroupedDataset, GroupedDataset)> {
    let fp = descriptor_fingerprint(&format!("synthetic-convex|seed={seed}"));
    let mut rng = stream_rng(seed, STREAM_SYNTH);
    let train = generate(&mut rng, TRAIN_PER_GROUP, Split::Train, 0.0, fp)?;
    let test = generate(&mut rng, TEST_PER_GROUP, Split::Test, 0.0, fp)?;
    Ok((train, test))
}

/// Two-group problem with a quadratic interaction, for MLP experiments.
pub fn synthetic_nonconvex(seed: u64) -> Result<(GroupedDataset, GroupedDataset)> {
    let fp = descriptor_fingerprint(&format!("synthetic-nonconvex|seed={seed}"));
    let mut rng = stream_rng(seed, STREAM_SYNTH);
    let train = generate(&mut rng, TRAIN_PER_GROUP, Split::Train, 1.0, fp)?;
    let test = generate(&mut rng, TEST_PER_GROUP, Split::Test, 1.0, fp)?;
    Ok((train, test))
}
