//! Dataset containers, categorical encoding, and minibatch sampling.
//!
//! A [`GroupedDataset`] is an immutable dense feature matrix with binary
//! labels and a two-way group partition. Loaders for the concrete on-disk
//! formats live in the submodules.

pub mod adult;
pub mod compas;
pub mod fashion;
pub mod synth;

use crate::error::{Error, Result};
use crate::loss::GroupBatch;
use crate::model::Sample;
use rand_chacha::ChaCha8Rng;

/// Which side of the train/test split a dataset came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn tag(&self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

/// Dense feature matrix + labels + two-way group partition.
#[derive(Debug, Clone)]
pub struct GroupedDataset {
    x: Vec<f32>,
    dim: usize,
    y: Vec<u8>,
    group: Vec<u8>,
    s0: Vec<usize>,
    s1: Vec<usize>,
    split: Split,
    fingerprint: u64,
}

impl GroupedDataset {
    /// Build a dataset, checking the partition invariants: consistent
    /// lengths, binary labels/groups, and both groups nonempty.
    pub fn from_parts(
        x: Vec<f32>,
        dim: usize,
        y: Vec<u8>,
        group: Vec<u8>,
        split: Split,
        fingerprint: u64,
    ) -> Result<Self> {
        let n = y.len();
        if dim == 0 || n == 0 {
            return Err(Error::Data("empty dataset".into()));
        }
        if x.len() != n * dim {
            return Err(Error::Data(format!(
                "feature matrix has {} entries, expected {} ({} rows x {} cols)",
                x.len(),
                n * dim,
                n,
                dim
            )));
        }
        if group.len() != n {
            return Err(Error::Data("group vector length mismatch".into()));
        }
        if y.iter().any(|&v| v > 1) || group.iter().any(|&v| v > 1) {
            return Err(Error::Data("labels and groups must be 0 or 1".into()));
        }
        let mut s0 = Vec::new();
        let mut s1 = Vec::new();
        for (i, &g) in group.iter().enumerate() {
            if g == 0 {
                s0.push(i);
            } else {
                s1.push(i);
            }
        }
        if s0.is_empty() {
            return Err(Error::DegenerateGroup { group: 0 });
        }
        if s1.is_empty() {
            return Err(Error::DegenerateGroup { group: 1 });
        }
        Ok(GroupedDataset {
            x,
            dim,
            y,
            group,
            s0,
            s1,
            split,
            fingerprint,
        })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn split(&self) -> Split {
        self.split
    }

    /// Hash of the categorical vocabulary (or generator descriptor) the
    /// features were encoded against. Train and test must agree.
    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.x[i * self.dim..(i + 1) * self.dim]
    }

    pub fn label(&self, i: usize) -> u8 {
        self.y[i]
    }

    pub fn group_of(&self, i: usize) -> u8 {
        self.group[i]
    }

    pub fn sample(&self, i: usize) -> Sample<'_> {
        Sample {
            features: self.row(i),
            label: self.y[i],
            group: self.group[i],
        }
    }

    /// Indices of the samples in one group, ascending.
    pub fn group_indices(&self, group: u8) -> &[usize] {
        if group == 0 {
            &self.s0
        } else {
            &self.s1
        }
    }

    pub fn group_size(&self, group: u8) -> usize {
        self.group_indices(group).len()
    }

    /// Group weights proportional to group sizes: `(S0/N, S1/N)`.
    pub fn proportional_alpha(&self) -> (f64, f64) {
        let n = self.len() as f64;
        (self.s0.len() as f64 / n, self.s1.len() as f64 / n)
    }
}

/// One categorical feature's fixed vocabulary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureVocab {
    pub name: String,
    pub values: Vec<String>,
}

/// Column layout contract for one-hot encoding: feature order and per-feature
/// vocabularies are frozen when the encoding spec is built (from the training split)
/// and reused verbatim for the test split.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodingSpec {
    pub features: Vec<FeatureVocab>,
}

impl EncodingSpec {
    /// Build vocabularies from raw rows, in first-seen order.
    pub fn from_rows(feature_names: &[&str], rows: &[Vec<String>]) -> Result<Self> {
        let mut features: Vec<FeatureVocab> = feature_names
            .iter()
            .map(|n| FeatureVocab {
                name: (*n).to_string(),
                values: Vec::new(),
            })
            .collect();
        for row in rows {
            if row.len() != features.len() {
                return Err(Error::Data(format!(
                    "raw row has {} values, expected {}",
                    row.len(),
                    features.len()
                )));
            }
            for (f, value) in features.iter_mut().zip(row) {
                if !f.values.iter().any(|v| v == value) {
                    f.values.push(value.clone());
                }
            }
        }
        Ok(EncodingSpec { features })
    }

    /// Encoded width: sum of vocabulary sizes.
    pub fn width(&self) -> usize {
        self.features.iter().map(|f| f.values.len()).sum()
    }

    /// FNV-1a hash of feature names and vocabularies, in order. Identical
    /// specs (and only identical specs, collisions aside) share a
    /// fingerprint.
    pub fn fingerprint(&self) -> u64 {
        let mut h = fnv1a_init();
        for f in &self.features {
            h = fnv1a_update(h, f.name.as_bytes());
            h = fnv1a_update(h, &[0xff]);
            for v in &f.values {
                h = fnv1a_update(h, v.as_bytes());
                h = fnv1a_update(h, &[0xfe]);
            }
        }
        h
    }
}

const FNV_OFFSET: u64 = 0xcbf29ce484222325;
const FNV_PRIME: u64 = 0x100000001b3;

fn fnv1a_init() -> u64 {
    FNV_OFFSET
}

fn fnv1a_update(mut h: u64, bytes: &[u8]) -> u64 {
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

/// 64-bit content hash for non-categorical dataset descriptors.
pub fn descriptor_fingerprint(descriptor: &str) -> u64 {
    fnv1a_update(fnv1a_init(), descriptor.as_bytes())
}

/// One-hot encode raw categorical rows against a fixed spec.
///
/// The output is a dense row-major matrix of width [`EncodingSpec::width`];
/// a value missing from the encoding vocabulary is an error naming the feature
/// and the offending value.
pub fn one_hot_encode(rows: &[Vec<String>], spec: &EncodingSpec) -> Result<Vec<f32>> {
    let width = spec.width();
    let mut out = vec![0.0f32; rows.len() * width];
    for (r, row) in rows.iter().enumerate() {
        if row.len() != spec.features.len() {
            return Err(Error::Data(format!(
                "row {} has {} values, expected {}",
                r,
                row.len(),
                spec.features.len()
            )));
        }
        let mut offset = 0;
        for (f, value) in spec.features.iter().zip(row) {
            let pos = f.values.iter().position(|v| v == value).ok_or_else(|| {
                Error::Data(format!(
                    "unseen category for feature '{}': '{}'",
                    f.name, value
                ))
            })?;
            out[r * width + offset + pos] = 1.0;
            offset += f.values.len();
        }
    }
    Ok(out)
}

/// Draw `min(size, S_group)` distinct indices uniformly at random from one
/// group, without replacement. Deterministic given the generator state.
pub fn sample_minibatch(
    ds: &GroupedDataset,
    group: u8,
    size: usize,
    rng: &mut ChaCha8Rng,
) -> Result<GroupBatch> {
    if size == 0 {
        return Err(Error::Config("batch size must be >= 1".into()));
    }
    let pool = ds.group_indices(group);
    if pool.is_empty() {
        return Err(Error::DegenerateGroup { group });
    }
    let k = size.min(pool.len());
    let mut indices: Vec<usize> = if k == pool.len() {
        pool.to_vec()
    } else {
        rand::seq::index::sample(rng, pool.len(), k)
            .iter()
            .map(|j| pool[j])
            .collect()
    };
    indices.sort_unstable();
    Ok(GroupBatch { group, indices })
}
