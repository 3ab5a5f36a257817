//! UCI Adult census income loader.
//!
//! Input is the official pair of comma-separated files (15 whitespace-padded
//! fields per row, no quoting; the test file opens with a `|`-prefixed header
//! line and its labels carry a trailing period). Only categorical columns are
//! used as features; education defines the two groups (Doctorate vs not) and
//! is excluded from the feature matrix unless `include_protected` is set.
//! Rows with a `?` in any used column are dropped before group counting.
//!
//! [`write_mirror_files`] emits a synthetic stand-in pair in the exact same
//! file format with the published row and group counts, for running the
//! pipeline when the real data is not on disk.

use super::{one_hot_encode, EncodingSpec, GroupedDataset, Split};
use crate::error::{Error, Result};
use crate::rng::{stream_rng, STREAM_SYNTH};
use rand::seq::SliceRandom;
use rand::Rng;
use std::io::Write;
use std::path::{Path, PathBuf};

/// Column indices in the 15-field row.
const COL_WORKCLASS: usize = 1;
const COL_EDUCATION: usize = 3;
const COL_MARITAL: usize = 5;
const COL_OCCUPATION: usize = 6;
const COL_RELATIONSHIP: usize = 7;
const COL_RACE: usize = 8;
const COL_SEX: usize = 9;
const COL_COUNTRY: usize = 13;
const COL_INCOME: usize = 14;

/// Categorical feature columns, in encoding order (education handled
/// separately: it is the protected column).
const FEATURE_COLS: [(usize, &str); 7] = [
    (COL_WORKCLASS, "workclass"),
    (COL_MARITAL, "marital-status"),
    (COL_OCCUPATION, "occupation"),
    (COL_RELATIONSHIP, "relationship"),
    (COL_RACE, "race"),
    (COL_SEX, "sex"),
    (COL_COUNTRY, "native-country"),
];

const DOCTORATE: &str = "Doctorate";

/// Per-split row accounting, reported for verification against the
/// published counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitCounts {
    /// Rows in the file (before the `?` filter).
    pub raw_rows: usize,
    /// Rows kept after dropping `?` in used columns.
    pub kept_rows: usize,
    /// Kept rows in group 0.
    pub group0: usize,
    /// Kept rows in group 1.
    pub group1: usize,
}

/// Loader report: counts per split plus the shared encoder fingerprint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LoadSummary {
    pub train: SplitCounts,
    pub test: SplitCounts,
    pub fingerprint: u64,
}

struct RawRow {
    features: Vec<String>,
    group: u8,
    label: u8,
}

fn parse_file(path: &Path, is_test: bool, include_protected: bool) -> Result<(Vec<RawRow>, usize)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Data(format!("cannot read {}: {e}", path.display())))?;
    let mut rows = Vec::new();
    let mut raw_rows = 0usize;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('|') {
            // blank tail line or the test file's header
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 15 {
            return Err(Error::Data(format!(
                "{}:{}: expected 15 fields, got {}",
                path.display(),
                lineno + 1,
                fields.len()
            )));
        }
        raw_rows += 1;
        let mut used: Vec<&str> = FEATURE_COLS.iter().map(|&(c, _)| fields[c]).collect();
        if used.contains(&"?") {
            continue;
        }
        let education = fields[COL_EDUCATION];
        if include_protected {
            used.push(education);
        }
        let mut income = fields[COL_INCOME];
        if is_test {
            income = income.strip_suffix('.').unwrap_or(income);
        }
        let label = match income {
            ">50K" => 1,
            "<=50K" => 0,
            other => {
                return Err(Error::Data(format!(
                    "{}:{}: unexpected income label '{other}'",
                    path.display(),
                    lineno + 1
                )))
            }
        };
        rows.push(RawRow {
            features: used.iter().map(|s| s.to_string()).collect(),
            group: u8::from(education != DOCTORATE),
            label,
        });
    }
    Ok((rows, raw_rows))
}

fn feature_names(include_protected: bool) -> Vec<&'static str> {
    let mut names: Vec<&str> = FEATURE_COLS.iter().map(|&(_, n)| n).collect();
    if include_protected {
        names.push("education");
    }
    names
}

fn build_split(rows: &[RawRow], spec: &EncodingSpec, split: Split) -> Result<GroupedDataset> {
    let raw: Vec<Vec<String>> = rows.iter().map(|r| r.features.clone()).collect();
    let x = one_hot_encode(&raw, spec)?;
    GroupedDataset::from_parts(
        x,
        spec.width(),
        rows.iter().map(|r| r.label).collect(),
        rows.iter().map(|r| r.group).collect(),
        split,
        spec.fingerprint(),
    )
}

fn counts(rows: &[RawRow], raw_rows: usize) -> SplitCounts {
    let group0 = rows.iter().filter(|r| r.group == 0).count();
    SplitCounts {
        raw_rows,
        kept_rows: rows.len(),
        group0,
        group1: rows.len() - group0,
    }
}

/// Load the Adult train/test pair. The categorical vocabulary is built from
/// the training rows and reused verbatim for the test rows, so the two
/// datasets always share an encoder fingerprint.
pub fn load_adult(
    train_path: &Path,
    test_path: &Path,
    include_protected: bool,
) -> Result<(GroupedDataset, GroupedDataset, LoadSummary)> {
    let (train_rows, train_raw) = parse_file(train_path, false, include_protected)?;
    let (test_rows, test_raw) = parse_file(test_path, true, include_protected)?;
    if train_rows.is_empty() || test_rows.is_empty() {
        return Err(Error::Data("adult: no usable rows".into()));
    }
    let names = feature_names(include_protected);
    let train_raw_features: Vec<Vec<String>> =
        train_rows.iter().map(|r| r.features.clone()).collect();
    let spec = EncodingSpec::from_rows(&names, &train_raw_features)?;
    let train = build_split(&train_rows, &spec, Split::Train)?;
    let test = build_split(&test_rows, &spec, Split::Test)?;
    let summary = LoadSummary {
        train: counts(&train_rows, train_raw),
        test: counts(&test_rows, test_raw),
        fingerprint: spec.fingerprint(),
    };
    Ok((train, test, summary))
}

// ---------------------------------------------------------------------------
// Synthetic mirror
// ---------------------------------------------------------------------------

/// Published split sizes of the official files.
pub const MIRROR_TRAIN_ROWS: usize = 32_561;
pub const MIRROR_TEST_ROWS: usize = 16_281;
/// Doctorate rows per split in the mirror (kept clear of `?` so the counts
/// survive filtering).
pub const MIRROR_DOCTORATE_TRAIN: usize = 413;
pub const MIRROR_DOCTORATE_TEST: usize = 181;

const WORKCLASS: [&str; 8] = [
    "Never-worked",
    "Without-pay",
    "Private",
    "Self-emp-not-inc",
    "Local-gov",
    "Self-emp-inc",
    "Federal-gov",
    "State-gov",
];
const EDUCATION_OTHER: [&str; 8] = [
    "HS-grad",
    "Some-college",
    "Bachelors",
    "Masters",
    "Assoc-voc",
    "11th",
    "Prof-school",
    "7th-8th",
];
const MARITAL: [&str; 7] = [
    "Never-married",
    "Married-civ-spouse",
    "Divorced",
    "Separated",
    "Widowed",
    "Married-spouse-absent",
    "Married-AF-spouse",
];
const OCCUPATION: [&str; 14] = [
    "Priv-house-serv",
    "Handlers-cleaners",
    "Other-service",
    "Farming-fishing",
    "Machine-op-inspct",
    "Transport-moving",
    "Armed-Forces",
    "Craft-repair",
    "Adm-clerical",
    "Protective-serv",
    "Sales",
    "Tech-support",
    "Exec-managerial",
    "Prof-specialty",
];
const RELATIONSHIP: [&str; 6] = [
    "Not-in-family",
    "Husband",
    "Wife",
    "Own-child",
    "Unmarried",
    "Other-relative",
];
const RACE: [&str; 5] = [
    "White",
    "Black",
    "Asian-Pac-Islander",
    "Amer-Indian-Eskimo",
    "Other",
];
const SEX: [&str; 2] = ["Male", "Female"];
const COUNTRY: [&str; 8] = [
    "United-States",
    "Mexico",
    "Philippines",
    "Germany",
    "Canada",
    "India",
    "England",
    "Cuba",
];

/// Positive (">50K") rates per group in the mirror. Doctorate rows split
/// into a clear subpopulation whose features track the label and a hard one
/// whose labels are an unpredictable coin flip; the hard slice caps how far
/// any model can push the group's accuracy.
const RATE_DOCTORATE_CLEAR: f64 = 0.78;
const DOCTORATE_HARD_FRACTION: f64 = 0.45;
/// Fraction of clear-doctorate positives that mimic the majority's
/// strongest positive profiles instead of the group profile.
const DOCTORATE_RIDER_FRACTION: f64 = 0.40;
const RATE_OTHER: f64 = 0.24;
/// How strongly feature choices lean with the label, per group.
const SIGNAL_DOCTORATE: f64 = 0.55;
const SIGNAL_OTHER: f64 = 0.50;
/// Range of the per-row profile bias toward the marked "profile" values.
/// Spreading the depth lets stronger reweighting keep reaching further into
/// the group instead of saturating at one threshold crossing.
const PROFILE_MIN: f64 = 1.0;
const PROFILE_MAX: f64 = 2.6;
/// Fraction of non-Doctorate rows given a `?` in a used column.
const MISSING_RATE: f64 = 0.05;
/// Fraction of non-Doctorate negatives whose features lean positive anyway,
/// giving the majority a persistent false-positive region.
const MAJORITY_CONFUSION: f64 = 0.09;

/// Draw an index from `vocab` with weights
/// `exp(signal * score(v) + profile * marker(v))`, where `score` ramps
/// linearly over the vocabulary and `marker` highlights the first two
/// entries.
fn draw_value<R: Rng>(rng: &mut R, vocab: &[&'static str], signal: f64, profile: f64) -> usize {
    let v = vocab.len();
    let weights: Vec<f64> = (0..v)
        .map(|i| {
            let score = if v > 1 {
                2.0 * i as f64 / (v - 1) as f64 - 1.0
            } else {
                0.0
            };
            let marker = if i >= v.saturating_sub(2) { 1.0 } else { -0.3 };
            (signal * score + profile * marker).exp()
        })
        .collect();
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        u -= w;
        if u <= 0.0 {
            return i;
        }
    }
    v - 1
}

fn mirror_row<R: Rng>(rng: &mut R, doctorate: bool, missing_allowed: bool) -> String {
    let hard = doctorate && rng.random::<f64>() < DOCTORATE_HARD_FRACTION;
    let (rate, signal) = if hard {
        (0.5, 0.0)
    } else if doctorate {
        (RATE_DOCTORATE_CLEAR, SIGNAL_DOCTORATE)
    } else {
        (RATE_OTHER, SIGNAL_OTHER)
    };
    let label = rng.random::<f64>() < rate;
    let mut lean = if label { signal } else { -signal };
    if !doctorate && !label && rng.random::<f64>() < MAJORITY_CONFUSION {
        lean = SIGNAL_OTHER * 0.9;
    }
    let mut profile = if doctorate {
        rng.random_range(PROFILE_MIN..PROFILE_MAX)
    } else {
        0.0
    };
    if doctorate && !hard && label && rng.random::<f64>() < DOCTORATE_RIDER_FRACTION {
        // high earners indistinguishable from the majority's strongest
        // positives; they are classified correctly from the start
        lean = 1.3;
        profile = 0.0;
    }

    let mut workclass = WORKCLASS[draw_value(rng, &WORKCLASS, lean, profile * 0.5)];
    let mut occupation = OCCUPATION[draw_value(rng, &OCCUPATION, lean, 0.0)];
    if doctorate && rng.random::<f64>() < 0.4 {
        // Doctorate rows cluster in a recognizable occupation profile.
        occupation = "Prof-specialty";
    }
    let marital = MARITAL[draw_value(rng, &MARITAL, lean * 0.8, 0.0)];
    let relationship = RELATIONSHIP[draw_value(rng, &RELATIONSHIP, lean * 0.8, 0.0)];
    let race = RACE[draw_value(rng, &RACE, lean * 0.15, 0.0)];
    let sex = SEX[draw_value(rng, &SEX, lean * 0.5, 0.0)];
    let country = COUNTRY[draw_value(rng, &COUNTRY, lean * 0.2, 0.0)];
    let education = if doctorate {
        DOCTORATE
    } else {
        EDUCATION_OTHER[draw_value(rng, &EDUCATION_OTHER, lean * 0.9, 0.0)]
    };

    // Numeric filler columns; the loader ignores them.
    let age = rng.random_range(18..80);
    let fnlwgt = rng.random_range(20_000..400_000);
    let edu_num = rng.random_range(1..=16);
    let hours = rng.random_range(20..70);

    if missing_allowed && rng.random::<f64>() < MISSING_RATE {
        if rng.random::<f64>() < 0.5 {
            workclass = "?";
        } else {
            occupation = "?";
        }
    }

    let income = if label { ">50K" } else { "<=50K" };
    format!(
        "{age}, {workclass}, {fnlwgt}, {education}, {edu_num}, {marital}, {occupation}, \
         {relationship}, {race}, {sex}, 0, 0, {hours}, {country}, {income}"
    )
}

fn mirror_split<R: Rng>(
    rng: &mut R,
    rows: usize,
    doctorate_rows: usize,
    test_format: bool,
) -> String {
    let mut flags = vec![false; rows];
    for f in flags.iter_mut().take(doctorate_rows) {
        *f = true;
    }
    flags.shuffle(rng);
    let mut out = String::new();
    if test_format {
        out.push_str("|1x3 Cross validator\n");
    }
    for doctorate in flags {
        let mut line = mirror_row(rng, doctorate, !doctorate);
        if test_format {
            line.push('.');
        }
        out.push_str(&line);
        out.push('\n');
    }
    out
}

/// Write `adult.data` and `adult.test` stand-ins into `dir`. The files carry
/// the published row and Doctorate counts and parse under [`load_adult`]
/// exactly like the real pair.
pub fn write_mirror_files(dir: &Path, seed: u64) -> Result<(PathBuf, PathBuf)> {
    std::fs::create_dir_all(dir)?;
    let mut rng = stream_rng(seed, STREAM_SYNTH);
    let train_path = dir.join("adult.data");
    let test_path = dir.join("adult.test");
    let train = mirror_split(&mut rng, MIRROR_TRAIN_ROWS, MIRROR_DOCTORATE_TRAIN, false);
    let test = mirror_split(&mut rng, MIRROR_TEST_ROWS, MIRROR_DOCTORATE_TEST, true);
    std::fs::File::create(&train_path)?.write_all(train.as_bytes())?;
    std::fs::File::create(&test_path)?.write_all(test.as_bytes())?;
    Ok((train_path, test_path))
}
