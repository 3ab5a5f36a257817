//! ProPublica COMPAS two-year recidivism loader.
//!
//! Input is the standard filtered cohort as one CSV file with a header row
//! (6,172 observations; a different row count produces a warning, not an
//! error). Sex is the protected column: Female is group 0, Male group 1.
//! Features are the categorical columns `age_cat`, `race`, `c_charge_degree`,
//! `score_text`, and `decile_score` treated as categorical; sex itself stays
//! out of the feature matrix unless `include_protected` is set. The label is
//! `two_year_recid`.
//!
//! The train/test split is a deterministic seeded shuffle, stratified by
//! group. On the standard cohort (1,175 Female / 4,997 Male) the split uses
//! the published group counts (782/393 and 3,332/1,665); otherwise it falls
//! back to a floor(2n/3) train share per group.

use super::{one_hot_encode, EncodingSpec, GroupedDataset, Split};
use crate::error::{Error, Result};
use crate::rng::{stream_rng, STREAM_SPLIT, STREAM_SYNTH};
use rand::seq::SliceRandom;
use rand::Rng;
use std::io::Write;
use std::path::{Path, PathBuf};

/// Expected cohort size of the standard filtered file.
pub const EXPECTED_COHORT: usize = 6_172;
/// Group sizes of the standard cohort.
pub const EXPECTED_FEMALE: usize = 1_175;
pub const EXPECTED_MALE: usize = 4_997;
/// Published per-group train counts used when the cohort matches.
pub const FEMALE_TRAIN: usize = 782;
pub const MALE_TRAIN: usize = 3_332;

/// Categorical feature columns, in encoding order.
const FEATURE_COLS: [&str; 5] = [
    "age_cat",
    "race",
    "c_charge_degree",
    "score_text",
    "decile_score",
];

/// Loader report.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoadSummary {
    pub rows: usize,
    pub female_train: usize,
    pub female_test: usize,
    pub male_train: usize,
    pub male_test: usize,
    pub fingerprint: u64,
    /// Present when the file's row count differs from the standard cohort.
    pub cohort_warning: Option<String>,
}

struct RawRow {
    features: Vec<String>,
    group: u8,
    label: u8,
}

fn read_rows(path: &Path, include_protected: bool) -> Result<Vec<RawRow>> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| Error::Data(format!("cannot read {}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| Error::Data(format!("{}: bad header: {e}", path.display())))?
        .clone();
    let col = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Data(format!("{}: missing column '{name}'", path.display())))
    };
    let sex_col = col("sex")?;
    let label_col = col("two_year_recid")?;
    let feature_cols: Vec<usize> = FEATURE_COLS.iter().map(|n| col(n)).collect::<Result<_>>()?;

    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record =
            record.map_err(|e| Error::Data(format!("{}: row {}: {e}", path.display(), i + 2)))?;
        let field = |c: usize| -> Result<&str> {
            record.get(c).ok_or_else(|| {
                Error::Data(format!("{}: row {}: short record", path.display(), i + 2))
            })
        };
        let sex = field(sex_col)?;
        let group = match sex {
            "Female" => 0u8,
            "Male" => 1u8,
            other => {
                return Err(Error::Data(format!(
                    "{}: row {}: unexpected sex '{other}'",
                    path.display(),
                    i + 2
                )))
            }
        };
        let label = match field(label_col)? {
            "0" => 0u8,
            "1" => 1u8,
            other => {
                return Err(Error::Data(format!(
                    "{}: row {}: unexpected two_year_recid '{other}'",
                    path.display(),
                    i + 2
                )))
            }
        };
        let sex_owned = sex.to_string();
        let mut features: Vec<String> = feature_cols
            .iter()
            .map(|&c| field(c).map(|s| s.to_string()))
            .collect::<Result<_>>()?;
        if include_protected {
            features.push(sex_owned);
        }
        rows.push(RawRow {
            features,
            group,
            label,
        });
    }
    Ok(rows)
}

/// Stratified train share for one group.
fn train_count(group_size: usize, standard_cohort: bool, group: u8) -> usize {
    if standard_cohort {
        if group == 0 {
            FEMALE_TRAIN
        } else {
            MALE_TRAIN
        }
    } else {
        group_size * 2 / 3
    }
}

/// Load and split the cohort. Deterministic for a fixed `(path, seed)`.
pub fn load_compas(
    path: &Path,
    seed: u64,
    include_protected: bool,
) -> Result<(GroupedDataset, GroupedDataset, LoadSummary)> {
    let rows = read_rows(path, include_protected)?;
    let cohort_warning = if rows.len() != EXPECTED_COHORT {
        Some(format!(
            "expected the standard {EXPECTED_COHORT}-row cohort, found {} rows",
            rows.len()
        ))
    } else {
        None
    };
    if let Some(w) = &cohort_warning {
        eprintln!("warning: compas: {w}");
    }

    let mut by_group: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (i, r) in rows.iter().enumerate() {
        by_group[r.group as usize].push(i);
    }
    let standard = by_group[0].len() == EXPECTED_FEMALE && by_group[1].len() == EXPECTED_MALE;

    let mut rng = stream_rng(seed, STREAM_SPLIT);
    let mut train_idx = Vec::new();
    let mut test_idx = Vec::new();
    for g in [0u8, 1] {
        let mut idx = by_group[g as usize].clone();
        idx.shuffle(&mut rng);
        let k = train_count(idx.len(), standard, g);
        if k == 0 || k == idx.len() {
            return Err(Error::Data(format!(
                "compas: split leaves group {g} empty on one side ({} rows)",
                idx.len()
            )));
        }
        train_idx.extend_from_slice(&idx[..k]);
        test_idx.extend_from_slice(&idx[k..]);
    }
    train_idx.sort_unstable();
    test_idx.sort_unstable();

    let mut names: Vec<&str> = FEATURE_COLS.to_vec();
    if include_protected {
        names.push("sex");
    }
    let train_features: Vec<Vec<String>> = train_idx
        .iter()
        .map(|&i| rows[i].features.clone())
        .collect();
    let spec = EncodingSpec::from_rows(&names, &train_features)?;

    let build = |idx: &[usize], split: Split| -> Result<GroupedDataset> {
        let feats: Vec<Vec<String>> = idx.iter().map(|&i| rows[i].features.clone()).collect();
        let x = one_hot_encode(&feats, &spec)?;
        GroupedDataset::from_parts(
            x,
            spec.width(),
            idx.iter().map(|&i| rows[i].label).collect(),
            idx.iter().map(|&i| rows[i].group).collect(),
            split,
            spec.fingerprint(),
        )
    };
    let train = build(&train_idx, Split::Train)?;
    let test = build(&test_idx, Split::Test)?;
    let summary = LoadSummary {
        rows: rows.len(),
        female_train: train.group_size(0),
        female_test: test.group_size(0),
        male_train: train.group_size(1),
        male_test: test.group_size(1),
        fingerprint: spec.fingerprint(),
        cohort_warning,
    };
    Ok((train, test, summary))
}

// ---------------------------------------------------------------------------
// Synthetic mirror
// ---------------------------------------------------------------------------

const AGE_CATS: [&str; 3] = ["Less than 25", "25 - 45", "Greater than 45"];
const RACES: [&str; 6] = [
    "African-American",
    "Caucasian",
    "Hispanic",
    "Other",
    "Asian",
    "Native American",
];

/// Decile-score distributions per group. Females concentrate in deciles 1-2
/// where males are rare, so those cells are strongly female-dominated.
const FEMALE_DECILE_WEIGHTS: [f64; 10] = [2.6, 2.2, 1.5, 1.1, 0.8, 0.6, 0.45, 0.35, 0.25, 0.2];
const MALE_DECILE_WEIGHTS: [f64; 10] = [0.15, 0.15, 1.3, 1.25, 1.15, 1.05, 0.95, 0.9, 0.85, 0.8];

/// Recidivism model. Males follow a calibrated decile curve. Females in the
/// low female-dominated deciles reoffend at a slim majority rate the pooled
/// model under-predicts (the male admixture keeps those cells below the
/// decision threshold), while higher-decile females follow a damped curve.
const RECID_SLOPE: f64 = 0.55;
const MALE_THRESHOLD: f64 = 5.0;
const FEMALE_HIGH_THRESHOLD: f64 = 7.4;
const FEMALE_D1_RECID: f64 = 0.62;
const FEMALE_D2_RECID: f64 = 0.54;

fn score_text(decile: usize) -> &'static str {
    match decile {
        1..=4 => "Low",
        5..=7 => "Medium",
        _ => "High",
    }
}

fn draw_weighted<R: Rng>(rng: &mut R, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        u -= w;
        if u <= 0.0 {
            return i;
        }
    }
    weights.len() - 1
}

/// Write a `compas-scores-two-years.csv` stand-in with the standard cohort's
/// row and group counts. Column layout is a realistic superset of what the
/// loader needs, so header-based lookup gets exercised.
pub fn write_mirror_file(dir: &Path, seed: u64) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let mut rng = stream_rng(seed, STREAM_SYNTH);
    let path = dir.join("compas-scores-two-years.csv");
    let mut out = String::new();
    out.push_str(
        "id,name,sex,age,age_cat,race,juv_fel_count,decile_score,c_charge_degree,score_text,days_b_screening_arrest,is_recid,two_year_recid\n",
    );
    let mut female_flags = vec![true; EXPECTED_FEMALE];
    female_flags.extend(vec![false; EXPECTED_MALE]);
    female_flags.shuffle(&mut rng);
    for (id, female) in female_flags.iter().enumerate() {
        let (sex, decile_weights, threshold) = if *female {
            ("Female", &FEMALE_DECILE_WEIGHTS, FEMALE_HIGH_THRESHOLD)
        } else {
            ("Male", &MALE_DECILE_WEIGHTS, MALE_THRESHOLD)
        };
        let decile = draw_weighted(&mut rng, decile_weights) + 1;
        let p_recid = match (*female, decile) {
            (true, 1) => FEMALE_D1_RECID,
            (true, 2) => FEMALE_D2_RECID,
            _ => 1.0 / (1.0 + (-RECID_SLOPE * (decile as f64 - threshold)).exp()),
        };
        let recid = u8::from(rng.random::<f64>() < p_recid);
        let age_cat = AGE_CATS[draw_weighted(&mut rng, &[1.0, 2.2, 1.0])];
        let race = RACES[draw_weighted(&mut rng, &[2.8, 2.2, 0.9, 0.4, 0.2, 0.1])];
        let charge = if rng.random::<f64>() < if *female { 0.55 } else { 0.68 } {
            "F"
        } else {
            "M"
        };
        let age = rng.random_range(18..70);
        let days = rng.random_range(-20i32..20);
        out.push_str(&format!(
            "{},person_{},{},{},{},{},0,{},{},{},{},{},{}\n",
            id + 1,
            id + 1,
            sex,
            age,
            age_cat,
            race,
            decile,
            charge,
            score_text(decile),
            days,
            recid,
            recid
        ));
    }
    std::fs::File::create(&path)?.write_all(out.as_bytes())?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    // Every (feature, value) pair appears at least 5 times so the 2/3 split
    // keeps the test vocabulary inside the train vocabulary for any seed.
    const SNIPPET: &str = "\
id,name,sex,age,age_cat,race,juv_fel_count,decile_score,c_charge_degree,score_text,days_b_screening_arrest,is_recid,two_year_recid
1,a,Male,69,Greater than 45,Caucasian,0,1,F,Low,-1,0,0
2,b,Female,34,25 - 45,African-American,0,3,M,Medium,-1,1,1
3,c,Male,24,25 - 45,African-American,0,3,F,Medium,-1,1,1
4,d,Female,23,Greater than 45,African-American,0,1,F,Low,-1,0,0
5,e,Male,43,25 - 45,Caucasian,0,1,M,Low,-1,0,0
6,f,Female,41,25 - 45,Caucasian,0,3,M,Medium,-1,1,1
7,g,Male,39,Greater than 45,Caucasian,0,3,M,Medium,-1,0,0
8,h,Female,27,Greater than 45,African-American,0,1,F,Low,-1,0,0
9,i,Male,23,25 - 45,African-American,0,3,F,Medium,-1,0,0
10,j,Female,37,Greater than 45,Caucasian,0,1,M,Low,-1,0,0
11,k,Male,54,Greater than 45,African-American,0,1,F,Medium,-1,0,0
12,l,Female,22,25 - 45,Caucasian,0,3,M,Low,-1,1,1
";

    #[test]
    fn loads_and_splits_stratified() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("compas.csv");
        std::fs::write(&path, SNIPPET).unwrap();
        let (train, test, summary) = load_compas(&path, 3, false).unwrap();
        // 6 females, 6 males; non-standard cohort -> floor(2n/3) = 4 each
        assert!(summary.cohort_warning.is_some());
        assert_eq!(summary.female_train, 4);
        assert_eq!(summary.female_test, 2);
        assert_eq!(summary.male_train, 4);
        assert_eq!(summary.male_test, 2);
        assert_eq!(train.len(), 8);
        assert_eq!(test.len(), 4);
        assert_eq!(train.fingerprint(), test.fingerprint());
    }

    #[test]
    fn split_is_deterministic_per_seed() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("compas.csv");
        std::fs::write(&path, SNIPPET).unwrap();
        let (tr1, te1, _) = load_compas(&path, 7, false).unwrap();
        let (tr2, te2, _) = load_compas(&path, 7, false).unwrap();
        assert_eq!(tr1.row(0), tr2.row(0));
        assert_eq!(
            (0..te1.len()).map(|i| te1.label(i)).collect::<Vec<_>>(),
            (0..te2.len()).map(|i| te2.label(i)).collect::<Vec<_>>()
        );
        let (tr3, _, _) = load_compas(&path, 8, false).unwrap();
        let same = (0..tr1.len()).all(|i| tr1.row(i) == tr3.row(i) && tr1.label(i) == tr3.label(i));
        assert!(!same, "different seeds should shuffle differently");
    }

    #[test]
    fn missing_column_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("compas.csv");
        std::fs::write(&path, "sex,age\nMale,30\n").unwrap();
        let err = load_compas(&path, 1, false).unwrap_err();
        assert!(err.to_string().contains("two_year_recid"), "{err}");
    }

    #[test]
    fn mirror_matches_published_counts() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_mirror_file(dir.path(), 0).unwrap();
        let (train, test, summary) = load_compas(&path, 1, false).unwrap();
        assert_eq!(summary.rows, EXPECTED_COHORT);
        assert!(summary.cohort_warning.is_none());
        assert_eq!(summary.female_train, FEMALE_TRAIN);
        assert_eq!(summary.female_test, EXPECTED_FEMALE - FEMALE_TRAIN);
        assert_eq!(summary.male_train, MALE_TRAIN);
        assert_eq!(summary.male_test, EXPECTED_MALE - MALE_TRAIN);
        assert_eq!(train.len() + test.len(), EXPECTED_COHORT);
        // alpha0 = 782 / 4114 ~ 0.1901
        let (a0, _) = train.proportional_alpha();
        assert!((a0 - 0.1901).abs() < 1e-3, "alpha0 {a0}");
    }
}
