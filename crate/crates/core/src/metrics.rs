//! Group-fairness evaluation.
//!
//! All quantities are empirical frequencies over a prediction table:
//! per-group accuracy, the accuracy gap (equal-accuracy violation), the
//! positive-rate gap (demographic-parity violation), and the true-positive-
//! rate gap (equal-opportunity violation). The last is undefined when a
//! group has no positive labels; that case is reported as a tagged value,
//! never silently zero.

use crate::data::GroupedDataset;
use crate::error::{Error, Result};
use crate::model::{classify, ModelParams};

/// One evaluated sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PredRow {
    pub y_true: u8,
    pub y_pred: u8,
    pub group: u8,
}

/// Rows of (true label, predicted label, group).
#[derive(Debug, Clone, Default)]
pub struct PredictionTable {
    pub rows: Vec<PredRow>,
}

impl PredictionTable {
    pub fn push(&mut self, y_true: u8, y_pred: u8, group: u8) {
        debug_assert!(y_true <= 1 && y_pred <= 1 && group <= 1);
        self.rows.push(PredRow {
            y_true,
            y_pred,
            group,
        });
    }

    fn group_rows(&self, group: u8) -> impl Iterator<Item = &PredRow> {
        self.rows.iter().filter(move |r| r.group == group)
    }
}

/// Fraction of one group's rows with `y_pred == y_true`.
pub fn group_accuracy(t: &PredictionTable, group: u8) -> Result<f64> {
    let mut total = 0u64;
    let mut correct = 0u64;
    for r in t.group_rows(group) {
        total += 1;
        if r.y_pred == r.y_true {
            correct += 1;
        }
    }
    if total == 0 {
        return Err(Error::DegenerateGroup { group });
    }
    Ok(correct as f64 / total as f64)
}

/// Absolute difference of the two per-group accuracies.
pub fn ea_violation(t: &PredictionTable) -> Result<f64> {
    Ok((group_accuracy(t, 0)? - group_accuracy(t, 1)?).abs())
}

/// Absolute difference of the two per-group positive-prediction rates.
/// Ignores true labels entirely.
pub fn dp_violation(t: &PredictionTable) -> Result<f64> {
    let mut rate = [0.0f64; 2];
    for g in [0u8, 1] {
        let mut total = 0u64;
        let mut positive = 0u64;
        for r in t.group_rows(g) {
            total += 1;
            if r.y_pred == 1 {
                positive += 1;
            }
        }
        if total == 0 {
            return Err(Error::DegenerateGroup { group: g });
        }
        rate[g as usize] = positive as f64 / total as f64;
    }
    Ok((rate[0] - rate[1]).abs())
}

/// Absolute difference of the two per-group true-positive rates, or `None`
/// when either group has no positive-label rows.
pub fn eo_violation(t: &PredictionTable) -> Option<f64> {
    let mut tpr = [0.0f64; 2];
    for g in [0u8, 1] {
        let mut positives = 0u64;
        let mut hits = 0u64;
        for r in t.group_rows(g) {
            if r.y_true == 1 {
                positives += 1;
                if r.y_pred == 1 {
                    hits += 1;
                }
            }
        }
        if positives == 0 {
            return None;
        }
        tpr[g as usize] = hits as f64 / positives as f64;
    }
    Some((tpr[0] - tpr[1]).abs())
}

/// Final metric summary for one model on one evaluation set.
#[derive(Debug, Clone, PartialEq)]
pub struct FairnessReport {
    pub overall_accuracy: f64,
    pub acc_group0: f64,
    pub acc_group1: f64,
    pub worst_accuracy: f64,
    pub ea_violation: f64,
    pub dp_violation: f64,
    /// `None` means undefined (a group had no positive labels).
    pub eo_violation: Option<f64>,
}

/// Classify every sample of the evaluation set and compute all metrics.
///
/// In the label-partitioned setting the accuracy gap reported here as
/// `ea_violation` is the per-label accuracy gap.
pub fn fairness_report(m: &ModelParams, test: &GroupedDataset) -> Result<FairnessReport> {
    let t = prediction_table(m, test)?;
    report_from_table(&t)
}

/// Build the prediction table for a model over a dataset.
pub fn prediction_table(m: &ModelParams, ds: &GroupedDataset) -> Result<PredictionTable> {
    let mut t = PredictionTable::default();
    for i in 0..ds.len() {
        let pred = classify(m, ds.row(i))?;
        t.push(ds.label(i), pred, ds.group_of(i));
    }
    Ok(t)
}

/// All metrics from an existing prediction table.
pub fn report_from_table(t: &PredictionTable) -> Result<FairnessReport> {
    if t.rows.is_empty() {
        return Err(Error::Data("empty prediction table".into()));
    }
    let acc0 = group_accuracy(t, 0)?;
    let acc1 = group_accuracy(t, 1)?;
    let correct = t.rows.iter().filter(|r| r.y_pred == r.y_true).count();
    Ok(FairnessReport {
        overall_accuracy: correct as f64 / t.rows.len() as f64,
        acc_group0: acc0,
        acc_group1: acc1,
        worst_accuracy: acc0.min(acc1),
        ea_violation: (acc0 - acc1).abs(),
        dp_violation: dp_violation(t)?,
        eo_violation: eo_violation(t),
    })
}
