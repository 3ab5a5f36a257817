//! Per-checkpoint training records and their CSV form.
//!
//! `trace.csv` is a stable contract: fixed header, one row per checkpoint,
//! comma delimiter, period decimal separator, LF line endings. The
//! equal-opportunity column holds the literal `undefined` when the metric
//! has no value.

use crate::error::{Error, Result};
use crate::metrics::FairnessReport;
use std::io::Write;
use std::path::Path;

/// Column header of `trace.csv`.
pub const TRACE_HEADER: &str = "round,overall_acc,acc_g0,acc_g1,worst_acc,overall_loss,surrogate_loss,ea,dp,eo,running_avg_acc,cap_events";

/// Metrics measured at one evaluation checkpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub round: u64,
    pub overall_acc: f64,
    pub acc_g0: f64,
    pub acc_g1: f64,
    pub worst_acc: f64,
    /// Mean base loss on the evaluation set.
    pub overall_loss: f64,
    /// Value of the training objective on the evaluation set.
    pub surrogate_loss: f64,
    pub ea: f64,
    pub dp: f64,
    pub eo: Option<f64>,
    /// Mean of `overall_acc` over the checkpoints so far, this one included.
    pub running_avg_acc: f64,
    /// Cumulative count of loss-cap events since training started.
    pub cap_events: u64,
}

/// Ordered checkpoint records of one training run. Rounds are strictly
/// increasing; the first record is at round 0 and the last at round T.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingTrace {
    pub records: Vec<TraceRecord>,
}

impl TrainingTrace {
    pub fn push(&mut self, rec: TraceRecord) {
        if let Some(last) = self.records.last() {
            assert!(rec.round > last.round, "trace rounds must increase");
        }
        self.records.push(rec);
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    /// Final checkpoint's fairness summary.
    pub fn final_report(&self) -> Option<FairnessReport> {
        self.records.last().map(|r| FairnessReport {
            overall_accuracy: r.overall_acc,
            acc_group0: r.acc_g0,
            acc_group1: r.acc_g1,
            worst_accuracy: r.worst_acc,
            ea_violation: r.ea,
            dp_violation: r.dp,
            eo_violation: r.eo,
        })
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(f, "{TRACE_HEADER}")?;
        for r in &self.records {
            let eo = match r.eo {
                Some(v) => format!("{v}"),
                None => "undefined".to_string(),
            };
            writeln!(
                f,
                "{},{},{},{},{},{},{},{},{},{},{},{}",
                r.round,
                r.overall_acc,
                r.acc_g0,
                r.acc_g1,
                r.worst_acc,
                r.overall_loss,
                r.surrogate_loss,
                r.ea,
                r.dp,
                eo,
                r.running_avg_acc,
                r.cap_events
            )?;
        }
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Data(format!("cannot read trace {}: {e}", path.display())))?;
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Data(format!("empty trace file {}", path.display())))?;
        if header != TRACE_HEADER {
            return Err(Error::Data(format!(
                "unexpected trace header in {}: {header}",
                path.display()
            )));
        }
        let mut trace = TrainingTrace::default();
        for (lineno, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 12 {
                return Err(Error::Data(format!(
                    "{}:{}: expected 12 fields, got {}",
                    path.display(),
                    lineno + 2,
                    fields.len()
                )));
            }
            let num = |i: usize| -> Result<f64> {
                fields[i].parse::<f64>().map_err(|_| {
                    Error::Data(format!(
                        "{}:{}: bad number '{}'",
                        path.display(),
                        lineno + 2,
                        fields[i]
                    ))
                })
            };
            let eo = if fields[9] == "undefined" {
                None
            } else {
                Some(num(9)?)
            };
            trace.push(TraceRecord {
                round: fields[0].parse::<u64>().map_err(|_| {
                    Error::Data(format!(
                        "{}:{}: bad round '{}'",
                        path.display(),
                        lineno + 2,
                        fields[0]
                    ))
                })?,
                overall_acc: num(1)?,
                acc_g0: num(2)?,
                acc_g1: num(3)?,
                worst_acc: num(4)?,
                overall_loss: num(5)?,
                surrogate_loss: num(6)?,
                ea: num(7)?,
                dp: num(8)?,
                eo,
                running_avg_acc: num(10)?,
                cap_events: fields[11].parse::<u64>().map_err(|_| {
                    Error::Data(format!(
                        "{}:{}: bad cap_events '{}'",
                        path.display(),
                        lineno + 2,
                        fields[11]
                    ))
                })?,
            });
        }
        if trace.records.is_empty() {
            return Err(Error::Data(format!(
                "trace {} has no records",
                path.display()
            )));
        }
        Ok(trace)
    }
}
