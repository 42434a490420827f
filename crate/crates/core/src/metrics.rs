//! Confusion-matrix tallies and the rates derived from them.
//!
//! Label 1 is the positive class. A rate whose denominator is zero is
//! reported as `None` rather than 0 or 1.

use std::fmt::Write as _;

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn positives(&self) -> usize {
        self.tp + self.fn_
    }

    pub fn negatives(&self) -> usize {
        self.tn + self.fp
    }
}

pub fn tally(predictions: &[u8], truth: &[u8]) -> Result<ConfusionCounts> {
    if predictions.len() != truth.len() {
        return Err(Error::InvalidInput(format!(
            "{} predictions for {} labels",
            predictions.len(),
            truth.len()
        )));
    }
    if predictions.is_empty() {
        return Err(Error::InvalidInput("nothing to tally".into()));
    }
    let mut counts = ConfusionCounts::default();
    for (&p, &t) in predictions.iter().zip(truth) {
        match (p, t) {
            (1, 1) => counts.tp += 1,
            (0, 0) => counts.tn += 1,
            (1, 0) => counts.fp += 1,
            (0, 1) => counts.fn_ += 1,
            _ => {
                return Err(Error::InvalidInput(format!(
                    "labels must be 0 or 1, got prediction {p} truth {t}"
                )))
            }
        }
    }
    Ok(counts)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricReport {
    pub counts: ConfusionCounts,
    pub ppv: Option<f64>,
    pub tpr: Option<f64>,
    pub npv: Option<f64>,
    pub tnr: Option<f64>,
    pub acc: f64,
    pub bacc: Option<f64>,
    pub youden_j: Option<f64>,
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn report(counts: &ConfusionCounts) -> Result<MetricReport> {
    let total = counts.total();
    if total == 0 {
        return Err(Error::InvalidInput("empty confusion matrix".into()));
    }
    let tpr = ratio(counts.tp, counts.positives());
    let tnr = ratio(counts.tn, counts.negatives());
    let both = tpr.zip(tnr);
    Ok(MetricReport {
        counts: *counts,
        ppv: ratio(counts.tp, counts.tp + counts.fp),
        tpr,
        npv: ratio(counts.tn, counts.tn + counts.fn_),
        tnr,
        acc: (counts.tp + counts.tn) as f64 / total as f64,
        bacc: both.map(|(p, n)| (p + n) / 2.0),
        youden_j: both.map(|(p, n)| p + n - 1.0),
    })
}

/// Tally and report in one go.
pub fn evaluate(predictions: &[u8], truth: &[u8]) -> Result<MetricReport> {
    report(&tally(predictions, truth)?)
}

impl MetricReport {
    /// Column names matching [`MetricReport::csv_row`].
    pub const CSV_HEADER: &'static str = "tp,fp,tn,fn,ppv,tpr,npv,tnr,acc,bacc,j";

    /// One comma-separated row; undefined rates are empty cells.
    pub fn csv_row(&self) -> String {
        let c = &self.counts;
        let mut row = format!("{},{},{},{}", c.tp, c.fp, c.tn, c.fn_);
        for v in [
            self.ppv,
            self.tpr,
            self.npv,
            self.tnr,
            Some(self.acc),
            self.bacc,
            self.youden_j,
        ] {
            row.push(',');
            if let Some(v) = v {
                let _ = write!(row, "{v}");
            }
        }
        row
    }
}
