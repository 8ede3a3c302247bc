use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{OutlierError, Result};
use crate::io::{format_sig6, CsvTable, Report};

/// Confusion counts and the ratios derived from them. A ratio whose
/// denominator is zero is `None` rather than zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    /// `(tp + tn) / n`.
    pub accuracy: Option<f64>,
    /// `tp / (tp + fp + fn)`, the accuracy variant that ignores true negatives.
    pub critical_success: Option<f64>,
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

impl Metrics {
    pub fn from_counts(tp: usize, fp: usize, tn: usize, fn_: usize) -> Self {
        Self {
            tp,
            fp,
            tn,
            fn_,
            precision: ratio(tp, tp + fp),
            recall: ratio(tp, tp + fn_),
            accuracy: ratio(tp + tn, tp + fp + tn + fn_),
            critical_success: ratio(tp, tp + fp + fn_),
        }
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

/// Compare flagged positions against per-position ground truth.
pub fn evaluate(flagged: &BTreeSet<usize>, positives: &[bool]) -> Result<Metrics> {
    if flagged.iter().any(|&i| i >= positives.len()) {
        return Err(OutlierError::LengthMismatch);
    }
    let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
    for (i, &pos) in positives.iter().enumerate() {
        match (flagged.contains(&i), pos) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, false) => tn += 1,
            (false, true) => fn_ += 1,
        }
    }
    Ok(Metrics::from_counts(tp, fp, tn, fn_))
}

impl Report for Metrics {
    fn csv_table(&self) -> CsvTable {
        let opt = |v: Option<f64>| v.map(format_sig6).unwrap_or_default();
        let mut t = CsvTable::new([
            "tp",
            "fp",
            "tn",
            "fn",
            "precision",
            "recall",
            "accuracy",
            "critical_success",
        ]);
        t.push(vec![
            self.tp.to_string(),
            self.fp.to_string(),
            self.tn.to_string(),
            self.fn_.to_string(),
            opt(self.precision),
            opt(self.recall),
            opt(self.accuracy),
            opt(self.critical_success),
        ]);
        t
    }
}
