//! Unsupervised outlier detectors over small dense feature matrices, plus
//! score ensembling, ranking and evaluation.
//!
//! Every detector returns one score per row with the convention that a
//! higher score means more anomalous.

mod ensemble;
mod iforest;
mod metrics;
mod neighbors;
mod ocsvm;
mod pca;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

pub use ensemble::{
    comprehensive_score, detector_agreement, flag_count, normalize_scores, rank_and_flag, Ranking,
};
pub use iforest::{average_path_length, score_iforest};
pub use metrics::{evaluate, Metrics};
pub use neighbors::{score_knn, score_lof, KnnMode};
pub use ocsvm::{fit_ocsvm, score_ocsvm, OcsvmModel};
pub use pca::score_pca;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OutlierError {
    #[error("need at least {needed} rows, got {got}")]
    TooFewRows { needed: usize, got: usize },
    #[error("rows have inconsistent lengths")]
    RaggedRows,
    #[error("k = {k} must be in 1..{n}")]
    KTooLarge { k: usize, n: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("score vectors have different lengths")]
    LengthMismatch,
    #[error("agreement needs at least two detectors")]
    TooFewDetectors,
}

pub type Result<T, E = OutlierError> = std::result::Result<T, E>;

/// Conditions under which scores are still emitted but deserve a caveat.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScoreWarning {
    /// Every row is identical (or all columns are constant); scores are uniform.
    DegenerateData,
    /// The solver hit its iteration cap before meeting the KKT tolerance.
    NonConvergence { iterations: usize },
}

impl fmt::Display for ScoreWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScoreWarning::DegenerateData => f.write_str("degenerate data: all rows identical"),
            ScoreWarning::NonConvergence { iterations } => {
                write!(f, "solver did not converge in {iterations} iterations")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreSet {
    pub scores: Vec<f64>,
    pub warning: Option<ScoreWarning>,
}

impl ScoreSet {
    fn plain(scores: Vec<f64>) -> Self {
        Self {
            scores,
            warning: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DetectorKind {
    IForest,
    Pca,
    Lof,
    KnnLargest,
    KnnMean,
    Ocsvm,
}

impl DetectorKind {
    pub const ALL: [DetectorKind; 6] = [
        DetectorKind::IForest,
        DetectorKind::Pca,
        DetectorKind::Lof,
        DetectorKind::KnnLargest,
        DetectorKind::KnnMean,
        DetectorKind::Ocsvm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DetectorKind::IForest => "iforest",
            DetectorKind::Pca => "pca",
            DetectorKind::Lof => "lof",
            DetectorKind::KnnLargest => "knn_largest",
            DetectorKind::KnnMean => "knn_mean",
            DetectorKind::Ocsvm => "ocsvm",
        }
    }
}

impl fmt::Display for DetectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for DetectorKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        DetectorKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown detector `{s}`"))
    }
}

/// Hyperparameters for one detector run. `None` fields take data-dependent
/// defaults when scoring.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorConfig {
    pub kind: DetectorKind,
    pub k: Option<usize>,
    pub trees: usize,
    pub subsample: usize,
    pub nu: f64,
    pub gamma: Option<f64>,
    pub contamination: f64,
    pub seed: u64,
}

impl DetectorConfig {
    pub fn new(kind: DetectorKind, seed: u64) -> Self {
        Self {
            kind,
            k: None,
            trees: 100,
            subsample: 256,
            nu: 0.1,
            gamma: None,
            contamination: 0.1,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.contamination > 0.0 && self.contamination < 0.5) {
            return Err(OutlierError::InvalidParameter(format!(
                "contamination {} outside (0, 0.5)",
                self.contamination
            )));
        }
        if self.k == Some(0) {
            return Err(OutlierError::InvalidParameter("k must be at least 1".into()));
        }
        if self.trees == 0 || self.subsample < 2 {
            return Err(OutlierError::InvalidParameter(
                "isolation forest needs trees >= 1 and subsample >= 2".into(),
            ));
        }
        if !(self.nu > 0.0 && self.nu <= 1.0) {
            return Err(OutlierError::InvalidParameter(format!("nu {} outside (0, 1]", self.nu)));
        }
        Ok(())
    }

    /// Neighbour count: explicit `k`, else `max(2, ceil(0.05 n))` capped at `n - 1`.
    pub fn neighbors(&self, n: usize) -> usize {
        self.k
            .unwrap_or_else(|| ((n as f64 * 0.05).ceil() as usize).max(2).min(n.saturating_sub(1)))
    }

    pub fn score(&self, rows: &[Vec<f64>]) -> Result<ScoreSet> {
        self.validate()?;
        let n = rows.len();
        match self.kind {
            DetectorKind::IForest => score_iforest(rows, self.trees, self.subsample, self.seed),
            DetectorKind::Pca => score_pca(rows),
            DetectorKind::Lof => score_lof(rows, self.neighbors(n)).map(ScoreSet::plain),
            DetectorKind::KnnLargest => score_knn(rows, self.neighbors(n), KnnMode::Largest).map(ScoreSet::plain),
            DetectorKind::KnnMean => score_knn(rows, self.neighbors(n), KnnMode::Mean).map(ScoreSet::plain),
            DetectorKind::Ocsvm => score_ocsvm(rows, self.nu, self.gamma),
        }
    }
}

fn check_rows(rows: &[Vec<f64>], needed: usize) -> Result<usize> {
    if rows.len() < needed {
        return Err(OutlierError::TooFewRows {
            needed,
            got: rows.len(),
        });
    }
    let d = rows[0].len();
    if rows.iter().any(|r| r.len() != d) {
        return Err(OutlierError::RaggedRows);
    }
    Ok(d)
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Z-score every column, dropping constant columns.
fn standardize(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = rows.len() as f64;
    let d = rows.first().map_or(0, Vec::len);
    let mut keep = Vec::new();
    for j in 0..d {
        let mean = rows.iter().map(|r| r[j]).sum::<f64>() / n;
        let var = rows.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n;
        let std = var.sqrt();
        if std > 0.0 && rows.iter().any(|r| r[j] != rows[0][j]) {
            keep.push((j, mean, std));
        }
    }
    rows.iter()
        .map(|r| keep.iter().map(|&(j, mean, std)| (r[j] - mean) / std).collect())
        .collect()
}
