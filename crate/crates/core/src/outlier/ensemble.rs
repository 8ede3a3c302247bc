use std::collections::{BTreeMap, BTreeSet};

use super::{OutlierError, Result};

/// Min-max scale into `[0, 1]`; a constant vector maps to all `0.5`.
pub fn normalize_scores(scores: &[f64]) -> Vec<f64> {
    let (lo, hi) = scores
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &s| (lo.min(s), hi.max(s)));
    let span = hi - lo;
    if span.is_nan() || span <= 0.0 || !span.is_finite() {
        return vec![0.5; scores.len()];
    }
    scores.iter().map(|&s| (s - lo) / span).collect()
}

/// Elementwise mean of the three normalized detector scores.
pub fn comprehensive_score(iforest: &[f64], ocsvm: &[f64], knn_mean: &[f64]) -> Result<Vec<f64>> {
    if iforest.len() != ocsvm.len() || iforest.len() != knn_mean.len() {
        return Err(OutlierError::LengthMismatch);
    }
    Ok(iforest
        .iter()
        .zip(ocsvm)
        .zip(knn_mean)
        .map(|((a, b), c)| (a + b + c) / 3.0)
        .collect())
}

/// `ceil(contamination * n)`, robust to the representation error of
/// products like `0.1 * 30`.
pub fn flag_count(contamination: f64, n: usize) -> usize {
    let raw = contamination * n as f64;
    let nearest = raw.round();
    let count = if (raw - nearest).abs() < 1e-9 { nearest } else { raw.ceil() };
    (count as usize).min(n)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ranking {
    /// Positions sorted by descending score, ties by ascending position.
    pub ranked: Vec<usize>,
    pub flagged: BTreeSet<usize>,
}

/// Rank positions by score and flag the top `ceil(contamination * n)`.
/// Positions are expected to follow window order, so the position tie-break
/// is the lower-window-index tie-break.
pub fn rank_and_flag(scores: &[f64], contamination: f64) -> Result<Ranking> {
    if !(contamination > 0.0 && contamination < 0.5) {
        return Err(OutlierError::InvalidParameter(format!(
            "contamination {contamination} outside (0, 0.5)"
        )));
    }
    let mut ranked: Vec<usize> = (0..scores.len()).collect();
    ranked.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let flagged = ranked[..flag_count(contamination, scores.len())].iter().copied().collect();
    Ok(Ranking { ranked, flagged })
}

/// Group items by how many detectors flagged them.
pub fn detector_agreement<K: Ord>(
    flagged: &BTreeMap<K, BTreeSet<usize>>,
) -> Result<BTreeMap<usize, BTreeSet<usize>>> {
    if flagged.len() < 2 {
        return Err(OutlierError::TooFewDetectors);
    }
    let mut votes: BTreeMap<usize, usize> = BTreeMap::new();
    for set in flagged.values() {
        for &i in set {
            *votes.entry(i).or_default() += 1;
        }
    }
    let mut out: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    for (i, m) in votes {
        out.entry(m).or_default().insert(i);
    }
    Ok(out)
}
