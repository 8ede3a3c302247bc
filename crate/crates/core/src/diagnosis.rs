//! Trace diagnosis: engineer features, score every aggregate with the
//! selected detectors, combine into the comprehensive score and flag the
//! most anomalous windows.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{engineer, FeatureError};
use crate::io::{format_sig6, CsvTable, Report, TraceEvent};
use crate::outlier::{
    comprehensive_score, detector_agreement, normalize_scores, rank_and_flag, DetectorConfig, DetectorKind,
    OutlierError,
};

/// Fewer aggregates than this leaves nothing to compare against.
pub const MIN_AGGREGATES: usize = 3;
pub const DEFAULT_K: usize = 3;
pub const DEFAULT_GRANULARITY: u64 = 100_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiagnosisError {
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Outlier(#[from] OutlierError),
    #[error("only {got} message aggregates; need at least {MIN_AGGREGATES}")]
    TooFewAggregates { got: usize },
    #[error("no detectors selected")]
    NoDetectors,
}

pub type Result<T, E = DiagnosisError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosisConfig {
    pub k: usize,
    pub granularity: u64,
    /// Detectors reported individually. The comprehensive score always uses
    /// iforest, ocsvm and knn_mean whether or not they are listed here.
    pub detectors: Vec<DetectorKind>,
    pub contamination: f64,
    pub seed: u64,
    pub top_aggregates: usize,
}

impl Default for DiagnosisConfig {
    fn default() -> Self {
        Self {
            k: DEFAULT_K,
            granularity: DEFAULT_GRANULARITY,
            detectors: DetectorKind::ALL.to_vec(),
            contamination: 0.1,
            seed: 0,
            top_aggregates: 5,
        }
    }
}

impl DiagnosisConfig {
    fn detector(&self, kind: DetectorKind) -> DetectorConfig {
        DetectorConfig {
            contamination: self.contamination,
            ..DetectorConfig::new(kind, self.seed)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosisReport {
    pub k: usize,
    pub g: u64,
    /// Window index of every aggregate, ascending. All per-aggregate vectors
    /// below are aligned with it.
    pub windows: Vec<u64>,
    /// `[entropy, mean Levenshtein distance]` per aggregate.
    pub features: Vec<[f64; 2]>,
    pub sequence_counts: Vec<usize>,
    pub detectors: BTreeMap<String, Vec<f64>>,
    /// Window indices each detector would flag on its own.
    pub detector_flagged: BTreeMap<String, Vec<u64>>,
    pub comprehensive: Vec<f64>,
    /// Window indices by descending comprehensive score.
    pub ranked: Vec<u64>,
    pub flagged: Vec<u64>,
    pub top_sequences: Vec<Vec<String>>,
    pub warnings: Vec<String>,
}

impl DiagnosisReport {
    pub fn position(&self, window: u64) -> Option<usize> {
        self.windows.binary_search(&window).ok()
    }
}

impl Report for DiagnosisReport {
    fn csv_table(&self) -> CsvTable {
        let names: Vec<&String> = self.detectors.keys().collect();
        let mut header = vec!["window".to_string(), "entropy".into(), "mean_ldist".into(), "sequences".into()];
        header.extend(names.iter().map(|n| n.to_string()));
        header.extend(["comprehensive".to_string(), "flagged".into()]);
        let flagged: BTreeSet<u64> = self.flagged.iter().copied().collect();
        let mut t = CsvTable::new(header);
        for (i, &w) in self.windows.iter().enumerate() {
            let mut row = vec![
                w.to_string(),
                format_sig6(self.features[i][0]),
                format_sig6(self.features[i][1]),
                self.sequence_counts[i].to_string(),
            ];
            row.extend(names.iter().map(|n| format_sig6(self.detectors[*n][i])));
            row.push(format_sig6(self.comprehensive[i]));
            row.push(u8::from(flagged.contains(&w)).to_string());
            t.push(row);
        }
        t
    }
}

/// One report per `k`, for parameter sweeps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct KSweep(pub Vec<DiagnosisReport>);

impl Report for KSweep {
    fn csv_table(&self) -> CsvTable {
        let mut t = CsvTable::new(["k", "window", "entropy", "mean_ldist", "sequences", "comprehensive", "flagged"]);
        for r in &self.0 {
            let flagged: BTreeSet<u64> = r.flagged.iter().copied().collect();
            for (i, &w) in r.windows.iter().enumerate() {
                t.push(vec![
                    r.k.to_string(),
                    w.to_string(),
                    format_sig6(r.features[i][0]),
                    format_sig6(r.features[i][1]),
                    r.sequence_counts[i].to_string(),
                    format_sig6(r.comprehensive[i]),
                    u8::from(flagged.contains(&w)).to_string(),
                ]);
            }
        }
        t
    }
}

pub fn diagnose(events: &[TraceEvent], cfg: &DiagnosisConfig) -> Result<DiagnosisReport> {
    if cfg.detectors.is_empty() {
        return Err(DiagnosisError::NoDetectors);
    }
    let trace = engineer(events, cfg.k, cfg.granularity)?;
    let n = trace.aggregates.len();
    if n < MIN_AGGREGATES {
        return Err(DiagnosisError::TooFewAggregates { got: n });
    }
    let rows: Vec<Vec<f64>> = trace.rows.iter().map(|r| r.features().to_vec()).collect();
    let windows: Vec<u64> = trace.rows.iter().map(|r| r.window_index).collect();

    let wanted: BTreeSet<DetectorKind> = cfg
        .detectors
        .iter()
        .copied()
        .chain([DetectorKind::IForest, DetectorKind::Ocsvm, DetectorKind::KnnMean])
        .collect();
    let mut scores: BTreeMap<DetectorKind, Vec<f64>> = BTreeMap::new();
    let mut warnings = Vec::new();
    for kind in wanted {
        let set = cfg.detector(kind).score(&rows)?;
        if let Some(w) = set.warning {
            warnings.push(format!("{kind}: {w}"));
        }
        scores.insert(kind, set.scores);
    }

    let comprehensive = comprehensive_score(
        &normalize_scores(&scores[&DetectorKind::IForest]),
        &normalize_scores(&scores[&DetectorKind::Ocsvm]),
        &normalize_scores(&scores[&DetectorKind::KnnMean]),
    )?;
    let ranking = rank_and_flag(&comprehensive, cfg.contamination)?;

    let mut detectors = BTreeMap::new();
    let mut detector_flagged = BTreeMap::new();
    for kind in cfg.detectors.iter().copied().collect::<BTreeSet<_>>() {
        let s = scores.remove(&kind).expect("scored above");
        let flagged = rank_and_flag(&s, cfg.contamination)?.flagged;
        detector_flagged.insert(kind.name().to_string(), flagged.iter().map(|&i| windows[i]).collect());
        detectors.insert(kind.name().to_string(), s);
    }

    let mut seen = HashSet::new();
    let mut top_sequences = Vec::new();
    for &pos in ranking.ranked.iter().take(cfg.top_aggregates) {
        for seq in &trace.aggregates[pos].sequences {
            if seen.insert(seq.symbols.clone()) {
                top_sequences.push(trace.index.decode(&seq.symbols));
            }
        }
    }

    Ok(DiagnosisReport {
        k: cfg.k,
        g: cfg.granularity,
        features: trace.rows.iter().map(|r| [r.entropy, r.mean_ldist]).collect(),
        sequence_counts: trace.aggregates.iter().map(|a| a.len()).collect(),
        detectors,
        detector_flagged,
        comprehensive,
        ranked: ranking.ranked.iter().map(|&i| windows[i]).collect(),
        flagged: ranking.flagged.iter().map(|&i| windows[i]).collect(),
        top_sequences,
        warnings,
        windows,
    })
}

/// Run `diagnose` once per `k` in `k_min..=k_max`.
pub fn diagnose_sweep(events: &[TraceEvent], cfg: &DiagnosisConfig, k_max: usize) -> Result<KSweep> {
    (cfg.k..=k_max)
        .map(|k| diagnose(events, &DiagnosisConfig { k, ..cfg.clone() }))
        .collect::<Result<_>>()
        .map(KSweep)
}

/// Aggregates grouped by how many detectors flagged them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Agreement {
    pub detectors: Vec<String>,
    /// Agreement count `m` to the windows flagged by exactly `m` detectors.
    pub agreement: BTreeMap<usize, Vec<u64>>,
}

impl Report for Agreement {
    fn csv_table(&self) -> CsvTable {
        let mut t = CsvTable::new(["detectors_agreeing", "window"]);
        for (m, windows) in &self.agreement {
            for w in windows {
                t.push(vec![m.to_string(), w.to_string()]);
            }
        }
        t
    }
}

pub fn agreement(report: &DiagnosisReport) -> Result<Agreement> {
    let sets: BTreeMap<&str, BTreeSet<usize>> = report
        .detector_flagged
        .iter()
        .map(|(name, ws)| {
            let set = ws.iter().filter_map(|&w| report.position(w)).collect();
            (name.as_str(), set)
        })
        .collect();
    let grouped = detector_agreement(&sets)?;
    Ok(Agreement {
        detectors: report.detector_flagged.keys().cloned().collect(),
        agreement: grouped
            .into_iter()
            .map(|(m, set)| (m, set.into_iter().map(|i| report.windows[i]).collect()))
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(cycle: u64, message: &str) -> TraceEvent {
        TraceEvent {
            cycle,
            src: "P".into(),
            dst: "Q".into(),
            message: message.into(),
        }
    }

    fn periodic(windows: u64) -> Vec<TraceEvent> {
        let mut events = Vec::new();
        for w in 0..windows {
            for (i, m) in ["a", "b", "c", "a", "b", "c", "a", "b"].iter().enumerate() {
                events.push(ev(w * 100 + i as u64 * 10, m));
            }
        }
        // Window 4 carries an unusual burst.
        for (i, m) in ["c", "c", "a", "c", "b", "b"].iter().enumerate() {
            events.push(ev(490 + i as u64, m));
        }
        events.sort_by_key(|e| e.cycle);
        events
    }

    #[test]
    fn too_few_aggregates() {
        let events = vec![ev(0, "a"), ev(1, "b"), ev(2, "c")];
        let cfg = DiagnosisConfig {
            k: 2,
            granularity: 100,
            ..Default::default()
        };
        assert_eq!(diagnose(&events, &cfg), Err(DiagnosisError::TooFewAggregates { got: 1 }));
        let short = DiagnosisConfig { k: 5, ..cfg };
        assert_eq!(diagnose(&events, &short), Err(DiagnosisError::TooFewAggregates { got: 0 }));
    }

    #[test]
    fn burst_window_is_flagged() {
        let cfg = DiagnosisConfig {
            k: 3,
            granularity: 100,
            ..Default::default()
        };
        let r = diagnose(&periodic(10), &cfg).unwrap();
        assert_eq!(r.windows, (0..10).collect::<Vec<_>>());
        assert_eq!(r.flagged, [4]);
        assert_eq!(r.ranked[0], 4);
        assert_eq!(r.detectors.len(), 6);
        assert!(r.top_sequences.contains(&vec!["c".to_string(), "c".into(), "a".into()]));
    }

    #[test]
    fn sweep_yields_one_report_per_k() {
        let cfg = DiagnosisConfig {
            k: 2,
            granularity: 100,
            ..Default::default()
        };
        let sweep = diagnose_sweep(&periodic(10), &cfg, 4).unwrap();
        assert_eq!(sweep.0.iter().map(|r| r.k).collect::<Vec<_>>(), [2, 3, 4]);
    }

    #[test]
    fn agreement_covers_union() {
        let cfg = DiagnosisConfig {
            k: 3,
            granularity: 100,
            ..Default::default()
        };
        let r = diagnose(&periodic(10), &cfg).unwrap();
        let a = agreement(&r).unwrap();
        let union: BTreeSet<u64> = r.detector_flagged.values().flatten().copied().collect();
        let total: usize = a.agreement.values().map(Vec::len).sum();
        assert_eq!(total, union.len());
    }
}
