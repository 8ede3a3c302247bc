//! Synthetic traces for closed-loop evaluation: seeded random walks over an
//! interleaving, anomalous-sequence injection with ground-truth labels, and
//! the bug-coverage / message-importance measures.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::flow::{InterleavedFlow, Label};
use crate::io::{format_sig6, CsvTable, Report, TraceEvent};

/// Injection rates are expressed per this many cycles.
pub const RATE_CYCLES: f64 = 100_000.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("bug `{0}` has an empty anomalous sequence")]
    EmptySequence(String),
    #[error("rate {rate} for bug `{bug}` is infeasible: {reason}")]
    InfeasibleRate { bug: String, rate: f64, reason: String },
    #[error("coverage must be positive")]
    ZeroCoverage,
}

pub type Result<T, E = SynthError> = std::result::Result<T, E>;

/// A generated trace together with the product edge behind every event.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedTrace {
    pub events: Vec<TraceEvent>,
    pub labels: Vec<Label>,
    /// Index of the first event of each walk.
    pub walk_starts: Vec<usize>,
}

/// Repeated random walks from a random initial state, each step taking a
/// uniformly chosen outgoing edge and advancing the clock by a gap drawn
/// uniformly from `[1, max_gap]`. A walk ends at a state without successors,
/// or at a stop state with probability `1 / (out-degree + 1)`. Generation
/// stops once the clock reaches `length_cycles`.
pub fn generate_walks(ifl: &InterleavedFlow, length_cycles: u64, max_gap: u64, seed: u64) -> Result<GeneratedTrace> {
    if length_cycles == 0 {
        return Err(SynthError::InvalidParameter("trace length must be at least one cycle".into()));
    }
    if max_gap == 0 {
        return Err(SynthError::InvalidParameter("inter-message gap must be at least 1".into()));
    }
    if ifl.edges().is_empty() {
        return Err(SynthError::InvalidParameter("interleaving has no edges to walk".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = GeneratedTrace {
        events: Vec::new(),
        labels: Vec::new(),
        walk_starts: Vec::new(),
    };
    let initial = ifl.initial_states();
    let mut cycle = 0u64;
    'walks: loop {
        let mut state = initial[rng.random_range(0..initial.len())];
        out.walk_starts.push(out.events.len());
        loop {
            let edges = ifl.outgoing(state);
            if edges.is_empty() || (ifl.is_stop(state) && rng.random_range(0..=edges.len()) == 0) {
                break;
            }
            let edge = edges[rng.random_range(0..edges.len())];
            cycle += rng.random_range(1..=max_gap);
            if cycle >= length_cycles {
                break 'walks;
            }
            out.events.push(event_for(ifl, edge.label, cycle));
            out.labels.push(edge.label);
            state = edge.dst;
        }
    }
    if out.walk_starts.last() == Some(&out.events.len()) {
        out.walk_starts.pop();
    }
    Ok(out)
}

fn event_for(ifl: &InterleavedFlow, label: Label, cycle: u64) -> TraceEvent {
    let component = &ifl.components()[label.component];
    let def = &component.flow().messages()[label.message];
    let (src, dst) = def
        .route
        .clone()
        .unwrap_or_else(|| (component.name().to_string(), component.name().to_string()));
    TraceEvent {
        cycle,
        src,
        dst,
        message: def.name.clone(),
    }
}

pub fn generate_trace(ifl: &InterleavedFlow, length_cycles: u64, max_gap: u64, seed: u64) -> Result<Vec<TraceEvent>> {
    generate_walks(ifl, length_cycles, max_gap, seed).map(|g| g.events)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InjectionSpec {
    pub bug_id: String,
    pub sequence: Vec<String>,
    /// Occurrences per 10^5 cycles.
    pub rate: f64,
}

impl InjectionSpec {
    pub fn new<S: Into<String>>(bug_id: impl Into<String>, sequence: impl IntoIterator<Item = S>, rate: f64) -> Self {
        Self {
            bug_id: bug_id.into(),
            sequence: sequence.into_iter().map(Into::into).collect(),
            rate,
        }
    }
}

/// Where one copy of an anomalous sequence was inserted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Splice {
    pub bug_id: String,
    /// Index of the first inserted event in the output trace.
    pub position: usize,
    pub cycle: u64,
}

/// Ground truth keyed by aggregate window index.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Labels(pub BTreeMap<u64, BTreeSet<String>>);

impl Labels {
    pub fn is_positive(&self, window: u64) -> bool {
        self.0.get(&window).is_some_and(|s| !s.is_empty())
    }
}

impl Report for Labels {
    fn csv_table(&self) -> CsvTable {
        let mut t = CsvTable::new(["window", "bug_id"]);
        for (w, bugs) in &self.0 {
            for b in bugs {
                t.push(vec![w.to_string(), b.clone()]);
            }
        }
        t
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledTrace {
    pub events: Vec<TraceEvent>,
    pub granularity: u64,
    pub labels: Labels,
    pub affected: BTreeMap<String, BTreeSet<String>>,
    pub splices: Vec<Splice>,
}

/// Insert `round(rate * span / 10^5)` copies of each anomalous sequence at
/// distinct seeded gaps between existing events, where `span` is the last
/// cycle plus one. Inserted events reuse the cycle of the event they follow,
/// so original events are untouched, and the window holding that cycle is
/// labeled with the bug.
pub fn inject(trace: &[TraceEvent], specs: &[InjectionSpec], granularity: u64, seed: u64) -> Result<LabeledTrace> {
    if granularity == 0 {
        return Err(SynthError::InvalidParameter("granularity must be at least 1".into()));
    }
    let span = trace.last().map_or(0, |e| e.cycle + 1);
    let mut counts = Vec::with_capacity(specs.len());
    for spec in specs {
        if spec.sequence.is_empty() {
            return Err(SynthError::EmptySequence(spec.bug_id.clone()));
        }
        let infeasible = |reason: &str| SynthError::InfeasibleRate {
            bug: spec.bug_id.clone(),
            rate: spec.rate,
            reason: reason.into(),
        };
        if !(spec.rate > 0.0 && spec.rate.is_finite()) {
            return Err(infeasible("rate must be positive"));
        }
        let count = (spec.rate * span as f64 / RATE_CYCLES).round() as usize;
        if count == 0 {
            return Err(infeasible("trace too short for a single occurrence"));
        }
        counts.push(count);
    }
    let total: usize = counts.iter().sum();
    if total > trace.len() {
        return Err(SynthError::InfeasibleRate {
            bug: specs.iter().map(|s| s.bug_id.as_str()).collect::<Vec<_>>().join(","),
            rate: specs.iter().map(|s| s.rate).sum(),
            reason: format!("{total} splices but only {} insertion points", trace.len()),
        });
    }

    // Gap `p` sits right after original event `p - 1`.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gaps: Vec<usize> = sample(&mut rng, trace.len(), total).into_iter().map(|p| p + 1).collect();
    let mut assigned: Vec<(usize, usize)> = Vec::with_capacity(total);
    let mut offset = 0;
    for (spec_idx, &count) in counts.iter().enumerate() {
        for &gap in &gaps[offset..offset + count] {
            assigned.push((gap, spec_idx));
        }
        offset += count;
    }
    assigned.sort_unstable();
    gaps.clear();

    let mut events = Vec::with_capacity(trace.len() + assigned.iter().map(|&(_, s)| specs[s].sequence.len()).sum::<usize>());
    let mut splices = Vec::with_capacity(total);
    let mut labels = Labels::default();
    let mut next = assigned.iter().peekable();
    for (i, e) in trace.iter().enumerate() {
        events.push(e.clone());
        while let Some(&&(gap, s)) = next.peek() {
            if gap != i + 1 {
                break;
            }
            next.next();
            let spec = &specs[s];
            splices.push(Splice {
                bug_id: spec.bug_id.clone(),
                position: events.len(),
                cycle: e.cycle,
            });
            labels
                .0
                .entry(e.cycle / granularity)
                .or_default()
                .insert(spec.bug_id.clone());
            for m in &spec.sequence {
                let (src, dst) = route_of(trace, m);
                events.push(TraceEvent {
                    cycle: e.cycle,
                    src,
                    dst,
                    message: m.clone(),
                });
            }
        }
    }

    let mut affected: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for spec in specs {
        affected
            .entry(spec.bug_id.clone())
            .or_default()
            .extend(spec.sequence.iter().cloned());
    }
    Ok(LabeledTrace {
        events,
        granularity,
        labels,
        affected,
        splices,
    })
}

fn route_of(trace: &[TraceEvent], message: &str) -> (String, String) {
    trace
        .iter()
        .find(|e| e.message == message)
        .map_or_else(|| ("unknown".into(), "unknown".into()), |e| (e.src.clone(), e.dst.clone()))
}

/// Fraction of the `total_bugs` injected bugs that affect each message.
/// Every name in `messages` appears in the result, with 0 when unaffected.
pub fn bug_coverage(
    affected: &BTreeMap<String, BTreeSet<String>>,
    total_bugs: usize,
    messages: &[String],
) -> Result<BTreeMap<String, f64>> {
    if total_bugs == 0 || affected.len() > total_bugs {
        return Err(SynthError::InvalidParameter(format!(
            "total bugs {total_bugs} must be positive and cover the {} listed bugs",
            affected.len()
        )));
    }
    let mut counts: BTreeMap<String, usize> = messages.iter().map(|m| (m.clone(), 0)).collect();
    for msgs in affected.values() {
        for m in msgs {
            *counts.entry(m.clone()).or_default() += 1;
        }
    }
    Ok(counts
        .into_iter()
        .map(|(m, c)| (m, c as f64 / total_bugs as f64))
        .collect())
}

/// Reciprocal of bug coverage: rarely affected messages are the most
/// telling when they do show up.
pub fn message_importance(coverage: f64) -> Result<f64> {
    if coverage > 0.0 && coverage.is_finite() {
        Ok(1.0 / coverage)
    } else {
        Err(SynthError::ZeroCoverage)
    }
}

/// Per-message coverage and importance, as emitted by the CLI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub total_bugs: usize,
    pub coverage: BTreeMap<String, f64>,
    pub importance: BTreeMap<String, f64>,
}

impl CoverageReport {
    pub fn new(affected: &BTreeMap<String, BTreeSet<String>>, total_bugs: usize, messages: &[String]) -> Result<Self> {
        let coverage = bug_coverage(affected, total_bugs, messages)?;
        let importance = coverage
            .iter()
            .filter_map(|(m, &c)| message_importance(c).ok().map(|i| (m.clone(), i)))
            .collect();
        Ok(Self {
            total_bugs,
            coverage,
            importance,
        })
    }
}

impl Report for CoverageReport {
    fn csv_table(&self) -> CsvTable {
        let mut t = CsvTable::new(["message", "coverage", "importance"]);
        for (m, c) in &self.coverage {
            t.push(vec![
                m.clone(),
                format_sig6(*c),
                self.importance.get(m).map(|&i| format_sig6(i)).unwrap_or_default(),
            ]);
        }
        t
    }
}
