//! Feature engineering over traced messages: k-length sliding windows,
//! g-cycle aggregates, and per-aggregate entropy and mean pairwise
//! Levenshtein distance.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::io::TraceEvent;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FeatureError {
    #[error("sequence length k must be at least 2, got {0}")]
    SequenceTooShort(usize),
    #[error("granularity must be at least 1 cycle")]
    ZeroGranularity,
}

pub type Result<T, E = FeatureError> = std::result::Result<T, E>;

/// A trace event with its IP pair and message replaced by dense indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IndexedEvent {
    pub cycle: u64,
    pub pair: usize,
    pub message: usize,
}

/// Indexed events plus the dictionaries needed to decode them.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EventIndex {
    pub events: Vec<IndexedEvent>,
    pub pairs: Vec<(String, String)>,
    pub messages: Vec<String>,
}

impl EventIndex {
    pub fn decode(&self, symbols: &[u32]) -> Vec<String> {
        symbols
            .iter()
            .map(|&s| self.messages[s as usize].clone())
            .collect()
    }
}

/// Assign indices to IP pairs and messages in first-appearance order.
pub fn index_events(events: &[TraceEvent]) -> EventIndex {
    let mut out = EventIndex::default();
    let mut pair_ids: HashMap<(&str, &str), usize> = HashMap::new();
    let mut message_ids: HashMap<&str, usize> = HashMap::new();
    for e in events {
        let pair = *pair_ids.entry((&e.src, &e.dst)).or_insert_with(|| {
            out.pairs.push((e.src.clone(), e.dst.clone()));
            out.pairs.len() - 1
        });
        let message = *message_ids.entry(&e.message).or_insert_with(|| {
            out.messages.push(e.message.clone());
            out.messages.len() - 1
        });
        out.events.push(IndexedEvent {
            cycle: e.cycle,
            pair,
            message,
        });
    }
    out
}

/// A contiguous k-length run of message indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MessageSequence {
    pub symbols: Vec<u32>,
    pub start_cycle: u64,
    pub end_cycle: u64,
}

pub fn sliding_sequences(events: &[IndexedEvent], k: usize) -> Result<Vec<MessageSequence>> {
    if k < 2 {
        return Err(FeatureError::SequenceTooShort(k));
    }
    Ok(events
        .windows(k)
        .map(|w| MessageSequence {
            symbols: w.iter().map(|e| e.message as u32).collect(),
            start_cycle: w[0].cycle,
            end_cycle: w[k - 1].cycle,
        })
        .collect())
}

/// How a sequence whose cycle span crosses a bucket edge is assigned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum WindowMembership {
    /// Every bucket the sequence's span overlaps. A sequence straddling an
    /// edge counts in both neighbours, as `ab` at cycles 80..100 does in the
    /// worked example with `g = 100`.
    #[default]
    Spanned,
    /// Only the bucket of the first event.
    FirstEvent,
}

/// Multiset of sequences falling in one g-cycle bucket.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MessageAggregate {
    pub window_index: u64,
    pub sequences: Vec<MessageSequence>,
    pub unique_counts: BTreeMap<Vec<u32>, usize>,
}

impl MessageAggregate {
    pub fn new(window_index: u64, sequences: Vec<MessageSequence>) -> Self {
        let mut unique_counts = BTreeMap::new();
        for s in &sequences {
            *unique_counts.entry(s.symbols.clone()).or_insert(0) += 1;
        }
        Self {
            window_index,
            sequences,
            unique_counts,
        }
    }

    pub fn len(&self) -> usize {
        self.sequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }
}

pub fn partition_aggregates(
    sequences: Vec<MessageSequence>,
    granularity: u64,
    membership: WindowMembership,
) -> Result<Vec<MessageAggregate>> {
    if granularity == 0 {
        return Err(FeatureError::ZeroGranularity);
    }
    let mut buckets: BTreeMap<u64, Vec<MessageSequence>> = BTreeMap::new();
    for s in sequences {
        let first = s.start_cycle / granularity;
        let last = match membership {
            WindowMembership::Spanned => s.end_cycle / granularity,
            WindowMembership::FirstEvent => first,
        };
        for w in first..last {
            buckets.entry(w).or_default().push(s.clone());
        }
        buckets.entry(last).or_default().push(s);
    }
    Ok(buckets
        .into_iter()
        .map(|(w, seqs)| MessageAggregate::new(w, seqs))
        .collect())
}

/// Shannon entropy (bits) of the aggregate's unique-sequence frequencies.
pub fn aggregate_entropy(agg: &MessageAggregate) -> f64 {
    let n = agg.len() as f64;
    if n == 0.0 {
        return 0.0;
    }
    -agg.unique_counts
        .values()
        .map(|&c| {
            let p = c as f64 / n;
            p * p.log2()
        })
        .sum::<f64>()
}

/// Edit distance with unit insertion, deletion and substitution costs.
pub fn levenshtein<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    if a.is_empty() {
        return b.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, x) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(x != y);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Mean Levenshtein distance over all unordered pairs of sequence
/// instances, duplicates included.
pub fn aggregate_mean_ldist(agg: &MessageAggregate) -> f64 {
    let n = agg.len();
    if n < 2 {
        return 0.0;
    }
    let uniques: Vec<(&Vec<u32>, usize)> = agg.unique_counts.iter().map(|(s, &c)| (s, c)).collect();
    let mut total = 0u128;
    for (i, (a, ca)) in uniques.iter().enumerate() {
        for (b, cb) in &uniques[i + 1..] {
            total += (ca * cb * levenshtein(a, b)) as u128;
        }
    }
    let pairs = (n * (n - 1) / 2) as f64;
    total as f64 / pairs
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub entropy: f64,
    pub mean_ldist: f64,
}

impl FeatureVector {
    pub fn to_vec(self) -> Vec<f64> {
        vec![self.entropy, self.mean_ldist]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureRow {
    pub window_index: u64,
    pub entropy: f64,
    pub mean_ldist: f64,
}

impl FeatureRow {
    pub fn features(&self) -> FeatureVector {
        FeatureVector {
            entropy: self.entropy,
            mean_ldist: self.mean_ldist,
        }
    }
}

pub fn feature_matrix(aggregates: &[MessageAggregate]) -> Vec<FeatureRow> {
    aggregates
        .iter()
        .map(|a| FeatureRow {
            window_index: a.window_index,
            entropy: aggregate_entropy(a),
            mean_ldist: aggregate_mean_ldist(a),
        })
        .collect()
}

/// Everything derived from one trace at a given `(k, g)`.
#[derive(Debug, Clone)]
pub struct EngineeredTrace {
    pub index: EventIndex,
    pub aggregates: Vec<MessageAggregate>,
    pub rows: Vec<FeatureRow>,
}

pub fn engineer(events: &[TraceEvent], k: usize, granularity: u64) -> Result<EngineeredTrace> {
    engineer_with(events, k, granularity, WindowMembership::default())
}

pub fn engineer_with(
    events: &[TraceEvent],
    k: usize,
    granularity: u64,
    membership: WindowMembership,
) -> Result<EngineeredTrace> {
    let index = index_events(events);
    let sequences = sliding_sequences(&index.events, k)?;
    let aggregates = partition_aggregates(sequences, granularity, membership)?;
    let rows = feature_matrix(&aggregates);
    Ok(EngineeredTrace {
        index,
        aggregates,
        rows,
    })
}

/// The three raw features of one event: cycle bucket, IP-pair index and
/// message index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawFeature {
    pub cycle_range: u64,
    pub ip_pair: usize,
    pub message: usize,
}

pub fn raw_feature_table(index: &EventIndex, cycle_bucket: u64) -> Result<Vec<RawFeature>> {
    if cycle_bucket == 0 {
        return Err(FeatureError::ZeroGranularity);
    }
    Ok(index
        .events
        .iter()
        .map(|e| RawFeature {
            cycle_range: e.cycle / cycle_bucket,
            ip_pair: e.pair,
            message: e.message,
        })
        .collect())
}
