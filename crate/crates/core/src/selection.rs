//! Message selection: width-feasible combinations scored by mutual
//! information over an interleaved flow, greedy packing of leftover
//! buffer bits, and the coverage metrics used to judge a selection.
//!
//! Mutual information is reported in nats. With `p(x) = 1/|S|`,
//! `p(y) = n(y)/|E|` and `p(x|y) = n(y→x)/n(y)` each summand reduces to
//! `n(y→x)/|E| · ln(n(y→x)·|S| / n(y))`, summed over every indexed instance
//! of every combination member.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::sync::Arc;

use thiserror::Error;

use crate::flow::{
    index_flow, interleave, Flow, FlowError, IndexedFlow, IndexedMessage, InterleavedFlow, Label,
    MessageDef,
};

/// Largest message set `enumerate_combinations` will expand.
pub const MAX_MESSAGES: usize = 24;

const TIE_EPS: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SelectionError {
    #[error("trace buffer width must be at least 1 bit")]
    ZeroWidth,
    #[error("{count} messages exceed the enumeration cap of {MAX_MESSAGES}")]
    TooManyMessages { count: usize },
    #[error("message `{0}` listed twice")]
    DuplicateMessage(String),
    #[error("message `{0}` is not part of the interleaved flow")]
    UnknownMessage(String),
    #[error("message `{name}` declared with widths {first} and {second}")]
    ConflictingWidth { name: String, first: u32, second: u32 },
    #[error("interleaved flow has no edges")]
    EmptyInterleaving,
    #[error("no message fits in a {width}-bit trace buffer")]
    NoFeasibleCombination { width: u32 },
    #[error("selection uses {used} bits of a {width}-bit buffer")]
    Overfull { used: u32, width: u32 },
    #[error("observed message `{0}` is not traced by the combination")]
    UntrackedObservation(String),
    #[error(transparent)]
    Flow(#[from] FlowError),
}

pub type Result<T, E = SelectionError> = std::result::Result<T, E>;

/// A flow together with how many concurrent instances a usage scenario runs.
#[derive(Debug, Clone)]
pub struct ScenarioFlow {
    pub flow: Arc<Flow>,
    pub instances: u32,
}

/// A usage scenario: participating flows and the trace buffer width.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub flows: Vec<ScenarioFlow>,
    pub buffer_width: u32,
}

impl Scenario {
    /// Instances `1..=n` of every participating flow.
    pub fn indexed_flows(&self) -> Result<Vec<IndexedFlow>> {
        let mut out = Vec::new();
        for f in &self.flows {
            for i in 1..=f.instances {
                out.push(index_flow(f.flow.clone(), i)?);
            }
        }
        Ok(out)
    }

    pub fn interleave(&self, state_cap: usize) -> Result<InterleavedFlow> {
        Ok(interleave(self.indexed_flows()?, state_cap)?)
    }

    /// Base messages of all flows, in declaration order, merged by name.
    pub fn messages(&self) -> Result<Vec<MessageDef>> {
        let mut out: Vec<MessageDef> = Vec::new();
        for f in &self.flows {
            for m in f.flow.messages() {
                match out.iter().find(|o| o.name == m.name) {
                    Some(o) if o.width != m.width => {
                        return Err(SelectionError::ConflictingWidth {
                            name: m.name.clone(),
                            first: o.width,
                            second: m.width,
                        })
                    }
                    Some(_) => {}
                    None => out.push(m.clone()),
                }
            }
        }
        Ok(out)
    }
}

/// An unordered set of base messages with its summed bit width.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MessageCombination {
    messages: Vec<String>,
    total_width: u32,
}

impl MessageCombination {
    /// Build from definitions; names are kept sorted.
    pub fn new<'a>(members: impl IntoIterator<Item = &'a MessageDef>) -> Result<Self> {
        let mut messages = Vec::new();
        let mut total_width = 0;
        for m in members {
            messages.push(m.name.clone());
            total_width += m.width;
        }
        messages.sort();
        if let Some(w) = messages.windows(2).find(|w| w[0] == w[1]) {
            return Err(SelectionError::DuplicateMessage(w[0].clone()));
        }
        Ok(Self {
            messages,
            total_width,
        })
    }

    pub fn empty() -> Self {
        Self {
            messages: Vec::new(),
            total_width: 0,
        }
    }

    pub fn messages(&self) -> &[String] {
        &self.messages
    }

    pub fn total_width(&self) -> u32 {
        self.total_width
    }

    pub fn len(&self) -> usize {
        self.messages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.messages.is_empty()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.messages.binary_search_by(|m| m.as_str().cmp(name)).is_ok()
    }
}

/// Every non-empty subset of `messages` whose total width fits in `width`,
/// largest subsets first, then by member names.
pub fn enumerate_combinations(messages: &[MessageDef], width: u32) -> Result<Vec<MessageCombination>> {
    if width == 0 {
        return Err(SelectionError::ZeroWidth);
    }
    if messages.len() > MAX_MESSAGES {
        return Err(SelectionError::TooManyMessages {
            count: messages.len(),
        });
    }
    MessageCombination::new(messages)?;
    let mut combos = Vec::new();
    for mask in 1u32..(1u32 << messages.len()) {
        let total: u64 = member_ids(mask)
            .map(|i| u64::from(messages[i].width))
            .sum();
        if total <= u64::from(width) {
            combos.push(MessageCombination::new(member_ids(mask).map(|i| &messages[i]))?);
        }
    }
    combos.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.messages.cmp(&b.messages)));
    Ok(combos)
}

fn member_ids(mask: u32) -> impl Iterator<Item = usize> {
    (0..32).filter(move |i| mask & (1 << i) != 0)
}

/// Edge occurrence counts of an interleaved flow.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EdgeStatistics {
    /// Total labeled edges, `|E|`.
    pub total: usize,
    /// `n(y)` per indexed message.
    pub per_label: BTreeMap<Label, usize>,
    /// `n(y→x)` per indexed message and destination state.
    pub per_destination: BTreeMap<(Label, usize), usize>,
}

pub fn edge_statistics(ifl: &InterleavedFlow) -> EdgeStatistics {
    let mut stats = EdgeStatistics {
        total: ifl.edges().len(),
        ..EdgeStatistics::default()
    };
    for e in ifl.edges() {
        *stats.per_label.entry(e.label).or_default() += 1;
        *stats.per_destination.entry((e.label, e.dst)).or_default() += 1;
    }
    stats
}

fn label_information(stats: &EdgeStatistics, states: usize, label: Label) -> f64 {
    let Some(&n_y) = stats.per_label.get(&label) else {
        return 0.0;
    };
    let total = stats.total as f64;
    stats
        .per_destination
        .range((label, 0)..=(label, usize::MAX))
        .map(|(_, &n_yx)| {
            let n_yx = n_yx as f64;
            n_yx / total * (n_yx * states as f64 / n_y as f64).ln()
        })
        .sum()
}

fn labels_for(ifl: &InterleavedFlow, name: &str) -> Result<Vec<Label>> {
    let labels = ifl.instances_of(name);
    if labels.is_empty() {
        return Err(SelectionError::UnknownMessage(name.to_string()));
    }
    Ok(labels)
}

/// Mutual information (nats) between the interleaved-flow state and the
/// indexed instances of the combination's messages.
pub fn mutual_information_gain(ifl: &InterleavedFlow, combo: &MessageCombination) -> Result<f64> {
    if combo.is_empty() {
        return Ok(0.0);
    }
    if ifl.edges().is_empty() {
        return Err(SelectionError::EmptyInterleaving);
    }
    let stats = edge_statistics(ifl);
    let mut mi = 0.0;
    for name in combo.messages() {
        for label in labels_for(ifl, name)? {
            mi += label_information(&stats, ifl.state_count(), label);
        }
    }
    Ok(mi)
}

/// Fraction of interleaved-flow states entered by some indexed instance of
/// a combination member.
pub fn flow_spec_coverage(ifl: &InterleavedFlow, combo: &MessageCombination) -> Result<f64> {
    let mut labels = Vec::new();
    for name in combo.messages() {
        labels.extend(labels_for(ifl, name)?);
    }
    Ok(ifl.visible_states(&labels).len() as f64 / ifl.state_count() as f64)
}

pub fn utilization(used_bits: u32, width: u32) -> Result<f64> {
    if width == 0 {
        return Err(SelectionError::ZeroWidth);
    }
    if used_bits > width {
        return Err(SelectionError::Overfull {
            used: used_bits,
            width,
        });
    }
    Ok(f64::from(used_bits) / f64::from(width))
}

/// A message or subgroup packed into leftover buffer bits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PackedGroup {
    /// `parent.subgroup`, or the message name when packed whole.
    pub name: String,
    pub parent: String,
    pub width: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    pub combination: MessageCombination,
    pub packed: Vec<PackedGroup>,
    pub mi_gain: f64,
    pub fcov: f64,
    pub utilization: f64,
}

impl SelectionResult {
    pub fn used_bits(&self) -> u32 {
        self.combination.total_width() + self.packed.iter().map(|p| p.width).sum::<u32>()
    }

    /// Base messages whose indexed instances the trace observes: selected
    /// members plus the parents of packed groups.
    pub fn observed_messages(&self) -> BTreeSet<&str> {
        self.combination
            .messages()
            .iter()
            .map(String::as_str)
            .chain(self.packed.iter().map(|p| p.parent.as_str()))
            .collect()
    }
}

/// Per-message information and visibility, precomputed so that scoring a
/// combination is a sum plus a bitset union.
struct Scorer {
    ids: HashMap<String, usize>,
    information: Vec<f64>,
    visible: Vec<Vec<u64>>,
    states: usize,
}

impl Scorer {
    fn new(ifl: &InterleavedFlow, messages: &[MessageDef]) -> Result<Self> {
        if ifl.edges().is_empty() {
            return Err(SelectionError::EmptyInterleaving);
        }
        let stats = edge_statistics(ifl);
        let states = ifl.state_count();
        let words = states.div_ceil(64);
        let mut scorer = Scorer {
            ids: HashMap::new(),
            information: Vec::new(),
            visible: Vec::new(),
            states,
        };
        for (i, m) in messages.iter().enumerate() {
            let labels = labels_for(ifl, &m.name)?;
            let mut bits = vec![0u64; words];
            for s in ifl.visible_states(&labels) {
                bits[s / 64] |= 1 << (s % 64);
            }
            scorer.ids.insert(m.name.clone(), i);
            scorer.information.push(
                labels
                    .iter()
                    .map(|&l| label_information(&stats, states, l))
                    .sum(),
            );
            scorer.visible.push(bits);
        }
        Ok(scorer)
    }

    fn id(&self, name: &str) -> Result<usize> {
        self.ids
            .get(name)
            .copied()
            .ok_or_else(|| SelectionError::UnknownMessage(name.to_string()))
    }

    fn score(&self, ids: &BTreeSet<usize>) -> (f64, f64) {
        let mi = ids.iter().map(|&i| self.information[i]).sum();
        let mut union = vec![0u64; self.visible.first().map_or(0, Vec::len)];
        for &i in ids {
            for (u, v) in union.iter_mut().zip(&self.visible[i]) {
                *u |= v;
            }
        }
        let covered: u32 = union.iter().map(|w| w.count_ones()).sum();
        (mi, f64::from(covered) / self.states as f64)
    }
}

fn nearly_equal(a: f64, b: f64) -> bool {
    (a - b).abs() <= TIE_EPS * a.abs().max(b.abs()).max(1.0)
}

fn cmp_desc(a: f64, b: f64) -> Ordering {
    if nearly_equal(a, b) {
        Ordering::Equal
    } else {
        b.total_cmp(&a)
    }
}

/// Pick the width-feasible combination with the highest information gain.
///
/// Ties go to higher coverage, then smaller total width, then the
/// combination whose members were declared earliest in `messages`.
pub fn select_messages(
    ifl: &InterleavedFlow,
    messages: &[MessageDef],
    width: u32,
) -> Result<SelectionResult> {
    let combos = enumerate_combinations(messages, width)?;
    if combos.is_empty() {
        return Err(SelectionError::NoFeasibleCombination { width });
    }
    let scorer = Scorer::new(ifl, messages)?;
    let mut best: Option<(MessageCombination, Vec<usize>, f64, f64)> = None;
    for combo in combos {
        let ids: BTreeSet<usize> = combo
            .messages()
            .iter()
            .map(|n| scorer.id(n))
            .collect::<Result<_>>()?;
        let (mi, fcov) = scorer.score(&ids);
        let rank: Vec<usize> = ids.into_iter().collect();
        let better = match &best {
            None => true,
            Some((b, b_rank, b_mi, b_fcov)) => cmp_desc(mi, *b_mi)
                .then_with(|| cmp_desc(fcov, *b_fcov))
                .then_with(|| combo.total_width().cmp(&b.total_width()))
                .then_with(|| rank.cmp(b_rank))
                .is_lt(),
        };
        if better {
            best = Some((combo, rank, mi, fcov));
        }
    }
    let (combination, _, mi_gain, fcov) = best.expect("at least one combination");
    let utilization = utilization(combination.total_width(), width)?;
    Ok(SelectionResult {
        combination,
        packed: Vec::new(),
        mi_gain,
        fcov,
        utilization,
    })
}

/// Greedily fill leftover buffer bits with subgroups of unselected messages
/// or whole unselected messages, each round taking the candidate that
/// maximizes the gain of the enlarged selection.
///
/// A packed subgroup is scored through its parent's edge occurrences.
/// Ties prefer the wider candidate, then the lexicographically first name.
pub fn pack_buffer(
    ifl: &InterleavedFlow,
    selected: &SelectionResult,
    messages: &[MessageDef],
    width: u32,
) -> Result<SelectionResult> {
    let scorer = Scorer::new(ifl, messages)?;
    let mut used = selected.used_bits();
    if used > width {
        return Err(SelectionError::Overfull { used, width });
    }
    let mut packed = selected.packed.clone();
    let mut observed: BTreeSet<usize> = selected
        .observed_messages()
        .into_iter()
        .map(|n| scorer.id(n))
        .collect::<Result<_>>()?;

    loop {
        let leftover = width - used;
        let mut best: Option<(PackedGroup, usize, f64)> = None;
        for m in messages {
            if selected.combination.contains(&m.name) {
                continue;
            }
            let parent_id = scorer.id(&m.name)?;
            let touched = packed.iter().any(|p| p.parent == m.name);
            let mut candidates = Vec::new();
            if !touched && m.width <= leftover {
                candidates.push(PackedGroup {
                    name: m.name.clone(),
                    parent: m.name.clone(),
                    width: m.width,
                });
            }
            let whole = packed.iter().any(|p| p.parent == m.name && p.name == m.name);
            if !whole {
                for sub in &m.subgroups {
                    let name = format!("{}.{}", m.name, sub.name);
                    if sub.width <= leftover && !packed.iter().any(|p| p.name == name) {
                        candidates.push(PackedGroup {
                            name,
                            parent: m.name.clone(),
                            width: sub.width,
                        });
                    }
                }
            }
            for group in candidates {
                let mut ids = observed.clone();
                ids.insert(parent_id);
                let (mi, _) = scorer.score(&ids);
                let better = match &best {
                    None => true,
                    Some((b, _, b_mi)) => cmp_desc(mi, *b_mi)
                        .then_with(|| group.width.cmp(&b.width).reverse())
                        .then_with(|| group.name.cmp(&b.name))
                        .is_lt(),
                };
                if better {
                    best = Some((group, parent_id, mi));
                }
            }
        }
        let Some((group, parent_id, _)) = best else {
            break;
        };
        used += group.width;
        observed.insert(parent_id);
        packed.push(group);
    }

    let (mi_gain, fcov) = scorer.score(&observed);
    Ok(SelectionResult {
        combination: selected.combination.clone(),
        packed,
        mi_gain,
        fcov,
        utilization: utilization(used, width)?,
    })
}

/// Run selection followed by packing.
pub fn select_and_pack(
    ifl: &InterleavedFlow,
    messages: &[MessageDef],
    width: u32,
) -> Result<SelectionResult> {
    let selected = select_messages(ifl, messages, width)?;
    pack_buffer(ifl, &selected, messages, width)
}

/// How observed instance indices are matched against path labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IndexMatching {
    /// Indices must match literally.
    Exact,
    /// Instance tags are arbitrary names: a path is consistent if some
    /// renaming of the observed indices within each flow makes it match.
    #[default]
    UpToRenaming,
}

/// Number of complete paths whose label sequence, restricted to the
/// combination's indexed messages, begins with `observed`.
pub fn consistent_path_count(
    ifl: &InterleavedFlow,
    combo: &MessageCombination,
    observed: &[IndexedMessage],
    matching: IndexMatching,
) -> Result<u128> {
    let mut tracked = HashSet::new();
    for name in combo.messages() {
        tracked.extend(labels_for(ifl, name)?);
    }
    for m in observed {
        if !combo.contains(&m.message) || ifl.label_of(m).is_none() {
            return Err(SelectionError::UntrackedObservation(m.to_string()));
        }
    }
    let renamings = match matching {
        IndexMatching::Exact => vec![observed.to_vec()],
        IndexMatching::UpToRenaming => renamings(ifl, observed),
    };
    let mut total = 0u128;
    for seq in renamings {
        let labels: Vec<Label> = seq
            .iter()
            .map(|m| ifl.label_of(m).expect("renamed onto existing instances"))
            .collect();
        total = total
            .checked_add(ifl.count_consistent_paths(&tracked, &labels)?)
            .ok_or(FlowError::Overflow)?;
    }
    Ok(total)
}

/// Fraction of all complete paths consistent with `observed`.
pub fn path_localization(
    ifl: &InterleavedFlow,
    combo: &MessageCombination,
    observed: &[IndexedMessage],
    matching: IndexMatching,
) -> Result<f64> {
    let consistent = consistent_path_count(ifl, combo, observed, matching)?;
    let total = ifl.count_paths()?;
    Ok(if total == 0 {
        0.0
    } else {
        consistent as f64 / total as f64
    })
}

/// Every distinct image of `observed` under injective per-flow renamings of
/// the instance indices it mentions.
fn renamings(ifl: &InterleavedFlow, observed: &[IndexedMessage]) -> Vec<Vec<IndexedMessage>> {
    let instances = ifl.instances_by_flow();
    // (flow, observed index) pairs in first-appearance order.
    let mut keys: Vec<(&str, u32)> = Vec::new();
    for m in observed {
        if !keys.contains(&(m.flow.as_str(), m.index)) {
            keys.push((m.flow.as_str(), m.index));
        }
    }
    let mut out = Vec::new();
    let mut image = vec![0u32; keys.len()];
    assign(&keys, &instances, 0, &mut image, &mut |image| {
        out.push(
            observed
                .iter()
                .map(|m| {
                    let k = keys
                        .iter()
                        .position(|&k| k == (m.flow.as_str(), m.index))
                        .expect("key recorded");
                    IndexedMessage::new(&m.flow, image[k], &m.message)
                })
                .collect(),
        );
    });
    out
}

fn assign(
    keys: &[(&str, u32)],
    instances: &BTreeMap<&str, Vec<u32>>,
    depth: usize,
    image: &mut Vec<u32>,
    emit: &mut impl FnMut(&[u32]),
) {
    if depth == keys.len() {
        emit(image);
        return;
    }
    let flow = keys[depth].0;
    for &idx in instances.get(flow).map(Vec::as_slice).unwrap_or(&[]) {
        let taken = (0..depth).any(|d| keys[d].0 == flow && image[d] == idx);
        if !taken {
            image[depth] = idx;
            assign(keys, instances, depth + 1, image, emit);
        }
    }
}
