//! Protocol flows as DAGs, indexed flow instances and the atomic-aware
//! interleaving product over them.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Upper bound on materialized product states unless the caller overrides it.
pub const DEFAULT_STATE_CAP: usize = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FlowError {
    #[error("flow `{flow}` declares no states")]
    NoStates { flow: String },
    #[error("flow `{flow}`: state `{state}` declared twice")]
    DuplicateState { flow: String, state: String },
    #[error("flow `{flow}`: unknown state `{state}`")]
    UnknownState { flow: String, state: String },
    #[error("flow `{flow}`: unknown message `{message}`")]
    UnknownMessage { flow: String, message: String },
    #[error("flow `{flow}`: message `{message}` declared twice")]
    DuplicateMessageName { flow: String, message: String },
    #[error("flow `{flow}`: message `{message}`: {reason}")]
    InvalidMessage {
        flow: String,
        message: String,
        reason: String,
    },
    #[error("flow `{flow}`: cycle through state `{state}`")]
    CycleDetected { flow: String, state: String },
    #[error("flow `{flow}`: stop state `{state}` is also atomic")]
    StopAtomicOverlap { flow: String, state: String },
    #[error("flow `{flow}`: state `{state}` {problem}")]
    DanglingState {
        flow: String,
        state: String,
        problem: Dangling,
    },
    #[error("flow index must be at least 1")]
    ZeroIndex,
    #[error("flow `{flow}` instance {index} appears more than once")]
    IllegalIndexing { flow: String, index: u32 },
    #[error("interleaving needs at least one indexed flow")]
    EmptyInterleaving,
    #[error("interleaving exceeds the cap of {cap} product states")]
    StateCapExceeded { cap: usize },
    #[error("path count does not fit in 128 bits")]
    Overflow,
    #[error("path enumeration limit must be at least 1")]
    ZeroLimit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dangling {
    Unreachable,
    CannotReachStop,
}

impl fmt::Display for Dangling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Dangling::Unreachable => f.write_str("is unreachable from the initial states"),
            Dangling::CannotReachStop => f.write_str("cannot reach a stop state"),
        }
    }
}

pub type Result<T, E = FlowError> = std::result::Result<T, E>;

/// A named bit-slice of a message that can be traced on its own.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Subgroup {
    pub name: String,
    pub width: u32,
}

/// A message label: name, traced width in bits, optional subgroups and the
/// IP pair it travels between.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MessageDef {
    pub name: String,
    pub width: u32,
    pub subgroups: Vec<Subgroup>,
    pub route: Option<(String, String)>,
}

impl MessageDef {
    pub fn new(name: impl Into<String>, width: u32) -> Self {
        Self {
            name: name.into(),
            width,
            subgroups: Vec::new(),
            route: None,
        }
    }

    pub fn with_subgroup(mut self, name: impl Into<String>, width: u32) -> Self {
        self.subgroups.push(Subgroup {
            name: name.into(),
            width,
        });
        self
    }

    pub fn with_route(mut self, src: impl Into<String>, dst: impl Into<String>) -> Self {
        self.route = Some((src.into(), dst.into()));
        self
    }

    fn check(&self) -> std::result::Result<(), String> {
        if self.width == 0 {
            return Err("width must be at least 1 bit".into());
        }
        let mut seen = HashSet::new();
        for sub in &self.subgroups {
            if !seen.insert(sub.name.as_str()) {
                return Err(format!("subgroup `{}` declared twice", sub.name));
            }
            if sub.width == 0 || sub.width >= self.width {
                return Err(format!(
                    "subgroup `{}` width {} must be in 1..{}",
                    sub.name, sub.width, self.width
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeSpec {
    pub src: String,
    pub message: String,
    pub dst: String,
}

/// Unchecked flow description, as written in a flow file or built in code.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowSpec {
    pub name: String,
    pub states: Vec<String>,
    pub initial: Vec<String>,
    pub stop: Vec<String>,
    pub atomic: Vec<String>,
    pub messages: Vec<MessageDef>,
    pub edges: Vec<EdgeSpec>,
}

impl FlowSpec {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            ..Self::default()
        }
    }

    pub fn states<I, S>(mut self, states: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.states.extend(states.into_iter().map(Into::into));
        self
    }

    pub fn initial(mut self, state: impl Into<String>) -> Self {
        self.initial.push(state.into());
        self
    }

    pub fn stop(mut self, state: impl Into<String>) -> Self {
        self.stop.push(state.into());
        self
    }

    pub fn atomic(mut self, state: impl Into<String>) -> Self {
        self.atomic.push(state.into());
        self
    }

    pub fn message(mut self, message: MessageDef) -> Self {
        self.messages.push(message);
        self
    }

    pub fn edge(
        mut self,
        src: impl Into<String>,
        message: impl Into<String>,
        dst: impl Into<String>,
    ) -> Self {
        self.edges.push(EdgeSpec {
            src: src.into(),
            message: message.into(),
            dst: dst.into(),
        });
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    pub src: usize,
    pub message: usize,
    pub dst: usize,
}

/// A validated flow. States and messages are referred to by their
/// declaration index.
#[derive(Debug, Clone, PartialEq)]
pub struct Flow {
    spec: FlowSpec,
    initial: Vec<usize>,
    is_stop: Vec<bool>,
    is_atomic: Vec<bool>,
    edges: Vec<Edge>,
    out: Vec<Vec<usize>>,
    topo: Vec<usize>,
}

/// Check every structural invariant of a flow and return it with a
/// topological order attached.
pub fn validate_flow(spec: FlowSpec) -> Result<Flow> {
    let flow = spec.name.clone();
    if spec.states.is_empty() {
        return Err(FlowError::NoStates { flow });
    }
    let mut state_ids = HashMap::new();
    for (i, s) in spec.states.iter().enumerate() {
        if state_ids.insert(s.as_str(), i).is_some() {
            return Err(FlowError::DuplicateState {
                flow,
                state: s.clone(),
            });
        }
    }
    let lookup = |s: &String| {
        state_ids
            .get(s.as_str())
            .copied()
            .ok_or_else(|| FlowError::UnknownState {
                flow: flow.clone(),
                state: s.clone(),
            })
    };
    let n = spec.states.len();
    let mut initial = spec.initial.iter().map(lookup).collect::<Result<Vec<_>>>()?;
    initial.sort_unstable();
    initial.dedup();
    let mut is_stop = vec![false; n];
    for s in &spec.stop {
        is_stop[lookup(s)?] = true;
    }
    let mut is_atomic = vec![false; n];
    for s in &spec.atomic {
        is_atomic[lookup(s)?] = true;
    }

    let mut message_ids = HashMap::new();
    for (i, m) in spec.messages.iter().enumerate() {
        if message_ids.insert(m.name.as_str(), i).is_some() {
            return Err(FlowError::DuplicateMessageName {
                flow,
                message: m.name.clone(),
            });
        }
        m.check().map_err(|reason| FlowError::InvalidMessage {
            flow: flow.clone(),
            message: m.name.clone(),
            reason,
        })?;
    }

    let mut edges = Vec::with_capacity(spec.edges.len());
    for e in &spec.edges {
        let message = *message_ids.get(e.message.as_str()).ok_or_else(|| {
            FlowError::UnknownMessage {
                flow: flow.clone(),
                message: e.message.clone(),
            }
        })?;
        edges.push(Edge {
            src: lookup(&e.src)?,
            message,
            dst: lookup(&e.dst)?,
        });
    }
    // The transition relation is a set.
    let mut seen = HashSet::new();
    edges.retain(|e| seen.insert(*e));

    if let Some(s) = (0..n).find(|&s| is_stop[s] && is_atomic[s]) {
        return Err(FlowError::StopAtomicOverlap {
            flow,
            state: spec.states[s].clone(),
        });
    }

    let mut out = vec![Vec::new(); n];
    let mut indegree = vec![0usize; n];
    for (i, e) in edges.iter().enumerate() {
        out[e.src].push(i);
        indegree[e.dst] += 1;
    }

    // Kahn; leftovers lie on or behind a cycle.
    let mut queue: VecDeque<usize> = (0..n).filter(|&s| indegree[s] == 0).collect();
    let mut topo = Vec::with_capacity(n);
    while let Some(s) = queue.pop_front() {
        topo.push(s);
        for &ei in &out[s] {
            let d = edges[ei].dst;
            indegree[d] -= 1;
            if indegree[d] == 0 {
                queue.push_back(d);
            }
        }
    }
    if topo.len() < n {
        let on_cycle = (0..n).find(|&s| indegree[s] > 0).unwrap_or(0);
        return Err(FlowError::CycleDetected {
            flow,
            state: spec.states[on_cycle].clone(),
        });
    }

    let mut reached = vec![false; n];
    let mut stack = initial.clone();
    while let Some(s) = stack.pop() {
        if !std::mem::replace(&mut reached[s], true) {
            stack.extend(out[s].iter().map(|&ei| edges[ei].dst));
        }
    }
    if let Some(s) = (0..n).find(|&s| !reached[s]) {
        return Err(FlowError::DanglingState {
            flow,
            state: spec.states[s].clone(),
            problem: Dangling::Unreachable,
        });
    }
    let mut reaches_stop = is_stop.clone();
    for &s in topo.iter().rev() {
        if out[s].iter().any(|&ei| reaches_stop[edges[ei].dst]) {
            reaches_stop[s] = true;
        }
    }
    if let Some(s) = (0..n).find(|&s| !reaches_stop[s]) {
        return Err(FlowError::DanglingState {
            flow,
            state: spec.states[s].clone(),
            problem: Dangling::CannotReachStop,
        });
    }

    Ok(Flow {
        spec,
        initial,
        is_stop,
        is_atomic,
        edges,
        out,
        topo,
    })
}

impl Flow {
    pub fn name(&self) -> &str {
        &self.spec.name
    }

    pub fn spec(&self) -> &FlowSpec {
        &self.spec
    }

    pub fn state_count(&self) -> usize {
        self.spec.states.len()
    }

    pub fn state_name(&self, id: usize) -> &str {
        &self.spec.states[id]
    }

    pub fn state_id(&self, name: &str) -> Option<usize> {
        self.spec.states.iter().position(|s| s == name)
    }

    pub fn messages(&self) -> &[MessageDef] {
        &self.spec.messages
    }

    pub fn message_id(&self, name: &str) -> Option<usize> {
        self.spec.messages.iter().position(|m| m.name == name)
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn initial_states(&self) -> &[usize] {
        &self.initial
    }

    pub fn is_stop(&self, state: usize) -> bool {
        self.is_stop[state]
    }

    pub fn is_atomic(&self, state: usize) -> bool {
        self.is_atomic[state]
    }

    pub fn topological_order(&self) -> &[usize] {
        &self.topo
    }

    /// Outgoing edge indices of `state`, in declaration order.
    pub fn outgoing(&self, state: usize) -> impl Iterator<Item = &Edge> {
        self.out[state].iter().map(|&ei| &self.edges[ei])
    }

    /// Names of the states entered by `message`; empty for unknown messages.
    pub fn visible_states(&self, message: &str) -> BTreeSet<&str> {
        let Some(m) = self.message_id(message) else {
            return BTreeSet::new();
        };
        self.edges
            .iter()
            .filter(|e| e.message == m)
            .map(|e| self.state_name(e.dst))
            .collect()
    }
}

/// One instance of a flow, tagged with an instance number.
#[derive(Debug, Clone)]
pub struct IndexedFlow {
    flow: Arc<Flow>,
    index: u32,
}

pub fn index_flow(flow: Arc<Flow>, index: u32) -> Result<IndexedFlow> {
    if index == 0 {
        return Err(FlowError::ZeroIndex);
    }
    Ok(IndexedFlow { flow, index })
}

impl IndexedFlow {
    pub fn flow(&self) -> &Flow {
        &self.flow
    }

    pub fn name(&self) -> &str {
        self.flow.name()
    }

    pub fn index(&self) -> u32 {
        self.index
    }

    pub fn indexed_messages(&self) -> Vec<IndexedMessage> {
        self.flow
            .messages()
            .iter()
            .map(|m| IndexedMessage::new(self.name(), self.index, &m.name))
            .collect()
    }
}

/// A message of one particular flow instance. Displays as `index:message`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct IndexedMessage {
    pub flow: String,
    pub index: u32,
    pub message: String,
}

impl IndexedMessage {
    pub fn new(flow: impl Into<String>, index: u32, message: impl Into<String>) -> Self {
        Self {
            flow: flow.into(),
            index,
            message: message.into(),
        }
    }
}

impl fmt::Display for IndexedMessage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.index, self.message)
    }
}

/// Label sequence of an execution path.
pub type ExecutionTrace = Vec<IndexedMessage>;

/// Compact reference to an indexed message inside an interleaving:
/// component position plus message id within that component's flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Label {
    pub component: usize,
    pub message: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ProductEdge {
    pub src: usize,
    pub label: Label,
    pub dst: usize,
}

/// Product DAG of several indexed flows in which at most one component
/// occupies an atomic state at any time.
#[derive(Debug, Clone)]
pub struct InterleavedFlow {
    components: Vec<IndexedFlow>,
    states: Vec<Box<[u32]>>,
    initial: Vec<usize>,
    is_stop: Vec<bool>,
    edges: Vec<ProductEdge>,
    out_start: Vec<usize>,
    topo: Vec<usize>,
}

/// Build the interleaving of `flows`, exploring forward from the initial
/// tuples only.
///
/// A component may advance only while no other component sits in one of
/// its atomic states. Components are ordered by `(flow name, index)` so the
/// result does not depend on the order of `flows`.
pub fn interleave(mut flows: Vec<IndexedFlow>, state_cap: usize) -> Result<InterleavedFlow> {
    if flows.is_empty() {
        return Err(FlowError::EmptyInterleaving);
    }
    flows.sort_by(|a, b| (a.name(), a.index).cmp(&(b.name(), b.index)));
    for pair in flows.windows(2) {
        if pair[0].name() == pair[1].name() && pair[0].index == pair[1].index {
            return Err(FlowError::IllegalIndexing {
                flow: pair[0].name().to_string(),
                index: pair[0].index,
            });
        }
    }

    let atomic_count = |t: &[u32]| {
        t.iter()
            .zip(&flows)
            .filter(|(&s, f)| f.flow.is_atomic(s as usize))
            .count()
    };

    let mut ids: HashMap<Box<[u32]>, usize> = HashMap::new();
    let mut found: Vec<Box<[u32]>> = Vec::new();
    let mut raw_initial = Vec::new();
    let mut tuple = vec![0u32; flows.len()];
    cartesian(&flows, 0, &mut tuple, &mut |t| {
        if atomic_count(t) <= 1 {
            let key: Box<[u32]> = t.into();
            if !ids.contains_key(&key) {
                ids.insert(key.clone(), found.len());
                raw_initial.push(found.len());
                found.push(key);
            }
        }
    });
    if found.len() > state_cap {
        return Err(FlowError::StateCapExceeded { cap: state_cap });
    }

    let mut raw_edges = Vec::new();
    let mut next = 0;
    while next < found.len() {
        let src = found[next].clone();
        for (j, comp) in flows.iter().enumerate() {
            let blocked = src
                .iter()
                .zip(&flows)
                .enumerate()
                .any(|(i, (&s, f))| i != j && f.flow.is_atomic(s as usize));
            if blocked {
                continue;
            }
            for e in comp.flow.outgoing(src[j] as usize) {
                let mut dst = src.clone();
                dst[j] = e.dst as u32;
                let dst_id = match ids.get(&dst) {
                    Some(&id) => id,
                    None => {
                        if found.len() == state_cap {
                            return Err(FlowError::StateCapExceeded { cap: state_cap });
                        }
                        ids.insert(dst.clone(), found.len());
                        found.push(dst);
                        found.len() - 1
                    }
                };
                raw_edges.push((
                    next,
                    Label {
                        component: j,
                        message: e.message,
                    },
                    dst_id,
                ));
            }
        }
        next += 1;
    }

    // Renumber states in lexicographic tuple order.
    let mut order: Vec<usize> = (0..found.len()).collect();
    order.sort_by(|&a, &b| found[a].cmp(&found[b]));
    let mut remap = vec![0; found.len()];
    for (new, &old) in order.iter().enumerate() {
        remap[old] = new;
    }
    let states: Vec<Box<[u32]>> = order.iter().map(|&old| found[old].clone()).collect();
    let mut initial: Vec<usize> = raw_initial.iter().map(|&s| remap[s]).collect();
    initial.sort_unstable();
    let is_stop = states
        .iter()
        .map(|t| t.iter().zip(&flows).all(|(&s, f)| f.flow.is_stop(s as usize)))
        .collect();
    let mut edges: Vec<ProductEdge> = raw_edges
        .into_iter()
        .map(|(s, label, d)| ProductEdge {
            src: remap[s],
            label,
            dst: remap[d],
        })
        .collect();
    edges.sort();

    let mut out_start = vec![0; states.len() + 1];
    for e in &edges {
        out_start[e.src + 1] += 1;
    }
    for i in 0..states.len() {
        out_start[i + 1] += out_start[i];
    }

    let topo = topological_order(states.len(), &edges, &out_start);

    Ok(InterleavedFlow {
        components: flows,
        states,
        initial,
        is_stop,
        edges,
        out_start,
        topo,
    })
}

fn cartesian(flows: &[IndexedFlow], depth: usize, tuple: &mut Vec<u32>, f: &mut impl FnMut(&[u32])) {
    if depth == flows.len() {
        f(tuple);
        return;
    }
    for &s in flows[depth].flow.initial_states() {
        tuple[depth] = s as u32;
        cartesian(flows, depth + 1, tuple, f);
    }
}

fn topological_order(n: usize, edges: &[ProductEdge], out_start: &[usize]) -> Vec<usize> {
    let mut indegree = vec![0usize; n];
    for e in edges {
        indegree[e.dst] += 1;
    }
    let mut queue: VecDeque<usize> = (0..n).filter(|&s| indegree[s] == 0).collect();
    let mut topo = Vec::with_capacity(n);
    while let Some(s) = queue.pop_front() {
        topo.push(s);
        for e in &edges[out_start[s]..out_start[s + 1]] {
            indegree[e.dst] -= 1;
            if indegree[e.dst] == 0 {
                queue.push_back(e.dst);
            }
        }
    }
    topo
}

/// Complete paths (as edge indices) produced by [`InterleavedFlow::enumerate_paths`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathEnumeration {
    pub paths: Vec<Vec<usize>>,
    pub truncated: bool,
}

impl InterleavedFlow {
    pub fn components(&self) -> &[IndexedFlow] {
        &self.components
    }

    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    /// Per-component state ids of product state `id`.
    pub fn state(&self, id: usize) -> &[u32] {
        &self.states[id]
    }

    pub fn state_id(&self, tuple: &[u32]) -> Option<usize> {
        self.states.binary_search_by(|s| (**s).cmp(tuple)).ok()
    }

    /// Human-readable tuple such as `(GntW#1, Init#2)`.
    pub fn describe_state(&self, id: usize) -> String {
        let parts: Vec<String> = self.states[id]
            .iter()
            .zip(&self.components)
            .map(|(&s, c)| format!("{}#{}", c.flow.state_name(s as usize), c.index))
            .collect();
        format!("({})", parts.join(", "))
    }

    pub fn initial_states(&self) -> &[usize] {
        &self.initial
    }

    pub fn is_stop(&self, id: usize) -> bool {
        self.is_stop[id]
    }

    /// Component sitting in an atomic state, if any.
    pub fn atomic_component(&self, id: usize) -> Option<usize> {
        self.states[id]
            .iter()
            .zip(&self.components)
            .position(|(&s, c)| c.flow.is_atomic(s as usize))
    }

    pub fn edges(&self) -> &[ProductEdge] {
        &self.edges
    }

    pub fn outgoing(&self, id: usize) -> &[ProductEdge] {
        &self.edges[self.out_start[id]..self.out_start[id + 1]]
    }

    pub fn topological_order(&self) -> &[usize] {
        &self.topo
    }

    pub fn resolve(&self, label: Label) -> IndexedMessage {
        let c = &self.components[label.component];
        IndexedMessage::new(c.name(), c.index, &c.flow.messages()[label.message].name)
    }

    pub fn label_of(&self, message: &IndexedMessage) -> Option<Label> {
        let component = self
            .components
            .iter()
            .position(|c| c.name() == message.flow && c.index == message.index)?;
        let id = self.components[component].flow.message_id(&message.message)?;
        Some(Label {
            component,
            message: id,
        })
    }

    /// Labels of every indexed instance of the base message `name`.
    pub fn instances_of(&self, name: &str) -> Vec<Label> {
        self.components
            .iter()
            .enumerate()
            .filter_map(|(component, c)| {
                c.flow.message_id(name).map(|message| Label { component, message })
            })
            .collect()
    }

    /// Distinct base message definitions across components, first
    /// declaration wins.
    pub fn base_messages(&self) -> Vec<&MessageDef> {
        let mut seen = HashSet::new();
        self.components
            .iter()
            .flat_map(|c| c.flow.messages())
            .filter(|m| seen.insert(m.name.as_str()))
            .collect()
    }

    /// Exact number of initial-to-stop paths.
    pub fn count_paths(&self) -> Result<u128> {
        let to_stop = self.paths_to_stop()?;
        self.initial
            .iter()
            .try_fold(0u128, |acc, &s| acc.checked_add(to_stop[s]))
            .ok_or(FlowError::Overflow)
    }

    fn paths_to_stop(&self) -> Result<Vec<u128>> {
        let mut count = vec![0u128; self.states.len()];
        for &s in self.topo.iter().rev() {
            let mut c = u128::from(self.is_stop[s]);
            for e in self.outgoing(s) {
                c = c.checked_add(count[e.dst]).ok_or(FlowError::Overflow)?;
            }
            count[s] = c;
        }
        Ok(count)
    }

    /// First `limit` complete paths in lexicographic edge order. A path
    /// ending at a stop state precedes its own extensions.
    pub fn enumerate_paths(&self, limit: usize) -> Result<PathEnumeration> {
        if limit == 0 {
            return Err(FlowError::ZeroLimit);
        }
        let mut result = PathEnumeration {
            paths: Vec::new(),
            truncated: false,
        };
        let mut path = Vec::new();
        for &s in &self.initial {
            if !self.dfs(s, &mut path, limit, &mut result) {
                break;
            }
        }
        Ok(result)
    }

    fn dfs(&self, s: usize, path: &mut Vec<usize>, limit: usize, acc: &mut PathEnumeration) -> bool {
        if self.is_stop[s] {
            if acc.paths.len() == limit {
                acc.truncated = true;
                return false;
            }
            acc.paths.push(path.clone());
        }
        for ei in self.out_start[s]..self.out_start[s + 1] {
            path.push(ei);
            let go_on = self.dfs(self.edges[ei].dst, path, limit, acc);
            path.pop();
            if !go_on {
                return false;
            }
        }
        true
    }

    pub fn trace(&self, path: &[usize]) -> ExecutionTrace {
        path.iter().map(|&ei| self.resolve(self.edges[ei].label)).collect()
    }

    /// Enumerate up to `limit` execution traces.
    pub fn enumerate_traces(&self, limit: usize) -> Result<(Vec<ExecutionTrace>, bool)> {
        let e = self.enumerate_paths(limit)?;
        Ok((e.paths.iter().map(|p| self.trace(p)).collect(), e.truncated))
    }

    /// Product states entered by any of `labels`.
    pub fn visible_states(&self, labels: &[Label]) -> BTreeSet<usize> {
        let wanted: HashSet<Label> = labels.iter().copied().collect();
        self.edges
            .iter()
            .filter(|e| wanted.contains(&e.label))
            .map(|e| e.dst)
            .collect()
    }

    /// Number of complete paths whose label sequence, restricted to
    /// `tracked`, starts with `observed`.
    pub fn count_consistent_paths(&self, tracked: &HashSet<Label>, observed: &[Label]) -> Result<u128> {
        let m = observed.len();
        let n = self.states.len();
        // table[s * (m + 1) + j]: paths from s to a stop state that complete
        // the match when j observed labels have been consumed.
        let mut table = vec![0u128; n * (m + 1)];
        for &s in self.topo.iter().rev() {
            for j in 0..=m {
                let mut c = u128::from(self.is_stop[s] && j == m);
                for e in self.outgoing(s) {
                    let next = if !tracked.contains(&e.label) || j == m {
                        Some(j)
                    } else if e.label == observed[j] {
                        Some(j + 1)
                    } else {
                        None
                    };
                    if let Some(nj) = next {
                        c = c
                            .checked_add(table[e.dst * (m + 1) + nj])
                            .ok_or(FlowError::Overflow)?;
                    }
                }
                table[s * (m + 1) + j] = c;
            }
        }
        self.initial
            .iter()
            .try_fold(0u128, |acc, &s| acc.checked_add(table[s * (m + 1)]))
            .ok_or(FlowError::Overflow)
    }

    /// Instance indices per flow name.
    pub fn instances_by_flow(&self) -> BTreeMap<&str, Vec<u32>> {
        let mut map: BTreeMap<&str, Vec<u32>> = BTreeMap::new();
        for c in &self.components {
            map.entry(c.name()).or_default().push(c.index);
        }
        map
    }
}
