//! Online paging and weighted-caching strategies.
//!
//! Every strategy runs under the free-initial-placement convention: servers
//! start off the graph and a server that has not yet served a request can be
//! placed on the requested node at no cost. Costs are charged on the node a
//! server leaves, `w(u)`.

mod classic;
mod greedydual;

use std::fmt;
use std::str::FromStr;

use crate::error::Error;
use crate::trace::{NodeId, RequestTrace};

pub use classic::{Balance, Fifo, Fwf, Lru, Mark};
pub use greedydual::{GreedyDual, ServerLabel};

/// How far GreedyDual lowers the labels when it must evict.
///
/// The legal shift is any `delta` in `[min L, min H]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum RelabelPolicy {
    /// `delta = min H`: lower as much as possible (LRU-like).
    #[default]
    MaxLower,
    /// `delta = min L`: lower as little as possible (Balance/FIFO-like).
    MinLower,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StrategySpec {
    Lru,
    Fifo,
    Fwf,
    Balance,
    Mark,
    GreedyDual(RelabelPolicy),
}

impl StrategySpec {
    /// At most `k` moves in any window requesting at most `k` distinct
    /// nodes, on unit weights.
    ///
    /// Mark is excluded: a window straddling a phase boundary can see `k + 1`
    /// moves (k = 2, `a b a a c a b a`).
    pub fn is_conservative(self) -> bool {
        matches!(self, Self::Lru | Self::Fifo | Self::Fwf)
    }

    /// At most `k` moves inside each k-phase, on unit weights.
    pub fn is_phase_bounded(self) -> bool {
        self.is_conservative() || self == Self::Mark
    }

    pub fn is_randomized(self) -> bool {
        matches!(self, Self::Mark)
    }
}

impl FromStr for StrategySpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "lru" => Self::Lru,
            "fifo" => Self::Fifo,
            "fwf" => Self::Fwf,
            "balance" => Self::Balance,
            "mark" => Self::Mark,
            "greedydual" | "greedydual:max" => Self::GreedyDual(RelabelPolicy::MaxLower),
            "greedydual:min" => Self::GreedyDual(RelabelPolicy::MinLower),
            other => return Err(Error::Domain(format!("unknown strategy '{other}'"))),
        })
    }
}

impl fmt::Display for StrategySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Lru => "lru",
            Self::Fifo => "fifo",
            Self::Fwf => "fwf",
            Self::Balance => "balance",
            Self::Mark => "mark",
            Self::GreedyDual(RelabelPolicy::MaxLower) => "greedydual:max",
            Self::GreedyDual(RelabelPolicy::MinLower) => "greedydual:min",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ServerId(pub u32);

/// Per-server bookkeeping. Not every strategy uses every field.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ServerState {
    pub location: Option<NodeId>,
    pub low: i64,
    pub high: i64,
    pub last_touch: usize,
    pub last_move: usize,
    /// Total weight of nodes this server has vacated.
    pub distance: u64,
    pub marked: bool,
}

impl ServerState {
    fn unplaced() -> Self {
        Self {
            location: None,
            low: 0,
            high: 0,
            last_touch: 0,
            last_move: 0,
            distance: 0,
            marked: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EventKind {
    Hit,
    /// A server that never served a request is placed at no cost.
    FreePlace,
    /// FWF only: a flushed server is put back on the graph at no cost.
    Refill,
    Move {
        evicted: NodeId,
        cost: u64,
    },
    /// FWF only: all servers leave the graph, then one is placed on the
    /// requested node.
    Flush {
        evicted: Vec<NodeId>,
        cost: u64,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Event {
    pub index: usize,
    pub node: NodeId,
    pub kind: EventKind,
}

impl Event {
    /// Number of server moves this event represents.
    pub fn moves(&self) -> usize {
        match &self.kind {
            EventKind::Move { .. } => 1,
            EventKind::Flush { evicted, .. } => evicted.len(),
            _ => 0,
        }
    }

    pub fn cost(&self) -> u64 {
        match &self.kind {
            EventKind::Move { cost, .. } | EventKind::Flush { cost, .. } => *cost,
            _ => 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimulationResult {
    pub events: Vec<Event>,
    pub total_cost: u64,
    pub k: usize,
}

impl SimulationResult {
    pub fn moves(&self) -> usize {
        self.events.iter().map(Event::moves).sum()
    }

    pub fn free_placements(&self) -> usize {
        self.events
            .iter()
            .filter(|e| e.kind == EventKind::FreePlace)
            .count()
    }

    pub fn flushes(&self) -> usize {
        self.events
            .iter()
            .filter(|e| matches!(e.kind, EventKind::Flush { .. }))
            .count()
    }
}

/// A strategy that serves one request at a time.
pub trait OnlineStrategy {
    fn serve(&mut self, index: usize, node: NodeId, trace: &RequestTrace) -> EventKind;
}

/// Drives `strategy` over `trace` and collects the event log.
pub fn simulate<S: OnlineStrategy>(
    mut strategy: S,
    k: usize,
    trace: &RequestTrace,
) -> SimulationResult {
    let mut events = Vec::with_capacity(trace.len());
    let mut total_cost = 0;
    for (index, &node) in trace.requests().iter().enumerate() {
        let kind = strategy.serve(index, node, trace);
        let ev = Event { index, node, kind };
        total_cost += ev.cost();
        events.push(ev);
    }
    SimulationResult {
        events,
        total_cost,
        k,
    }
}

/// Runs `spec` with `k` servers. `seed` only matters for Mark.
pub fn run(spec: StrategySpec, k: usize, trace: &RequestTrace, seed: u64) -> SimulationResult {
    assert!(k >= 1, "k must be positive");
    let n = trace.num_nodes();
    match spec {
        StrategySpec::Lru => simulate(Lru::new(k, n), k, trace),
        StrategySpec::Fifo => simulate(Fifo::new(k, n), k, trace),
        StrategySpec::Fwf => simulate(Fwf::new(k, n), k, trace),
        StrategySpec::Balance => simulate(Balance::new(k, n), k, trace),
        StrategySpec::Mark => simulate(Mark::new(k, n, seed), k, trace),
        StrategySpec::GreedyDual(p) => run_greedydual(k, trace, p),
    }
}

pub fn run_greedydual(k: usize, trace: &RequestTrace, policy: RelabelPolicy) -> SimulationResult {
    assert!(k >= 1, "k must be positive");
    simulate(GreedyDual::new(k, trace.num_nodes(), policy), k, trace)
}

/// Server slots plus the node-to-server index shared by all strategies.
#[derive(Clone, Debug)]
pub(crate) struct Servers {
    pub states: Vec<ServerState>,
    at: Vec<Option<u32>>,
}

impl Servers {
    pub fn new(k: usize, num_nodes: usize) -> Self {
        Self {
            states: vec![ServerState::unplaced(); k],
            at: vec![None; num_nodes],
        }
    }

    #[inline]
    pub fn on(&self, node: NodeId) -> Option<usize> {
        self.at[node.index()].map(|s| s as usize)
    }

    /// Lowest-numbered server not on the graph.
    pub fn unplaced(&self) -> Option<usize> {
        self.states.iter().position(|s| s.location.is_none())
    }

    pub fn place(&mut self, s: usize, node: NodeId, index: usize) {
        debug_assert!(self.states[s].location.is_none());
        debug_assert!(self.at[node.index()].is_none());
        let st = &mut self.states[s];
        st.location = Some(node);
        st.last_touch = index;
        st.last_move = index;
        self.at[node.index()] = Some(s as u32);
    }

    /// Moves server `s` to `node` and returns the node it left.
    pub fn relocate(
        &mut self,
        s: usize,
        node: NodeId,
        index: usize,
        trace: &RequestTrace,
    ) -> NodeId {
        let from = self.states[s]
            .location
            .expect("relocating an unplaced server");
        self.at[from.index()] = None;
        self.at[node.index()] = Some(s as u32);
        let st = &mut self.states[s];
        st.location = Some(node);
        st.last_touch = index;
        st.last_move = index;
        st.distance += trace.weight(from);
        from
    }

    /// Removes every server from the graph, returning vacated nodes in server order.
    pub fn clear(&mut self, trace: &RequestTrace) -> Vec<NodeId> {
        let mut out = Vec::with_capacity(self.states.len());
        for st in &mut self.states {
            if let Some(u) = st.location.take() {
                self.at[u.index()] = None;
                st.distance += trace.weight(u);
                out.push(u);
            }
        }
        out
    }

    /// Index of the server minimizing `key` among placed servers.
    pub fn argmin_by_key<K: Ord>(
        &self,
        mut key: impl FnMut(usize, &ServerState) -> Option<K>,
    ) -> usize {
        self.states
            .iter()
            .enumerate()
            .filter_map(|(i, st)| key(i, st).map(|k| (k, i)))
            .min()
            .map(|(_, i)| i)
            .expect("no eligible server")
    }
}
