use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{EventKind, OnlineStrategy, Servers};
use crate::trace::{NodeId, RequestTrace};

/// Moves the server from the least recently requested node.
pub struct Lru {
    servers: Servers,
}

impl Lru {
    pub fn new(k: usize, num_nodes: usize) -> Self {
        Self {
            servers: Servers::new(k, num_nodes),
        }
    }
}

impl OnlineStrategy for Lru {
    fn serve(&mut self, index: usize, node: NodeId, trace: &RequestTrace) -> EventKind {
        if let Some(s) = self.servers.on(node) {
            self.servers.states[s].last_touch = index;
            return EventKind::Hit;
        }
        if let Some(s) = self.servers.unplaced() {
            self.servers.place(s, node, index);
            return EventKind::FreePlace;
        }
        let s = self.servers.argmin_by_key(|_, st| Some(st.last_touch));
        let evicted = self.servers.relocate(s, node, index, trace);
        EventKind::Move {
            evicted,
            cost: trace.weight(evicted),
        }
    }
}

/// Moves the least recently moved server.
pub struct Fifo {
    servers: Servers,
}

impl Fifo {
    pub fn new(k: usize, num_nodes: usize) -> Self {
        Self {
            servers: Servers::new(k, num_nodes),
        }
    }
}

impl OnlineStrategy for Fifo {
    fn serve(&mut self, index: usize, node: NodeId, trace: &RequestTrace) -> EventKind {
        if self.servers.on(node).is_some() {
            return EventKind::Hit;
        }
        if let Some(s) = self.servers.unplaced() {
            self.servers.place(s, node, index);
            return EventKind::FreePlace;
        }
        let s = self.servers.argmin_by_key(|_, st| Some(st.last_move));
        let evicted = self.servers.relocate(s, node, index, trace);
        EventKind::Move {
            evicted,
            cost: trace.weight(evicted),
        }
    }
}

/// Flush-when-full: on a fault with every server placed, all servers leave
/// the graph (each paying for the node it leaves) and refill for free.
pub struct Fwf {
    servers: Servers,
    flushed: bool,
}

impl Fwf {
    pub fn new(k: usize, num_nodes: usize) -> Self {
        Self {
            servers: Servers::new(k, num_nodes),
            flushed: false,
        }
    }
}

impl OnlineStrategy for Fwf {
    fn serve(&mut self, index: usize, node: NodeId, trace: &RequestTrace) -> EventKind {
        if self.servers.on(node).is_some() {
            return EventKind::Hit;
        }
        if let Some(s) = self.servers.unplaced() {
            self.servers.place(s, node, index);
            return if self.flushed {
                EventKind::Refill
            } else {
                EventKind::FreePlace
            };
        }
        let evicted = self.servers.clear(trace);
        let cost = evicted.iter().map(|&u| trace.weight(u)).sum();
        self.flushed = true;
        self.servers.place(0, node, index);
        EventKind::Flush { evicted, cost }
    }
}

/// Moves the server on node `u` minimizing `w(u) + W(u)`, where `W` is the
/// distance that server has already travelled. Ties go to the lowest server.
pub struct Balance {
    servers: Servers,
}

impl Balance {
    pub fn new(k: usize, num_nodes: usize) -> Self {
        Self {
            servers: Servers::new(k, num_nodes),
        }
    }
}

impl OnlineStrategy for Balance {
    fn serve(&mut self, index: usize, node: NodeId, trace: &RequestTrace) -> EventKind {
        if self.servers.on(node).is_some() {
            return EventKind::Hit;
        }
        if let Some(s) = self.servers.unplaced() {
            self.servers.place(s, node, index);
            return EventKind::FreePlace;
        }
        let s = self
            .servers
            .argmin_by_key(|_, st| st.location.map(|u| trace.weight(u) + st.distance));
        let evicted = self.servers.relocate(s, node, index, trace);
        EventKind::Move {
            evicted,
            cost: trace.weight(evicted),
        }
    }
}

/// The randomized marking algorithm: on a fault, evict a server chosen
/// uniformly among those on nodes not yet requested in the current phase.
pub struct Mark {
    servers: Servers,
    rng: ChaCha8Rng,
    candidates: Vec<usize>,
}

impl Mark {
    pub fn new(k: usize, num_nodes: usize, seed: u64) -> Self {
        Self {
            servers: Servers::new(k, num_nodes),
            rng: ChaCha8Rng::seed_from_u64(seed),
            candidates: Vec::with_capacity(k),
        }
    }
}

impl OnlineStrategy for Mark {
    fn serve(&mut self, index: usize, node: NodeId, trace: &RequestTrace) -> EventKind {
        if let Some(s) = self.servers.on(node) {
            self.servers.states[s].marked = true;
            return EventKind::Hit;
        }
        if let Some(s) = self.servers.unplaced() {
            self.servers.place(s, node, index);
            self.servers.states[s].marked = true;
            return EventKind::FreePlace;
        }
        self.candidates.clear();
        self.candidates.extend(
            self.servers
                .states
                .iter()
                .enumerate()
                .filter(|(_, st)| !st.marked)
                .map(|(i, _)| i),
        );
        if self.candidates.is_empty() {
            // new phase
            for st in &mut self.servers.states {
                st.marked = false;
            }
            self.candidates.extend(0..self.servers.states.len());
        }
        let s = self.candidates[self.rng.gen_range(0..self.candidates.len())];
        let evicted = self.servers.relocate(s, node, index, trace);
        self.servers.states[s].marked = true;
        EventKind::Move {
            evicted,
            cost: trace.weight(evicted),
        }
    }
}
