//! GreedyDual in its label form.
//!
//! Each placed server carries labels `L <= H`. A hit resets `H` to the node
//! weight, a placement or move sets both to the weight, and a fault with no
//! free server first lowers every label by the same `delta` so that
//! `min L <= 0 <= min H`, then moves a server whose `L` reached zero.
//!
//! Labels are stored relative to a running offset, so a relabel is one
//! addition instead of a pass over all servers.

use super::{EventKind, OnlineStrategy, RelabelPolicy, Servers};
use crate::trace::{NodeId, RequestTrace};

/// Effective labels of one placed server.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ServerLabel {
    pub node: NodeId,
    pub low: i64,
    pub high: i64,
}

pub struct GreedyDual {
    servers: Servers,
    policy: RelabelPolicy,
    offset: i64,
}

impl GreedyDual {
    pub fn new(k: usize, num_nodes: usize, policy: RelabelPolicy) -> Self {
        Self {
            servers: Servers::new(k, num_nodes),
            policy,
            offset: 0,
        }
    }

    /// Current labels of placed servers, ordered by node id.
    pub fn labels(&self) -> Vec<ServerLabel> {
        let mut out: Vec<_> = self
            .servers
            .states
            .iter()
            .filter_map(|st| {
                st.location.map(|node| ServerLabel {
                    node,
                    low: st.low - self.offset,
                    high: st.high - self.offset,
                })
            })
            .collect();
        out.sort_by_key(|l| l.node);
        out
    }

    fn set_labels(&mut self, s: usize, w: i64) {
        let st = &mut self.servers.states[s];
        st.low = w + self.offset;
        st.high = w + self.offset;
    }
}

impl OnlineStrategy for GreedyDual {
    fn serve(&mut self, index: usize, node: NodeId, trace: &RequestTrace) -> EventKind {
        let w = trace.weight(node) as i64;
        if let Some(s) = self.servers.on(node) {
            let st = &mut self.servers.states[s];
            st.high = w + self.offset;
            st.last_touch = index;
            return EventKind::Hit;
        }
        if let Some(s) = self.servers.unplaced() {
            self.servers.place(s, node, index);
            self.set_labels(s, w);
            return EventKind::FreePlace;
        }

        let states = &self.servers.states;
        let min_low = states.iter().map(|st| st.low).min().expect("k >= 1");
        let min_high = states.iter().map(|st| st.high).min().expect("k >= 1");
        debug_assert!(min_low <= min_high);
        // raw labels: the shift lands the chosen minimum exactly on zero
        self.offset = match self.policy {
            RelabelPolicy::MaxLower => min_high,
            RelabelPolicy::MinLower => min_low,
        };
        let offset = self.offset;
        let s = match self.policy {
            // min-H server always has L <= H = 0, so it is eligible
            RelabelPolicy::MaxLower => self
                .servers
                .argmin_by_key(|i, st| (st.low <= offset).then_some((st.high, st.last_touch, i))),
            RelabelPolicy::MinLower => self
                .servers
                .argmin_by_key(|i, st| (st.low <= offset).then_some((st.low, st.last_move, i))),
        };
        let evicted = self.servers.relocate(s, node, index, trace);
        self.set_labels(s, w);
        EventKind::Move {
            evicted,
            cost: trace.weight(evicted),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::strategies::simulate;
    use crate::trace::parse_trace;

    #[test]
    fn labels_after_forced_relabel() {
        let t = parse_trace("a 5\nb 1\nc 1\n").unwrap();
        let mut gd = GreedyDual::new(2, t.num_nodes(), RelabelPolicy::MaxLower);
        for (i, &n) in t.requests().iter().take(2).enumerate() {
            gd.serve(i, n, &t);
        }
        let l = gd.labels();
        assert_eq!((l[0].low, l[0].high), (5, 5));
        assert_eq!((l[1].low, l[1].high), (1, 1));
        gd.serve(2, t.requests()[2], &t);
        // delta = 1: a drops to 4, c placed at 1
        let l = gd.labels();
        assert_eq!(l.len(), 2);
        assert_eq!((l[0].node, l[0].low, l[0].high), (NodeId(0), 4, 4));
        assert_eq!((l[1].node, l[1].low, l[1].high), (NodeId(2), 1, 1));
    }

    #[test]
    fn policies_differ_on_hit_history() {
        // k=2, a b a c: MaxLower behaves like LRU (evict b), MinLower like FIFO (evict a)
        let t = parse_trace("a\nb\na\nc\n").unwrap();
        let max = simulate(GreedyDual::new(2, 3, RelabelPolicy::MaxLower), 2, &t);
        let min = simulate(GreedyDual::new(2, 3, RelabelPolicy::MinLower), 2, &t);
        assert_eq!(
            max.events[3].kind,
            EventKind::Move {
                evicted: NodeId(1),
                cost: 1
            }
        );
        assert_eq!(
            min.events[3].kind,
            EventKind::Move {
                evicted: NodeId(0),
                cost: 1
            }
        );
    }

    #[test]
    fn low_never_exceeds_high() {
        let t = crate::trace::generate_random(12, 500, 9, 4);
        for p in [RelabelPolicy::MaxLower, RelabelPolicy::MinLower] {
            let mut gd = GreedyDual::new(4, t.num_nodes(), p);
            for (i, &n) in t.requests().iter().enumerate() {
                gd.serve(i, n, &t);
                for l in gd.labels() {
                    assert!(l.low <= l.high);
                    assert!(l.high >= 0);
                    assert!(l.high <= t.weight(l.node) as i64);
                }
            }
        }
    }
}
