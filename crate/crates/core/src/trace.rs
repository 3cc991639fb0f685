//! Request traces: the data model shared by every other module.
//!
//! A trace is a sequence of requests to interned nodes plus a positive
//! integer weight per node. The artificial request that precedes every trace
//! in the linear-programming formulation is never stored here; consumers that
//! need it inject it themselves.

use std::collections::HashMap;
use std::fmt;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Dense node index, assigned in order of first appearance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// An immutable request sequence with per-node weights.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RequestTrace {
    requests: Vec<NodeId>,
    weights: Vec<u64>,
    labels: Vec<String>,
}

impl RequestTrace {
    /// Builds a trace from raw ids and a weight table indexed by id.
    ///
    /// Node ids are re-interned so that they appear in order of first use;
    /// labels are the decimal form of the original id.
    pub fn from_parts(requests: &[u32], weights: &[u64]) -> Result<Self> {
        let mut b = TraceBuilder::default();
        for &r in requests {
            let w = *weights
                .get(r as usize)
                .ok_or_else(|| Error::Domain(format!("node {r} has no weight entry")))?;
            b.push(&r.to_string(), Some(w)).map_err(Error::Domain)?;
        }
        Ok(b.finish())
    }

    /// Unit-weight trace over the given raw ids.
    pub fn paging(requests: &[u32]) -> Self {
        let mut b = TraceBuilder::default();
        for &r in requests {
            b.push(&r.to_string(), None)
                .expect("unit weights never conflict");
        }
        b.finish()
    }

    pub fn requests(&self) -> &[NodeId] {
        &self.requests
    }

    pub fn len(&self) -> usize {
        self.requests.len()
    }

    pub fn is_empty(&self) -> bool {
        self.requests.is_empty()
    }

    pub fn num_nodes(&self) -> usize {
        self.weights.len()
    }

    #[inline]
    pub fn weight(&self, node: NodeId) -> u64 {
        self.weights[node.index()]
    }

    pub fn weights(&self) -> &[u64] {
        &self.weights
    }

    pub fn label(&self, node: NodeId) -> &str {
        &self.labels[node.index()]
    }

    /// True when every weight is 1.
    pub fn is_paging(&self) -> bool {
        self.weights.iter().all(|&w| w == 1)
    }

    /// The same request sequence with all weights reset to 1.
    pub fn to_paging(&self) -> Self {
        Self {
            requests: self.requests.clone(),
            weights: vec![1; self.weights.len()],
            labels: self.labels.clone(),
        }
    }

    /// The first `len` requests. Nodes that no longer occur are dropped.
    pub fn prefix(&self, len: usize) -> Self {
        let mut b = TraceBuilder::default();
        for &r in &self.requests[..len.min(self.len())] {
            b.push(self.label(r), Some(self.weight(r)))
                .expect("weights are consistent by construction");
        }
        b.finish()
    }

    /// Number of distinct requested nodes.
    pub fn distinct(&self) -> usize {
        self.weights.len()
    }

    /// Renders the trace in the text format accepted by [`parse_trace`].
    /// The first mention of each node carries its weight.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        let mut seen = vec![false; self.weights.len()];
        for &r in &self.requests {
            if seen[r.index()] {
                writeln!(out, "{}", self.label(r)).unwrap();
            } else {
                seen[r.index()] = true;
                writeln!(out, "{} {}", self.label(r), self.weight(r)).unwrap();
            }
        }
        out
    }
}

#[derive(Default)]
struct TraceBuilder {
    ids: HashMap<String, NodeId>,
    labels: Vec<String>,
    explicit: Vec<Option<u64>>,
    requests: Vec<NodeId>,
}

impl TraceBuilder {
    fn push(&mut self, label: &str, weight: Option<u64>) -> Result<(), String> {
        let id = match self.ids.get(label) {
            Some(&id) => id,
            None => {
                let id = NodeId(self.labels.len() as u32);
                self.ids.insert(label.to_string(), id);
                self.labels.push(label.to_string());
                self.explicit.push(None);
                id
            }
        };
        if let Some(w) = weight {
            match self.explicit[id.index()] {
                Some(prev) if prev != w => {
                    return Err(format!(
                        "conflicting weights for node '{label}': {prev} and {w}"
                    ))
                }
                _ => self.explicit[id.index()] = Some(w),
            }
        }
        self.requests.push(id);
        Ok(())
    }

    fn finish(self) -> RequestTrace {
        RequestTrace {
            requests: self.requests,
            weights: self.explicit.into_iter().map(|w| w.unwrap_or(1)).collect(),
            labels: self.labels,
        }
    }
}

/// Parses the line-oriented trace format: `<label> [<weight>]` per line,
/// `#` starts a comment, blank lines are skipped.
pub fn parse_trace(text: &str) -> Result<RequestTrace> {
    let mut b = TraceBuilder::default();
    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let content = raw.split('#').next().unwrap_or("");
        let mut tokens = content.split_whitespace();
        let Some(label) = tokens.next() else { continue };
        let weight = match tokens.next() {
            None => None,
            Some(tok) => {
                let w: i64 = tok.parse().map_err(|_| Error::Parse {
                    line,
                    msg: format!("weight '{tok}' is not an integer"),
                })?;
                if w <= 0 {
                    return Err(Error::Domain(format!(
                        "line {line}: weight {w} for node '{label}' must be positive"
                    )));
                }
                Some(w as u64)
            }
        };
        if let Some(extra) = tokens.next() {
            return Err(Error::Parse {
                line,
                msg: format!("unexpected token '{extra}'"),
            });
        }
        b.push(label, weight)
            .map_err(|msg| Error::Parse { line, msg })?;
    }
    Ok(b.finish())
}

/// Uniform random trace. Deterministic in `seed`.
pub fn generate_random(num_nodes: u32, length: usize, weight_max: u64, seed: u64) -> RequestTrace {
    assert!(num_nodes >= 1, "num_nodes must be positive");
    assert!(weight_max >= 1, "weight_max must be positive");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights: Vec<u64> = (0..num_nodes)
        .map(|_| rng.gen_range(1..=weight_max))
        .collect();
    let requests: Vec<u32> = (0..length).map(|_| rng.gen_range(0..num_nodes)).collect();
    RequestTrace::from_parts(&requests, &weights).expect("every node has a weight")
}

/// `0, 1, ..., num_nodes-1, 0, 1, ...` truncated to `length`, unit weights.
pub fn generate_cyclic(num_nodes: u32, length: usize) -> RequestTrace {
    assert!(num_nodes >= 2, "cyclic traces need at least two nodes");
    let requests: Vec<u32> = (0..length)
        .map(|i| (i % num_nodes as usize) as u32)
        .collect();
    RequestTrace::paging(&requests)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(t: &RequestTrace) -> Vec<u32> {
        t.requests().iter().map(|n| n.0).collect()
    }

    #[test]
    fn default_unit_weights() {
        let t = parse_trace("a\nb\na\n").unwrap();
        assert_eq!(ids(&t), vec![0, 1, 0]);
        assert_eq!(t.weights(), &[1, 1]);
        assert!(t.is_paging());
    }

    #[test]
    fn explicit_weights_survive_bare_mentions() {
        let t = parse_trace("a 5\nb 2\na\n").unwrap();
        assert_eq!(ids(&t), vec![0, 1, 0]);
        assert_eq!(t.weights(), &[5, 2]);
    }

    #[test]
    fn weight_after_bare_mention_is_accepted() {
        let t = parse_trace("a\na 3\n").unwrap();
        assert_eq!(t.weights(), &[3]);
    }

    #[test]
    fn nonpositive_weight_is_domain_error() {
        assert!(matches!(parse_trace("a -1\n"), Err(Error::Domain(_))));
        assert!(matches!(parse_trace("a 0\n"), Err(Error::Domain(_))));
    }

    #[test]
    fn malformed_lines_report_line_number() {
        match parse_trace("a\nb x\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        match parse_trace("a 1\n\nb 2 3\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn conflicting_weights_rejected() {
        assert!(matches!(
            parse_trace("a 2\na 3\n"),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn comments_and_blank_lines() {
        let t = parse_trace("# header\n\na 4 # trailing\n  \nb\n#c\n").unwrap();
        assert_eq!(ids(&t), vec![0, 1]);
        assert_eq!(t.weights(), &[4, 1]);
        assert_eq!(t.label(NodeId(1)), "b");
    }

    #[test]
    fn empty_trace() {
        let t = parse_trace("").unwrap();
        assert!(t.is_empty());
        assert_eq!(t.num_nodes(), 0);
    }

    #[test]
    fn random_single_node() {
        let t = generate_random(1, 5, 1, 42);
        assert_eq!(ids(&t), vec![0; 5]);
    }

    #[test]
    fn random_is_deterministic() {
        assert_eq!(
            generate_random(7, 300, 9, 11),
            generate_random(7, 300, 9, 11)
        );
        assert_ne!(
            generate_random(7, 300, 9, 11),
            generate_random(7, 300, 9, 12)
        );
    }

    #[test]
    fn random_covers_all_nodes() {
        let t = generate_random(3, 1000, 1, 5);
        let mut seen = std::collections::BTreeSet::new();
        seen.extend(t.requests().iter().copied());
        assert_eq!(seen.len(), 3);
        assert_eq!(t.distinct(), 3);
    }

    #[test]
    fn random_weights_in_range() {
        let t = generate_random(50, 500, 10, 3);
        assert!(t.weights().iter().all(|&w| (1..=10).contains(&w)));
    }

    #[test]
    fn cyclic_by_construction() {
        assert_eq!(ids(&generate_cyclic(3, 7)), vec![0, 1, 2, 0, 1, 2, 0]);
    }

    #[test]
    fn interning_follows_first_appearance() {
        let t = parse_trace("z\ny\nz\nx\n").unwrap();
        assert_eq!(ids(&t), vec![0, 1, 0, 2]);
        assert_eq!(t.label(NodeId(2)), "x");
    }

    #[test]
    fn prefix_reinterns() {
        let t = parse_trace("a 3\nb 2\nc 7\n").unwrap();
        let p = t.prefix(2);
        assert_eq!(p.len(), 2);
        assert_eq!(p.weights(), &[3, 2]);
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn serialize_round_trips(reqs in proptest::collection::vec(0u32..6, 0..40),
                                     ws in proptest::collection::vec(1u64..20, 6)) {
                let t = RequestTrace::from_parts(&reqs, &ws).unwrap();
                let back = parse_trace(&t.serialize()).unwrap();
                prop_assert_eq!(back, t);
            }
        }
    }
}
