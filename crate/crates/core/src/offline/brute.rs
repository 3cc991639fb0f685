//! Exhaustive search over server schedules; a test oracle for tiny inputs.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::trace::{NodeId, RequestTrace};

pub const BRUTE_MAX_LEN: usize = 12;
pub const BRUTE_MAX_K: usize = 4;

/// Minimum cost over every schedule of `k` servers that keeps a server on
/// each requested node. On a fault any served node may be vacated, and a
/// server that has never been placed may instead be placed for free.
pub fn opt_bruteforce(trace: &RequestTrace, k: usize) -> Result<u64> {
    assert!(k >= 1, "k must be positive");
    if trace.len() > BRUTE_MAX_LEN || k > BRUTE_MAX_K {
        return Err(Error::Capacity(format!(
            "exhaustive search is limited to {BRUTE_MAX_LEN} requests and {BRUTE_MAX_K} servers"
        )));
    }
    let mut memo = HashMap::new();
    Ok(search(trace, 0, Vec::new(), k, &mut memo))
}

/// `served` is kept sorted; `unplaced` counts servers still off the graph.
fn search(
    trace: &RequestTrace,
    t: usize,
    served: Vec<NodeId>,
    unplaced: usize,
    memo: &mut HashMap<(usize, Vec<NodeId>, usize), u64>,
) -> u64 {
    if t == trace.len() {
        return 0;
    }
    let key = (t, served.clone(), unplaced);
    if let Some(&v) = memo.get(&key) {
        return v;
    }
    let v = trace.requests()[t];
    let best = if served.contains(&v) {
        search(trace, t + 1, served, unplaced, memo)
    } else {
        let mut best = u64::MAX;
        if unplaced > 0 {
            let mut next = served.clone();
            next.push(v);
            next.sort();
            best = best.min(search(trace, t + 1, next, unplaced - 1, memo));
        }
        for (idx, &u) in served.iter().enumerate() {
            let mut next = served.clone();
            next[idx] = v;
            next.sort();
            best = best.min(trace.weight(u) + search(trace, t + 1, next, unplaced, memo));
        }
        best
    };
    memo.insert(key, best);
    best
}
