//! Offline optimal cost `OPT(k, r)`.
//!
//! The exact solver works on the assignment form of the k-server integer
//! program: request `j` is matched to the request `i < j` whose server serves
//! it next, at cost `d(r_i, r_j)`; the artificial request 0 may be used `k`
//! times and every other request once. Since `d(r_i, r_j)` is either `0`
//! (same node) or `w(r_i)`, the `w(r_i)` arcs are routed through a zero-cost
//! time chain and only the arc to the next request of the same node is kept
//! among the zero-cost ones. That leaves O(N) arcs.

mod brute;
pub mod flow;

use std::str::FromStr;

use crate::error::{Error, Result};
use crate::trace::RequestTrace;

pub use brute::{opt_bruteforce, BRUTE_MAX_K, BRUTE_MAX_LEN};
use flow::MinCostFlow;

/// Default request cap for [`opt_flow`].
pub const DEFAULT_FLOW_CAP: usize = 20_000;

/// Predecessor assignment of an optimal schedule.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OptSchedule {
    /// `predecessor[j - 1]` is the request whose server serves request `j`
    /// (`0` is the artificial start request).
    pub predecessor: Vec<usize>,
    pub cost: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum OptMethod {
    /// Farthest-in-future on unit weights, min-cost flow otherwise.
    #[default]
    Auto,
    Flow,
    Belady,
}

impl FromStr for OptMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "auto" => Ok(Self::Auto),
            "flow" => Ok(Self::Flow),
            "belady" => Ok(Self::Belady),
            other => Err(Error::Domain(format!("unknown opt method '{other}'"))),
        }
    }
}

impl OptMethod {
    /// The concrete method used for `trace`, or the reason it cannot run.
    pub fn resolve(self, trace: &RequestTrace, flow_cap: usize) -> Result<Self> {
        let m = match self {
            Self::Auto if trace.is_paging() => Self::Belady,
            Self::Auto => Self::Flow,
            m => m,
        };
        match m {
            Self::Belady if !trace.is_paging() => Err(Error::Domain(
                "farthest-in-future needs a unit-weight trace; use the flow solver".into(),
            )),
            Self::Flow if trace.len() > flow_cap => Err(flow_cap_error(trace.len(), flow_cap)),
            m => Ok(m),
        }
    }
}

fn flow_cap_error(len: usize, cap: usize) -> Error {
    Error::Capacity(format!(
        "{len} requests exceed the flow solver cap of {cap}; use belady for unit weights or sample the trace"
    ))
}

/// Minimum cost with `k` servers using `method`.
pub fn opt_cost(trace: &RequestTrace, k: usize, method: OptMethod, flow_cap: usize) -> Result<u64> {
    match method.resolve(trace, flow_cap)? {
        OptMethod::Belady => opt_belady(trace, k),
        _ => Ok(opt_flow_with_cap(trace, k, flow_cap)?.cost),
    }
}

pub fn opt_flow(trace: &RequestTrace, k: usize) -> Result<OptSchedule> {
    opt_flow_with_cap(trace, k, DEFAULT_FLOW_CAP)
}

pub fn opt_flow_with_cap(trace: &RequestTrace, k: usize, cap: usize) -> Result<OptSchedule> {
    assert!(k >= 1, "k must be positive");
    let n = trace.len();
    if n > cap {
        return Err(flow_cap_error(n, cap));
    }
    if n == 0 {
        return Ok(OptSchedule {
            predecessor: Vec::new(),
            cost: 0,
        });
    }
    let reqs = trace.requests();
    let w = |i: usize| trace.weight(reqs[i - 1]) as i64;

    // node layout: A_i = i (0..n-1), T_j = n + j - 1, B_j = 2n + j - 1 (j = 1..n)
    let a_node = |i: usize| i;
    let t_node = |j: usize| n + j - 1;
    let b_node = |j: usize| 2 * n + j - 1;
    let (src, sink) = (3 * n, 3 * n + 1);
    let mut g = MinCostFlow::new(3 * n + 2);

    let mut next_same = vec![0usize; n + 1];
    let mut last_seen = vec![0usize; trace.num_nodes()];
    for i in (1..=n).rev() {
        let u = reqs[i - 1].index();
        next_same[i] = last_seen[u];
        last_seen[u] = i;
    }

    g.add_edge(src, a_node(0), k as i64, 0);
    let start_arc = g.add_edge(a_node(0), t_node(1), k as i64, 0);
    let mut enter_arc = vec![usize::MAX; n];
    let mut stay_arc = vec![usize::MAX; n];
    for i in 1..n {
        g.add_edge(src, a_node(i), 1, 0);
        enter_arc[i] = g.add_edge(a_node(i), t_node(i + 1), 1, w(i));
        if next_same[i] != 0 {
            stay_arc[i] = g.add_edge(a_node(i), b_node(next_same[i]), 1, 0);
        }
    }
    let mut exit_arc = vec![usize::MAX; n + 1];
    for j in 1..=n {
        if j < n {
            g.add_edge(t_node(j), t_node(j + 1), n as i64, 0);
        }
        exit_arc[j] = g.add_edge(t_node(j), b_node(j), 1, 0);
        g.add_edge(b_node(j), sink, 1, 0);
    }

    let (flow, flow_cost) = g.run(src, sink, n as i64);
    assert_eq!(flow as usize, n, "every request is matched");

    // read the matching back: stay arcs directly, chain units in arrival order
    let mut predecessor = vec![usize::MAX; n];
    for i in 1..n {
        if stay_arc[i] != usize::MAX && g.flow_on(stay_arc[i]) == 1 {
            predecessor[next_same[i] - 1] = i;
        }
    }
    let mut waiting: Vec<usize> = vec![0; g.flow_on(start_arc) as usize];
    for j in 1..=n {
        if j >= 2 && g.flow_on(enter_arc[j - 1]) == 1 {
            waiting.push(j - 1);
        }
        if g.flow_on(exit_arc[j]) == 1 {
            predecessor[j - 1] = waiting.pop().expect("chain unit available");
        }
    }

    let cost = predecessor
        .iter()
        .enumerate()
        .map(|(jm1, &i)| request_distance(trace, i, jm1 + 1))
        .sum();
    debug_assert_eq!(cost, flow_cost as u64);
    Ok(OptSchedule { predecessor, cost })
}

/// `d(r_i, r_j)` with request 0 the artificial zero-weight node.
pub fn request_distance(trace: &RequestTrace, i: usize, j: usize) -> u64 {
    if i == 0 {
        return 0;
    }
    let (u, v) = (trace.requests()[i - 1], trace.requests()[j - 1]);
    if u == v {
        0
    } else {
        trace.weight(u)
    }
}

/// Farthest-in-future eviction; optimal for unit weights.
pub fn opt_belady(trace: &RequestTrace, k: usize) -> Result<u64> {
    use std::collections::BTreeSet;
    assert!(k >= 1, "k must be positive");
    if !trace.is_paging() {
        return Err(Error::Domain(
            "farthest-in-future needs a unit-weight trace".into(),
        ));
    }
    let reqs = trace.requests();
    let n = reqs.len();
    let mut next_use = vec![usize::MAX; n];
    let mut last_seen = vec![usize::MAX; trace.num_nodes()];
    for i in (0..n).rev() {
        let u = reqs[i].index();
        next_use[i] = last_seen[u];
        last_seen[u] = i;
    }
    // cached nodes keyed by their next request
    let mut cache: BTreeSet<(usize, u32)> = BTreeSet::new();
    let mut key = vec![None::<usize>; trace.num_nodes()];
    let mut cost = 0;
    for (i, &r) in reqs.iter().enumerate() {
        let u = r.index();
        match key[u] {
            Some(kv) => {
                cache.remove(&(kv, r.0));
            }
            None => {
                if cache.len() == k {
                    let victim = cache.pop_last().expect("cache is full");
                    key[victim.1 as usize] = None;
                    cost += 1;
                }
            }
        }
        key[u] = Some(next_use[i]);
        cache.insert((next_use[i], r.0));
    }
    Ok(cost)
}

/// `OPT(1, r)`: one server pays `w(u)` every time the request leaves node `u`.
pub fn opt_single_server(trace: &RequestTrace) -> u64 {
    trace
        .requests()
        .windows(2)
        .filter(|p| p[0] != p[1])
        .map(|p| trace.weight(p[0]))
        .sum()
}
