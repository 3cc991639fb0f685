//! GreedyDual as a primal-dual algorithm.
//!
//! Requests are numbered `1..=N`; request `0` is an artificial node of
//! weight zero that holds every server before its first placement. The run
//! keeps a multiset `S` of requests that currently have a server, together
//! with each entry's back-pointer `i⁻` (the request at which that server last
//! moved), and a dual solution `(a, b)` of the k-server LP.
//!
//! On a fault, every `a_i` with `i ∉ S, i < n` and every `b_j` with `j <= n`
//! is raised by the same amount, keeping `b_{i+1} <= w(r_i)` for `i ∈ S` but
//! reaching `b_{i⁻+1} >= w(r_i)` for some `i ∈ S`; that server then moves.
//! In label terms `L = w(r_i) - b_{i⁻+1}` and `H = w(r_i) - b_{i+1}`.
//!
//! The raise is applied lazily through a cumulative clock: `b_j` equals the
//! total raised since request `j` arrived, and `a_i` the total raised since
//! `i` left `S`.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::strategies::{Event, EventKind, RelabelPolicy, SimulationResult};
use crate::trace::{NodeId, RequestTrace};

/// A point `(a, b)` of the dual program; `a` is indexed `0..=N`, `b` `1..=N`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DualSolution {
    a: Vec<i64>,
    b: Vec<i64>,
}

impl DualSolution {
    pub fn zeros(n: usize) -> Self {
        Self {
            a: vec![0; n + 1],
            b: vec![0; n + 1],
        }
    }

    /// `a` has `N + 1` entries (`a_0..a_N`), `b` has `N` entries (`b_1..b_N`).
    pub fn from_vectors(a: Vec<i64>, b: Vec<i64>) -> Result<Self> {
        if a.len() != b.len() + 1 {
            return Err(Error::Domain(format!(
                "dual shape mismatch: {} a-values, {} b-values",
                a.len(),
                b.len()
            )));
        }
        let mut full_b = Vec::with_capacity(b.len() + 1);
        full_b.push(0);
        full_b.extend(b);
        Ok(Self { a, b: full_b })
    }

    /// Number of real requests `N`.
    pub fn n(&self) -> usize {
        self.a.len() - 1
    }

    pub fn a(&self, i: usize) -> i64 {
        self.a[i]
    }

    /// `b_j` for `1 <= j <= N`; zero beyond `N`.
    pub fn b(&self, j: usize) -> i64 {
        assert!(j >= 1, "b is indexed from 1");
        self.b.get(j).copied().unwrap_or(0)
    }

    pub fn a_values(&self) -> &[i64] {
        &self.a
    }

    pub fn b_values(&self) -> &[i64] {
        &self.b[1..]
    }
}

/// `-h a_0 - sum_{1<=i<=N-1} a_i + sum_{1<=j<=N} b_j`.
pub fn dual_cost(dual: &DualSolution, h: usize) -> i64 {
    let n = dual.n();
    let h = h as i64;
    let a_tail: i64 = dual.a[1..n.max(1)].iter().sum();
    let b_sum: i64 = dual.b[1..].iter().sum();
    -h * dual.a[0] - a_tail + b_sum
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    /// The dual has a different number of requests than the trace.
    Shape {
        dual: usize,
        trace: usize,
    },
    NegativeA {
        i: usize,
        value: i64,
    },
    /// `b_j - a_i > d(r_i, r_j)`.
    Constraint {
        i: usize,
        j: usize,
        lhs: i64,
        distance: i64,
    },
    /// `b_j < b_{j+1}`; reported only by the streaming check.
    NonMonotoneB {
        j: usize,
    },
}

/// Distance from request `i` to request `j` in the weighted-caching metric,
/// with request 0 the artificial zero-weight node.
fn distance(trace: &RequestTrace, i: usize, j: usize) -> i64 {
    if i == 0 {
        return 0;
    }
    let (u, v) = (trace.requests()[i - 1], trace.requests()[j - 1]);
    if u == v {
        0
    } else {
        trace.weight(u) as i64
    }
}

/// Exhaustive O(N²) feasibility check of every dual constraint.
pub fn check_feasibility(dual: &DualSolution, trace: &RequestTrace) -> Vec<Violation> {
    let n = trace.len();
    if dual.n() != n {
        return vec![Violation::Shape {
            dual: dual.n(),
            trace: n,
        }];
    }
    let mut out = Vec::new();
    for (i, &a) in dual.a.iter().enumerate() {
        if a < 0 {
            out.push(Violation::NegativeA { i, value: a });
        }
    }
    for i in 0..n {
        for j in i + 1..=n {
            let lhs = dual.b[j] - dual.a[i];
            let d = distance(trace, i, j);
            if lhs > d {
                out.push(Violation::Constraint {
                    i,
                    j,
                    lhs,
                    distance: d,
                });
            }
        }
    }
    out
}

/// Linear-time sufficient check: `a >= 0`, `b` non-increasing, and for each
/// `i` only the two tightest constraints (the next request to a different
/// node and the next request to the same node). With `b` non-increasing these
/// dominate every other constraint of row `i`, so an empty result proves
/// feasibility.
pub fn check_feasibility_fast(dual: &DualSolution, trace: &RequestTrace) -> Vec<Violation> {
    let n = trace.len();
    if dual.n() != n {
        return vec![Violation::Shape {
            dual: dual.n(),
            trace: n,
        }];
    }
    let mut out = Vec::new();
    for (i, &a) in dual.a.iter().enumerate() {
        if a < 0 {
            out.push(Violation::NegativeA { i, value: a });
        }
    }
    for j in 1..n {
        if dual.b[j] < dual.b[j + 1] {
            out.push(Violation::NonMonotoneB { j });
        }
    }
    let reqs = trace.requests();
    // next_same[i]: next request index (1-based) to the same node as request i
    let mut next_same = vec![0usize; n + 1];
    // next_diff[i]: first j > i with r_j != r_i
    let mut next_diff = vec![0usize; n + 2];
    let mut last_seen = vec![0usize; trace.num_nodes()];
    for i in (1..=n).rev() {
        let u = reqs[i - 1].index();
        next_same[i] = last_seen[u];
        last_seen[u] = i;
        next_diff[i] = if i == n {
            0
        } else if reqs[i] != reqs[i - 1] {
            i + 1
        } else {
            next_diff[i + 1]
        };
    }
    let check = |i: usize, j: usize, out: &mut Vec<Violation>| {
        if j == 0 {
            return;
        }
        let lhs = dual.b[j] - dual.a[i];
        let d = distance(trace, i, j);
        if lhs > d {
            out.push(Violation::Constraint {
                i,
                j,
                lhs,
                distance: d,
            });
        }
    };
    if n >= 1 {
        check(0, 1, &mut out);
    }
    for i in 1..=n {
        check(i, next_diff[i], &mut out);
        check(i, next_same[i], &mut out);
    }
    out
}

/// One element of the served multiset: request `request` has a server that
/// last moved at request `moved_at` (`i⁻`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ServedEntry {
    pub request: usize,
    pub moved_at: usize,
}

/// How one request changed `S`: `removed` left, `added` entered.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SetChange {
    pub slot: usize,
    pub removed: ServedEntry,
    pub added: ServedEntry,
}

/// Primal and dual totals after a request, enough to evaluate the
/// primal-dual bound for any `h` without replaying the run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct StepRecord {
    pub cost: u64,
    pub raise: i64,
    pub a0: i64,
    /// `sum_{i >= 1} a_i`
    pub a_rest: i64,
    pub b_sum: i64,
    /// `sum_{i ∈ S} b_{i⁻+1}`
    pub charge: i64,
    /// `max_{i ∈ S} (b_{i+1} - w(r_i))`; must stay `<= 0`.
    pub max_excess: i64,
}

impl StepRecord {
    pub fn dual_cost(&self, h: usize) -> i64 {
        -(h as i64) * self.a0 - self.a_rest + self.b_sum
    }
}

#[derive(Clone, Debug)]
pub struct CertifiedRun {
    pub result: SimulationResult,
    pub dual: DualSolution,
    pub policy: RelabelPolicy,
    /// `changes[n-1]` is the update made by request `n`.
    pub changes: Vec<SetChange>,
    /// `steps[n]` is the state after request `n`; `steps[0]` is the initial state.
    pub steps: Vec<StepRecord>,
}

impl CertifiedRun {
    pub fn k(&self) -> usize {
        self.result.k
    }

    /// `S` after each request, starting with the initial `{0 x k}`.
    pub fn served_sets(&self) -> impl Iterator<Item = Vec<ServedEntry>> + '_ {
        let mut cur = vec![
            ServedEntry {
                request: 0,
                moved_at: 0
            };
            self.k()
        ];
        let mut changes = self.changes.iter();
        let mut first = true;
        std::iter::from_fn(move || {
            if first {
                first = false;
                return Some(cur.clone());
            }
            let c = changes.next()?;
            debug_assert_eq!(cur[c.slot], c.removed);
            cur[c.slot] = c.added;
            Some(cur.clone())
        })
    }

    /// `S` at termination.
    pub fn final_set(&self) -> Vec<ServedEntry> {
        self.served_sets().last().expect("at least the initial set")
    }
}

/// Runs GreedyDual in its primal-dual form, returning the event log together
/// with the dual solution it maintains.
pub fn run_greedydual_certified(
    k: usize,
    trace: &RequestTrace,
    policy: RelabelPolicy,
) -> CertifiedRun {
    assert!(k >= 1, "k must be positive");
    let n_total = trace.len();
    let reqs = trace.requests();
    // weight of request i, with request 0 the artificial node
    let w = |i: usize| -> i64 {
        if i == 0 {
            0
        } else {
            trace.weight(reqs[i - 1]) as i64
        }
    };

    let mut raised: i64 = 0;
    // b_j = raised - b_base[j] once request j has arrived
    let mut b_base = vec![0i64; n_total + 2];
    // a_i = raised - a_base[i] once i has left S
    let mut a_base: Vec<Option<i64>> = vec![None; n_total + 1];
    let mut zero_copies = k;
    let mut served = vec![
        ServedEntry {
            request: 0,
            moved_at: 0
        };
        k
    ];
    let mut slot_of_node: Vec<Option<usize>> = vec![None; trace.num_nodes()];

    let mut rec = StepRecord::default();
    let mut steps = Vec::with_capacity(n_total + 1);
    steps.push(rec);
    let mut changes = Vec::with_capacity(n_total);
    let mut events = Vec::with_capacity(n_total);

    for n in 1..=n_total {
        let node = reqs[n - 1];
        b_base[n] = raised;
        let b = |j: usize, raised: i64| -> i64 {
            if j > n {
                0
            } else {
                raised - b_base[j]
            }
        };

        let (slot, kind, new_entry) = if let Some(slot) = slot_of_node[node.index()] {
            // Stay
            let old = served[slot];
            (
                slot,
                EventKind::Hit,
                ServedEntry {
                    request: n,
                    moved_at: old.moved_at,
                },
            )
        } else {
            // Relabel
            let upper = served
                .iter()
                .map(|e| w(e.request) - b(e.request + 1, raised))
                .min()
                .unwrap();
            let lower = served
                .iter()
                .map(|e| w(e.request) - b(e.moved_at + 1, raised))
                .min()
                .unwrap();
            debug_assert!(lower <= upper);
            let eps = match policy {
                RelabelPolicy::MaxLower => upper,
                RelabelPolicy::MinLower => lower,
            };
            debug_assert!(eps >= 0, "raise must be nonnegative");
            raised += eps;
            if zero_copies == 0 {
                rec.a0 += eps;
            }
            let real_in_s = (k - zero_copies) as i64;
            rec.a_rest += eps * ((n as i64 - 1) - real_in_s);
            rec.b_sum += eps * n as i64;

            // Move: pick an entry whose back-pointer dual covers its weight
            let slot = (0..k)
                .filter(|&s| {
                    let e = served[s];
                    b(e.moved_at + 1, raised) >= w(e.request)
                })
                .min_by_key(|&s| {
                    let e = served[s];
                    match policy {
                        RelabelPolicy::MaxLower => {
                            (w(e.request) - b(e.request + 1, raised), e.request, s)
                        }
                        RelabelPolicy::MinLower => {
                            (w(e.request) - b(e.moved_at + 1, raised), e.moved_at, s)
                        }
                    }
                })
                .expect("relabel leaves an eligible server");
            let old = served[slot];
            let kind = if old.request == 0 {
                EventKind::FreePlace
            } else {
                let evicted = reqs[old.request - 1];
                slot_of_node[evicted.index()] = None;
                let cost = w(old.request) as u64;
                rec.cost += cost;
                EventKind::Move { evicted, cost }
            };
            slot_of_node[node.index()] = Some(slot);
            (
                slot,
                kind,
                ServedEntry {
                    request: n,
                    moved_at: n,
                },
            )
        };

        let removed = served[slot];
        if removed.request == 0 {
            zero_copies -= 1;
            if zero_copies == 0 {
                a_base[0] = Some(raised);
            }
        } else {
            a_base[removed.request] = Some(raised);
        }
        served[slot] = new_entry;
        debug_assert_eq!(
            served.iter().filter(|e| e.request == 0).count(),
            zero_copies
        );
        changes.push(SetChange {
            slot,
            removed,
            added: new_entry,
        });
        events.push(Event {
            index: n - 1,
            node,
            kind,
        });

        rec.raise = raised;
        rec.charge = served.iter().map(|e| b(e.moved_at + 1, raised)).sum();
        rec.max_excess = served
            .iter()
            .map(|e| b(e.request + 1, raised) - w(e.request))
            .max()
            .unwrap();
        debug_assert!(rec.max_excess <= 0);
        steps.push(rec);
    }

    let mut a = vec![0i64; n_total + 1];
    for (i, base) in a_base.iter().enumerate() {
        if let Some(base) = base {
            a[i] = raised - base;
        }
    }
    let mut bvec = vec![0i64; n_total + 1];
    for j in 1..=n_total {
        bvec[j] = raised - b_base[j];
    }
    let dual = DualSolution { a, b: bvec };
    let result = SimulationResult {
        total_cost: rec.cost,
        events,
        k,
    };
    CertifiedRun {
        result,
        dual,
        policy,
        changes,
        steps,
    }
}

fn bound_holds(k: usize, h: usize, cost: u64, dual_cost: i64, charge: i64) -> bool {
    assert!(1 <= h && h <= k, "need 1 <= h <= k");
    let slack = (k - h + 1) as i128;
    slack * cost as i128 <= k as i128 * dual_cost as i128 - slack * charge as i128
}

/// Primal-dual bound at termination, recomputed from the materialized dual:
/// `(k-h+1) cost <= k ||(a,b)||_h - (k-h+1) sum_{i ∈ S} b_{i⁻+1}`.
pub fn check_primal_dual_bound(run: &CertifiedRun, k: usize, h: usize) -> bool {
    let charge: i64 = run
        .final_set()
        .iter()
        .map(|e| {
            if e.moved_at + 1 > run.dual.n() {
                0
            } else {
                run.dual.b(e.moved_at + 1)
            }
        })
        .sum();
    bound_holds(k, h, run.result.total_cost, dual_cost(&run.dual, h), charge)
}

/// The same bound evaluated after every request. Returns the first request
/// number at which it fails.
pub fn check_primal_dual_bound_steps(run: &CertifiedRun, k: usize, h: usize) -> Result<(), usize> {
    for (n, s) in run.steps.iter().enumerate() {
        if !bound_holds(k, h, s.cost, s.dual_cost(h), s.charge) {
            return Err(n);
        }
    }
    Ok(())
}

/// True when `b_{i+1} <= w(r_i)` held for every `i ∈ S` after every request.
pub fn served_bounds_hold(run: &CertifiedRun) -> bool {
    run.steps.iter().all(|s| s.max_excess <= 0)
}

/// Labels implied by the dual after the last request, per served node.
pub fn labels_from_dual(run: &CertifiedRun, trace: &RequestTrace) -> Vec<(NodeId, i64, i64)> {
    let reqs = trace.requests();
    let mut out: Vec<_> = run
        .final_set()
        .iter()
        .filter(|e| e.request > 0)
        .map(|e| {
            let node = reqs[e.request - 1];
            let w = trace.weight(node) as i64;
            let b = |j: usize| if j > run.dual.n() { 0 } else { run.dual.b(j) };
            (node, w - b(e.moved_at + 1), w - b(e.request + 1))
        })
        .collect();
    out.sort();
    out
}

/// A certificate in its exchange form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Certificate {
    pub k: usize,
    /// Node label and weight of each request, in order.
    pub requests: Vec<(String, u64)>,
    pub cost: u64,
    pub dual: DualSolution,
    /// `S` after each request `0..=N`.
    pub served: Vec<Vec<ServedEntry>>,
}

impl Certificate {
    pub fn from_run(run: &CertifiedRun, trace: &RequestTrace) -> Self {
        Self {
            k: run.k(),
            requests: trace
                .requests()
                .iter()
                .map(|&r| (trace.label(r).to_string(), trace.weight(r)))
                .collect(),
            cost: run.result.total_cost,
            dual: run.dual.clone(),
            served: run.served_sets().collect(),
        }
    }

    /// Text form:
    ///
    /// ```text
    /// k <k>
    /// N <N>
    /// cost <total>
    /// r <n> <label> <weight>      (n = 1..N)
    /// a <i> <value>               (i = 0..N)
    /// b <j> <value>               (j = 1..N)
    /// S <n> <i>:<i⁻> ...          (n = 0..N)
    /// ```
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "k {}", self.k).unwrap();
        writeln!(out, "N {}", self.requests.len()).unwrap();
        writeln!(out, "cost {}", self.cost).unwrap();
        for (n, (label, w)) in self.requests.iter().enumerate() {
            writeln!(out, "r {} {} {}", n + 1, label, w).unwrap();
        }
        for (i, a) in self.dual.a_values().iter().enumerate() {
            writeln!(out, "a {i} {a}").unwrap();
        }
        for (j, b) in self.dual.b_values().iter().enumerate() {
            writeln!(out, "b {} {}", j + 1, b).unwrap();
        }
        for (n, set) in self.served.iter().enumerate() {
            write!(out, "S {n}").unwrap();
            for e in set {
                write!(out, " {}:{}", e.request, e.moved_at).unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let perr = |line: usize, msg: &str| Error::Parse {
            line,
            msg: msg.to_string(),
        };
        let mut k = None;
        let mut n_decl = None;
        let mut cost = None;
        let mut requests = Vec::new();
        let mut a = Vec::new();
        let mut b = Vec::new();
        let mut served = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line_no = lineno + 1;
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.is_empty() {
                continue;
            }
            let num = |s: &str| -> Result<i64> {
                s.parse::<i64>()
                    .map_err(|_| perr(line_no, &format!("bad number '{s}'")))
            };
            let idx = |s: &str, expect: usize| -> Result<()> {
                if num(s)? as usize != expect {
                    Err(perr(line_no, "entries out of order"))
                } else {
                    Ok(())
                }
            };
            match (toks[0], toks.len()) {
                ("k", 2) => k = Some(num(toks[1])? as usize),
                ("N", 2) => n_decl = Some(num(toks[1])? as usize),
                ("cost", 2) => cost = Some(num(toks[1])? as u64),
                ("r", 4) => {
                    idx(toks[1], requests.len() + 1)?;
                    requests.push((toks[2].to_string(), num(toks[3])? as u64));
                }
                ("a", 3) => {
                    idx(toks[1], a.len())?;
                    a.push(num(toks[2])?);
                }
                ("b", 3) => {
                    idx(toks[1], b.len() + 1)?;
                    b.push(num(toks[2])?);
                }
                ("S", _) => {
                    idx(toks[1], served.len())?;
                    let mut set = Vec::with_capacity(toks.len() - 2);
                    for t in &toks[2..] {
                        let (i, m) = t
                            .split_once(':')
                            .ok_or_else(|| perr(line_no, "expected i:i⁻"))?;
                        set.push(ServedEntry {
                            request: num(i)? as usize,
                            moved_at: num(m)? as usize,
                        });
                    }
                    served.push(set);
                }
                _ => return Err(perr(line_no, "unrecognized certificate line")),
            }
        }
        let k = k.ok_or_else(|| perr(0, "missing k"))?;
        let n = n_decl.ok_or_else(|| perr(0, "missing N"))?;
        if requests.len() != n || b.len() != n || a.len() != n + 1 {
            return Err(Error::Domain("certificate vectors disagree with N".into()));
        }
        Ok(Self {
            k,
            requests,
            cost: cost.ok_or_else(|| perr(0, "missing cost"))?,
            dual: DualSolution::from_vectors(a, b)?,
            served,
        })
    }

    /// Rebuilds the request trace the certificate talks about.
    pub fn trace(&self) -> Result<RequestTrace> {
        let mut text = String::new();
        for (label, w) in &self.requests {
            writeln!(text, "{label} {w}").unwrap();
        }
        crate::trace::parse_trace(&text)
    }

    /// Independent re-verification: feasibility by the exhaustive check and
    /// the final primal-dual bound from the last recorded `S`.
    pub fn verify(&self, h: usize) -> Result<CertificateVerdict> {
        let trace = self.trace()?;
        let violations = check_feasibility(&self.dual, &trace);
        let last = self.served.last().cloned().unwrap_or_default();
        let charge: i64 = last
            .iter()
            .map(|e| {
                if e.moved_at + 1 > self.dual.n() {
                    0
                } else {
                    self.dual.b(e.moved_at + 1)
                }
            })
            .sum();
        let dc = dual_cost(&self.dual, h);
        Ok(CertificateVerdict {
            feasible: violations.is_empty(),
            bound: bound_holds(self.k, h, self.cost, dc, charge),
            dual_cost: dc,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CertificateVerdict {
    pub feasible: bool,
    pub bound: bool,
    pub dual_cost: i64,
}
