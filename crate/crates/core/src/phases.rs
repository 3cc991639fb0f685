//! k-phase decomposition.
//!
//! The first k-phase is the longest prefix requesting at most `k` distinct
//! nodes; each later phase is the longest following substring with the same
//! property. A request in phase `i >= 2` is *new* when its node was requested
//! neither earlier in phase `i` nor in phase `i - 1`. `P(k)` is the number of
//! phases minus one and `m̄(k)` the mean number of new requests over phases
//! `2..`.

use num_bigint::BigInt;
use num_rational::{BigRational, Rational64};
use num_traits::{ToPrimitive, Zero};

use crate::trace::RequestTrace;

/// Largest `k` for which harmonic numbers are kept exact.
pub const EXACT_HARMONIC_MAX: usize = 10_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PhasePartition {
    pub k: usize,
    /// Start index of every phase (0-based request positions).
    pub boundaries: Vec<usize>,
    /// `m_i` for phases `2..=P+1`.
    pub new_counts: Vec<usize>,
    /// Distinct nodes requested in each phase.
    pub distinct: Vec<usize>,
    pub len: usize,
}

/// `m̄` together with whether it is defined (`P > 0`).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AverageNew {
    pub value: Rational64,
    /// False when `P = 0`; `value` is then 0 by convention.
    pub defined: bool,
}

impl PhasePartition {
    /// `P(k)`: number of phases minus one.
    pub fn numphases(&self) -> usize {
        self.boundaries.len().saturating_sub(1)
    }

    pub fn total_new(&self) -> usize {
        self.new_counts.iter().sum()
    }

    pub fn avenew(&self) -> AverageNew {
        let p = self.numphases();
        if p == 0 {
            AverageNew {
                value: Rational64::zero(),
                defined: false,
            }
        } else {
            AverageNew {
                value: Rational64::new(self.total_new() as i64, p as i64),
                defined: true,
            }
        }
    }

    /// Half-open request range of phase `i` (0-based).
    pub fn span(&self, i: usize) -> std::ops::Range<usize> {
        let end = self.boundaries.get(i + 1).copied().unwrap_or(self.len);
        self.boundaries[i]..end
    }
}

pub fn partition(trace: &RequestTrace, k: usize) -> PhasePartition {
    assert!(k >= 1, "k must be positive");
    let mut boundaries = Vec::new();
    let mut new_counts = Vec::new();
    let mut distinct = Vec::new();
    // phase (1-based) in which each node was last requested; 0 = never
    let mut seen_in = vec![0usize; trace.num_nodes()];
    let mut phase = 0usize;
    for (idx, &r) in trace.requests().iter().enumerate() {
        let u = r.index();
        if seen_in[u] == phase && phase > 0 {
            continue;
        }
        if phase == 0 || *distinct.last().unwrap() == k {
            phase += 1;
            boundaries.push(idx);
            distinct.push(0);
            if phase >= 2 {
                new_counts.push(0);
            }
        }
        if phase >= 2 && seen_in[u] + 1 < phase {
            *new_counts.last_mut().unwrap() += 1;
        }
        seen_in[u] = phase;
        *distinct.last_mut().unwrap() += 1;
    }
    PhasePartition {
        k,
        boundaries,
        new_counts,
        distinct,
        len: trace.len(),
    }
}

/// Checks `P(k') <= 3/4 P(k)` for `k' = ceil(k + 2 m̄(k))`.
/// `None` when `P(k) = 0`.
pub fn verify_phase_shrink(trace: &RequestTrace, k: usize) -> Option<bool> {
    let p = partition(trace, k);
    let pk = p.numphases();
    if pk == 0 {
        return None;
    }
    let k_prime = shrink_target(&p);
    let pk2 = partition(trace, k_prime).numphases();
    Some(4 * pk2 <= 3 * pk)
}

/// `ceil(k + 2 m̄(k))`.
pub fn shrink_target(p: &PhasePartition) -> usize {
    let pk = p.numphases().max(1);
    p.k + (2 * p.total_new()).div_ceil(pk)
}

/// `H_j` as an exact rational.
pub fn harmonic(j: usize) -> BigRational {
    let mut h = BigRational::zero();
    for i in 1..=j {
        h += BigRational::new(BigInt::from(1), BigInt::from(i));
    }
    h
}

fn harmonic_f64(j: usize) -> f64 {
    (1..=j).rev().map(|i| 1.0 / i as f64).sum()
}

/// `sum_i m_i (H_k - H_{m_i} + 1)` over phases `2..`, exact.
///
/// For `k` above [`EXACT_HARMONIC_MAX`] the value is computed in double
/// precision and converted.
pub fn mark_upper_bound(p: &PhasePartition) -> BigRational {
    if p.new_counts.is_empty() {
        return BigRational::zero();
    }
    if p.k > EXACT_HARMONIC_MAX {
        return BigRational::from_float(mark_upper_bound_f64(p)).expect("finite");
    }
    // prefix harmonics up to k in one pass
    let mut hs = Vec::with_capacity(p.k + 1);
    let mut h = BigRational::zero();
    hs.push(h.clone());
    for i in 1..=p.k {
        h += BigRational::new(BigInt::from(1), BigInt::from(i));
        hs.push(h.clone());
    }
    let one = BigRational::from_integer(BigInt::from(1));
    let mut total = BigRational::zero();
    for &m in &p.new_counts {
        let term = &hs[p.k] - &hs[m] + &one;
        total += term * BigRational::from_integer(BigInt::from(m));
    }
    total
}

pub fn mark_upper_bound_f64(p: &PhasePartition) -> f64 {
    // the exact sum is cheap only for small k
    if p.k <= 2_000 {
        return mark_upper_bound(p).to_f64().expect("finite");
    }
    let hk = harmonic_f64(p.k);
    p.new_counts
        .iter()
        .map(|&m| m as f64 * (hk - harmonic_f64(m) + 1.0))
        .sum()
}

/// `max(0, (k - h + m̄) P / 2)`.
pub fn opt_phase_lower_bound(p: &PhasePartition, h: usize) -> Rational64 {
    assert!(h >= 1, "h must be positive");
    let pk = p.numphases() as i64;
    let num = (p.k as i64 - h as i64) * pk + p.total_new() as i64;
    Rational64::new(num.max(0), 2)
}

/// `cost <= k P(k)`: the cost bound shared by conservative strategies.
pub fn phase_cost_bound_holds(p: &PhasePartition, cost: u64) -> bool {
    cost <= (p.k * p.numphases()) as u64
}

/// `m̄ <= 2k OPT(k) / cost`, cross-multiplied. `None` when `cost = 0`.
pub fn new_requests_bound_holds(p: &PhasePartition, opt_k: u64, cost: u64) -> Option<bool> {
    if cost == 0 {
        return None;
    }
    let pk = p.numphases() as u128;
    if pk == 0 {
        // m̄ = 0 by convention
        return Some(true);
    }
    Some(p.total_new() as u128 * cost as u128 <= 2 * p.k as u128 * opt_k as u128 * pk)
}

/// `m̄ <= k exp(1 - mark / (2 OPT(k)))` with `mark` a (possibly averaged) cost.
/// `None` when `OPT(k) = 0`.
pub fn mark_new_requests_bound_holds(
    p: &PhasePartition,
    opt_k: u64,
    mark_cost: f64,
) -> Option<bool> {
    if opt_k == 0 {
        return None;
    }
    let avenew = p.avenew().value.to_f64().unwrap();
    let rhs = p.k as f64 * (1.0 - mark_cost / (2.0 * opt_k as f64)).exp();
    Some(avenew <= rhs * (1.0 + 1e-12))
}
