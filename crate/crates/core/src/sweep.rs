//! Cost tables over a range of cache sizes, and violator counting.
//!
//! A size `k` is a *violator* for strategy `X` under ratio family `c` and
//! exponent `d` when `cost_X(k) >= max(c(k) OPT(k), OPT(1) / n^d)` and
//! `cost_X(k) > 0`.

use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::{BigRational, Rational64};
use num_traits::{Pow, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::offline::{
    opt_belady, opt_flow_with_cap, opt_single_server, OptMethod, DEFAULT_FLOW_CAP,
};
use crate::phases::{partition, AverageNew};
use crate::strategies::{run, StrategySpec};
use crate::trace::RequestTrace;

/// Constant in front of the violator-count bounds.
pub const DEFAULT_BOUND_CONSTANT: f64 = 8.0;

/// Seed used when the caller does not pick one.
pub const DEFAULT_SEED: u64 = 0x5eed_2024;

/// Parses `3`, `-2`, `3/2` or `1.25` as an exact rational.
pub fn parse_rational(s: &str) -> Result<Rational64> {
    let s = s.trim();
    let bad = || Error::Domain(format!("'{s}' is not a rational number"));
    if let Some((n, d)) = s.split_once('/') {
        let n: i64 = n.trim().parse().map_err(|_| bad())?;
        let d: i64 = d.trim().parse().map_err(|_| bad())?;
        if d == 0 {
            return Err(bad());
        }
        return Ok(Rational64::new(n, d));
    }
    if let Some((int, frac)) = s.split_once('.') {
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) || frac.len() > 15 {
            return Err(bad());
        }
        let neg = int.starts_with('-');
        let int_part: i64 = if int.is_empty() || int == "-" {
            0
        } else {
            int.parse().map_err(|_| bad())?
        };
        let scale = 10i64.pow(frac.len() as u32);
        let f: i64 = frac.parse().map_err(|_| bad())?;
        let mag = int_part
            .abs()
            .checked_mul(scale)
            .and_then(|v| v.checked_add(f))
            .ok_or_else(bad)?;
        return Ok(Rational64::new(if neg { -mag } else { mag }, scale));
    }
    Ok(Rational64::from_integer(s.parse().map_err(|_| bad())?))
}

fn fmt_rational(r: &Rational64) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Competitiveness target `c(k)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RatioFamily {
    /// `alpha * ln(k + shift)`
    LogFactor {
        alpha: Rational64,
        shift: u32,
    },
    /// `2 ln ln(k + shift) + beta`
    LogLogOffset {
        beta: Rational64,
        shift: u32,
    },
    Constant(Rational64),
}

impl RatioFamily {
    /// `c(k)` in double precision. Values that are not finite and positive
    /// (e.g. `ln 1`, `ln ln 1`) are returned as 0.
    pub fn eval(&self, k: usize) -> f64 {
        let v = match *self {
            Self::LogFactor { alpha, shift } => {
                ratio_f64(alpha) * ((k + shift as usize) as f64).ln()
            }
            Self::LogLogOffset { beta, shift } => {
                2.0 * ((k + shift as usize) as f64).ln().ln() + ratio_f64(beta)
            }
            Self::Constant(c) => ratio_f64(c),
        };
        if v.is_finite() && v > 0.0 {
            v
        } else {
            0.0
        }
    }

    /// `k / c(k)` nondecreasing on `2..=n`.
    pub fn ratio_monotone(&self, n: usize) -> bool {
        let q = |k: usize| k as f64 / self.eval(k);
        (2..n).all(|k| q(k + 1) >= q(k) * (1.0 - 1e-12))
    }

    /// `2 ln k - c(k)` nondecreasing on `2..=n`.
    pub fn gap_monotone(&self, n: usize) -> bool {
        let g = |k: usize| 2.0 * (k as f64).ln() - self.eval(k);
        (2..n).all(|k| g(k + 1) >= g(k) - 1e-12)
    }
}

fn ratio_f64(r: Rational64) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

impl FromStr for RatioFamily {
    type Err = Error;

    /// `log:A[+S]`, `loglog:B[+S]` or `const:C`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || {
            Error::Domain(format!(
                "bad ratio family '{s}'; expected log:A[+S], loglog:B[+S] or const:C"
            ))
        };
        let (kind, rest) = s.trim().split_once(':').ok_or_else(bad)?;
        let (value, shift) = match rest.rsplit_once('+') {
            Some((v, sh)) if !v.is_empty() => (v, sh.trim().parse::<u32>().map_err(|_| bad())?),
            _ => (rest, 0),
        };
        let value = parse_rational(value)?;
        match kind.trim().to_ascii_lowercase().as_str() {
            "log" => Ok(Self::LogFactor {
                alpha: value,
                shift,
            }),
            "loglog" => Ok(Self::LogLogOffset { beta: value, shift }),
            "const" if shift == 0 => Ok(Self::Constant(value)),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for RatioFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (kind, v, shift) = match self {
            Self::LogFactor { alpha, shift } => ("log", alpha, *shift),
            Self::LogLogOffset { beta, shift } => ("loglog", beta, *shift),
            Self::Constant(c) => ("const", c, 0),
        };
        write!(f, "{kind}:{}", fmt_rational(v))?;
        if shift > 0 {
            write!(f, "+{shift}")?;
        }
        Ok(())
    }
}

/// Cost of one strategy at one `k`, averaged over `trials` runs.
#[derive(Clone, Debug, PartialEq)]
pub struct StrategyCost {
    pub strategy: StrategySpec,
    pub total: u64,
    pub trials: u64,
    /// Standard error of the mean; 0 for deterministic strategies.
    pub std_err: f64,
}

impl StrategyCost {
    pub fn mean(&self) -> f64 {
        self.total as f64 / self.trials as f64
    }

    /// Exact mean as `(numerator, denominator)`.
    pub fn mean_exact(&self) -> (u64, u64) {
        (self.total, self.trials)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub k: usize,
    pub costs: Vec<StrategyCost>,
    pub opt: u64,
    pub phases: usize,
    pub avenew: AverageNew,
}

impl SweepRow {
    pub fn cost_of(&self, s: StrategySpec) -> Option<&StrategyCost> {
        self.costs.iter().find(|c| c.strategy == s)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepTable {
    pub n: usize,
    pub len: usize,
    pub strategies: Vec<StrategySpec>,
    /// `OPT(1)`.
    pub opt_single: u64,
    pub rows: Vec<SweepRow>,
}

#[derive(Clone, Copy, Debug)]
pub struct SweepConfig {
    pub n: usize,
    pub opt_method: OptMethod,
    pub flow_cap: usize,
    pub mark_trials: u64,
    pub seed: u64,
}

impl SweepConfig {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            opt_method: OptMethod::Auto,
            flow_cap: DEFAULT_FLOW_CAP,
            mark_trials: 1,
            seed: DEFAULT_SEED,
        }
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Seed of Mark trial `trial` at cache size `k`.
pub fn trial_seed(seed: u64, k: usize, trial: u64) -> u64 {
    seed ^ splitmix64(splitmix64(k as u64) ^ trial)
}

pub fn sweep(
    trace: &RequestTrace,
    strategies: &[StrategySpec],
    n: usize,
    opt_method: OptMethod,
    mark_trials: u64,
    seed: u64,
) -> Result<SweepTable> {
    let cfg = SweepConfig {
        n,
        opt_method,
        flow_cap: DEFAULT_FLOW_CAP,
        mark_trials,
        seed,
    };
    sweep_with(trace, strategies, &cfg)
}

pub fn sweep_with(
    trace: &RequestTrace,
    strategies: &[StrategySpec],
    cfg: &SweepConfig,
) -> Result<SweepTable> {
    if cfg.n == 0 {
        return Err(Error::Domain("n must be positive".into()));
    }
    if cfg.mark_trials == 0 {
        return Err(Error::Domain("trials must be positive".into()));
    }
    let method = cfg.opt_method.resolve(trace, cfg.flow_cap)?;

    let rows: Vec<Result<SweepRow>> = (1..=cfg.n)
        .into_par_iter()
        .map(|k| {
            let opt = match method {
                OptMethod::Belady => opt_belady(trace, k)?,
                _ => opt_flow_with_cap(trace, k, cfg.flow_cap)?.cost,
            };
            let p = partition(trace, k);
            let costs = strategies
                .iter()
                .map(|&s| strategy_cost(s, k, trace, cfg))
                .collect();
            Ok(SweepRow {
                k,
                costs,
                opt,
                phases: p.numphases(),
                avenew: p.avenew(),
            })
        })
        .collect();
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    debug_assert!(rows.windows(2).all(|w| w[0].opt >= w[1].opt));
    Ok(SweepTable {
        n: cfg.n,
        len: trace.len(),
        strategies: strategies.to_vec(),
        opt_single: opt_single_server(trace),
        rows,
    })
}

fn strategy_cost(
    s: StrategySpec,
    k: usize,
    trace: &RequestTrace,
    cfg: &SweepConfig,
) -> StrategyCost {
    if !s.is_randomized() {
        let total = run(s, k, trace, cfg.seed).total_cost;
        return StrategyCost {
            strategy: s,
            total,
            trials: 1,
            std_err: 0.0,
        };
    }
    let samples: Vec<u64> = (0..cfg.mark_trials)
        .map(|t| run(s, k, trace, trial_seed(cfg.seed, k, t)).total_cost)
        .collect();
    let total: u64 = samples.iter().sum();
    let trials = cfg.mark_trials;
    let mean = total as f64 / trials as f64;
    let std_err = if trials > 1 {
        let var = samples
            .iter()
            .map(|&x| (x as f64 - mean).powi(2))
            .sum::<f64>()
            / (trials - 1) as f64;
        (var / trials as f64).sqrt()
    } else {
        0.0
    };
    StrategyCost {
        strategy: s,
        total,
        trials,
        std_err,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct ViolatorReport {
    pub count: usize,
    pub ks: Vec<usize>,
    /// Sizes whose verdict for a Monte Carlo estimate lies within two
    /// standard errors of the threshold.
    pub uncertain: Vec<usize>,
}

fn big(x: u64) -> BigInt {
    BigInt::from(x)
}

/// Violator test for one cost value `total / trials`.
///
/// `c` is compared exactly via its binary expansion; `n^d` via
/// `cost^q n^p >= opt1^q trials^q` with `d = p/q`.
pub fn is_violator(
    total: u64,
    trials: u64,
    c: f64,
    opt: u64,
    opt_single: u64,
    n: usize,
    d: Rational64,
) -> bool {
    if total == 0 {
        return false;
    }
    let c = BigRational::from_float(c).unwrap_or_else(BigRational::zero);
    let cost = BigRational::new(big(total), big(trials));
    if cost < c * BigRational::from_integer(big(opt)) {
        return false;
    }
    significant(total, trials, opt_single, n, d)
}

/// `total / trials >= opt_single / n^d`.
fn significant(total: u64, trials: u64, opt_single: u64, n: usize, d: Rational64) -> bool {
    let (p, q) = (*d.numer(), *d.denom());
    debug_assert!(q > 0);
    let q = q as u32;
    let np = big(n as u64).pow(p.unsigned_abs() as u32);
    let lhs = big(total).pow(q);
    let rhs = big(opt_single).pow(q) * big(trials).pow(q);
    if p >= 0 {
        lhs * np >= rhs
    } else {
        lhs >= rhs * np
    }
}

/// Violator set of `strategy` in `table`.
pub fn count_violators(
    table: &SweepTable,
    strategy: StrategySpec,
    family: RatioFamily,
    d: Rational64,
) -> Result<ViolatorReport> {
    if !table.strategies.contains(&strategy) {
        return Err(Error::Domain(format!(
            "strategy {strategy} is not in the table"
        )));
    }
    let mut report = ViolatorReport::default();
    for row in &table.rows {
        let sc = row.cost_of(strategy).expect("every row has every strategy");
        let c = family.eval(row.k);
        if is_violator(
            sc.total,
            sc.trials,
            c,
            row.opt,
            table.opt_single,
            table.n,
            d,
        ) {
            report.ks.push(row.k);
        }
        if sc.trials > 1 && sc.std_err > 0.0 {
            let threshold = c * row.opt as f64;
            if (sc.mean() - threshold).abs() <= 2.0 * sc.std_err {
                report.uncertain.push(row.k);
            }
        }
    }
    report.count = report.ks.len();
    Ok(report)
}

/// Allowed number of violators: `C (d+1) ln n * n / c(n)` for deterministic
/// conservative strategies and `C (d+1) ln n * n * exp(1 - c(n)/2)` for Mark.
pub fn violator_bound(
    strategy: StrategySpec,
    family: RatioFamily,
    d: Rational64,
    n: usize,
    constant: f64,
) -> Result<f64> {
    if !strategy.is_phase_bounded() {
        return Err(Error::Domain(format!(
            "no violator bound for strategy {strategy}"
        )));
    }
    let cn = family.eval(n);
    let base = constant * (ratio_f64(d) + 1.0) * (n as f64).ln() * n as f64;
    Ok(if strategy.is_randomized() {
        base * (1.0 - cn / 2.0).exp()
    } else if cn > 0.0 {
        base / cn
    } else {
        f64::INFINITY
    })
}

/// Counts violators in `table` and compares with [`violator_bound`].
pub fn violator_bound_holds(
    table: &SweepTable,
    strategy: StrategySpec,
    family: RatioFamily,
    d: Rational64,
    constant: f64,
) -> Result<bool> {
    let count = count_violators(table, strategy, family, d)?.count;
    if count == 0 {
        return Ok(true);
    }
    Ok(count as f64 <= violator_bound(strategy, family, d, table.n, constant)?)
}

/// Runs a sweep of `strategy` alone and checks its violator count with the
/// default constant.
pub fn violator_bound_check(
    trace: &RequestTrace,
    strategy: StrategySpec,
    family: RatioFamily,
    d: Rational64,
    n: usize,
) -> Result<bool> {
    let mut cfg = SweepConfig::new(n);
    if strategy.is_randomized() {
        cfg.mark_trials = 100;
    }
    let table = sweep_with(trace, &[strategy], &cfg)?;
    violator_bound_holds(&table, strategy, family, d, DEFAULT_BOUND_CONSTANT)
}

fn fmt_cost(sc: &StrategyCost) -> String {
    if sc.total.is_multiple_of(sc.trials) {
        (sc.total / sc.trials).to_string()
    } else {
        format!("{:.6}", sc.mean())
    }
}

fn fmt_ratio(sc: &StrategyCost, opt: u64) -> String {
    match (sc.total, opt) {
        (0, 0) => "nan".into(),
        (_, 0) => "inf".into(),
        _ => format!("{:.6}", sc.mean() / opt as f64),
    }
}

fn fmt_avenew(a: &AverageNew) -> String {
    if a.defined {
        fmt_rational(&a.value)
    } else {
        "nan".into()
    }
}

pub const CSV_HEADER: &str = "k,strategy,cost,opt,ratio,phases,avenew,violator";

/// One row per `(k, strategy)`.
pub fn to_csv(table: &SweepTable, family: RatioFamily, d: Rational64) -> String {
    let mut out = String::new();
    writeln!(out, "{CSV_HEADER}").unwrap();
    for row in &table.rows {
        let c = family.eval(row.k);
        for sc in &row.costs {
            let v = is_violator(
                sc.total,
                sc.trials,
                c,
                row.opt,
                table.opt_single,
                table.n,
                d,
            );
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                row.k,
                sc.strategy,
                fmt_cost(sc),
                row.opt,
                fmt_ratio(sc, row.opt),
                row.phases,
                fmt_avenew(&row.avenew),
                u8::from(v)
            )
            .unwrap();
        }
    }
    out
}

/// Gnuplot script plotting competitive ratio and fault rate against `k`
/// from the CSV at `csv_path`.
pub fn gnuplot_script(table: &SweepTable, csv_path: &str) -> String {
    let names: Vec<String> = table.strategies.iter().map(|s| s.to_string()).collect();
    let names = names.join(" ");
    let len = table.len.max(1);
    let mut s = String::new();
    writeln!(s, "set datafile separator ','").unwrap();
    writeln!(s, "set key autotitle columnhead").unwrap();
    writeln!(s, "set xlabel 'k'").unwrap();
    writeln!(s, "set logscale x").unwrap();
    writeln!(s, "strategies = \"{names}\"").unwrap();
    writeln!(s, "set terminal pngcairo size 900,600").unwrap();
    writeln!(s).unwrap();
    writeln!(s, "set output 'ratio.png'").unwrap();
    writeln!(s, "set ylabel 'cost / OPT'").unwrap();
    writeln!(
        s,
        "plot for [st in strategies] '{csv_path}' using 1:(strcol(2) eq st ? $5 : NaN) with linespoints title st"
    )
    .unwrap();
    writeln!(s).unwrap();
    writeln!(s, "set output 'faults.png'").unwrap();
    writeln!(s, "set ylabel 'fault rate'").unwrap();
    writeln!(
        s,
        "plot for [st in strategies] '{csv_path}' using 1:(strcol(2) eq st ? $3/{len}.0 : NaN) with linespoints title st, \\"
    )
    .unwrap();
    writeln!(s, "     '{csv_path}' using 1:(strcol(2) eq word(strategies,1) ? $4/{len}.0 : NaN) with lines title 'opt'").unwrap();
    s
}

/// `cost_X(k) / OPT(k) < c(k)` exactly, for the invariant tests.
pub fn ratio_below(total: u64, trials: u64, opt: u64, c: f64) -> bool {
    let c = BigRational::from_float(c).unwrap_or_else(BigRational::zero);
    BigRational::new(big(total), big(trials)) < c * BigRational::from_integer(big(opt))
}
