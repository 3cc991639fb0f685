//! Command-line front end.
//!
//! Human-readable summaries go to standard output; tables go to the file
//! named by `--out` as CSV. Exit codes: 0 success, 1 domain, parse, capacity
//! or I/O error, 2 usage error, 3 failed certificate check.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num_rational::Rational64;

use crate::dualcert::{
    check_feasibility, check_primal_dual_bound, check_primal_dual_bound_steps, dual_cost,
    run_greedydual_certified, Certificate,
};
use crate::error::{Error, Result};
use crate::offline::{opt_cost, opt_flow_with_cap, OptMethod, DEFAULT_FLOW_CAP};
use crate::phases::{mark_upper_bound_f64, opt_phase_lower_bound, partition};
use crate::strategies::{run, EventKind, RelabelPolicy, StrategySpec};
use crate::sweep::{
    count_violators, gnuplot_script, parse_rational, sweep_with, to_csv, violator_bound,
    RatioFamily, SweepConfig, DEFAULT_BOUND_CONSTANT, DEFAULT_SEED,
};
use crate::trace::{parse_trace, RequestTrace};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_CHECK_FAILED: i32 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "kdual",
    version,
    about = "Competitive analysis of paging and weighted caching"
)]
pub struct Cli {
    /// More output (repeatable).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run one online strategy and report its cost.
    Simulate(SimulateArgs),
    /// Offline optimum cost.
    Optimal(OptimalArgs),
    /// Run GreedyDual with its dual certificate and check it.
    Certify(CertifyArgs),
    /// k-phase statistics.
    Phases(PhasesArgs),
    /// Sweep k over 1..n and count violators.
    Sweep(SweepArgs),
}

#[derive(Args, Debug)]
pub struct TraceArg {
    /// Trace file: one `<label> [<weight>]` per line.
    #[arg(long, value_name = "PATH")]
    pub trace: PathBuf,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub trace: TraceArg,
    #[arg(long, value_parser = parse_positive)]
    pub k: usize,
    /// lru, fifo, fwf, balance, mark, greedydual[:max|:min]
    #[arg(long, alias = "strategies", default_value = "lru")]
    pub strategy: String,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Event log CSV.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct OptimalArgs {
    #[command(flatten)]
    pub trace: TraceArg,
    #[arg(long, value_parser = parse_positive)]
    pub k: usize,
    /// auto, flow or belady
    #[arg(long, default_value = "auto")]
    pub opt: String,
    /// Optimal schedule CSV (uses the flow solver).
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CertifyArgs {
    #[command(flatten)]
    pub trace: TraceArg,
    #[arg(long, value_parser = parse_positive)]
    pub k: usize,
    /// Servers of the comparison optimum; defaults to k.
    #[arg(long, value_parser = parse_positive)]
    pub h: Option<usize>,
    /// max or min
    #[arg(long, default_value = "max")]
    pub policy: String,
    /// Certificate file.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct PhasesArgs {
    #[command(flatten)]
    pub trace: TraceArg,
    #[arg(long, value_parser = parse_positive)]
    pub k: usize,
    /// Add phase start and end indices to the CSV.
    #[arg(long)]
    pub boundaries: bool,
    /// Per-phase CSV.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    pub trace: TraceArg,
    #[arg(long, value_parser = parse_positive)]
    pub n: usize,
    /// Comma-separated strategy list.
    #[arg(long, alias = "strategy", default_value = "lru,fifo,fwf")]
    pub strategies: String,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Mark runs per k.
    #[arg(long, default_value_t = 100, value_parser = parse_positive_u64)]
    pub trials: u64,
    /// auto, flow or belady
    #[arg(long, default_value = "auto")]
    pub opt: String,
    /// log:A[+S], loglog:B[+S] or const:C
    #[arg(long = "c-family", default_value = "log:4+1")]
    pub c_family: String,
    #[arg(long, default_value = "1")]
    pub d: String,
    /// Table CSV.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Also write a gnuplot script next to the CSV.
    #[arg(long, requires = "out")]
    pub gnuplot: bool,
}

fn parse_positive(s: &str) -> std::result::Result<usize, String> {
    match s.parse::<usize>() {
        Ok(v) if v >= 1 => Ok(v),
        _ => Err(format!("'{s}' is not a positive integer")),
    }
}

fn parse_positive_u64(s: &str) -> std::result::Result<u64, String> {
    parse_positive(s).map(|v| v as u64)
}

/// Parses `args` (including the program name), runs the command and returns
/// the exit code.
pub fn run_cli<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                stderr.write_all(text.as_bytes())
            } else {
                stdout.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match execute(&cli, stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_ERROR
        }
    }
}

fn load(arg: &TraceArg) -> Result<RequestTrace> {
    let text = std::fs::read_to_string(&arg.trace).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", arg.trace.display()),
        ))
    })?;
    parse_trace(&text)
}

fn write_file(path: &Path, data: &str) -> Result<()> {
    std::fs::write(path, data).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })
}

pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<i32> {
    let mut text = String::new();
    let code = match &cli.command {
        Command::Simulate(a) => simulate(a, cli.verbose, &mut text)?,
        Command::Optimal(a) => optimal(a, &mut text)?,
        Command::Certify(a) => certify(a, &mut text)?,
        Command::Phases(a) => phases(a, cli.verbose, &mut text)?,
        Command::Sweep(a) => sweep(a, cli.verbose, &mut text)?,
    };
    out.write_all(text.as_bytes())?;
    Ok(code)
}

fn event_log(res: &crate::strategies::SimulationResult, trace: &RequestTrace) -> String {
    let mut s = String::from("index,node,event,evicted,cost\n");
    for ev in &res.events {
        let (kind, evicted) = match &ev.kind {
            EventKind::Hit => ("hit", String::new()),
            EventKind::FreePlace => ("place", String::new()),
            EventKind::Refill => ("refill", String::new()),
            EventKind::Move { evicted, .. } => ("move", trace.label(*evicted).to_string()),
            EventKind::Flush { evicted, .. } => (
                "flush",
                evicted
                    .iter()
                    .map(|&n| trace.label(n))
                    .collect::<Vec<_>>()
                    .join(" "),
            ),
        };
        writeln!(
            s,
            "{},{},{kind},{evicted},{}",
            ev.index,
            trace.label(ev.node),
            ev.cost()
        )
        .unwrap();
    }
    s
}

fn simulate(a: &SimulateArgs, verbose: u8, o: &mut String) -> Result<i32> {
    let spec: StrategySpec = a.strategy.parse()?;
    let trace = load(&a.trace)?;
    let res = run(spec, a.k, &trace, a.seed);
    writeln!(o, "strategy {spec}").unwrap();
    writeln!(o, "k {}", a.k).unwrap();
    writeln!(o, "requests {}", trace.len()).unwrap();
    writeln!(o, "moves {}", res.moves()).unwrap();
    writeln!(o, "cost {}", res.total_cost).unwrap();
    let log = event_log(&res, &trace);
    if verbose > 0 {
        o.push_str(&log);
    }
    if let Some(p) = &a.out {
        write_file(p, &log)?;
    }
    Ok(EXIT_OK)
}

fn optimal(a: &OptimalArgs, o: &mut String) -> Result<i32> {
    let method: OptMethod = a.opt.parse()?;
    let trace = load(&a.trace)?;
    let resolved = method.resolve(&trace, DEFAULT_FLOW_CAP)?;
    let cost = opt_cost(&trace, a.k, resolved, DEFAULT_FLOW_CAP)?;
    let name = match resolved {
        OptMethod::Belady => "belady",
        _ => "flow",
    };
    writeln!(o, "method {name}").unwrap();
    writeln!(o, "k {}", a.k).unwrap();
    writeln!(o, "cost {cost}").unwrap();
    if let Some(p) = &a.out {
        let sched = opt_flow_with_cap(&trace, a.k, DEFAULT_FLOW_CAP)?;
        debug_assert_eq!(sched.cost, cost);
        let reqs = trace.requests();
        let mut csv = String::from("request,node,predecessor,cost\n");
        for (j, &pred) in sched.predecessor.iter().enumerate() {
            let c = crate::offline::request_distance(&trace, pred, j + 1);
            writeln!(csv, "{},{},{pred},{c}", j + 1, trace.label(reqs[j])).unwrap();
        }
        write_file(p, &csv)?;
    }
    Ok(EXIT_OK)
}

fn certify(a: &CertifyArgs, o: &mut String) -> Result<i32> {
    let policy = match a.policy.trim().to_ascii_lowercase().as_str() {
        "max" => RelabelPolicy::MaxLower,
        "min" => RelabelPolicy::MinLower,
        other => {
            return Err(Error::Domain(format!(
                "unknown relabel policy '{other}'; expected max or min"
            )))
        }
    };
    let h = a.h.unwrap_or(a.k);
    if h > a.k {
        return Err(Error::Domain(format!("h = {h} exceeds k = {}", a.k)));
    }
    let trace = load(&a.trace)?;
    let cert_run = run_greedydual_certified(a.k, &trace, policy);
    let violations = check_feasibility(&cert_run.dual, &trace);
    let final_bound = check_primal_dual_bound(&cert_run, a.k, h);
    let steps = check_primal_dual_bound_steps(&cert_run, a.k, h);
    let dc = dual_cost(&cert_run.dual, h);
    let ratio = Rational64::new(a.k as i64, (a.k - h + 1) as i64);
    let pass = violations.is_empty() && final_bound && steps.is_ok();

    writeln!(
        o,
        "k {} h {h} policy {}",
        a.k,
        a.policy.trim().to_ascii_lowercase()
    )
    .unwrap();
    writeln!(o, "cost {}", cert_run.result.total_cost).unwrap();
    writeln!(o, "dual cost {dc}").unwrap();
    writeln!(o, "bound {ratio}").unwrap();
    writeln!(o, "feasibility violations {}", violations.len()).unwrap();
    match steps {
        Ok(()) => writeln!(o, "stepwise bound ok").unwrap(),
        Err(i) => writeln!(o, "stepwise bound fails at request {i}").unwrap(),
    }
    writeln!(o, "verdict {}", if pass { "PASS" } else { "FAIL" }).unwrap();
    if let Some(p) = &a.out {
        write_file(p, &Certificate::from_run(&cert_run, &trace).to_text())?;
    }
    Ok(if pass { EXIT_OK } else { EXIT_CHECK_FAILED })
}

fn phases(a: &PhasesArgs, verbose: u8, o: &mut String) -> Result<i32> {
    let trace = load(&a.trace)?;
    let p = partition(&trace, a.k);
    let av = p.avenew();
    writeln!(o, "k {}", a.k).unwrap();
    writeln!(o, "phases {}", p.numphases()).unwrap();
    if av.defined {
        writeln!(o, "avenew {}", av.value).unwrap();
    } else {
        writeln!(o, "avenew undefined").unwrap();
    }
    writeln!(o, "mark bound {:.6}", mark_upper_bound_f64(&p)).unwrap();
    writeln!(
        o,
        "opt lower bound (h = k) {}",
        opt_phase_lower_bound(&p, a.k)
    )
    .unwrap();

    let mut csv = String::from(if a.boundaries {
        "phase,start,end,distinct,new\n"
    } else {
        "phase,distinct,new\n"
    });
    for i in 0..p.boundaries.len() {
        let new = if i == 0 {
            String::new()
        } else {
            p.new_counts[i - 1].to_string()
        };
        if a.boundaries {
            let span = p.span(i);
            writeln!(
                csv,
                "{},{},{},{},{new}",
                i + 1,
                span.start,
                span.end,
                p.distinct[i]
            )
            .unwrap();
        } else {
            writeln!(csv, "{},{},{new}", i + 1, p.distinct[i]).unwrap();
        }
    }
    if verbose > 0 {
        o.push_str(&csv);
    }
    if let Some(path) = &a.out {
        write_file(path, &csv)?;
    }
    Ok(EXIT_OK)
}

fn sweep(a: &SweepArgs, verbose: u8, o: &mut String) -> Result<i32> {
    let strategies = a
        .strategies
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(str::parse)
        .collect::<Result<Vec<StrategySpec>>>()?;
    if strategies.is_empty() {
        return Err(Error::Domain("no strategies given".into()));
    }
    let family: RatioFamily = a.c_family.parse()?;
    let d = parse_rational(&a.d)?;
    if d <= Rational64::from_integer(0) {
        return Err(Error::Domain(format!("d must be positive, got {}", a.d)));
    }
    let cfg = SweepConfig {
        n: a.n,
        opt_method: a.opt.parse()?,
        flow_cap: DEFAULT_FLOW_CAP,
        mark_trials: a.trials,
        seed: a.seed,
    };
    let trace = load(&a.trace)?;
    let table = sweep_with(&trace, &strategies, &cfg)?;

    writeln!(
        o,
        "n {} family {family} d {d} opt(1) {}",
        a.n, table.opt_single
    )
    .unwrap();
    for &s in &strategies {
        let rep = count_violators(&table, s, family, d)?;
        let bound = violator_bound(s, family, d, a.n, DEFAULT_BOUND_CONSTANT)
            .map(|b| format!("{b:.3}"))
            .unwrap_or_else(|_| "n/a".into());
        write!(o, "{s}: violators {} bound {bound}", rep.count).unwrap();
        if !rep.uncertain.is_empty() {
            write!(o, " uncertain {}", rep.uncertain.len()).unwrap();
        }
        writeln!(o).unwrap();
        if verbose > 0 && !rep.ks.is_empty() {
            let ks: Vec<String> = rep.ks.iter().map(|k| k.to_string()).collect();
            writeln!(o, "  k = {}", ks.join(" ")).unwrap();
        }
    }
    let csv = to_csv(&table, family, d);
    if let Some(path) = &a.out {
        write_file(path, &csv)?;
        if a.gnuplot {
            let name = path
                .file_name()
                .map(|f| f.to_string_lossy().into_owned())
                .unwrap_or_default();
            write_file(&path.with_extension("gp"), &gnuplot_script(&table, &name))?;
        }
    } else {
        o.push_str(&csv);
    }
    Ok(EXIT_OK)
}
