use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use kdual::cli::run_cli;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_kdual"))
}

fn write_trace(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn exec(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn simulate_prints_cost() {
    let dir = tempfile::tempdir().unwrap();
    let t = write_trace(dir.path(), "t.txt", "a\nb\nc\na\n");
    let o = exec(&[
        "simulate",
        "--strategy",
        "lru",
        "--k",
        "2",
        "--trace",
        t.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("cost 2\n"));
}

#[test]
fn simulate_writes_event_log() {
    let dir = tempfile::tempdir().unwrap();
    let t = write_trace(dir.path(), "t.txt", "a 3\nb\nc\na\n");
    let out = dir.path().join("ev.csv");
    let o = exec(&[
        "simulate",
        "--strategy",
        "fwf",
        "--k",
        "2",
        "--trace",
        t.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let log = std::fs::read_to_string(out).unwrap();
    assert_eq!(
        log,
        "index,node,event,evicted,cost\n0,a,place,,0\n1,b,place,,0\n2,c,flush,a b,4\n3,a,refill,,0\n"
    );
}

#[test]
fn certify_passes_and_reports_ratio() {
    let dir = tempfile::tempdir().unwrap();
    let t = write_trace(dir.path(), "t.txt", "a\nb\nc\na\n");
    let cert = dir.path().join("cert.txt");
    let o = exec(&[
        "certify",
        "--k",
        "2",
        "--h",
        "1",
        "--trace",
        t.to_str().unwrap(),
        "--out",
        cert.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(s.contains("bound 1\n"), "{s}");
    assert!(s.contains("verdict PASS"));
    let text = std::fs::read_to_string(cert).unwrap();
    let c = kdual::dualcert::Certificate::parse(&text).unwrap();
    assert!(c.verify(1).unwrap().feasible);
}

#[test]
fn certify_rejects_h_above_k() {
    let dir = tempfile::tempdir().unwrap();
    let t = write_trace(dir.path(), "t.txt", "a\nb\n");
    let o = exec(&[
        "certify",
        "--k",
        "2",
        "--h",
        "3",
        "--trace",
        t.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn optimal_and_phases() {
    let dir = tempfile::tempdir().unwrap();
    let t = write_trace(dir.path(), "t.txt", "a\nb\nc\na\nb\nd\n");
    let o = exec(&["optimal", "--k", "2", "--trace", t.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("method belady\nk 2\ncost 3\n"));
    let out = dir.path().join("ph.csv");
    let o = exec(&[
        "phases",
        "--k",
        "2",
        "--boundaries",
        "--trace",
        t.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("phases 2\navenew 3/2\n"));
    assert_eq!(
        std::fs::read_to_string(out).unwrap(),
        "phase,start,end,distinct,new\n1,0,2,2,\n2,2,4,2,1\n3,4,6,2,2\n"
    );
}

#[test]
fn sweep_writes_csv_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let t = write_trace(
        dir.path(),
        "t.txt",
        &kdual::trace::generate_random(12, 300, 1, 1).serialize(),
    );
    let out = dir.path().join("sweep.csv");
    let o = exec(&[
        "sweep",
        "--trace",
        t.to_str().unwrap(),
        "--n",
        "8",
        "--strategies",
        "lru,fwf",
        "--c-family",
        "log:4",
        "--d",
        "1",
        "--out",
        out.to_str().unwrap(),
        "--gnuplot",
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let csv = std::fs::read_to_string(&out).unwrap();
    assert_eq!(csv.lines().count(), 1 + 16);
    assert!(csv.starts_with("k,strategy,cost,opt,ratio,phases,avenew,violator\n"));
    assert!(dir.path().join("sweep.gp").exists());
    assert!(stdout(&o).contains("lru: violators"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let good = write_trace(dir.path(), "g.txt", "a 2\nb\n");
    let bad = write_trace(dir.path(), "b.txt", "a x\n");
    let neg = write_trace(dir.path(), "n.txt", "a -3\n");
    let g = good.to_str().unwrap();
    // usage errors
    assert_eq!(exec(&[]).status.code(), Some(2));
    assert_eq!(
        exec(&["simulate", "--k", "0", "--trace", g]).status.code(),
        Some(2)
    );
    assert_eq!(exec(&["bogus"]).status.code(), Some(2));
    assert_eq!(
        exec(&["sweep", "--trace", g, "--n", "2", "--gnuplot"])
            .status
            .code(),
        Some(2)
    );
    // domain, parse, io, capacity
    assert_eq!(
        exec(&["simulate", "--k", "1", "--trace", "/nonexistent/t.txt"])
            .status
            .code(),
        Some(1)
    );
    let o = exec(&["simulate", "--k", "1", "--trace", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 1"));
    assert_eq!(
        exec(&["simulate", "--k", "1", "--trace", neg.to_str().unwrap()])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        exec(&["optimal", "--k", "1", "--opt", "belady", "--trace", g])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        exec(&["simulate", "--k", "1", "--strategy", "opt", "--trace", g])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        exec(&["sweep", "--trace", g, "--n", "2", "--c-family", "cubic:1"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(exec(&["--help"]).status.code(), Some(0));
}

#[test]
fn in_process_entry_point() {
    let dir = tempfile::tempdir().unwrap();
    let t = write_trace(dir.path(), "t.txt", "a\nb\nc\na\n");
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run_cli(
        [
            "kdual",
            "simulate",
            "--k",
            "2",
            "--trace",
            t.to_str().unwrap(),
        ],
        &mut out,
        &mut err,
    );
    assert_eq!(code, 0);
    assert!(String::from_utf8(out).unwrap().contains("cost 2"));
    assert!(err.is_empty());
}
