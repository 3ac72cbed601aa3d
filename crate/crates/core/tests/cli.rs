//! The `modetab` binary and its in-process entry point.

mod common;

use std::fs;
use std::path::PathBuf;
use std::process::Command;

use modetab::cli::run_cli;

fn scratch(name: &str, contents: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("modetab-cli-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    fs::write(&path, contents).unwrap();
    path
}

fn call(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("modetab").chain(args.iter().copied());
    let code = run_cli(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

#[test]
fn binary_prints_cycle_answers() {
    let file = scratch("cycle.pl", common::CYCLE);
    let out = Command::new(env!("CARGO_BIN_EXE_modetab"))
        .args(["run", file.to_str().unwrap(), "--query", "path(a, Z)"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "Z=b\nZ=a\n");
}

#[test]
fn run_honours_the_scheduling_flag() {
    let file = scratch("links.pl", common::LINK_COUNT);
    let f = file.to_str().unwrap();
    assert_eq!(call(&["run", f, "-q", "num_nodes(N)", "--sched", "local"]).1, "N=3\n");
    assert_eq!(call(&["run", f, "-q", "num_nodes(N)", "--sched", "batched"]).1, "N=6\n");
    assert_eq!(call(&["run", f, "-q", "num_nodes(N)"]).1, "N=6\n");
}

#[test]
fn run_reports_stats_and_events() {
    let file = scratch("min.pl", common::MIN_REPLACEMENT);
    let trace = file.with_extension("jsonl");
    let (code, out, _) =
        call(&["run", file.to_str().unwrap(), "-q", "path(a, d, C)", "--stats", "--trace-events", trace.to_str().unwrap()]);
    assert_eq!(code, 0);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("C=3"));
    assert_eq!(lines.next(), Some("% stats"));
    assert!(lines.all(|l| l.starts_with("% ")));
    assert!(out.contains("invalidations"));
    let events = fs::read_to_string(&trace).unwrap();
    let parsed: Vec<serde_json::Value> = events.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert!(parsed.iter().any(|e| e["event"] == "insert" && e["outcome"].as_str().unwrap().starts_with("replaced")));
    assert!(parsed.iter().any(|e| e["event"] == "complete"));
}

#[test]
fn run_exit_codes() {
    let file = scratch("cycle2.pl", common::CYCLE);
    let f = file.to_str().unwrap();
    assert_eq!(call(&["run", f, "-q", "path(c, Z)"]).0, 1);
    let (code, _, err) = call(&["run", "/nonexistent/prog.pl", "-q", "p(X)"]);
    assert_eq!(code, 2);
    assert!(err.starts_with("modetab: cannot read"), "{err}");
    assert_eq!(call(&["run", f, "-q", "path(a, "]).0, 2);
    let bad = scratch("bad.pl", "p(X :- q.");
    assert_eq!(call(&["run", bad.to_str().unwrap(), "-q", "p(X)"]).0, 2);
    let fused = scratch("counted.pl", common::COUNTED_PLAIN);
    assert_eq!(call(&["run", fused.to_str().unwrap(), "-q", "path(a, Z, N)", "--max-derivations", "1000"]).0, 2);
}

#[test]
fn gen_prints_a_runnable_program() {
    let (code, out, _) = call(&["gen", "knapsack", "--size", "6", "--seed", "3"]);
    assert_eq!(code, 0);
    let first = out.lines().next().unwrap();
    let query = first.strip_prefix("% query: ").unwrap().trim_end_matches('.');
    assert!(query.starts_with("ks("), "{first}");
    let file = scratch("ks.pl", &out);
    let (code, answers, _) = call(&["run", file.to_str().unwrap(), "-q", query]);
    assert_eq!(code, 0);
    assert!(!answers.is_empty());
    assert_eq!(call(&["gen", "knapsack", "--size", "6", "--seed", "3"]).1, out);
}

#[test]
fn bench_checks_and_writes_json() {
    let json = scratch("report.json", "");
    let (code, out, _) =
        call(&["bench", "shortest_first", "--size", "12", "--seed", "5", "--check", "--json", json.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(out.lines().count(), 2);
    assert!(out.lines().all(|l| l.contains("match=true")));
    let reports: serde_json::Value = serde_json::from_str(&fs::read_to_string(&json).unwrap()).unwrap();
    let arr = reports.as_array().unwrap();
    assert_eq!(arr.len(), 2);
    for r in arr {
        assert_eq!(r["instance"]["name"], "shortest_first");
        assert_eq!(r["match"], true);
        assert_eq!(r["ms"].as_array().unwrap().len(), 3);
        for k in ["insertions", "invalidations", "propagations", "resumptions"] {
            assert!(r["stats"][k].is_u64());
        }
    }
}

#[test]
fn bench_rejects_out_of_range_sizes() {
    let (code, _, err) = call(&["bench", "matrix", "--size", "101"]);
    assert_eq!(code, 2);
    assert!(err.contains("usage error"), "{err}");
    assert_eq!(call(&["bench", "nosuch", "--size", "3"]).0, 2);
}

#[test]
fn pagerank_bench_warns_about_batched() {
    let (code, out, err) = call(&["bench", "pagerank", "--size", "3", "--seed", "1", "--sched", "local,batched", "--check"]);
    assert_eq!(code, 0);
    assert_eq!(out.lines().count(), 1);
    assert!(err.contains("local scheduling only"));
}
