use std::collections::HashMap;
use std::process::Command;

use mogd_core::{Method, ProblemRegistry};
use mopbench::csv_io::{export_records, export_summaries, parse_records, parse_summaries};
use mopbench::{nondominated_filter, run_benchmark, summarize, write_fronts, Plan, RunRecord};
use nalgebra::DVector;

fn plan(problems: &[&str], methods: &[Method], runs: usize, seed: u64) -> Plan {
    Plan::new(problems.iter().map(|s| s.to_string()).collect(), methods.to_vec(), runs, seed)
}

fn strip_time(records: &[RunRecord]) -> Vec<RunRecord> {
    records.iter().cloned().map(|r| RunRecord { time_ms: 0.0, ..r }).collect()
}

#[test]
fn methods_share_initial_points() {
    let reg = ProblemRegistry::with_builtins();
    let records = run_benchmark(&reg, &plan(&["BK1", "QPa"], &Method::ALL, 10, 7)).unwrap();
    assert_eq!(records.len(), 2 * 5 * 10);
    let mut starts: HashMap<(String, usize), DVector<f64>> = HashMap::new();
    for r in &records {
        let first = starts.entry((r.problem.clone(), r.run_index)).or_insert_with(|| r.initial_point.clone());
        assert_eq!(first, &r.initial_point);
    }
    let distinct: std::collections::HashSet<String> = starts.values().map(|x| format!("{x:?}")).collect();
    assert_eq!(distinct.len(), starts.len());
}

#[test]
fn repeated_invocations_are_identical() {
    let reg = ProblemRegistry::with_builtins();
    let p = plan(&["QPb", "JOS1a"], &[Method::Vmmo, Method::BbdmoVm], 4, 99);
    let a = run_benchmark(&reg, &p).unwrap();
    let b = run_benchmark(&reg, &p).unwrap();
    assert_eq!(strip_time(&a), strip_time(&b));
    let other = run_benchmark(&reg, &Plan { master_seed: 100, ..p }).unwrap();
    assert_ne!(strip_time(&a), strip_time(&other));
}

#[test]
fn records_are_sorted_regardless_of_scheduling() {
    let reg = ProblemRegistry::with_builtins();
    let records = run_benchmark(&reg, &plan(&["QPa", "BK1"], &[Method::BbdmoVm, Method::Sdmo], 6, 1)).unwrap();
    let keys: Vec<_> = records.iter().map(|r| (r.problem.clone(), r.method.clone(), r.run_index)).collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
}

#[test]
fn fresh_instances_differ_between_runs() {
    let reg = ProblemRegistry::with_builtins();
    let shared = run_benchmark(&reg, &plan(&["QPa"], &[Method::Sdmo], 3, 5)).unwrap();
    let fresh = run_benchmark(&reg, &Plan { fresh_instance_per_run: true, ..plan(&["QPa"], &[Method::Sdmo], 3, 5) }).unwrap();
    for (s, f) in shared.iter().zip(&fresh) {
        assert_eq!(s.initial_point, f.initial_point);
        assert_ne!(s.final_values, f.final_values);
    }
}

#[test]
fn bk1_barzilai_borwein_converges_at_once() {
    let reg = ProblemRegistry::with_builtins();
    let records = run_benchmark(&reg, &plan(&["BK1"], &[Method::Bbdmo, Method::BbdmoVm], 200, 42)).unwrap();
    for s in summarize(&records).unwrap() {
        assert!((1.0..=3.0).contains(&s.mean_iter), "{}: {}", s.method, s.mean_iter);
        assert_eq!(s.converged_fraction, 1.0);
    }
    assert!(records.iter().all(|r| r.fevals >= r.iterations && r.iterations <= 500));
}

#[test]
fn summaries_ignore_record_order() {
    let reg = ProblemRegistry::with_builtins();
    let mut records = run_benchmark(&reg, &plan(&["QPa"], &[Method::Bbdmo, Method::BbdmoVm], 8, 3)).unwrap();
    let a = summarize(&records).unwrap();
    records.reverse();
    records.swap(1, 5);
    assert_eq!(a, summarize(&records).unwrap());
}

#[test]
fn csv_roundtrip_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let reg = ProblemRegistry::with_builtins();
    let records = run_benchmark(&reg, &plan(&["BK1", "QPb"], &[Method::Sdmo, Method::BbdmoVm], 3, 11)).unwrap();

    let path = dir.path().join("records.csv");
    export_records(&records, &path).unwrap();
    let back = parse_records(&path).unwrap();
    assert_eq!(back.len(), records.len());
    for (a, b) in records.iter().zip(&back) {
        assert_eq!((&a.problem, &a.method, a.run_index), (&b.problem, &b.method, b.run_index));
        assert_eq!((a.iterations, a.fevals, a.status), (b.iterations, b.fevals, b.status));
        assert_eq!(a.time_ms.to_bits(), b.time_ms.to_bits());
        assert_eq!(a.final_values, b.final_values);
    }

    let summaries = summarize(&records).unwrap();
    let spath = dir.path().join("summary.csv");
    export_summaries(&summaries, &spath).unwrap();
    assert_eq!(parse_summaries(&spath).unwrap(), summaries);
}

#[test]
fn empty_record_list_gives_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.csv");
    export_records(&[], &path).unwrap();
    assert_eq!(std::fs::read_to_string(&path).unwrap(), "problem,method,run,iters,fevals,time_ms,status\n");
    assert!(parse_records(&path).unwrap().is_empty());
}

#[test]
fn front_files_hold_mutually_nondominated_rows() {
    let dir = tempfile::tempdir().unwrap();
    let reg = ProblemRegistry::with_builtins();
    let records = run_benchmark(&reg, &plan(&["QPa"], &[Method::BbdmoVm], 30, 2)).unwrap();
    let files = write_fronts(&records, &dir.path().join("fronts")).unwrap();
    assert_eq!(files.len(), 1);
    let mut reader = csv::Reader::from_path(&files[0]).unwrap();
    let header: Vec<String> = reader.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header.len(), 2 + 10);
    assert_eq!((header[0].as_str(), header[2].as_str(), header[11].as_str()), ("f1", "x1", "x10"));
    let rows: Vec<DVector<f64>> = reader
        .records()
        .map(|r| DVector::from_iterator(2, r.unwrap().iter().take(2).map(|v| v.parse::<f64>().unwrap())))
        .collect();
    assert!(!rows.is_empty());
    assert_eq!(nondominated_filter(&rows).len(), rows.len());
}

fn mopbench(args: &[&str], env: Option<&str>) -> (i32, String) {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_mopbench"));
    cmd.args(args).env_remove("MOPBENCH_SEED");
    if let Some(seed) = env {
        cmd.env("MOPBENCH_SEED", seed);
    }
    let out = cmd.output().unwrap();
    (out.status.code().unwrap(), String::from_utf8(out.stdout).unwrap())
}

#[test]
fn cli_exit_codes_and_seed_override() {
    let dir = tempfile::tempdir().unwrap();
    let csv = |name: &str| dir.path().join(name).to_str().unwrap().to_string();
    let base = ["run", "--problems", "QPa", "--methods", "sdmo,bbdmo_vm", "--runs", "3"];

    let (code, _) = mopbench(&[&base[..], &["--seed", "5", "--out", &csv("a.csv")]].concat(), None);
    assert_eq!(code, 0);
    let (code, _) = mopbench(&[&base[..], &["--seed", "9", "--out", &csv("b.csv")]].concat(), Some("5"));
    assert_eq!(code, 0);
    let strip = |p: String| strip_time(&parse_records(std::path::Path::new(&p)).unwrap());
    assert_eq!(strip(csv("a.csv")), strip(csv("b.csv")));

    assert_eq!(mopbench(&["run", "--problems", "NOPE"], None).0, 2);
    assert_eq!(mopbench(&["run", "--problems", "BK1", "--methods", "newton"], None).0, 2);
    assert_eq!(mopbench(&["run", "--problems", "BK1", "--tol", "-1"], None).0, 2);
    assert_eq!(mopbench(&["run", "--problems", "BK1", "--runs", "1"], Some("x")).0, 2);
    let missing = dir.path().join("no/such/dir/out.csv");
    assert_eq!(mopbench(&["run", "--problems", "BK1", "--runs", "1", "--out", missing.to_str().unwrap()], None).0, 3);

    let (code, listing) = mopbench(&["list"], None);
    assert_eq!(code, 0);
    assert_eq!(listing.lines().count(), 12);
}
