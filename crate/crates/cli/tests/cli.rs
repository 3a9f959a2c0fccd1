//! End-to-end checks of the binary: exit codes, file outputs, and
//! determinism of the deterministic subcommands.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_expire-treap"))
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("expire-treap-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn assert_success(out: &Output) {
    assert!(
        out.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn generate_writes_deterministic_trace() {
    let out_a = tmp("trace_a.txt");
    let out_b = tmp("trace_b.txt");
    for out in [&out_a, &out_b] {
        let res = bin()
            .args(["generate", "--b", "0.5", "--l", "4", "--n", "1000"])
            .args(["--lifetime", "fixed:500", "--seed", "7"])
            .args(["--out", out.to_str().unwrap()])
            .output()
            .unwrap();
        assert_success(&res);
    }
    let a = std::fs::read(&out_a).unwrap();
    let b = std::fs::read(&out_b).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, b, "same flags and seed must produce identical bytes");
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("bmodel b=0.5 l=4 N=1000 seed=7 bucket_ms=100\n"));
    assert_eq!(text.lines().count(), 1001, "header plus one line per record");
}

#[test]
fn seed_comes_from_environment() {
    let with_env = tmp("trace_env.txt");
    let with_flag = tmp("trace_flag.txt");
    let res = bin()
        .args(["generate", "--b", "0.6", "--l", "3", "--n", "500"])
        .args(["--out", with_env.to_str().unwrap()])
        .env("EXPIRE_TREAP_SEED", "99")
        .output()
        .unwrap();
    assert_success(&res);
    let res = bin()
        .args(["generate", "--b", "0.6", "--l", "3", "--n", "500", "--seed", "99"])
        .args(["--out", with_flag.to_str().unwrap()])
        .output()
        .unwrap();
    assert_success(&res);
    assert_eq!(
        std::fs::read(&with_env).unwrap(),
        std::fs::read(&with_flag).unwrap()
    );
}

#[test]
fn bench_emits_csv_reports() {
    let cfg_path = tmp("scenario.cfg");
    std::fs::write(
        &cfg_path,
        "name=clitest\nstructure=avl-heap\nb=0.5\nl=3\nn=1600\nlifetime=fixed:300\n\
         bucket_ms=100\ntarget_db_size=500\nops_per_aggregation=1000\n\
         measurement=maintenance\nseed=3\n",
    )
    .unwrap();
    let out_dir = tmp("results");
    let res = bin()
        .args(["bench", "--config", cfg_path.to_str().unwrap()])
        .args(["--out", out_dir.to_str().unwrap()])
        .output()
        .unwrap();
    assert_success(&res);
    let rows = std::fs::read_to_string(out_dir.join("clitest_rows.csv")).unwrap();
    assert!(rows.starts_with(
        "interval_index,wall_ms,inserts,expirations,removes,live_size,heap_entries,tombstones\n"
    ));
    assert!(rows.lines().count() > 1);
    let summary = std::fs::read_to_string(out_dir.join("clitest_summary.csv")).unwrap();
    assert!(summary.starts_with("metric,value\n"));
    assert!(summary.contains("total_ops,"));
}

#[test]
fn demo_accounts_for_every_record() {
    let trace_path = tmp("demo_trace.txt");
    let res = bin()
        .args(["generate", "--b", "0.7", "--l", "4", "--n", "800"])
        .args(["--lifetime", "fixed:200", "--seed", "5"])
        .args(["--out", trace_path.to_str().unwrap()])
        .output()
        .unwrap();
    assert_success(&res);
    let res = bin()
        .args(["demo", "--trace", trace_path.to_str().unwrap(), "--cadence", "50"])
        .output()
        .unwrap();
    assert_success(&res);
    let text = String::from_utf8(res.stdout).unwrap();
    assert!(text.contains("records inserted:  800"), "{text}");
    assert!(text.contains("expired via hook:  800"), "{text}");
    assert!(text.contains("final live size:   0"), "{text}");
}

#[test]
fn verify_succeeds_and_reports() {
    let res = bin()
        .args(["verify", "--ops", "2000", "--seed", "42", "--runs", "2"])
        .output()
        .unwrap();
    assert_success(&res);
    let text = String::from_utf8(res.stdout).unwrap();
    assert!(text.contains("seed 42: ok"));
    assert!(text.contains("seed 43: ok"));
}

#[test]
fn usage_errors_exit_with_two() {
    let res = bin().args(["generate", "--frobnicate"]).output().unwrap();
    assert_eq!(res.status.code(), Some(2));

    let res = bin().args(["no-such-command"]).output().unwrap();
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn runtime_errors_exit_with_one() {
    // Unreadable config path.
    let res = bin()
        .args(["bench", "--config", "/definitely/not/here.cfg", "--out", "/tmp"])
        .output()
        .unwrap();
    assert_eq!(res.status.code(), Some(1));
    assert!(!String::from_utf8_lossy(&res.stderr).is_empty());

    // Bias outside [0.5, 1.0).
    let res = bin()
        .args(["generate", "--b", "0.2", "--l", "2", "--n", "10", "--out", "/tmp/x.txt"])
        .output()
        .unwrap();
    assert_eq!(res.status.code(), Some(1));
}
