use std::process::Command;

use clap::Parser;
use operc::cli::{config_path, load_config, run, write_table, Format, RunConfig};
use operc::estimate::{Quantity, ScalingRow, ScalingTable};
use proptest::prelude::*;

fn run_capture(args: &[&str]) -> (i32, Vec<u8>, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("operc").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (code, out, String::from_utf8(err).unwrap())
}

#[test]
fn config_round_trips_through_json() {
    let cfg = RunConfig::try_parse_from([
        "operc", "theorem2", "--pc-mode", "strip", "--n-list", "8,16,32", "--N", "77", "--seed", "9",
        "--wn-n-list", "16", "--alpha", "0.9",
    ])
    .unwrap();
    let json = serde_json::to_string(&cfg).unwrap();
    let back: RunConfig = serde_json::from_str(&json).unwrap();
    assert_eq!(cfg, back);
}

#[test]
fn empty_table_is_header_only() {
    let t = ScalingTable::new(Quantity::Probability, 4);
    assert_eq!(write_table(&t, Format::Csv), b"n,estimate,stderr,k,N,seed\n");
    assert!(write_table(&t, Format::Jsonl).is_empty());
}

#[test]
fn survival_output_is_identical_across_thread_counts() {
    let base = ["survival", "--p", "0.6447", "--n-list", "4,16,64", "--N", "3000", "--seed", "17"];
    let (c1, o1, _) = run_capture(&[&base[..], &["--threads", "1"]].concat());
    let (c4, o4, _) = run_capture(&[&base[..], &["--threads", "4"]].concat());
    assert_eq!((c1, c4), (0, 0));
    assert_eq!(o1, o4);
    assert!(String::from_utf8(o1).unwrap().starts_with("n,estimate,stderr,k,N,seed\n4,"));
}

#[test]
fn usage_errors_exit_one() {
    for args in [
        &["survival", "--p", "1.2", "--n-list", "4"][..],
        &["survival", "--p", "0.5", "--n-list", "8,4"],
        &["wn", "--p", "0.5", "--n-list", "8", "--alpha", "0.7"],
        &["find-pc", "--mode", "fast"],
        &["cluster", "--p", "0.7", "--n", "5"],
        &["no-such-command"],
    ] {
        let (code, _, err) = run_capture(args);
        assert_eq!(code, 1, "{args:?}: {err}");
        assert!(!err.is_empty());
    }
    assert!(run_capture(&["find-pc", "--mode", "fast"]).2.contains("Coupled"));
}

#[test]
fn help_exits_zero() {
    let (code, out, _) = run_capture(&["--help"]);
    assert_eq!(code, 0);
    assert!(String::from_utf8(out).unwrap().contains("oracle-check"));
}

#[test]
fn failed_audit_exits_three() {
    // V(w,3n) stays far below 0.45 at these scales.
    let (code, out, _) = run_capture(&[
        "audit-box", "--p", "0.6447", "--n-list", "8,16", "--N", "200", "--c-min", "0.45", "--wn-trials", "200",
        "--wn-max-samples", "800",
    ]);
    assert_eq!(code, 3);
    let last = String::from_utf8(out).unwrap().lines().last().unwrap().to_string();
    assert!(last.contains("\"status\":\"fail\""), "{last}");
}

#[test]
fn out_file_gets_config_echo_and_replays() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("w.csv");
    let out_s = out.to_str().unwrap();
    let (code, stdout, _) = run_capture(&[
        "wn", "--p", "0.6447", "--n-list", "16,32", "--wn-trials", "300", "--wn-max-samples", "2048", "--seed", "4",
        "--out", out_s,
    ]);
    assert_eq!(code, 0);
    assert!(stdout.is_empty());
    let first = std::fs::read(&out).unwrap();
    let cfg = load_config(&config_path(&out)).unwrap();
    assert_eq!(cfg.seed, 4);

    let again = dir.path().join("again.csv");
    let (code, _, _) = run_capture(&["replay", config_path(&out).to_str().unwrap(), "--out", again.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(std::fs::read(&again).unwrap(), first);
}

#[test]
fn cluster_export_writes_three_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c.csv");
    let (code, _, err) = run_capture(&["cluster", "--p", "1", "--n", "3", "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let sites = std::fs::read_to_string(&out).unwrap();
    assert_eq!(sites.lines().count(), 1 + 10);
    assert_eq!(sites.lines().next(), Some("x,y"));
    let rn = std::fs::read_to_string(dir.path().join("c.csv.rn_sequence.csv")).unwrap();
    assert_eq!(rn, "k,R_k\n0,0\n1,1\n2,2\n3,3\n");
    assert_eq!(std::fs::read_to_string(dir.path().join("c.csv.renewals")).unwrap(), "0\n");
}

#[test]
fn oracle_check_passes() {
    let (code, out, err) = run_capture(&["oracle-check", "--format", "jsonl"]);
    assert_eq!(code, 0, "{err}");
    let lines = String::from_utf8(out).unwrap();
    assert!(lines.lines().all(|l| l.contains("\"passed\":true")));
}

#[test]
fn binary_reads_seed_from_environment() {
    let bin = env!("CARGO_BIN_EXE_operc");
    let go = |envseed: Option<&str>, flag: Option<&str>| {
        let mut c = Command::new(bin);
        c.args(["crossing", "--kind", "H", "--m", "6", "--n", "6", "--p", "0.6", "--N", "500"]);
        c.env_remove("OPERC_SEED");
        if let Some(s) = envseed {
            c.env("OPERC_SEED", s);
        }
        if let Some(s) = flag {
            c.args(["--seed", s]);
        }
        let o = c.output().unwrap();
        assert!(o.status.success());
        o.stdout
    };
    assert_eq!(go(Some("12"), None), go(None, Some("12")));
    assert_ne!(go(Some("12"), None), go(None, None));
}

proptest! {
    #[test]
    fn csv_floats_parse_back_exactly(rows in prop::collection::vec((0i64..10_000, 0.0f64..1.0, 0.0f64..0.5, 0u64..1000), 0..12)) {
        let mut t = ScalingTable::new(Quantity::Probability, 42);
        for (i, (n, e, s, k)) in rows.iter().enumerate() {
            t.rows.push(ScalingRow { n: *n + i as i64, estimate: *e, stderr: *s, k: *k, trials: 1000, flagged: false });
        }
        let text = String::from_utf8(write_table(&t, Format::Csv)).unwrap();
        let mut lines = text.lines();
        prop_assert_eq!(lines.next(), Some("n,estimate,stderr,k,N,seed"));
        for (line, row) in lines.zip(&t.rows) {
            let f: Vec<&str> = line.split(',').collect();
            prop_assert_eq!(f[0].parse::<i64>().unwrap(), row.n);
            prop_assert_eq!(f[1].parse::<f64>().unwrap().to_bits(), row.estimate.to_bits());
            prop_assert_eq!(f[2].parse::<f64>().unwrap().to_bits(), row.stderr.to_bits());
            prop_assert_eq!(f[3].parse::<u64>().unwrap(), row.k);
            prop_assert_eq!(f[5], "42");
        }
    }
}
