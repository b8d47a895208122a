use std::fs;
use std::path::Path;
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use tempfile::tempdir;
use wsci::commands::{DetectionRow, PredictionRow};
use wsci::report::{read_csv, read_jsonl, EpochMetrics, SummaryRow};
use wsci_core::eval::RunReport;

fn wsci(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wsci"))
        .args(args)
        .current_dir(dir)
        .env_remove("WSCI_SEED")
        .output()
        .expect("spawn wsci")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = wsci(dir, args);
    assert!(
        out.status.success(),
        "wsci {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn gen_data_default_header_and_determinism() {
    let dir = tempdir().unwrap();
    ok(dir.path(), &["gen-data", "--out", "a.txt", "--seed", "5"]);
    ok(dir.path(), &["gen-data", "--out", "b.txt", "--seed", "5"]);
    ok(dir.path(), &["gen-data", "--out", "c.txt", "--seed", "6"]);
    let a = fs::read(dir.path().join("a.txt")).unwrap();
    assert!(a.starts_with(b"d=16 C=5 truth=1\n"));
    assert_eq!(a, fs::read(dir.path().join("b.txt")).unwrap());
    assert_ne!(a, fs::read(dir.path().join("c.txt")).unwrap());
}

#[test]
fn invalid_ratio_is_a_usage_error_naming_the_field() {
    let dir = tempdir().unwrap();
    let out = wsci(dir.path(), &["gen-data", "--out", "x.txt", "--outlier_ratio", "1.2"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("outlier_ratio"), "{}", stderr(&out));
    assert!(!dir.path().join("x.txt").exists());
}

#[test]
fn unknown_subcommand_prints_usage() {
    let dir = tempdir().unwrap();
    let out = wsci(dir.path(), &["frobnicate"]);
    assert_ne!(out.status.code(), Some(0));
    assert!(stderr(&out).contains("Usage"), "{}", stderr(&out));
}

#[test]
fn missing_input_is_a_data_error() {
    let dir = tempdir().unwrap();
    let out = wsci(dir.path(), &["fit-gmm", "--features", "absent.txt", "--out", "g.txt"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("absent.txt"));
}

#[test]
fn malformed_features_are_a_data_error() {
    let dir = tempdir().unwrap();
    fs::write(dir.path().join("bad.txt"), "d=2 C=2 truth=0\n0,1.0\n").unwrap();
    let out = wsci(dir.path(), &["encode", "--features", "bad.txt", "--out", "s.txt"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("bad.txt:2"), "{}", stderr(&out));
}

#[test]
fn config_file_env_and_flags_layer_in_order() {
    let dir = tempdir().unwrap();
    fs::write(dir.path().join("run.toml"), "seed = 3\nper_class = 20\n").unwrap();
    ok(dir.path(), &["gen-data", "--config", "run.toml", "--out", "file.txt"]);
    ok(dir.path(), &["gen-data", "--per_class", "20", "--seed", "3", "--out", "flags.txt"]);
    assert_eq!(
        fs::read(dir.path().join("file.txt")).unwrap(),
        fs::read(dir.path().join("flags.txt")).unwrap()
    );

    let env = Command::new(env!("CARGO_BIN_EXE_wsci"))
        .args(["gen-data", "--config", "run.toml", "--out", "env.txt"])
        .current_dir(dir.path())
        .env("WSCI_SEED", "4")
        .output()
        .unwrap();
    assert!(env.status.success());
    ok(dir.path(), &["gen-data", "--per_class", "20", "--seed", "4", "--out", "seed4.txt"]);
    assert_eq!(
        fs::read(dir.path().join("env.txt")).unwrap(),
        fs::read(dir.path().join("seed4.txt")).unwrap()
    );

    let flag_wins = Command::new(env!("CARGO_BIN_EXE_wsci"))
        .args(["gen-data", "--config", "run.toml", "--seed", "3", "--out", "flag.txt"])
        .current_dir(dir.path())
        .env("WSCI_SEED", "4")
        .output()
        .unwrap();
    assert!(flag_wins.status.success());
    assert_eq!(
        fs::read(dir.path().join("flag.txt")).unwrap(),
        fs::read(dir.path().join("file.txt")).unwrap()
    );

    fs::write(dir.path().join("typo.toml"), "per_klass = 20\n").unwrap();
    let out = wsci(dir.path(), &["gen-data", "--config", "typo.toml", "--out", "t.txt"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("per_klass"), "{}", stderr(&out));
}

#[test]
fn encode_writes_one_block_of_target_width_quickly() {
    let dir = tempdir().unwrap();
    ok(dir.path(), &["gen-data", "--out", "f.txt", "--seed", "1"]);
    let start = Instant::now();
    let args = [
        "encode", "--features", "f.txt", "--components", "32", "--target_rows", "16", "--seed", "1", "--out",
    ];
    let mut first = args.to_vec();
    first.push("a.txt");
    ok(dir.path(), &first);
    assert!(start.elapsed() < Duration::from_secs(60));
    let mut second = args.to_vec();
    second.push("b.txt");
    ok(dir.path(), &second);
    let a = fs::read_to_string(dir.path().join("a.txt")).unwrap();
    assert!(a.starts_with("m=16 C=5 blocks=visual:16\n"), "{}", a.lines().next().unwrap());
    assert_eq!(a.lines().count(), 6);
    assert_eq!(a, fs::read_to_string(dir.path().join("b.txt")).unwrap());

    ok(dir.path(), &["fit-gmm", "--features", "f.txt", "--components", "32", "--seed", "1", "--out", "g.txt"]);
    ok(dir.path(), &["encode", "--features", "f.txt", "--gmm", "g.txt", "--target_rows", "16", "--seed", "1", "--out", "c.txt"]);
    assert_eq!(a, fs::read_to_string(dir.path().join("c.txt")).unwrap());
}

#[test]
fn train_predict_detect_pipeline() {
    let dir = tempdir().unwrap();
    let d = dir.path();
    ok(d, &["gen-data", "--out", "f.txt", "--seed", "2"]);
    ok(d, &["gen-data", "--out", "h.txt", "--seed", "3", "--outlier_ratio", "0", "--flip_ratio", "0"]);
    ok(d, &["encode", "--features", "f.txt", "--components", "32", "--target_rows", "16", "--seed", "2", "--out", "s.txt"]);
    let train = [
        "train", "--features", "f.txt", "--semantic", "s.txt", "--heldout", "h.txt", "--epochs", "5", "--seed", "2",
    ];
    ok(d, &[&train[..], &["--out", "a.ckpt", "--metrics", "a.jsonl"]].concat());
    ok(d, &[&train[..], &["--out", "b.ckpt", "--metrics", "b.jsonl"]].concat());
    assert_eq!(fs::read(d.join("a.ckpt")).unwrap(), fs::read(d.join("b.ckpt")).unwrap());
    assert_eq!(fs::read(d.join("a.jsonl")).unwrap(), fs::read(d.join("b.jsonl")).unwrap());
    let metrics: Vec<EpochMetrics> = read_jsonl(&d.join("a.jsonl")).unwrap();
    assert_eq!(metrics.len(), 5);
    assert!(metrics.iter().all(|m| m.heldout_accuracy.is_some() && m.mean_weight_outlier.is_some()));

    let stdout = ok(d, &["predict", "--checkpoint", "a.ckpt", "--features", "h.txt", "--out", "p.csv"]);
    assert!(stdout.contains("accuracy"));
    let rows: Vec<PredictionRow> = read_csv(&d.join("p.csv")).unwrap();
    assert_eq!(rows.len(), 1000);
    assert!(rows.iter().all(|r| r.predicted < 5 && r.confidence > 0.0 && r.confidence <= 1.0));

    ok(d, &["detect", "--checkpoint", "a.ckpt", "--features", "f.txt", "--out", "d.csv"]);
    let ranked: Vec<DetectionRow> = read_csv(&d.join("d.csv")).unwrap();
    assert_eq!(ranked.len(), 1000);
    assert_eq!(ranked[0].score, 1.0);
    for (i, pair) in ranked.windows(2).enumerate() {
        assert!(pair[0].score >= pair[1].score);
        if pair[0].score == pair[1].score {
            assert!(pair[0].id < pair[1].id);
        }
        assert_eq!(pair[0].rank, i + 1);
    }

    let out = wsci(d, &["train", "--features", "f.txt", "--semantic", "missing.txt", "--out", "x.ckpt"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn ablate_and_sweep_write_reports() {
    let dir = tempdir().unwrap();
    let d = dir.path();
    let small = [
        "--per_class", "30", "--epochs", "2", "--seeds", "1,2", "--ablation_components", "8",
        "--ablation_target_rows", "4", "--gmm_max_iters", "20",
    ];
    let stdout = ok(d, &[&["ablate", "--out_dir", "abl"][..], &small[..]].concat());
    assert!(stdout.contains("wsci"));
    let reports: Vec<RunReport> = read_jsonl(&d.join("abl/reports.jsonl")).unwrap();
    assert_eq!(reports.len(), 8);
    assert_eq!(
        reports.iter().map(|r| (r.seed, r.mode.name())).collect::<Vec<_>>()[..4],
        [(1, "wsci"), (1, "sim1"), (1, "sim2"), (1, "unweighted")]
    );
    let summary: Vec<SummaryRow> = read_csv(&d.join("abl/summary.csv")).unwrap();
    assert_eq!(summary.len(), 8);

    let sweep = [
        "sweep", "--out_dir", "sw", "--window", "20", "--starts", "1,11,21", "--pool_per_class", "40",
        "--test_per_class", "10",
    ];
    ok(d, &[&sweep[..], &small[..]].concat());
    let reports: Vec<RunReport> = read_jsonl(&d.join("sw/reports.jsonl")).unwrap();
    assert_eq!(reports.len(), 12);
    assert_eq!(reports[0].window, Some(1));
    assert_eq!(reports[2].window, Some(21));
    assert!(reports[..6].iter().all(|r| r.mode.name() == "wsci"));

    let again = [&sweep[..], &small[..]].concat();
    let again: Vec<&str> = again.iter().map(|a| if *a == "sw" { "sw2" } else { a }).collect();
    ok(d, &again);
    assert_eq!(
        fs::read(d.join("sw/reports.jsonl")).unwrap(),
        fs::read(d.join("sw2/reports.jsonl")).unwrap()
    );

    let out = wsci(d, &[&["ablate", "--out_dir", "x", "--modes", "wsci,bogus"][..], &small[..]].concat());
    assert_eq!(out.status.code(), Some(1));
}
