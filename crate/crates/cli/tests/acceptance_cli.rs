//! CLI acceptance: byte-identical outputs for identical arguments regardless
//! of thread count (criterion 10), plus the documented exit-code mapping.

use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sgddiag"))
}

fn write_config(dir: &Path) -> PathBuf {
    let path = dir.join("config.json");
    std::fs::write(
        &path,
        r#"{
  "problem": {"kind": "least_squares", "dim": 10, "noise_variance": 1.0, "seed": 3},
  "controller": {"diagnostic": {"gamma0": 0.17, "r": 0.5, "diagnostic": {"distance": {}}}},
  "init": "zero",
  "n_iters": 5000,
  "n_reps": 6,
  "base_seed": 11
}"#,
    )
    .unwrap();
    path
}

fn run_with_threads(args: &[&str], threads: &str) {
    let status = bin()
        .args(args)
        .env("SGDDIAG_THREADS", threads)
        .status()
        .unwrap();
    assert!(status.success(), "command failed: {args:?}");
}

#[test]
fn criterion_10_byte_identical_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path());
    let config = config.to_str().unwrap();

    // Same command, rerun: identical trace bytes.
    let t1 = dir.path().join("t1.csv");
    let t2 = dir.path().join("t2.csv");
    for (out, threads) in [(&t1, "4"), (&t2, "1")] {
        run_with_threads(
            &[
                "run",
                "--config",
                config,
                "--seed",
                "7",
                "--out",
                out.to_str().unwrap(),
            ],
            threads,
        );
    }
    let b1 = std::fs::read(&t1).unwrap();
    let b2 = std::fs::read(&t2).unwrap();
    let trace_ok = b1 == b2 && !b1.is_empty();

    // Replicated report across different thread counts, CSV and JSON.
    let mut report_ok = true;
    for format in ["csv", "json"] {
        let r1 = dir.path().join(format!("r1.{format}"));
        let r2 = dir.path().join(format!("r2.{format}"));
        for (out, threads) in [(&r1, "1"), (&r2, "8")] {
            run_with_threads(
                &[
                    "replicate",
                    "--config",
                    config,
                    "--format",
                    format,
                    "--out",
                    out.to_str().unwrap(),
                ],
                threads,
            );
        }
        report_ok &= std::fs::read(&r1).unwrap() == std::fs::read(&r2).unwrap();
    }

    // A figure preset is deterministic too.
    let f1 = dir.path().join("figs1");
    let f2 = dir.path().join("figs2");
    for (out, threads) in [(&f1, "2"), (&f2, "7")] {
        run_with_threads(
            &[
                "figure",
                "fig3-slopes",
                "--out",
                out.to_str().unwrap(),
                "--seed",
                "5",
            ],
            threads,
        );
    }
    let fig_ok = ["dist_to_opt.csv", "dist_to_anchor.csv"].iter().all(|name| {
        std::fs::read(f1.join("fig3-slopes").join(name)).unwrap()
            == std::fs::read(f2.join("fig3-slopes").join(name)).unwrap()
    });

    // Sign-experiment output across thread counts.
    let s1 = dir.path().join("s1.csv");
    let s2 = dir.path().join("s2.csv");
    for (out, threads) in [(&s1, "3"), (&s2, "1")] {
        run_with_threads(
            &[
                "pflug-sign",
                "--d",
                "6",
                "--iters",
                "200",
                "--reps",
                "64",
                "--seed",
                "2",
                "--out",
                out.to_str().unwrap(),
            ],
            threads,
        );
    }
    let sign_ok = std::fs::read(&s1).unwrap() == std::fs::read(&s2).unwrap();

    // verify-quadratic has no file output; its table must be byte-stable.
    let stdout = |threads: &str| {
        let out = bin()
            .args(["verify-quadratic", "--d", "2", "--reps", "500", "--models", "2"])
            .env("SGDDIAG_THREADS", threads)
            .output()
            .unwrap();
        assert!(out.status.success());
        out.stdout
    };
    let verify_ok = stdout("1") == stdout("6");

    let ok = trace_ok && report_ok && fig_ok && sign_ok && verify_ok;
    println!(
        "ACCEPTANCE 10 cli-determinism: {} — trace {trace_ok}, reports {report_ok}, figure {fig_ok}, sign {sign_ok}, verify {verify_ok}",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok);
}

#[test]
fn exit_codes_follow_the_documented_mapping() {
    let dir = tempfile::tempdir().unwrap();

    // Unknown key in the config: validation error, exit 1.
    let bad = dir.path().join("bad.json");
    std::fs::write(
        &bad,
        r#"{
  "problem": {"kind": "least_squares", "dim": 4, "seed": 1},
  "controller": {"diagnostic": {"gamma0": 0.1, "r": 0.5, "diagnostic": {"distance": {"thres": 0.5}}}},
  "n_iters": 10,
  "base_seed": 1
}"#,
    )
    .unwrap();
    let out = bin()
        .args(["run", "--config", bad.to_str().unwrap()])
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("thres"), "error must name the key: {stderr}");

    // Missing config file: runtime failure, exit 2.
    let out = bin()
        .args(["run", "--config", "/nonexistent/cfg.json"])
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));

    // Divergent run: runtime failure, exit 2.
    let diverge = dir.path().join("diverge.json");
    std::fs::write(
        &diverge,
        r#"{
  "problem": {"kind": "semi_stochastic_quadratic", "dim": 2, "noise_variance": 0.0, "seed": 1},
  "controller": {"fixed": {"schedule": {"constant": {"gamma0": 3.0}}}},
  "init": {"point": [1.0, 1.0]},
  "n_iters": 2000,
  "base_seed": 1
}"#,
    )
    .unwrap();
    let out = bin()
        .args([
            "run",
            "--config",
            diverge.to_str().unwrap(),
            "--out",
            dir.path().join("d.csv").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));

    // verify-quadratic at honest sizes succeeds with exit 0.
    let out = bin()
        .args([
            "verify-quadratic",
            "--d",
            "3",
            "--reps",
            "2000",
            "--models",
            "2",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("0 failures"), "{stdout}");

    // Unknown figure name: exit 1.
    let out = bin()
        .args(["figure", "no-such-figure"])
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn minimal_config_gets_documented_defaults() {
    let text = r#"{
  "problem": {"kind": "least_squares", "dim": 4, "seed": 1},
  "controller": {"fixed": {"schedule": {"constant": {"gamma0": 0.05}}}},
  "n_iters": 100,
  "base_seed": 2
}"#;
    let config: sgddiag::harness::ExperimentConfig = serde_json::from_str(text).unwrap();
    assert_eq!(config.n_reps, 1);
    assert_eq!(config.init, sgddiag::harness::InitSpec::Zero);
    assert_eq!(config.problem.noise_variance, 1.0);
    assert!(config.outputs.is_none());
}

#[test]
fn config_round_trip_preserves_experiment() {
    // load → serialize → load yields an identical config.
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path());
    let text = std::fs::read_to_string(&path).unwrap();
    let config: sgddiag::harness::ExperimentConfig = serde_json::from_str(&text).unwrap();
    let serialized = serde_json::to_string_pretty(&config).unwrap();
    let back: sgddiag::harness::ExperimentConfig = serde_json::from_str(&serialized).unwrap();
    assert_eq!(config, back);
}
