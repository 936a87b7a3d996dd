use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use aimc_core::io::{parse_text, read_report, report_from_json, save_weights, ModelParams, Precision};
use aimc_core::ref_models::{Activation, MlpParams};
use serde_json::Value;

fn aimc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aimc"))
        .args(args)
        .env_remove("AIMC_BENCH_PROBE")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn structured(o: &Output) -> Value {
    assert_eq!(o.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_str(&stdout(o)).unwrap()
}

const SMALL_SVDD: [&str; 6] = ["--hidden", "16,16,16", "--event-count", "60", "--calibration-events", "30"];

#[test]
fn nqs_example_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.report");
    let o = aimc(&["nqs", "--alpha", "2", "--seed", "7", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let r = read_report(&out).unwrap();
    assert_eq!(r.command, "nqs");
    assert_eq!(r.seed, 7);
    assert_eq!(r.workloads[0].perf.throughput, 2e7);
    assert!(stdout(&o).contains("workloads.0.perf.throughput = 20000000.0"));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    for args in [&["nqs", "--bogus"][..], &["frobnicate"], &[], &["nqs", "--alpha", "two"]] {
        let o = aimc(args);
        assert_eq!(o.status.code(), Some(1), "{args:?}");
        assert!(o.stdout.is_empty());
        assert!(!o.stderr.is_empty());
    }
}

#[test]
fn help_and_version_succeed() {
    for args in [&["--help"][..], &["--version"], &["nqs", "--help"]] {
        let o = aimc(args);
        assert_eq!(o.status.code(), Some(0), "{args:?}");
        assert!(!o.stdout.is_empty());
    }
}

#[test]
fn runtime_failures_exit_two() {
    let o = aimc(&["report", "/nonexistent/report.json"]);
    assert_eq!(o.status.code(), Some(2));
    let o = aimc(&["nqs", "--weights", "/nonexistent/w.toml"]);
    assert_eq!(o.status.code(), Some(2));
    let o = aimc(&["nqs", "--lx", "4", "--ly", "8", "--alpha", "32"]);
    assert_eq!(o.status.code(), Some(2), "unmappable RBM");
}

#[test]
fn zero_weight_member_scores_zero() {
    let mut args = vec!["svdd", "--z", "5", "--n", "0", "--zero-weights", "--format", "structured"];
    args.extend(SMALL_SVDD);
    let v = structured(&aimc(&args));
    let s = &v["workloads"][0]["svdd"];
    assert_eq!(s["members"][0]["mean_score_aimc"], 0.0);
    assert_eq!(s["mean_ensemble_score_aimc"], 0.0);
}

#[test]
fn custom_targets_need_opt_in() {
    let mut args = vec!["svdd", "--z", "6", "--n", "1.5"];
    args.extend(SMALL_SVDD);
    let o = aimc(&args);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--allow-custom"));
    args.push("--allow-custom");
    assert_eq!(aimc(&args).status.code(), Some(0));
}

#[test]
fn sweep_prefers_the_fastest_batch_under_a_constant_probe() {
    let v = structured(&aimc(&[
        "sweep",
        "--probe",
        "synthetic:100",
        "--candidates",
        "64,256,1024,12870",
        "--format",
        "structured",
    ]));
    let bench = v["bench"].as_array().unwrap();
    assert_eq!(bench.len(), 4);
    let fastest = bench
        .iter()
        .max_by(|a, b| a["throughput"].as_f64().unwrap().total_cmp(&b["throughput"].as_f64().unwrap()))
        .unwrap();
    assert_eq!(v["best_batch"], fastest["batch"]);
    for b in bench {
        let e = b["e_sample"].as_f64().unwrap() * b["throughput"].as_f64().unwrap();
        assert!((e - 100.0).abs() < 1e-9 * 100.0);
    }
}

#[test]
fn probe_can_come_from_the_environment() {
    let o = Command::new(env!("CARGO_BIN_EXE_aimc"))
        .args(["bench-host", "--batch", "64", "--format", "structured"])
        .env("AIMC_BENCH_PROBE", "synthetic:5")
        .output()
        .unwrap();
    let v = structured(&o);
    assert_eq!(v["bench"][0]["probe"], "synthetic:5");

    let o = Command::new(env!("CARGO_BIN_EXE_aimc"))
        .args(["bench-host", "--batch", "64", "--probe", "null", "--format", "structured"])
        .env("AIMC_BENCH_PROBE", "synthetic:5")
        .output()
        .unwrap();
    assert_eq!(structured(&o)["bench"][0]["e_sample"], Value::Null);

    let o = Command::new(env!("CARGO_BIN_EXE_aimc"))
        .args(["bench-host", "--batch", "64"])
        .env("AIMC_BENCH_PROBE", "volts")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn platform_probe_needs_a_real_clock() {
    let o = aimc(&["bench-host", "--batch", "64", "--probe", "platform"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "seed = 11\nformat = \"structured\"\n\n[nqs]\nalpha = 1\nlx = 2\nly = 4\n").unwrap();
    let c = cfg.to_str().unwrap();
    let v = structured(&aimc(&["--config", c, "nqs"]));
    assert_eq!(v["seed"], 11);
    assert_eq!(v["config"]["alpha"], 1);
    assert_eq!(v["workloads"][0]["nqs"]["sites"], 8);

    let v = structured(&aimc(&["--config", c, "nqs", "--alpha", "3", "--seed", "12"]));
    assert_eq!(v["seed"], 12);
    assert_eq!(v["config"]["alpha"], 3);

    let o = aimc(&["--config", c, "--format", "text", "nqs"]);
    assert!(stdout(&o).lines().any(|l| l == "format_version = 1"));
}

#[test]
fn unknown_config_key_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "[nqs]\nalhpa = 2\n").unwrap();
    let o = aimc(&["--config", cfg.to_str().unwrap(), "nqs"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn config_paths_resolve_next_to_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let p = MlpParams::zeros(&[57, 16, 16, 16, 5], Activation::Elu).unwrap();
    save_weights(&ModelParams::Mlp(p), &dir.path().join("member.toml"), Precision::F32).unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "[svdd]\nweights = \"member.toml\"\nevent_count = 20\ncalibration_events = 10\n").unwrap();
    let v = structured(&aimc(&["--config", cfg.to_str().unwrap(), "--format", "structured", "svdd"]));
    assert_eq!(v["workloads"][0]["svdd"]["mean_ensemble_score_aimc"], 0.0);
}

#[test]
fn ensemble_reports_every_member() {
    let mut args = vec!["ensemble", "--format", "structured"];
    args.extend(SMALL_SVDD);
    let v = structured(&aimc(&args));
    let members = v["workloads"][0]["svdd"]["members"].as_array().unwrap();
    assert_eq!(members.len(), 63);

    let mut args = vec!["ensemble", "--z", "5,8", "--n", "0,25", "--format", "structured"];
    args.extend(SMALL_SVDD);
    let v = structured(&aimc(&args));
    assert_eq!(v["workloads"][0]["svdd"]["members"].as_array().unwrap().len(), 4);

    let mut args = vec!["ensemble", "--z", "7"];
    args.extend(SMALL_SVDD);
    assert_eq!(aimc(&args).status.code(), Some(1));
}

#[test]
fn ensemble_reads_member_manifests_from_a_directory() {
    let dir = tempfile::tempdir().unwrap();
    for (z, n) in [(5, 0.0), (5, 1.0)] {
        let p = MlpParams::zeros(&[57, 16, 16, 16, z], Activation::Elu).unwrap();
        save_weights(&ModelParams::Mlp(p), &dir.path().join(format!("z{z}_n{n}.toml")), Precision::F64).unwrap();
    }
    let mut args = vec!["ensemble", "--z", "5", "--n", "0,1", "--weights-dir", dir.path().to_str().unwrap()];
    args.extend(["--format", "structured"]);
    args.extend(SMALL_SVDD);
    let v = structured(&aimc(&args));
    assert_eq!(v["workloads"][0]["svdd"]["mean_ensemble_score_aimc"], 2.5);

    args[4] = "0,2";
    assert_eq!(aimc(&args).status.code(), Some(2));
}

#[test]
fn report_subcommand_reemits_saved_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let first = aimc(&["nqs", "--alpha", "1", "--format", "structured", "--out", out.to_str().unwrap()]);
    assert_eq!(first.status.code(), Some(0));
    let again = aimc(&["report", out.to_str().unwrap(), "--format", "structured"]);
    assert_eq!(again.status.code(), Some(0));
    assert_eq!(stdout(&again), fs::read_to_string(&out).unwrap());
    assert_eq!(stdout(&first), stdout(&again));

    let text = aimc(&["report", out.to_str().unwrap()]);
    let pairs = parse_text(&stdout(&text)).unwrap();
    let r = report_from_json(&fs::read_to_string(&out).unwrap(), Path::new("r")).unwrap();
    let leaves = aimc_core::io::flatten(&serde_json::to_value(&r).unwrap());
    assert_eq!(pairs.len(), leaves.len());
    for ((k, v), (lk, lv)) in pairs.iter().zip(&leaves) {
        assert_eq!(k, lk);
        assert_eq!(v.to_string(), *lv);
    }
}

#[test]
fn repeated_invocations_are_byte_identical() {
    let runs = [
        vec!["nqs", "--alpha", "2", "--quant-preset", "noisy"],
        vec!["svdd", "--z", "8", "--n", "3", "--hidden", "16,16,16", "--event-count", "80"],
        vec!["sweep", "--probe", "synthetic:7", "--candidates", "64,128"],
    ];
    for args in runs {
        let a = aimc(&[&args[..], &["--threads", "1"]].concat());
        let b = aimc(&[&args[..], &["--threads", "4"]].concat());
        let c = aimc(&args);
        assert_eq!(a.status.code(), Some(0), "{args:?}");
        assert_eq!(a.stdout, b.stdout, "{args:?}");
        assert_eq!(a.stdout, c.stdout, "{args:?}");
    }
}

#[test]
fn zero_threads_is_rejected() {
    assert_eq!(aimc(&["nqs", "--threads", "0"]).status.code(), Some(1));
}
