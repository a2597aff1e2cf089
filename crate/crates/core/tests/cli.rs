use std::path::Path;
use std::process::{Command, Output};

use simrep::io::{Dataset, Manifest, RunConfig};

fn simrep(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_simrep")).args(args).output().unwrap()
}

fn write_config(dir: &Path, json: &str) -> String {
    let path = dir.join("config.json");
    std::fs::write(&path, json).unwrap();
    path.to_string_lossy().into_owned()
}

const SMALL_LV: &str = r#"{
  "family": {"kind": "lv", "t_end": 40.0, "dt": 0.05, "n_out": 24},
  "samples": 24,
  "seed": 17,
  "output_dim": 4,
  "encoder": {
    "input_shape": [24, 4],
    "layers": [
      {"kind": "conv1d", "filters": 4, "kernel": 5, "stride": 2},
      {"kind": "activation", "function": "relu"},
      {"kind": "global_avg_pool"},
      {"kind": "dense", "units": 4}
    ],
    "output_dim": 4
  },
  "train": {"batch_size": 8, "epochs": 2, "ensemble_size": 2},
  "analysis": {"consensus_n": [3, 5], "sweep": {"param": "r3", "count": 5, "factor": 2.0}}
}"#;

#[test]
fn gradcheck_passes_and_reports_each_family() {
    let out = simrep(&["gradcheck"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    for family in ["dense", "conv1d", "conv2d"] {
        assert!(text.contains(&format!("gradcheck {family}: max relative error")), "{text}");
    }
}

#[test]
fn usage_errors_exit_with_one() {
    for args in [&["frobnicate"][..], &["generate", "--bogus"], &["generate", "--format", "pdf"], &[]] {
        let out = simrep(args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"), "{args:?}");
    }
    let out = simrep(&["generate"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn invalid_config_exits_with_one_before_writing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"family": {"kind": "lv"}, "samples": 0, "seed": 1}"#);
    let out_dir = dir.path().join("out");
    let out = simrep(&["generate", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!out_dir.exists());
    let cfg = write_config(dir.path(), r#"{"family": {"kind": "lv"}, "samples": 4}"#);
    assert_eq!(simrep(&["generate", "--config", &cfg]).status.code(), Some(1), "seed is required");
}

#[test]
fn runtime_failure_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let mut names = vec!["r1".to_string(), "r2".into(), "r3".into(), "r4".into()];
    for i in 1..=4 {
        for j in 1..=4 {
            names.push(format!("a{i}{j}"));
        }
    }
    let mut low = vec![1.0; 4];
    low.extend([-1.0; 16]);
    let cfg = serde_json::json!({
        "family": {"kind": "lv", "t_end": 50.0, "n_out": 20},
        "samples": 3,
        "seed": 1,
        "ranges": {"names": names, "low": low, "high": low},
    });
    let cfg = write_config(dir.path(), &cfg.to_string());
    let out = simrep(&["generate", "--config", &cfg, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn generate_writes_dataset_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL_LV);
    let out_dir = dir.path().join("runs");
    let out = simrep(&["generate", "--config", &cfg, "--out", out_dir.to_str().unwrap(), "--seed", "23"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(stdout.lines().count(), 1);

    let ds = Dataset::load(&out_dir.join("dataset.simrep")).unwrap();
    assert_eq!(ds.len(), 24);
    assert_eq!(ds.dims, vec![24, 4]);
    let m = Manifest::read(&out_dir.join("generate.manifest.json")).unwrap();
    assert_eq!(m.seeds["run"], 23);
    assert_eq!(m.summary["count"], 24);
    assert!(m.artifacts.iter().any(|a| a.path == "dataset.simrep"));
    assert!(m.verify(&out_dir).is_empty());
    let mut expected = RunConfig::from_json(SMALL_LV).unwrap();
    expected.seed = 23;
    assert_eq!(m.config_hash, expected.hash());
}

#[test]
fn train_twice_gives_identical_model_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL_LV);
    let mut models = Vec::new();
    for name in ["a", "b"] {
        let out_dir = dir.path().join(name);
        let out = simrep(&["train", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        models.push(std::fs::read(out_dir.join("model.simrep")).unwrap());
    }
    assert_eq!(models[0], models[1]);
}

#[test]
fn analysis_commands_reuse_the_model_and_respect_format() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL_LV);
    let out_dir = dir.path().join("runs");
    let o = out_dir.to_str().unwrap();
    assert_eq!(simrep(&["train", "--config", &cfg, "--out", o]).status.code(), Some(0));
    let model = std::fs::read(out_dir.join("model.simrep")).unwrap();
    let out = simrep(&["sweep", "--config", &cfg, "--out", o, "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out_dir.join("sweep.csv").exists() && !out_dir.join("sweep.svg").exists());
    let out = simrep(&["consensus", "--config", &cfg, "--out", o, "--format", "svg"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out_dir.join("consensus.svg").exists() && !out_dir.join("consensus.csv").exists());
    assert_eq!(std::fs::read(out_dir.join("model.simrep")).unwrap(), model);
    let m = Manifest::read(&out_dir.join("sweep.manifest.json")).unwrap();
    assert!(m.seeds.contains_key("analysis"));

    let out = simrep(&["knockout", "--config", &cfg, "--out", o]);
    assert_eq!(out.status.code(), Some(1), "knockout needs a flux family");
}

#[test]
fn in_process_entry_point_matches_binary_codes() {
    assert_eq!(simrep::cli::run(["simrep", "nope"]), 1);
    assert_eq!(simrep::cli::run(["simrep", "gradcheck"]), 0);
}

#[test]
fn held_out_consensus_draws_a_fresh_set() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg: serde_json::Value = serde_json::from_str(SMALL_LV).unwrap();
    let out_dir = dir.path().join("runs");
    let o = out_dir.to_str().unwrap();
    let path = write_config(dir.path(), &cfg.to_string());
    assert_eq!(simrep(&["consensus", "--config", &path, "--out", o]).status.code(), Some(0));
    let train_scores = std::fs::read(out_dir.join("consensus.csv")).unwrap();
    let model = std::fs::read(out_dir.join("model.simrep")).unwrap();

    cfg["analysis"]["consensus_held_out"] = true.into();
    let path = write_config(dir.path(), &cfg.to_string());
    let out = simrep(&["consensus", "--config", &path, "--out", o]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let m = Manifest::read(&out_dir.join("consensus.manifest.json")).unwrap();
    let expected = RunConfig::from_json(&cfg.to_string()).unwrap().held_out_seed();
    assert_eq!(m.seeds["held_out"], expected);
    assert_ne!(std::fs::read(out_dir.join("consensus.csv")).unwrap(), train_scores);
    assert_eq!(std::fs::read(out_dir.join("model.simrep")).unwrap(), model);
}
