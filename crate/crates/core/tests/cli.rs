//! The `manifold-lqg` binary and the plotting/config surfaces behind it.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use manifold_lqg::cli::{
    emit_plot, read_summary, ExperimentConfig, PlotError, RunManifest, SUMMARY_COLUMNS, TRACE_COLUMNS,
};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_manifold-lqg"))
}

fn write_config(dir: &Path, json: &str) -> PathBuf {
    let path = dir.join("config.json");
    std::fs::write(&path, json).unwrap();
    path
}

fn run(dir: &Path, json: &str, extra: &[&str]) -> Output {
    let config = write_config(dir, json);
    bin().arg("run").arg(config).arg("--output-dir").arg(dir.join("out")).args(extra).output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SMALL: &str = r#"{"n": 4, "m": 2, "horizon": 30, "runs": 3}"#;

#[test]
fn compare_run_writes_every_artifact() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(tmp.path(), SMALL, &[]);
    assert!(out.status.success(), "{}", stderr(&out));
    let dir = tmp.path().join("out");
    for f in ["traces_onm.csv", "traces_euclidean_newton.csv", "traces_pg.csv", "summary.csv", "regret.svg", "manifest.json"] {
        assert!(dir.join(f).is_file(), "missing {f}");
    }

    let mut reader = csv::Reader::from_path(dir.join("traces_onm.csv")).unwrap();
    let header: Vec<String> = reader.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header, TRACE_COLUMNS);
    assert_eq!(reader.records().count(), 3 * 30);

    let mut reader = csv::Reader::from_path(dir.join("summary.csv")).unwrap();
    let header: Vec<String> = reader.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header, SUMMARY_COLUMNS);

    let manifest: RunManifest = serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest.schema_version, 1);
    assert_eq!(manifest.groups.len(), 3);
    assert_eq!(manifest.config.horizon, 30);
    assert!(manifest.groups.iter().all(|g| g.runs == 3 && g.failed_runs.is_empty()));

    let svg = std::fs::read_to_string(dir.join("regret.svg")).unwrap();
    assert_eq!(svg.matches(r#"class="series""#).count(), 3);
    for key in ["onm", "euclidean_newton", "pg"] {
        assert!(svg.contains(&format!(">{key}</text>")));
    }
}

#[test]
fn sweep_labels_groups_by_factor() {
    let tmp = tempfile::tempdir().unwrap();
    let json = r#"{"n": 3, "m": 2, "horizon": 15, "runs": 2, "scenario": "variation_sweep",
                   "algorithms": ["onm"], "variation_factors": [0.1, 1.0]}"#;
    let out = run(tmp.path(), json, &[]);
    assert!(out.status.success(), "{}", stderr(&out));
    let dir = tmp.path().join("out");
    assert!(dir.join("traces_onm_vf0.1.csv").is_file());
    assert!(dir.join("traces_onm_vf1.csv").is_file());
    let keys: Vec<String> = read_summary(&dir.join("summary.csv")).unwrap().into_iter().map(|s| s.key).collect();
    assert_eq!(keys, ["onm@vf=0.1", "onm@vf=1"]);
}

#[test]
fn unconstrained_sanity_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let json = r#"{"n": 3, "m": 1, "horizon": 20, "runs": 2, "scenario": "unconstrained_sanity", "regret_mode": "expected"}"#;
    let out = run(tmp.path(), json, &[]);
    assert!(out.status.success(), "{}", stderr(&out));
    let manifest: RunManifest =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("out/manifest.json")).unwrap()).unwrap();
    assert!(manifest.groups.iter().all(|g| g.runs == 1));
}

#[test]
fn seed_override_changes_realized_noise_only() {
    let tmp = tempfile::tempdir().unwrap();
    let a = run(tmp.path(), SMALL, &["--seed-override", "4"]);
    assert!(a.status.success());
    let base = std::fs::read(tmp.path().join("out/traces_onm.csv")).unwrap();
    let b = run(tmp.path(), SMALL, &["--seed-override", "5"]);
    assert!(b.status.success());
    let other = std::fs::read(tmp.path().join("out/traces_onm.csv")).unwrap();
    assert_ne!(base, other);
    let manifest: RunManifest =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("out/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest.config.master_seed, 5);
}

#[test]
fn thread_env_fallback_gives_identical_output() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), SMALL);
    for (dir, threads) in [("one", "1"), ("three", "3")] {
        let out = bin()
            .env("MANIFOLD_LQG_THREADS", threads)
            .arg("run")
            .arg(&config)
            .arg("--output-dir")
            .arg(tmp.path().join(dir))
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", stderr(&out));
    }
    for f in ["traces_pg.csv", "summary.csv"] {
        assert_eq!(
            std::fs::read(tmp.path().join("one").join(f)).unwrap(),
            std::fs::read(tmp.path().join("three").join(f)).unwrap()
        );
    }
    let bad = bin().env("MANIFOLD_LQG_THREADS", "many").arg("run").arg(&config).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn config_errors_exit_2_and_name_the_key() {
    let tmp = tempfile::tempdir().unwrap();
    for (json, key) in [
        (r#"{"horizon": 10, "lerning_rate": 0.1}"#, "lerning_rate"),
        (r#"{"runs": 0}"#, "runs"),
        (r#"{"target_rho": 1.5}"#, "target_rho"),
        (r#"{"algorithms": ["onm", "adam"]}"#, "algorithms"),
        (r#"{"algorithms": ["onm", "onm"]}"#, "algorithms"),
        (r#"{"horizon": "long"}"#, "horizon"),
    ] {
        let out = run(tmp.path(), json, &[]);
        assert_eq!(out.status.code(), Some(2), "{json}");
        assert!(stderr(&out).contains(key), "{json}: {}", stderr(&out));
    }
    let missing = bin().args(["run", "/nonexistent/config.json"]).output().unwrap();
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn numerical_failure_exits_3_with_round() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(tmp.path(), r#"{"n": 3, "m": 2, "horizon": 5, "runs": 1, "comparator_tol": 1e-300}"#, &[]);
    assert_eq!(out.status.code(), Some(3));
    let msg = stderr(&out);
    assert!(msg.contains("round 1") && msg.contains("comparator"), "{msg}");
}

#[test]
fn plot_subcommand_and_schema_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let summary = tmp.path().join("summary.csv");
    std::fs::write(
        &summary,
        "algorithm,t,regret_mean,regret_std,runs\na,1,0.0,0,2\na,2,1.0,0,2\na,3,1.5,0,2\nb,1,0.5,0,2\nb,2,0.25,0,2\nb,3,2.0,0,2\n",
    )
    .unwrap();
    let svg_path = tmp.path().join("plot.svg");
    let out = bin().arg("plot").arg(&summary).arg(&svg_path).output().unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    let svg = std::fs::read_to_string(&svg_path).unwrap();
    assert!(svg.contains(">t</text>") && svg.contains(">cumulative regret</text>"));
    for line in svg.lines().filter(|l| l.contains(r#"class="series""#)) {
        let pts = line.split("points=\"").nth(1).unwrap().split('"').next().unwrap();
        let xs: Vec<f64> = pts.split(' ').map(|p| p.split(',').next().unwrap().parse().unwrap()).collect();
        assert!(xs.windows(2).all(|w| w[0] < w[1]), "{xs:?}");
    }

    let bad = tmp.path().join("bad.csv");
    std::fs::write(&bad, "algorithm,t,mean\na,1,0.0\n").unwrap();
    let target = tmp.path().join("bad.svg");
    match emit_plot(&bad, &target) {
        Err(PlotError::SchemaMismatch { missing }) => assert_eq!(missing, ["regret_mean", "regret_std", "runs"]),
        other => panic!("unexpected {other:?}"),
    }
    assert!(!target.exists());
    let out = bin().arg("plot").arg(&bad).arg(&target).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("regret_mean"));

    let empty = tmp.path().join("empty.csv");
    std::fs::write(&empty, "algorithm,t,regret_mean,regret_std,runs\n").unwrap();
    assert!(matches!(emit_plot(&empty, &target), Err(PlotError::Empty)));
    assert!(!target.exists());
}

#[test]
fn defaults_round_trip_through_json() {
    let cfg = ExperimentConfig::default();
    let text = serde_json::to_string(&cfg).unwrap();
    assert_eq!(ExperimentConfig::from_json(&text).unwrap(), cfg);
}
