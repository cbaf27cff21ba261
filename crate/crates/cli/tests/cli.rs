use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn dcgrb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dcgrb")).args(args).output().expect("binary runs")
}

fn preset(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const SMALL: &str = r#"
name = "small"

[[run]]
label = "mixed"
[run.experiment]
sequences = 6
gates = 40
realizations = 12
shots = 50
family = "corpse"
seed = 9
[run.experiment.register]
qubits = 2
amplitude_gradient = 0.002
[[run.experiment.noise]]
channel = "detuning"
[[run.experiment.noise.components]]
rms2 = 2e-3
correlation = { kind = "full" }
[[run.experiment.noise.components]]
rms2 = 5e-4
correlation = { kind = "per_pi2_time" }

[[run]]
label = "plain"
[run.experiment]
sequences = 4
gates = 20
realizations = 5
family = "primitive"
seed = 9
[[run.experiment.noise]]
channel = "amplitude"
[[run.experiment.noise.components]]
rms2 = 1e-3
correlation = { kind = "block", gates = 4 }

[analysis]
reorderings = 10
fit_components = true
autocorrelation_max_lag = 5
"#;

fn write_small(dir: &Path) -> PathBuf {
    let path = dir.join("small.toml");
    fs::write(&path, SMALL).unwrap();
    path
}

#[test]
fn unknown_config_key_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    fs::write(&path, SMALL.replace("shots = 50", "shots = 50\nshotz = 1")).unwrap();
    let out = dcgrb(&["simulate", "--config", s(&path), "--out", s(&dir.path().join("o"))]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn missing_spectrum_section_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dcgrb(&["spectrum", "--config", s(&write_small(dir.path()))]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn budget_overrun_exits_3_before_writing() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("o");
    let out = dcgrb(&["simulate", "--config", s(&write_small(dir.path())), "--out", s(&out_dir), "--budget-cells", "1000"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(!out_dir.join("mixed.csv").exists());
}

#[test]
fn tampered_bundle_fails_analysis_with_exit_4() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_small(dir.path());
    let out_dir = dir.path().join("o");
    assert!(dcgrb(&["simulate", "--config", s(&cfg), "--out", s(&out_dir)]).status.success());
    let tensor = out_dir.join("plain.csv");
    let text = fs::read_to_string(&tensor).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let last = lines[1].rfind(',').unwrap();
    lines[1] = format!("{},1.5", &lines[1][..last]);
    fs::write(&tensor, lines.join("\n") + "\n").unwrap();
    let out = dcgrb(&["analyze", "--config", s(&cfg), "--out", s(&out_dir)]);
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn analysis_rejects_bundle_from_another_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_small(dir.path());
    let out_dir = dir.path().join("o");
    assert!(dcgrb(&["simulate", "--config", s(&cfg), "--out", s(&out_dir)]).status.success());
    fs::write(&cfg, SMALL.replace("reorderings = 10", "reorderings = 11")).unwrap();
    let out = dcgrb(&["analyze", "--config", s(&cfg), "--out", s(&out_dir)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn report_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_small(dir.path());
    let out_dir = dir.path().join("o");
    let out = dcgrb(&["report", "--config", s(&cfg), "--out", s(&out_dir)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(out_dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["runs"].as_array().unwrap().len(), 2);
    assert_eq!(manifest["config_sha256"].as_str().unwrap().len(), 64);

    let sidecar: serde_json::Value = serde_json::from_str(&fs::read_to_string(out_dir.join("mixed.json")).unwrap()).unwrap();
    assert_eq!(sidecar["config"]["seed"], 9);
    assert_eq!(sidecar["sequences"].as_array().unwrap().len(), 6);

    let header = fs::read_to_string(out_dir.join("mixed.csv")).unwrap();
    assert_eq!(header.lines().next().unwrap(), "seq_id,realization,qubit,shots,survival");
    assert_eq!(header.lines().count(), 1 + 6 * 12 * 2);

    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out_dir.join("report.json")).unwrap()).unwrap();
    let runs = report["runs"].as_array().unwrap();
    assert_eq!(runs[0]["qubits"].as_array().unwrap().len(), 2);
    assert!(runs[0]["cross_correlation"].is_array());
    assert!(runs[0]["qubits"][0]["qpn"]["lower"].is_array());
    assert_eq!(runs[1]["autocorrelation"]["acf"].as_array().unwrap().len(), 6);
    assert!(report["checks"].as_array().unwrap().iter().all(|c| c["passed"] == true));
    assert!(out_dir.join("mixed_q1_trajectory.csv").exists());
}

#[test]
fn seed_override_changes_data_and_is_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_small(dir.path());
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(dcgrb(&["simulate", "--config", s(&cfg), "--out", s(&a), "--run", "plain"]).status.success());
    assert!(dcgrb(&["simulate", "--config", s(&cfg), "--out", s(&b), "--run", "plain", "--seed", "77"]).status.success());
    assert_ne!(fs::read(a.join("plain.csv")).unwrap(), fs::read(b.join("plain.csv")).unwrap());
    let manifest = fs::read_to_string(b.join("manifest.json")).unwrap();
    assert!(manifest.contains("\"seed_override\": 77"));
}

#[test]
fn presets_are_byte_stable_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["fig2.toml", "fig5.toml"] {
        let cfg = preset(name);
        let (one, four) = (dir.path().join(format!("{name}-1")), dir.path().join(format!("{name}-4")));
        assert!(dcgrb(&["simulate", "--config", s(&cfg), "--out", s(&one), "--workers", "1"]).status.success());
        assert!(dcgrb(&["simulate", "--config", s(&cfg), "--out", s(&four), "--workers", "4"]).status.success());
        let mut compared = 0;
        for entry in fs::read_dir(&one).unwrap() {
            let path = entry.unwrap().path();
            if path.extension().is_some_and(|e| e == "csv") {
                let other = four.join(path.file_name().unwrap());
                assert_eq!(fs::read(&path).unwrap(), fs::read(&other).unwrap(), "{}", path.display());
                compared += 1;
            }
        }
        assert!(compared >= 2);
    }
}

#[test]
fn every_preset_parses_and_fits_desk_budget() {
    for entry in fs::read_dir(preset("")).unwrap() {
        let path = entry.unwrap().path();
        let text = fs::read_to_string(&path).unwrap();
        let cfg = dcgrb::config::ConfigFile::parse(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(dcgrb::config::ConfigFile::parse(&cfg.to_toml().unwrap()).unwrap(), cfg);
        let cells: u64 = cfg.runs.iter().map(|r| r.experiment.cells()).sum();
        assert!(cells <= 20_000_000, "{}: {cells} cells", path.display());
    }
}

#[test]
fn predict_matches_closed_form() {
    let out = dcgrb(&["predict", "--regime", "correlated", "--sigma2", "1e-3", "--gates", "100"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let mean = v["moments"]["mean_error"].as_f64().unwrap();
    assert!((mean - 0.0667).abs() < 5e-5, "{mean}");
    assert_eq!(dcgrb(&["predict", "--gates", "100"]).status.code(), Some(2));
}

#[test]
fn spectrum_and_trace_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("spec");
    assert!(dcgrb(&["spectrum", "--config", s(&preset("fig3c.toml")), "--out", s(&out_dir)]).status.success());
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(out_dir.join("spectrum.json")).unwrap()).unwrap();
    let families = summary.as_array().unwrap();
    assert_eq!(families.len(), 4);
    let primitive = &families[0];
    let corpse = &families[1];
    assert!(corpse["flatness"].as_f64().unwrap() < primitive["flatness"].as_f64().unwrap());

    let trace = dir.path().join("trace.csv");
    let out = dcgrb(&["trace", "--config", s(&preset("fig2.toml")), "--run", "uncorrelated", "--out", s(&trace)]);
    assert!(out.status.success());
    let text = fs::read_to_string(trace).unwrap();
    assert!(text.starts_with("t_start,t_end,gate,cell,detuning,amplitude"));
    let bad = dcgrb(&["trace", "--config", s(&preset("fig2.toml")), "--run", "uncorrelated", "--sequence", "999"]);
    assert_eq!(bad.status.code(), Some(2));
}
