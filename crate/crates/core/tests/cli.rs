use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use ifl::fuzzy_label::FuzzyLabelVolume;
use ifl::volume::{read_volume, write_volume, Dims, LabelVolume, Volume};

fn ifl(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ifl")).args(args).current_dir(dir).output().unwrap()
}

fn json(bytes: &[u8]) -> serde_json::Value {
    serde_json::from_slice(bytes).unwrap()
}

fn write_run(dir: &Path, name: &str, body: &str) {
    fs::write(dir.join(name), body).unwrap();
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let labels = LabelVolume::filled(Dims::cube(3).unwrap(), 2, 0).unwrap();
    write_volume(&labels.into(), &dir.path().join("l.fvol")).unwrap();
    let code = |args: &[&str]| ifl(dir.path(), args).status.code();
    assert_eq!(code(&["fuzzify", "l.fvol", "f.fvol", "--rho2", "1.5"]), Some(2));
    assert_eq!(code(&["fuzzify", "l.fvol", "f.fvol", "--radius", "0"]), Some(2));
    assert_eq!(code(&["fuzzify", "missing.fvol", "f.fvol"]), Some(3));
    assert_eq!(code(&["gradcheck", "--samples", "0"]), Some(2));
    assert_eq!(code(&["gradcheck", "--samples", "5", "--perturb", "grad_p"]), Some(1));
    assert_eq!(code(&["gradcheck", "--samples", "5"]), Some(0));
    assert_eq!(code(&["no-such-command"]), Some(2));
    assert!(!dir.path().join("f.fvol").exists());
}

#[test]
fn synth_is_byte_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("spec.json"), r#"{"seed": 11, "shape": "cuboid"}"#).unwrap();
    assert!(ifl(dir.path(), &["synth", "spec.json", "a"]).status.success());
    assert!(ifl(dir.path(), &["synth", "spec.json", "b"]).status.success());
    for f in ["clean.fvol", "corrupted.fvol", "intensity.fvol"] {
        assert_eq!(
            fs::read(dir.path().join("a").join(f)).unwrap(),
            fs::read(dir.path().join("b").join(f)).unwrap()
        );
    }
}

#[test]
fn fuzzify_uniform_volume_has_unit_membership() {
    let dir = tempfile::tempdir().unwrap();
    let labels = LabelVolume::filled(Dims::new(3, 4, 5).unwrap(), 3, 2).unwrap();
    write_volume(&labels.into(), &dir.path().join("l.fvol")).unwrap();
    assert!(ifl(dir.path(), &["fuzzify", "l.fvol", "f.fvol", "--rho2", "0.25"]).status.success());
    let f: FuzzyLabelVolume = match read_volume(&dir.path().join("f.fvol")).unwrap() {
        Volume::Fuzzy(f) => f,
        other => panic!("expected a fuzzy volume, got {other:?}"),
    };
    for v in 0..60 {
        assert_eq!(&f.mu()[v * 3..v * 3 + 3], &[0.0, 0.0, 1.0]);
        assert_eq!(&f.nu()[v * 3..v * 3 + 3], &[0.25, 0.25, 0.0]);
    }
}

#[test]
fn single_step_run_records_one_row() {
    let dir = tempfile::tempdir().unwrap();
    write_run(dir.path(), "run.json", r#"{"train": {"steps": 1}}"#);
    let out = ifl(dir.path(), &["train", "run.json", "--out", "r"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(json(&out.stdout)["rows"], 1);
    let csv = fs::read_to_string(dir.path().join("r/trajectory.csv")).unwrap();
    assert!(csv.starts_with("# config_hash="));
    // Hash comment, header, one row.
    assert_eq!(csv.lines().count(), 3);
    for f in ["pareto.csv", "model.fvol", "summary.json"] {
        assert!(dir.path().join("r").join(f).exists(), "{f} missing");
    }
}

#[test]
fn dice_only_run_on_clean_labels_converges() {
    let dir = tempfile::tempdir().unwrap();
    write_run(
        dir.path(),
        "run.json",
        r#"{"train_on_clean": true, "train": {"steps": 300, "learning_rate": 100.0,
            "schedule": {"kind": "constant", "lambda0": 0.0}}}"#,
    );
    let out = ifl(dir.path(), &["train", "run.json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = json(&out.stdout);
    assert!(summary["mean_dice"].as_f64().unwrap() > 0.99, "{summary}");
    // Default output directory sits next to the config.
    assert!(dir.path().join("out/trajectory.csv").exists());
}

#[test]
fn rerun_reports_same_config_hash() {
    let dir = tempfile::tempdir().unwrap();
    write_run(dir.path(), "a.json", r#"{"seed": 4, "train": {"steps": 5, "learning_rate": 10.0}}"#);
    // Same document with keys in another order.
    write_run(dir.path(), "b.json", r#"{"train": {"learning_rate": 10.0, "steps": 5}, "seed": 4}"#);
    let a = json(&ifl(dir.path(), &["train", "a.json", "--out", "a"]).stdout);
    let b = json(&ifl(dir.path(), &["train", "b.json", "--out", "b"]).stdout);
    assert_eq!(a["config_hash"], b["config_hash"]);
    assert_eq!(
        fs::read(dir.path().join("a/trajectory.csv")).unwrap(),
        fs::read(dir.path().join("b/trajectory.csv")).unwrap()
    );
}

#[test]
fn landscape_single_point() {
    let dir = tempfile::tempdir().unwrap();
    let out = ifl(dir.path(), &["landscape", "--mu", "0.4", "--grid", "1"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    // Hash comment, header, one row.
    assert_eq!(text.lines().count(), 3);
    assert_eq!(ifl(dir.path(), &["landscape", "--mu", "1.5"]).status.code(), Some(2));
}

#[test]
fn analyze_against_baseline() {
    let dir = tempfile::tempdir().unwrap();
    write_run(
        dir.path(),
        "f.json",
        r#"{"train": {"steps": 40, "learning_rate": 300.0, "rho_learning_rate": 0.01}}"#,
    );
    write_run(
        dir.path(),
        "b.json",
        r#"{"train": {"steps": 40, "learning_rate": 300.0, "schedule": {"kind": "constant", "lambda0": 0.0}}}"#,
    );
    assert!(ifl(dir.path(), &["train", "f.json", "--out", "f"]).status.success());
    assert!(ifl(dir.path(), &["train", "b.json", "--out", "b"]).status.success());
    let out = ifl(dir.path(), &["analyze", "f", "--baseline", "b"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = json(&out.stdout);
    assert!(summary["baseline"]["variance_ratio"].as_f64().unwrap().is_finite());
    assert!(summary["rho"]["rho1_monotone"].as_bool().unwrap());
    assert_eq!(json(&fs::read(dir.path().join("f/analysis.json")).unwrap()), summary);
}

#[test]
fn analyze_flags_decreasing_rho1() {
    let dir = tempfile::tempdir().unwrap();
    let header = "t,lambda,rho1,rho2,loss_total,loss_dice,loss_fuzzy,grad_cos,dice_c1,mean_uncertainty";
    let mut csv = format!("# config_hash=00\n{header}\n");
    for t in 0..30 {
        let rho1 = 0.6 - 0.001 * t as f64;
        csv.push_str(&format!("{t},1.0,{rho1},0.5,1.0,0.5,0.5,0.1,0.8,0.2\n"));
    }
    fs::write(dir.path().join("traj.csv"), csv).unwrap();
    let out = ifl(dir.path(), &["analyze", "traj.csv"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = json(&out.stdout);
    assert_eq!(summary["rho"]["rho1_monotone"], false);
    assert_eq!(summary["stability"]["loss_variance_tail"], 0.0);
}
