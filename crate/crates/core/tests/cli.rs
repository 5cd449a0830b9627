use std::path::Path;
use std::process::Command;

use dynvo::dataset::write_sequence;
use dynvo::synth::{presets, render_sequence};

fn dynvo(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_dynvo")).args(args).output().expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn static_dataset(dir: &Path, frames: usize) {
    let spec = presets::static_room(frames);
    write_sequence(&render_sequence(&spec).unwrap(), &spec, dir).unwrap();
}

#[test]
fn usage_errors_exit_with_1() {
    assert_eq!(dynvo(&[]).0, 1);
    assert_eq!(dynvo(&["run", "--dataset", "x"]).0, 1);
    assert_eq!(dynvo(&["frobnicate"]).0, 1);
    assert_eq!(dynvo(&["run", "--dataset", "x", "--out", "y", "--flow-source", "magic"]).0, 1);
    assert_eq!(dynvo(&["--help"]).0, 0);
}

#[test]
fn data_errors_exit_with_2() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let (code, _, err) = dynvo(&["run", "--dataset", s(&tmp.path().join("missing")), "--out", s(&out)]);
    assert_eq!(code, 2);
    assert!(err.contains("missing association"), "{err}");
    let (code, _, _) = dynvo(&["rpe", "--est", s(&tmp.path().join("a.txt")), "--gt", s(&tmp.path().join("b.txt"))]);
    assert_eq!(code, 2);
}

#[test]
fn bad_config_key_is_named_and_exits_with_1() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("c.txt");
    std::fs::write(&cfg, "h_max = 5\nwgrid = 16\n").unwrap();
    let (code, _, err) = dynvo(&["run", "--dataset", s(tmp.path()), "--config", s(&cfg), "--out", s(&tmp.path().join("o"))]);
    assert_eq!(code, 1);
    assert!(err.contains("wgrid"), "{err}");
}

#[test]
fn static_sequence_with_seed_is_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    static_dataset(&data, 6);
    let mut trajectories = Vec::new();
    for i in 0..2 {
        let out = tmp.path().join(format!("out{i}"));
        let (code, stdout, err) = dynvo(&["run", "--dataset", s(&data), "--out", s(&out), "--seed", "42"]);
        assert_eq!(code, 0, "{err}");
        assert!(stdout.contains("frames 6"));
        trajectories.push(std::fs::read(out.join("trajectory.txt")).unwrap());
        for f in ["timing.txt", "rpe.txt", "plots/trajectory_top.png", "plots/trajectory_3d.png", "plots/labels/000005.png", "segmentation/000005.txt"] {
            assert!(out.join(f).is_file(), "{f} missing");
        }
    }
    assert_eq!(trajectories[0], trajectories[1]);
    assert_eq!(String::from_utf8_lossy(&trajectories[0]).lines().count(), 6);
}

#[test]
fn run_without_ground_truth_reports_it() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    static_dataset(&data, 3);
    std::fs::remove_file(data.join("groundtruth.txt")).unwrap();
    let out = tmp.path().join("out");
    let (code, stdout, err) = dynvo(&["run", "--dataset", s(&data), "--out", s(&out), "--flow-source", "file"]);
    assert_eq!(code, 0, "{err}");
    assert!(stdout.contains("no ground truth"));
    assert_eq!(std::fs::read_to_string(out.join("rpe.txt")).unwrap(), "no ground truth\n");
    assert!(out.join("trajectory.txt").is_file());
    assert!(!out.join("rpe.csv").exists());
}

#[test]
fn run_with_ground_truth_writes_rpe_table() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    static_dataset(&data, 8);
    let cfg = tmp.path().join("c.txt");
    let mut text = std::fs::read_to_string(data.join("config.txt")).unwrap();
    text.push_str("rpe_delta = 0.1\n");
    std::fs::write(&cfg, text).unwrap();
    let out = tmp.path().join("out");
    let (code, stdout, err) = dynvo(&["run", "--dataset", s(&data), "--config", s(&cfg), "--out", s(&out), "--flow-source", "file"]);
    assert_eq!(code, 0, "{err}");
    assert!(stdout.contains("rpe rmse"), "{stdout}");
    let csv = std::fs::read_to_string(out.join("rpe.csv")).unwrap();
    assert!(csv.starts_with("t_start,t_end,error_m_per_s\n"));
    assert!(csv.lines().count() > 1);

    let (code, stdout, _) = dynvo(&["rpe", "--est", s(&out.join("trajectory.txt")), "--gt", s(&data.join("groundtruth.txt")), "--delta", "0.1"]);
    assert_eq!(code, 0);
    assert!(stdout.contains("rmse_m_per_s"));
}

#[test]
fn synth_subcommand_writes_dataset() {
    let tmp = tempfile::tempdir().unwrap();
    let spec_path = tmp.path().join("scene.json");
    std::fs::write(&spec_path, presets::static_room(2).to_json()).unwrap();
    let out = tmp.path().join("data");
    let (code, _, err) = dynvo(&["synth", "--spec", s(&spec_path), "--out", s(&out)]);
    assert_eq!(code, 0, "{err}");
    for f in ["associations.txt", "groundtruth.txt", "config.txt", "rgb/000001.png", "depth/000001.png", "flow/000001.gridflow", "labels/000000.txt"] {
        assert!(out.join(f).is_file(), "{f} missing");
    }
    std::fs::write(&spec_path, "{\"frames\": 2}").unwrap();
    assert_eq!(dynvo(&["synth", "--spec", s(&spec_path), "--out", s(&out)]).0, 2);
}

#[test]
fn sweep_subcommand() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    static_dataset(&data, 3);
    let (code, stdout, _) = dynvo(&["sweep", "--param", "h_max", "--values", "", "--dataset", s(&data)]);
    assert_eq!(code, 0);
    assert_eq!(stdout, "h_max,rpe_rmse_m_per_s,median_ms,mean_ms\n");
    let (code, _, err) = dynvo(&["sweep", "--param", "nope", "--values", "1", "--dataset", s(&data)]);
    assert_eq!(code, 1);
    assert!(err.contains("nope"));
}
