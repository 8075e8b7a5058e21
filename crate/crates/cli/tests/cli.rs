use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn guidecue(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_guidecue")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = guidecue(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn stderr_json(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    serde_json::from_str(text.lines().last().unwrap()).unwrap()
}

fn gen(dir: &Path, preset: &str) {
    ok(&["gen", "--preset", preset, "--out", dir.to_str().unwrap()]);
}

#[test]
fn analyze_and_report_mirror_planted_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("h1");
    gen(&dir, "hybrid1");
    let d = dir.to_str().unwrap();
    assert!(ok(&["validate", d]).contains("ok"));
    assert!(ok(&["analyze", d]).contains("epochs: 37"));
    assert_eq!(fs::read_to_string(dir.join("epochs.jsonl")).unwrap().lines().count(), 37);
    assert!(dir.join("triggers.jsonl").is_file() && dir.join("series.json").is_file());
    let report = ok(&["report", d]);
    assert!(report.contains("command_count: 37"), "{report}");
    let json: Value = serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(json["command_count"], 37);
    ok(&["haptics", d]);
    assert!(dir.join("haptics.jsonl").is_file());
}

#[test]
fn outputs_are_byte_identical_on_rerun() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("r1");
    gen(&dir, "room1");
    let d = dir.to_str().unwrap();
    let files = ["epochs.jsonl", "triggers.jsonl", "series.json", "report.json", "haptics.jsonl"];
    let run = || {
        ok(&["analyze", d]);
        ok(&["report", d]);
        ok(&["haptics", d]);
        files.map(|f| fs::read(dir.join(f)).unwrap())
    };
    assert_eq!(run(), run());
    let again = tmp.path().join("r1b");
    gen(&again, "room1");
    assert_eq!(fs::read(dir.join("keypoints.jsonl")).unwrap(), fs::read(again.join("keypoints.jsonl")).unwrap());
}

#[test]
fn validate_reports_the_corrupted_line() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("bad");
    gen(&dir, "room1");
    let path = dir.join("keypoints.jsonl");
    let mut lines: Vec<String> = fs::read_to_string(&path).unwrap().lines().map(String::from).collect();
    lines[6] = "{\"frame_index\": 6, \"right_arm\": [[1, 2]]}".into();
    lines[9] = lines[9].replacen("[420.0,380.0,0.95]", "[9999.0,380.0,0.95]", 1);
    fs::write(&path, lines.join("\n") + "\n").unwrap();
    let out = guidecue(&["validate", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("line 7"), "{stdout}");
    assert!(stdout.contains("line 10"), "{stdout}");
    assert_eq!(stderr_json(&out)["error"], "validation");
}

#[test]
fn exit_codes() {
    let out = guidecue(&["analyze", "/definitely/not/here"]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(stderr_json(&out)["exit_code"], 3);
    let out = guidecue(&["gen", "--preset", "nope", "--out", "/tmp/x"]);
    assert_eq!(out.status.code(), Some(2));
    let out = guidecue(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    let out = guidecue(&["config", "--set", "scoring.weights.yaw=0.9"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn score_writes_one_line_per_expert_epoch() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("s");
    gen(&dir, "room1");
    // Mimic the expert's own arm as the practice stream.
    let practice: Vec<String> = fs::read_to_string(dir.join("keypoints.jsonl"))
        .unwrap()
        .lines()
        .enumerate()
        .map(|(i, l)| {
            let v: Value = serde_json::from_str(l).unwrap();
            serde_json::json!({"frame": v["frame_index"], "seq": i, "right_arm": v["right_arm"]}).to_string()
        })
        .collect();
    let p = tmp.path().join("practice.jsonl");
    fs::write(&p, practice.join("\n") + "\n").unwrap();
    let stdout = ok(&["score", dir.to_str().unwrap(), "--practice", p.to_str().unwrap()]);
    assert!(stdout.contains("31 matched"), "{stdout}");
    let lines = fs::read_to_string(dir.join("scores.jsonl")).unwrap();
    assert_eq!(lines.lines().count(), 31);
    for l in lines.lines() {
        let v: Value = serde_json::from_str(l).unwrap();
        assert!(v["composite"].as_f64().unwrap() > 0.999);
    }
}

#[test]
fn spec_round_trips_through_gen() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = tmp.path().join("room2.json");
    fs::write(&spec, ok(&["spec", "room2"])).unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    ok(&["gen", "--spec", spec.to_str().unwrap(), "--out", a.to_str().unwrap()]);
    gen(&b, "room2");
    assert_eq!(fs::read(a.join("keypoints.jsonl")).unwrap(), fs::read(b.join("keypoints.jsonl")).unwrap());
    assert_eq!(fs::read_to_string(a.join("annotations.jsonl")).unwrap().lines().count(), 52);
}

#[test]
fn shipped_config_matches_defaults() {
    let shipped = concat!(env!("CARGO_MANIFEST_DIR"), "/../../config/default.toml");
    assert_eq!(ok(&["config", "--config", shipped]), ok(&["config"]));
}
