use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn painscreen(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_painscreen"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

const CONFIG: &str = "\
seed = 11
duration_ms = 20000
episodes = 2000-7000:350, 12000-17000:500
";

fn simulate(dir: &TempDir) -> std::path::PathBuf {
    let cfg = dir.path().join("session.cfg");
    fs::write(&cfg, CONFIG).unwrap();
    let stream = dir.path().join("session.txt");
    let out = painscreen(&["simulate", "--config", arg(&cfg), "--output", arg(&stream)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    stream
}

#[test]
fn simulate_writes_stream_and_truth() {
    let dir = TempDir::new().unwrap();
    let stream = simulate(&dir);
    let text = fs::read_to_string(&stream).unwrap();
    assert!(text.starts_with("EMG,0,0,"));
    let truth = fs::read_to_string(dir.path().join("session.truth.csv")).unwrap();
    assert!(truth.starts_with("window_id,label\n0,0\n"));
}

#[test]
fn simulate_is_reproducible_and_seed_overrides() {
    let dir = TempDir::new().unwrap();
    let a = simulate(&dir);
    let first = fs::read(&a).unwrap();
    let again = simulate(&dir);
    assert_eq!(first, fs::read(again).unwrap());

    let cfg = dir.path().join("session.cfg");
    let other = dir.path().join("other.txt");
    let out = painscreen(&["simulate", "--config", arg(&cfg), "--output", arg(&other), "--seed", "12"]);
    assert_eq!(out.status.code(), Some(0));
    assert_ne!(first, fs::read(other).unwrap());
}

#[test]
fn simulate_rejects_overlapping_episodes() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "episodes = 0-5000:300, 4000-9000:300\n").unwrap();
    let out = painscreen(&["simulate", "--config", arg(&cfg), "--output", arg(&dir.path().join("x.txt"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.cfg:1"));
}

#[test]
fn run_produces_report_weights_and_commands() {
    let dir = TempDir::new().unwrap();
    let stream = simulate(&dir);
    let report = dir.path().join("report.jsonl");
    let out = painscreen(&["run", "--input", arg(&stream), "--output", arg(&report)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    let text = fs::read_to_string(&report).unwrap();
    let last = text.lines().last().unwrap();
    assert!(last.contains("\"kind\":\"summary\""));
    assert!(last.contains("\"target_source\":\"ground_truth\""));
    assert!(last.contains("\"recall\":"));
    assert_eq!(text.lines().filter(|l| l.contains("\"kind\":\"assessment\"")).count(), 62);

    let weights = fs::read_to_string(dir.path().join("report.weights.csv")).unwrap();
    assert!(weights.starts_with("attribute,rho,gamma,omega,omega_norm\naverage_value,"));
    let commands = fs::read_to_string(dir.path().join("report.commands.txt")).unwrap();
    assert_eq!(commands.lines().count(), 62);
    assert!(commands.lines().all(|l| l.starts_with("CMD,")));
}

#[test]
fn run_on_empty_input() {
    let dir = TempDir::new().unwrap();
    let input = dir.path().join("empty.txt");
    fs::write(&input, "").unwrap();
    let report = dir.path().join("r.jsonl");
    let out = painscreen(&["run", "--input", arg(&input), "--output", arg(&report)]);
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read_to_string(&report).unwrap();
    assert_eq!(text.lines().count(), 1);
    assert!(text.contains("\"windows\":0"));
    assert_eq!(fs::read_to_string(dir.path().join("r.commands.txt")).unwrap(), "");
}

#[test]
fn run_counts_malformed_lines() {
    let dir = TempDir::new().unwrap();
    let input = dir.path().join("noisy.txt");
    let mut text = String::new();
    for i in 0..100 {
        text.push_str(&format!("EMG,{i},{},150\n", i * 10));
        text.push_str("EMG,??,corrupt\n");
        text.push_str("\u{1}\u{2}garbage\n");
    }
    fs::write(&input, text).unwrap();
    let report = dir.path().join("r.jsonl");
    let out = painscreen(&["run", "--input", arg(&input), "--output", arg(&report)]);
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read_to_string(&report).unwrap();
    assert!(text.contains("\"frames_malformed\":200"));
    assert!(text.contains("\"frames_ok\":100"));
    assert!(text.contains("\"samples_discarded\":4"));
}

#[test]
fn run_exit_codes() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("missing.txt");
    let out = painscreen(&["run", "--input", arg(&missing), "--output", arg(&dir.path().join("r"))]);
    assert_eq!(out.status.code(), Some(1));

    let input = dir.path().join("in.txt");
    fs::write(&input, "").unwrap();
    let cfg = dir.path().join("c.cfg");
    fs::write(&cfg, "theta = 2\n").unwrap();
    let out = painscreen(&["run", "--config", arg(&cfg), "--input", arg(&input), "--output", arg(&dir.path().join("r"))]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn screen_command() {
    let dir = TempDir::new().unwrap();
    let table = dir.path().join("table.csv");
    fs::write(&table, "object,a,b,label\n1,0,0,1\n2,0,1,0\n3,1,0,0\n4,1,1,0\n").unwrap();
    let out_path = dir.path().join("w.csv");
    let out = painscreen(&["screen", "--input", arg(&table), "--output", arg(&out_path)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(
        fs::read_to_string(&out_path).unwrap(),
        "attribute,rho,gamma,omega,omega_norm\na,0,0.25,0.125,0.5\nb,0,0.25,0.125,0.5\n"
    );
    // scores: 0, 0.5, 0.5, 1 with theta 0.5
    assert_eq!(String::from_utf8_lossy(&out.stdout), "2\n3\n4\n");
    let scores = fs::read_to_string(dir.path().join("w.scores.csv")).unwrap();
    assert_eq!(scores, "object,score,selected\n1,0,0\n2,0.5,1\n3,0.5,1\n4,1,1\n");
}

#[test]
fn stats_command() {
    let dir = TempDir::new().unwrap();
    let two = dir.path().join("two.csv");
    fs::write(&two, "group,value\na,1\na,2\na,3\na,4\nb,2\nb,3\nb,4\nb,5\n").unwrap();
    let out = painscreen(&["stats", "--input", arg(&two), "--test", "ttest"]);
    assert_eq!(out.status.code(), Some(0));
    let line = String::from_utf8_lossy(&out.stdout);
    assert_eq!(line.lines().count(), 1);
    assert!(line.starts_with("ttest,-1.09544511501033"), "{line}");

    let same = dir.path().join("same.csv");
    fs::write(&same, "a,1\na,2\na,3\nb,1\nb,2\nb,3\n").unwrap();
    let out = painscreen(&["stats", "--input", arg(&same), "--test", "ttest"]);
    assert_eq!(String::from_utf8_lossy(&out.stdout), "ttest,0,4,1\n");

    let one = dir.path().join("one.csv");
    fs::write(&one, "a,1\na,2\n").unwrap();
    let out = painscreen(&["stats", "--input", arg(&one), "--test", "anova"]);
    assert_eq!(out.status.code(), Some(2));

    let flat = dir.path().join("flat.csv");
    fs::write(&flat, "a,1\na,1\nb,2\nb,2\n").unwrap();
    let out = painscreen(&["stats", "--input", arg(&flat), "--test", "anova"]);
    assert_eq!(out.status.code(), Some(3));

    let out = painscreen(&["stats", "--input", arg(&two), "--test", "welch"]);
    assert_eq!(out.status.code(), Some(2));
}
