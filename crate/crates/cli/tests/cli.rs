use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn dynmatch(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dynmatch"))
        .args(args)
        .output()
        .expect("spawn dynmatch")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let path = dir.path().join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn without_timing(json: &str) -> serde_json::Value {
    let mut doc: serde_json::Value = serde_json::from_str(json).unwrap();
    doc.as_object_mut().unwrap().remove("timing").expect("timing key");
    doc
}

#[test]
fn run_path_zipper_prefix_matches_two_edges() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "zip.txt", "n=4\n+ 1 2\n+ 0 1\n+ 2 3\n");
    let out = dynmatch(&["run", "--input", &input, "--seed", "1"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("matching_size=2"), "{}", stdout(&out));
}

#[test]
fn verify_rejects_delete_of_absent_edge() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "bad.txt", "n=4\n- 0 1\n");
    let out = dynmatch(&["verify", "--input", &input]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn missing_input_is_a_usage_error() {
    let out = dynmatch(&["run", "--input", "/nonexistent/seq.txt"]);
    assert_eq!(out.status.code(), Some(2));
    let out = dynmatch(&["run"]);
    assert_eq!(out.status.code(), Some(2));
    let out = dynmatch(&["gen", "--pattern", "spiral", "--n", "4"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn run_teardown_ends_with_no_edges() {
    let dir = TempDir::new().unwrap();
    let input = dir.path().join("seq.txt");
    let input = input.to_str().unwrap();
    let out = dynmatch(&[
        "gen", "--n", "20", "--t", "300", "--p-insert", "0.7", "--seed", "5", "--out", input,
    ]);
    assert_eq!(out.status.code(), Some(0));
    let metrics = dir.path().join("m.json");
    let out = dynmatch(&[
        "run",
        "--input",
        input,
        "--seed",
        "3",
        "--threshold",
        "2",
        "--teardown",
        "--metrics",
        metrics.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let json = read_json(&metrics);
    assert_eq!(json["totals"]["final_edge_count"], 0);
    assert_eq!(json["totals"]["final_matching_size"], 0);
    assert!(stdout(&out).contains("edge_count=0"));
}

#[test]
fn verify_checks_ratio_on_small_instances() {
    let dir = TempDir::new().unwrap();
    let input = dir.path().join("seq.txt");
    let input = input.to_str().unwrap();
    let out = dynmatch(&["gen", "--n", "10", "--t", "80", "--p-insert", "0.6", "--seed", "2", "--out", input]);
    assert_eq!(out.status.code(), Some(0));
    let out = dynmatch(&["verify", "--input", input, "--threshold", "2", "--seed", "9"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("ratio_checked=80 ratio_skipped=0"), "{}", stdout(&out));
}

#[test]
fn verify_skips_ratio_on_large_instances() {
    let dir = TempDir::new().unwrap();
    let input = dir.path().join("seq.txt");
    let input = input.to_str().unwrap();
    let out = dynmatch(&["gen", "--n", "60", "--t", "100", "--p-insert", "0.9", "--seed", "2", "--out", input]);
    assert_eq!(out.status.code(), Some(0));
    let out = dynmatch(&["verify", "--input", input]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(!text.contains("ratio_skipped=0"), "{text}");
    assert!(!text.contains("ratio_checked=0 "), "{text}");
}

#[test]
fn metrics_are_deterministic_apart_from_timing() {
    let dir = TempDir::new().unwrap();
    let input = dir.path().join("seq.txt");
    let input = input.to_str().unwrap();
    dynmatch(&["gen", "--pattern", "star-churn", "--n", "12", "--seed", "4", "--out", input]);
    let mut docs = Vec::new();
    for (name, format) in [("a.json", "json"), ("b.json", "json"), ("a.csv", "csv"), ("b.csv", "csv")] {
        let path = dir.path().join(name);
        let out = dynmatch(&[
            "run",
            "--input",
            input,
            "--seed",
            "7",
            "--threshold",
            "3",
            "--metrics",
            path.to_str().unwrap(),
            "--format",
            format,
        ]);
        assert_eq!(out.status.code(), Some(0));
        docs.push(fs::read_to_string(path).unwrap());
    }
    assert_eq!(without_timing(&docs[0]), without_timing(&docs[1]));
    let csv_body = |s: &str| -> Vec<String> {
        s.lines()
            .filter(|l| !l.starts_with("# timing."))
            .map(|l| l.rsplit_once(',').map_or(l, |(head, _)| head).to_string())
            .collect()
    };
    assert_eq!(csv_body(&docs[2]), csv_body(&docs[3]));
    let json: serde_json::Value = serde_json::from_str(&docs[0]).unwrap();
    assert!(json["procedures"]["randomised-raise-level-to-1"].as_u64().unwrap() > 0);
}

#[test]
fn gen_is_byte_identical_for_a_seed() {
    let a = dynmatch(&["gen", "--n", "30", "--t", "100", "--seed", "11"]);
    let b = dynmatch(&["gen", "--n", "30", "--t", "100", "--seed", "11"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert!(stdout(&a).starts_with("n=30\n# seed=11 gen=random\n"));
}

#[test]
fn bench_emits_one_row_per_size() {
    let out = dynmatch(&["bench", "--n-list", "16,64", "--updates-per-n", "5"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("16,4,80,"));
    assert!(lines[2].starts_with("64,8,320,"));
}
