use std::path::Path;
use std::process::{Command, Output};

fn distlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_distlab")).args(args).output().expect("run distlab")
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const UNIT_SQUARE: &str = r#"{"lattice": "Z2", "points": [[0,0],[1,0],[0,1],[1,1]]}"#;

#[test]
fn unit_square_csv_golden() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "sq.json", UNIT_SQUARE);
    let o = distlab(&["spectrum", "--in", &input]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(String::from_utf8(o.stdout).unwrap(), "key,m,distance_sq_numer,distance_sq_denom\n1,8,1,1\n2,4,2,1\n");
}

#[test]
fn empty_file_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "empty.json", "");
    let o = distlab(&["spectrum", "--in", &input]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("error[parse]"), "{}", stderr(&o));
}

#[test]
fn singleton_fails_the_precondition() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "one.json", r#"{"lattice": "Z2", "points": [[3,4]]}"#);
    let o = distlab(&["spectrum", "--in", &input]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).starts_with("error[precondition]"), "{}", stderr(&o));
}

#[test]
fn malformed_json_reports_line_and_column() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "bad.json", "{\"lattice\": \"Z2\",\n \"points\": [[0,0],[1,]]}");
    let o = distlab(&["spectrum", "--in", &input]);
    assert_eq!(o.status.code(), Some(2));
    let e = stderr(&o);
    assert!(e.contains("line 2"), "{e}");
    assert!(e.contains("column"), "{e}");
    assert_eq!(e.lines().count(), 1, "{e}");
}

#[test]
fn unknown_lattice_and_usage_errors() {
    let o = distlab(&["window", "--lattice", "nope", "--r-sq", "4"]);
    assert_ne!(o.status.code(), Some(0));
    let o = distlab(&["spectrum"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error[usage]"), "{}", stderr(&o));
}

#[test]
fn output_is_deterministic_and_manifested() {
    let dir = tempfile::tempdir().unwrap();
    let win = dir.path().join("w.json");
    let win_s = win.to_str().unwrap();
    let o = distlab(&["window", "--lattice", "hex", "--r-sq", "30", "--center", "1/3,1/3", "--out", win_s]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(dir.path().join("w.json.manifest.json").exists());

    let mut outs = Vec::new();
    for name in ["a.csv", "b.csv"] {
        let out = dir.path().join(name);
        let o = distlab(&["spectrum", "--in", win_s, "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", stderr(&o));
        outs.push(std::fs::read(&out).unwrap());
    }
    assert_eq!(outs[0], outs[1]);

    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("a.csv.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "spectrum");
    assert_eq!(manifest["inputs"].as_array().unwrap().len(), 1);
    assert_eq!(manifest["outputs"][0]["sha256"].as_str().unwrap().len(), 64);
    assert!(manifest["config"]["seed"].is_u64());
}

#[test]
fn classify_then_check() {
    let dir = tempfile::tempdir().unwrap();
    let pts: Vec<String> = (0..12).flat_map(|i| (0..12).map(move |j| format!("[{i},{j}]"))).collect();
    let input = write(dir.path(), "grid.json", &format!(r#"{{"lattice": "Z2", "points": [{}]}}"#, pts.join(",")));
    let report = dir.path().join("report.json");
    let o = distlab(&["classify", "--in", &input, "--out", report.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(r["outcome"]["kind"], "TwoShift");

    let o = distlab(&["classify", "--check", "--in", report.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));

    let tampered = std::fs::read_to_string(&report).unwrap().replacen("\"n\": 144", "\"n\": 145", 1);
    let bad = write(dir.path(), "tampered.json", &tampered);
    let o = distlab(&["classify", "--check", "--in", &bad]);
    assert_eq!(o.status.code(), Some(9), "{}", stderr(&o));
}

#[test]
fn verify_selected_suites() {
    let o = distlab(&["verify", "--suite", "quadruple-identity,line-identity", "--trials", "20", "--nmax", "12"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["failed"], serde_json::json!([]));
    let o = distlab(&["verify", "--suite", "no-such-suite"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bernays_small_census() {
    let o = distlab(&["bernays", "--form", "1,0,1", "--T", "1e4", "--grid", "linear"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    // 2749 integers in [1, 10^4] are sums of two squares.
    assert!(text.contains("2749"), "{text}");
}
