use std::io::Write;
use std::process::{Command, Output};

fn run(config: &str, extra: &[&str]) -> Output {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    f.write_all(config.as_bytes()).unwrap();
    Command::new(env!("CARGO_BIN_EXE_verify"))
        .arg("--config")
        .arg(f.path())
        .args(extra)
        .output()
        .unwrap()
}

const PASSING: &str = r#"
[sampling]
points_per_target = 3
seed = 11

[[target]]
name = "sphere:n=3"

[[target]]
family = "clifford"
n = 2
k = 1

[[check]]
name = "constant_curvature"

[[check]]
name = "sff_norm"
"#;

#[test]
fn passing_suite_exits_zero_with_schema() {
    let out = run(PASSING, &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    for key in ["meta", "targets", "checks", "summary"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["meta"]["schema_version"], 1);
    assert_eq!(v["meta"]["seed"], 11);
    // every check appears points_per_target times per target
    assert_eq!(v["checks"].as_array().unwrap().len(), 2 * 2 * 3);
    assert_eq!(v["summary"]["fail"], 0);
    let inapplicable = v["summary"]["inapplicable"].as_u64().unwrap();
    assert_eq!(inapplicable, 6);
}

#[test]
fn failing_check_exits_one_and_names_the_record() {
    let config = PASSING.replace("name = \"sff_norm\"", "name = \"sff_norm\"\ntolerance = 0.0");
    let config = config.replace(
        "name = \"constant_curvature\"",
        "name = \"constant_curvature\"\ntolerance = 1e-14",
    );
    let out = run(&config, &[]);
    assert_eq!(out.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let failed: Vec<_> = v["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|r| r["verdict"] == "fail")
        .collect();
    assert!(!failed.is_empty());
    for r in failed {
        assert!(r["target"].is_string());
        assert!(r["point"].is_array());
        assert!(r["value"].is_number());
        assert!(r["tolerance"].is_number());
    }
    assert!(String::from_utf8_lossy(&out.stderr).contains("FAIL"));
}

#[test]
fn empty_suite_exits_two() {
    let out = run("[sampling]\nseed = 1\n", &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
}

#[test]
fn bad_config_exits_two() {
    let out = run(
        "[[target]]\nname = \"sphere:n=2\"\n[[check]]\nname = \"frobnicate\"\n",
        &[],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown check"));
}

#[test]
fn same_seed_gives_identical_bytes() {
    let a = run(PASSING, &["--seed", "5"]);
    let b = run(PASSING, &["--seed", "5"]);
    let c = run(PASSING, &["--seed", "6"]);
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn text_format_and_out_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.txt");
    let out = run(PASSING, &["--format", "text", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(path).unwrap();
    assert!(text.contains("constant_curvature"));
    assert!(text.contains("total 12"));
}

#[test]
fn listings() {
    let out = Command::new(env!("CARGO_BIN_EXE_verify"))
        .args(["--list-targets", "--list-checks"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let s = String::from_utf8_lossy(&out.stdout);
    assert!(s.contains("clifford:n=4,k=2"));
    assert!(s.contains("simons_identity"));
}
