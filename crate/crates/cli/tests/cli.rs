use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn tou(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tou"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn data(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "data", name]
        .iter()
        .collect();
    p.to_str().unwrap().to_string()
}

#[test]
fn generate_then_price_then_simulate() {
    let dir = tempfile::tempdir().unwrap();
    let out = tou(
        &[
            "generate",
            "--config",
            &data("gen.json"),
            "--out",
            "inst.json",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let inst = tou_core::io::read_instance(&dir.path().join("inst.json")).unwrap();
    assert_eq!(inst.horizon, 24);
    assert!(inst.period.is_some());

    let out = tou(
        &[
            "price",
            "--instance",
            "inst.json",
            "--out",
            "prices.json",
            "--graph-out",
            "g.csv",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let prices: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("prices.json")).unwrap())
            .unwrap();
    let p: Vec<f64> = prices["prices"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    assert_eq!(p.len(), 24);
    assert!((0..20).all(|t| p[t] == p[t + 4]), "{p:?}");
    let graph = std::fs::read_to_string(dir.path().join("g.csv")).unwrap();
    assert!(graph.lines().any(|l| l == "src,dst,kind"));

    let out = tou(
        &[
            "simulate",
            "--instance",
            "inst.json",
            "--trials",
            "50",
            "--seed",
            "3",
            "--format",
            "csv",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = String::from_utf8(out.stdout).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("# seed=3 config_hash="));
    assert_eq!(lines.next().unwrap(), tou_core::io::REPORT_COLUMNS);
    assert_eq!(lines.count(), 5);
}

#[test]
fn verify_sample_data() {
    let dir = tempfile::tempdir().unwrap();
    let out = tou(
        &["verify", "--instance", &data("ex.json"), "--trials", "50"],
        dir.path(),
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().all(|l| l.starts_with("ok")), "{text}");

    let out = tou(
        &["verify", "--network", &data("net.json"), "--trials", "50"],
        dir.path(),
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
}

#[test]
fn network_experiment_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let run = |threads: &str| {
        let out = tou(
            &[
                "--threads",
                threads,
                "network",
                "--config",
                &data("netexp.json"),
                "--trials",
                "300",
                "--format",
                "csv",
            ],
            dir.path(),
        );
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        out.stdout
    };
    assert_eq!(run("1"), run("3"));
}

#[test]
fn usage_and_input_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        tou(&["simulate", "--bogus"], dir.path()).status.code(),
        Some(2)
    );
    assert_eq!(
        tou(&["price", "--instance", "missing.json"], dir.path())
            .status
            .code(),
        Some(2)
    );
    std::fs::write(dir.path().join("bad.json"), r#"{"horizon": 2, "capacities": [1], "jobs": [{"id": "a", "s": 2, "d": 1, "l": 1, "v": 1, "q": 1}]}"#).unwrap();
    assert_eq!(
        tou(&["price", "--instance", "bad.json"], dir.path())
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn oracle_prints_the_expected_optimum() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("tiny.json"),
        r#"{"horizon": 1, "capacities": [1], "jobs": [
            {"id": "a", "s": 1, "d": 1, "l": 1, "v": 4, "q": 0.5},
            {"id": "b", "s": 1, "d": 1, "l": 1, "v": 2, "q": 1}]}"#,
    )
    .unwrap();
    let out = tou(&["oracle", "--instance", "tiny.json"], dir.path());
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    // E[OPT] = 0.5 * 4 + 0.5 * 2
    assert!(String::from_utf8(out.stdout).unwrap().contains('3'));
}
