use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn specvar(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_specvar"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

fn run(dir: &TempDir, cmd: &str, body: &str, extra: &[&str]) -> (Output, std::path::PathBuf) {
    let cfg = write(dir.path(), "cfg.json", body);
    let out = dir.path().join("out");
    let mut args = vec![cmd, "--config", &cfg, "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    (specvar(&args), out)
}

const DIRAC: &str =
    r#"{"domain":"disk","components":[{"kind":"atom","params":{"re":0.0},"mass":1.0}]}"#;

#[test]
fn classify_dirac_is_linear() {
    let d = TempDir::new().unwrap();
    let (o, out) = run(
        &d,
        "classify",
        &format!(r#"{{"measure":{DIRAC},"n":4096}}"#),
        &["--assert"],
    );
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["schema_version"], 1);
    assert_eq!(summary["results"]["verdict"], "linear");
    assert_eq!(summary["results"]["K"].as_f64(), Some(1.0));
    assert!(summary["tool_version"].is_string());
    let csv = fs::read_to_string(out.join("classify.csv")).unwrap();
    assert!(csv.starts_with("n,var,var_over_n,h_hat\n"));
}

#[test]
fn malformed_kind_exits_1_with_location() {
    let d = TempDir::new().unwrap();
    let body = r#"{"measure":{"domain":"disk","components":[
        {"kind":"atom","params":{"re":0.5},"mass":0.5},
        {"kind":"triangle","mass":0.5}]},"n":4096}"#;
    let (o, _) = run(&d, "classify", body, &[]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("measure.components[1].kind"), "{err}");
}

#[test]
fn bad_json_and_missing_file_exit_1() {
    let d = TempDir::new().unwrap();
    let (o, _) = run(&d, "classify", r#"{"n": [1,"#, &[]);
    assert_eq!(o.status.code(), Some(1));
    let o = specvar(&["nsc", "--config", "/nonexistent/cfg.json"]);
    assert_eq!(o.status.code(), Some(1));
    let (o, _) = run(
        &d,
        "harmonic",
        &format!(r#"{{"measure":{DIRAC},"x":[0.1]}}"#),
        &[],
    );
    assert_eq!(
        o.status.code(),
        Some(1),
        "stochastic command without a seed"
    );
}

#[test]
fn divergence_exits_2() {
    let d = TempDir::new().unwrap();
    let body = r#"{"measure":{"domain":"disk","components":[{"kind":"power-law","params":{"gamma":0.5},"mass":1.0}]}}"#;
    let (o, _) = run(&d, "nsc", body, &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("sigma"));
}

#[test]
fn assert_mode_exits_3_on_wrong_verdict() {
    let d = TempDir::new().unwrap();
    let body = format!(r#"{{"measure":{DIRAC},"n":4096,"expect":"regular"}}"#);
    let (o, out) = run(&d, "classify", &body, &[]);
    assert_eq!(o.status.code(), Some(0));
    assert!(out.join("summary.json").exists());
    let (o, _) = run(&d, "classify", &body, &["--assert"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn chain_clt_is_byte_reproducible() {
    let body =
        r#"{"command":"chain-clt","chain":{"family":"triangular"},"n":20000,"replications":200}"#;
    let mut outputs = Vec::new();
    for _ in 0..2 {
        let d = TempDir::new().unwrap();
        let (o, out) = run(&d, "chain-clt", body, &["--seed", "11"]);
        assert_eq!(
            o.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&o.stderr)
        );
        outputs.push((
            fs::read(out.join("summary.json")).unwrap(),
            fs::read(out.join("clt.csv")).unwrap(),
        ));
    }
    assert_eq!(outputs[0], outputs[1]);
    let d = TempDir::new().unwrap();
    let (_, out) = run(&d, "chain-clt", body, &["--seed", "12"]);
    assert_ne!(fs::read(out.join("clt.csv")).unwrap(), outputs[0].1);
}

#[test]
fn harmonic_csv_columns() {
    let d = TempDir::new().unwrap();
    let body = format!(r#"{{"measure":{DIRAC},"x":[0.1,1.0],"paths":2000,"seed":3}}"#);
    let (o, out) = run(&d, "harmonic", &body, &[]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let csv = fs::read_to_string(out.join("harmonic.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("x,estimate,stderr,quadrature_value"));
    assert_eq!(lines.count(), 2);
}

#[test]
fn shipped_configs_parse_and_round_trip() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let mut seen = 0;
    for e in fs::read_dir(dir).unwrap() {
        let text = fs::read_to_string(e.unwrap().path()).unwrap();
        let c = specvar::cli::ExperimentConfig::parse(&text).unwrap();
        assert!(c.command.is_some());
        let again = specvar::cli::ExperimentConfig::parse(&c.to_json()).unwrap();
        assert_eq!(again, c);
        seen += 1;
    }
    assert!(seen >= 9);
}
