use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use wpursuit::cli::{MetricsFile, ModelFile, OracleFile, ReportFile};

fn wpursuit(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wpursuit"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = wpursuit(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn read<T: serde::de::DeserializeOwned>(path: &Path) -> T {
    toml::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

const SMALL: &str = r#"
seed = 4
[model]
p = 5
k = 1
[model.signal]
kind = "two_point"
prob = 0.5
[generate]
n = 2000
[stopping]
c_sigma = 1.0
"#;

#[test]
fn generate_recover_evaluate_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("run.toml"), SMALL).unwrap();
    let printed = ok(d, &["generate", "--config", "run.toml"]);
    assert!(printed.contains("data.csv") && printed.contains("model.toml"));
    let model: ModelFile = read(&d.join("model.toml"));
    assert_eq!(model.n, 2000);
    assert!((model.truth.d_psi - 0.635_791_537).abs() < 1e-6);
    let rows = fs::read_to_string(d.join("data.csv")).unwrap();
    assert_eq!(rows.lines().count(), 2000);
    assert_eq!(rows.lines().next().unwrap().split(',').count(), 5);

    ok(d, &["recover", "--config", "run.toml", "--data", "data.csv"]);
    let report: ReportFile = read(&d.join("report.toml"));
    assert_eq!(report.k_hat, 1);
    assert!(report.whitened);
    assert_eq!(report.config.optimizer.seed, 4);

    ok(
        d,
        &["evaluate", "--report", "report.toml", "--model", "model.toml"],
    );
    let metrics: MetricsFile = read(&d.join("metrics.toml"));
    assert_eq!((metrics.k, metrics.k_hat), (1, 1));
    // a single signal direction has infinite separation, so the bound is 0
    // and any sampling error exceeds it
    assert_eq!(metrics.error.snr_bound, 0.0);
    assert!(!metrics.bound_holds);
    assert!(metrics.error.max_w_proj > 0.0 && metrics.error.max_w_proj < 0.1);
    let plot = fs::read_to_string(d.join("plot.csv")).unwrap();
    assert!(plot.starts_with("index,distance,w_proj,retained\n"));
    assert_eq!(plot.lines().count(), 1 + report.distances.len());
}

#[test]
fn null_model_sidecar_and_max_k_override() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(
        d.join("run.toml"),
        "[model]\np = 4\nk = 0\n[model.signal]\nkind = \"uniform\"\n[generate]\nn = 500\n",
    )
    .unwrap();
    ok(d, &["generate", "--config", "run.toml"]);
    let model: ModelFile = read(&d.join("model.toml"));
    assert_eq!(model.truth.d_psi, 0.0);
    assert!(model.basis_u.is_empty());

    fs::write(d.join("sig.toml"), SMALL).unwrap();
    let sub = d.join("sig");
    ok(d, &["generate", "--config", "sig.toml", "--out", "sig"]);
    ok(
        d,
        &["recover", "--config", "sig.toml", "--data", "sig/data.csv", "--out", "sig", "--max-k", "1"],
    );
    let report: ReportFile = read(&sub.join("report.toml"));
    assert_eq!(report.config.stopping.max_k, Some(1));
    assert!(report.directions.len() <= 1);
}

#[test]
fn evaluate_rejects_mismatched_dimensions() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("a.toml"), SMALL).unwrap();
    fs::write(d.join("b.toml"), SMALL.replace("p = 5", "p = 3")).unwrap();
    ok(d, &["generate", "--config", "a.toml", "--out", "a"]);
    ok(d, &["generate", "--config", "b.toml", "--out", "b"]);
    ok(
        d,
        &["recover", "--config", "a.toml", "--data", "a/data.csv", "--out", "a", "--max-k", "1"],
    );
    let out = wpursuit(d, &["evaluate", "--report", "a/report.toml", "--model", "b/model.toml"]);
    assert_eq!(out.status.code(), Some(6));
}

#[test]
fn exit_codes_for_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("bad.toml"), "seed = 1\n[stopping]\nbogus = 2\n").unwrap();
    let out = wpursuit(d, &["generate", "--config", "bad.toml"]);
    assert_eq!(out.status.code(), Some(5));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus"));

    let out = wpursuit(d, &["recover", "--data", "missing.csv"]);
    assert_eq!(out.status.code(), Some(4));

    fs::write(d.join("x.csv"), "1,2\n3,oops\n").unwrap();
    let out = wpursuit(d, &["recover", "--data", "x.csv"]);
    assert_eq!(out.status.code(), Some(5));
    assert!(String::from_utf8_lossy(&out.stderr).contains("row 2, column 2"));

    let out = wpursuit(d, &["recover"]);
    assert_eq!(out.status.code(), Some(3));

    let out = wpursuit(d, &["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn oracle_handles_supported_dimensions_only() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let four: String = (0..50).map(|i| format!("{i},{},0,1\n", i % 7)).collect();
    fs::write(d.join("four.csv"), four).unwrap();
    let out = wpursuit(d, &["oracle", "--data", "four.csv"]);
    assert_eq!(out.status.code(), Some(9));

    fs::write(d.join("zeros.csv"), "0,0\n".repeat(20)).unwrap();
    ok(d, &["oracle", "--data", "zeros.csv", "--resolution", "0.01"]);
    let file: OracleFile = read(&d.join("oracle.toml"));
    assert!((file.oracle_value - 1.0).abs() < 1e-9);
    assert!((file.optimizer_value - 1.0).abs() < 1e-9);
    assert!(!file.optimizer_missed);
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("run.toml"), SMALL.replace("n = 2000", "n = 800")).unwrap();
    let mut outputs = Vec::new();
    for run in ["r1", "r2"] {
        ok(d, &["generate", "--config", "run.toml", "--out", run]);
        let data = format!("{run}/data.csv");
        ok(d, &["recover", "--config", "run.toml", "--data", &data, "--out", run]);
        let files: Vec<Vec<u8>> = ["data.csv", "model.toml"]
            .iter()
            .map(|f| fs::read(d.join(run).join(f)).unwrap())
            .collect();
        // the report embeds the data path, which differs between runs
        let report = fs::read_to_string(d.join(run).join("report.toml")).unwrap();
        outputs.push((files, report.replace(run, "RUN")));
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn probe_writes_summary_and_table() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(
        d.join("run.toml"),
        "[probe.covnorm]\nn = 400\np = 40\ntrials = 3\n",
    )
    .unwrap();
    ok(d, &["probe", "--config", "run.toml", "--kind", "covnorm"]);
    let text = fs::read_to_string(d.join("probe.toml")).unwrap();
    assert!(text.contains("kind = \"covnorm\""));
    let table = fs::read_to_string(d.join("probe.csv")).unwrap();
    assert_eq!(table.lines().count(), 4);
}
