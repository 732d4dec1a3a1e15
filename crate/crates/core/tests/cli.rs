use ldp_bdp::cli::run;
use std::fs;
use std::path::Path;
use std::process::Command;

struct Outcome {
    code: i32,
    stdout: String,
    stderr: String,
}

fn cli(args: &[&str]) -> Outcome {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut argv = vec!["ldp-bdp"];
    argv.extend_from_slice(args);
    let code = run(argv, &mut out, &mut err);
    Outcome {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

fn error_json(stderr: &str) -> serde_json::Value {
    let line = stderr.lines().last().expect("error record");
    serde_json::from_str(line).expect("json error record")
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut entries: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().into_string().unwrap(), fs::read(e.path()).unwrap())
        })
        .collect();
    entries.sort();
    entries
}

#[test]
fn simulate_writes_one_file_per_replica_and_a_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("paths");
    let r = cli(&["simulate", "--T", "3", "--replicas", "100", "--seed", "9", "--out", dir.to_str().unwrap()]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let files = read_dir_sorted(&dir);
    assert_eq!(files.len(), 101);
    assert_eq!(files.iter().filter(|(n, _)| n.starts_with("path_")).count(), 100);
    let summary = String::from_utf8(files.iter().find(|(n, _)| n == "summary.csv").unwrap().1.clone()).unwrap();
    assert!(summary.contains("# master_seed: 9"));
    assert!(summary.contains("# tool_version: "));
    assert!(summary.contains("# config_digest: "));
    assert!(summary.contains("# explosion_frequency: 0"));
    assert_eq!(summary.lines().filter(|l| !l.starts_with('#')).count(), 101);
    let first = String::from_utf8(files[0].1.clone()).unwrap();
    assert!(first.contains("# status: completed"));
}

#[test]
fn simulate_output_is_identical_across_thread_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let mut runs = Vec::new();
    for (i, threads) in ["1", "3", "1"].iter().enumerate() {
        let dir = tmp.path().join(format!("run{i}"));
        let r = cli(&[
            "simulate", "--T", "2", "--replicas", "50", "--c-lambda", "2", "--threads", threads, "--out",
            dir.to_str().unwrap(),
        ]);
        assert_eq!(r.code, 0, "{}", r.stderr);
        runs.push(read_dir_sorted(&dir));
    }
    assert_eq!(runs[0], runs[1]);
    assert_eq!(runs[0], runs[2]);
}

#[test]
fn simulate_reference_json_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("ref");
    let r = cli(&["simulate", "--reference", "--T", "4", "--replicas", "20", "--format", "json", "--out", dir.to_str().unwrap()]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let v: serde_json::Value = serde_json::from_slice(&fs::read(dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(v["data"]["process"], "reference");
    assert_eq!(v["data"]["paths"].as_array().unwrap().len(), 20);
    assert!(v["config_digest"].is_string());
}

#[test]
fn estimate_csv_has_the_study_columns() {
    let r = cli(&["estimate", "--T", "2", "--epsilon", "0.5", "--replicas", "2000", "--method", "direct,is,oracle"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let header = r.stdout.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(header, "method,T,epsilon,log_prob,stderr,normalized,I_f,psi_exp,replicas,ess,seed");
    let methods: Vec<&str> = r.stdout.lines().filter(|l| !l.starts_with('#')).skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(methods, ["direct", "is", "oracle"]);
}

#[test]
fn estimate_is_reproducible_across_threads() {
    let args = |t: &'static str| ["estimate", "--T", "2,3", "--epsilon", "0.5,1", "--replicas", "3000", "--method", "direct,is", "--threads", t];
    let a = cli(&args("1"));
    let b = cli(&args("4"));
    assert_eq!(a.code, 0);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn study_reports_regime_and_psi() {
    let r = cli(&["study", "--T", "2,4", "--epsilon", "0.5", "--replicas", "1000", "--format", "json"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let v: serde_json::Value = serde_json::from_str(&r.stdout).unwrap();
    assert_eq!(v["data"]["regime"], "birth_dominant");
    assert_eq!(v["data"]["psi_exp"], 2.0);
    assert_eq!(v["data"]["rows"].as_array().unwrap().len(), 2);
    assert_eq!(v["master_seed"], 1);

    let csv = cli(&["study", "--T", "2", "--replicas", "500"]);
    assert!(csv.stdout.starts_with("# regime: birth_dominant"));
    assert!(csv.stdout.contains("psi_exp"));
}

#[test]
fn rate_reports_anchor_values() {
    let r = cli(&["rate", "--c-lambda", "4", "--l", "1", "--c-mu", "1", "--m", "1", "--format", "json"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let v: serde_json::Value = serde_json::from_str(&r.stdout).unwrap();
    assert_eq!(v["data"]["regime"], "balanced");
    assert!((v["data"]["I_f"].as_f64().unwrap() - 0.5).abs() < 1e-9);

    let yule = cli(&["rate", "--c-lambda", "2", "--l", "1", "--c-mu", "0", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&yule.stdout).unwrap();
    assert!((v["data"]["I_yule"].as_f64().unwrap() - 1.0).abs() < 1e-9);
}

#[test]
fn degenerate_model_is_refused() {
    for cmd in ["rate", "study"] {
        let r = cli(&[cmd, "--c-lambda", "1", "--l", "1", "--c-mu", "1", "--m", "1", "--replicas", "10"]);
        assert_eq!(r.code, 2, "{cmd}");
        let e = error_json(&r.stderr);
        assert_eq!(e["error"]["kind"], "validation");
        assert_eq!(e["error"]["field"], "model");
    }
}

#[test]
fn invalid_parameters_name_the_field() {
    for (args, field) in [
        (vec!["rate", "--l", "-1"], "l"),
        (vec!["estimate", "--epsilon", "0"], "epsilon"),
        (vec!["estimate", "--T", "-2"], "T"),
        (vec!["estimate", "--replicas", "0"], "replicas"),
        (vec!["simulate", "--T", "1,2"], "T"),
    ] {
        let r = cli(&args);
        assert_eq!(r.code, 2, "{args:?}: {}", r.stderr);
        assert_eq!(error_json(&r.stderr)["error"]["field"], field, "{args:?}");
    }
    let r = cli(&["estimate", "--no-such-flag"]);
    assert_eq!(r.code, 2);
}

#[test]
fn verify_subset_and_perturbed_model() {
    let ok = cli(&["verify", "--only", "bounded_sequences_dp", "--only", "rate_anchors"]);
    assert_eq!(ok.code, 0, "{}{}", ok.stdout, ok.stderr);
    assert_eq!(ok.stdout.lines().filter(|l| l.contains(",pass,")).count(), 2);

    let bad = cli(&["verify", "--lambda-scale", "1.5", "--only", "asymptotic"]);
    assert_eq!(bad.code, 1);
    assert!(bad.stdout.contains("asymptotic,fail"));

    let unknown = cli(&["verify", "--only", "nonexistent"]);
    assert_eq!(unknown.code, 2);
}

#[test]
fn config_file_with_flag_override() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("cfg.json");
    fs::write(
        &cfg,
        r#"{"model": {"family": "power", "c_lambda": 4, "l": 1, "c_mu": 1, "m": 1}, "epsilon": 0.75, "T": [1.5], "replicas": 500, "seed": 3}"#,
    )
    .unwrap();
    let out = tmp.path().join("est.csv");
    let r = cli(&["estimate", "--config", cfg.to_str().unwrap(), "--seed", "4", "--out", out.to_str().unwrap()]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.contains("# master_seed: 4"));
    let row = text.lines().filter(|l| !l.starts_with('#')).nth(1).unwrap();
    let cols: Vec<&str> = row.split(',').collect();
    assert_eq!(cols[1], "1.5");
    assert_eq!(cols[2], "0.75");
    assert_eq!(cols[8], "500");

    fs::write(&cfg, r#"{"bogus": 1}"#).unwrap();
    assert_eq!(cli(&["rate", "--config", cfg.to_str().unwrap()]).code, 2);
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_ldp-bdp");
    let ok = Command::new(bin).args(["rate"]).output().unwrap();
    assert_eq!(ok.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&ok.stdout).contains("birth_dominant"));
    let bad = Command::new(bin).args(["rate", "--c-lambda", "nan"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
}
