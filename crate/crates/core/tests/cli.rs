use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bapc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bapc")).args(args).output().expect("binary runs")
}

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap())
        })
        .collect()
}

fn validate_summary(dir: &Path) {
    let schema: serde_json::Value =
        serde_json::from_str(include_str!("../schema/summary.schema.json")).unwrap();
    let summary: serde_json::Value = serde_json::from_slice(&fs::read(dir.join("summary.json")).unwrap()).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    let errors: Vec<String> = validator.iter_errors(&summary).map(|e| format!("{} at {}", e, e.instance_path())).collect();
    assert!(errors.is_empty(), "{errors:#?}");
}

fn check_csv(bytes: &[u8]) {
    let text = std::str::from_utf8(bytes).unwrap();
    assert!(!text.contains('\r'));
    assert!(text.ends_with('\n'));
    let mut lines = text.lines();
    let width = lines.next().unwrap().split(',').count();
    for line in lines {
        assert_eq!(line.split(',').count(), width, "{line}");
    }
}

#[test]
fn drag_rerun_is_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("drag");
    let args = ["drag", "--noise", "uniform", "--sigma", "3", "--seed", "11", "--out", out.to_str().unwrap()];
    assert!(bapc(&args).status.success());
    let first = snapshot(&out);
    assert_eq!(
        first.keys().cloned().collect::<Vec<_>>(),
        ["criteria.csv", "delta_sweep.csv", "fits.csv", "summary.json"]
    );
    assert!(bapc(&args).status.success());
    assert_eq!(first, snapshot(&out));
    for (name, bytes) in &first {
        if name.ends_with(".csv") {
            check_csv(bytes);
        }
    }
    let header = String::from_utf8_lossy(&first["fits.csv"]).lines().next().unwrap().to_string();
    assert_eq!(
        header,
        "t,v_true,v_noisy_or_empty,f_theta,f_corrected,f_theta_prime_I1,f_tilde_I1,f_theta_prime_I2,f_tilde_I2"
    );
    validate_summary(&out);
}

#[test]
fn sequential_and_parallel_tables_agree() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let base = ["criteria-sweep", "--eta", "0.3", "--seed", "2"];
    let run = |dir: &Path, extra: &[&str]| {
        let mut args = base.to_vec();
        args.extend(["--out", dir.to_str().unwrap()]);
        args.extend(extra);
        assert!(bapc(&args).status.success());
        validate_summary(dir);
        snapshot(dir)
    };
    let par = run(&a, &[]);
    let seq = run(&b, &["--sequential"]);
    for name in ["criteria.csv", "delta_sweep.csv"] {
        assert_eq!(par[name], seq[name], "{name}");
    }
}

#[test]
fn newsvendor_with_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.toml");
    fs::write(&cfg, "seed = 8\n[newsvendor]\ncorrector = \"rf\"\nrepeats = 4\ndelta_grid = [0.0, 0.1]\n").unwrap();
    let out = tmp.path().join("nv");
    let args = ["newsvendor", "--config", cfg.to_str().unwrap(), "--delta", "0.1", "--out", out.to_str().unwrap()];
    assert!(bapc(&args).status.success());
    let files = snapshot(&out);
    let hist = String::from_utf8_lossy(&files["shift_histogram.csv"]).into_owned();
    let mut lines = hist.lines();
    assert!(lines.next().unwrap().starts_with("repeat_index,corrector,delta,delta_lambda"));
    assert_eq!(lines.count(), 4);
    assert_eq!(String::from_utf8_lossy(&files["delta_curve.csv"]).lines().count(), 3);
    assert_eq!(String::from_utf8_lossy(&files["months.csv"]).lines().count(), 201);
    for (name, bytes) in &files {
        if name.ends_with(".csv") {
            check_csv(bytes);
        }
    }
    validate_summary(&out);
    assert!(bapc(&args).status.success());
    assert_eq!(files, snapshot(&out));
}

#[test]
fn validation_errors_exit_with_2() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("x");
    let out = out.to_str().unwrap();
    assert_eq!(bapc(&["drag", "--sigma", "5", "--out", out]).status.code(), Some(2));
    assert_eq!(bapc(&["drag", "--noise", "cauchy", "--out", out]).status.code(), Some(2));
    assert_eq!(bapc(&["newsvendor", "--corrector", "svm", "--out", out]).status.code(), Some(2));
    assert_eq!(bapc(&["criteria-sweep", "--eta", "0", "--out", out]).status.code(), Some(2));
    assert_eq!(bapc(&["drag", "--bogus"]).status.code(), Some(2));
    let cfg = tmp.path().join("bad.toml");
    fs::write(&cfg, "[drag]\nsigmaa = 1.0\n").unwrap();
    let res = bapc(&["drag", "--config", cfg.to_str().unwrap(), "--out", out]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("sigmaa"));
    let missing = tmp.path().join("missing.toml");
    assert_eq!(bapc(&["drag", "--config", missing.to_str().unwrap(), "--out", out]).status.code(), Some(2));
    assert!(!Path::new(out).exists());
}

#[test]
fn extrapolation_flag_allows_off_grid_sigma() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("x");
    let res = bapc(&["drag", "--sigma", "5", "--allow-extrapolation", "--out", out.to_str().unwrap()]);
    assert!(res.status.success());
}

#[test]
fn runtime_errors_exit_with_1() {
    let tmp = tempfile::tempdir().unwrap();
    let blocker = tmp.path().join("file");
    fs::write(&blocker, "").unwrap();
    let out = blocker.join("sub");
    assert_eq!(bapc(&["drag", "--out", out.to_str().unwrap()]).status.code(), Some(1));
}
