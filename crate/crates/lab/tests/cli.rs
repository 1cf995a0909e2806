use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const CHART: &str = r#"
[model]
n_internal = 2
alpha0 = { kind = "ginibre", sigma = 1.0 }
alpha1 = { kind = "ginibre", sigma = 1.0 }

[params]
samples = 20
"#;

fn lab(dir: &Path, args: &[&str], config: &str, env: &[(&str, &str)]) -> Output {
    let path = dir.join("c.toml");
    fs::write(&path, config).unwrap();
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_lab"));
    cmd.args(args).arg("--config").arg(&path).env_remove("LAB_THREADS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

#[test]
fn success_writes_hashed_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o = lab(tmp.path(), &["chart-check", "--seed", "3", "--out", out.to_str().unwrap()], CHART, &[("LAB_THREADS", "2")]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("chart_check.csv")).unwrap();
    let header = csv.lines().next().unwrap();
    assert!(header.starts_with("# config_hash=") && header.ends_with("experiment=chart-check"));
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["config"]["model"]["seed"], 3);
    assert_eq!(header, format!("# config_hash={} experiment=chart-check", summary["config_hash"].as_str().unwrap()));
}

#[test]
fn config_errors_exit_2_and_write_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o_arg = out.to_str().unwrap();
    let bad_key = CHART.replace("samples = 20", "samples = 20\nbogus = 1");
    let cases: Vec<(Vec<&str>, String, Vec<(&str, &str)>)> = vec![
        (vec!["no-such-experiment", "--out", o_arg], CHART.into(), vec![]),
        (vec!["chart-check", "--out", o_arg], bad_key, vec![]),
        (vec!["bloch", "--out", o_arg], format!("experiment = \"chart-check\"\n{CHART}"), vec![]),
        (vec!["chart-check", "--out", o_arg], CHART.into(), vec![("LAB_THREADS", "zero")]),
        (vec!["chart-check", "--threads", "0", "--out", o_arg], CHART.into(), vec![]),
        (vec!["chart-check", "--out", o_arg], CHART.replace("n_internal = 2", "n_internal = 0"), vec![]),
    ];
    for (args, config, env) in cases {
        let o = lab(tmp.path(), &args, &config, &env);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(!out.exists());
    }
}

#[test]
fn numerical_failure_exits_3() {
    // A window starting at an odd site carries edge modes at zero energy.
    let config = r#"
[model]
n_internal = 2
alpha0 = { kind = "ginibre", sigma = 0.36787944117144233 }
alpha1 = { kind = "ginibre", sigma = 1.0 }

[params]
window_start = 1
window_len = 64
"#;
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o = lab(tmp.path(), &["fermi", "--out", out.to_str().unwrap()], config, &[]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!out.exists());
}
