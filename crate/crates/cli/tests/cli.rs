use std::path::Path;
use std::process::{Command, Output};

fn run(dir: &Path, args: &[&str], config: &str) -> Output {
    let cfg = dir.join("run.toml");
    std::fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_cylcurl"))
        .args(args)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn eigs_matches_the_separated_table() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(tmp.path(), &["eigs"], "[problem]\nk = 6\n");
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(tmp.path().join("out/eigs.csv")).unwrap();
    let values: Vec<f64> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    // j_{1,m}² + (kπ)² for (m, k) = (1,1), (1,2), (2,1), (1,3), (2,2), (3,1)
    let table = [24.5516, 54.1604, 59.0881, 88.6969, 103.5084, 113.3691];
    assert_eq!(values.len(), 6);
    for (v, t) in values.iter().zip(table) {
        assert!((v - t).abs() < 0.01 * t, "{v} vs {t}");
    }
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("out/eigs.json")).unwrap()).unwrap();
    assert_eq!(json["config"]["problem"]["p"], 6.0);
    assert_eq!(json["config"]["solver"]["tol"], 1e-8);
    assert_eq!(json["config"]["solver"]["seed"], 0);
}

#[test]
fn positive_lambda_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(tmp.path(), &["bounds"], "[domain]\nn_r = 8\nn_z = 8\n[problem]\nlambda = 2.5\n");
    assert_eq!(o.status.code(), Some(2));
    let msg = stderr(&o);
    assert!(msg.contains("lambda <= 0") && msg.lines().count() == 1, "{msg}");
}

#[test]
fn malformed_configs_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(tmp.path(), &["eigs"], "[domain]\nn_rr = 8\n");
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("n_rr"));
    let o = run(tmp.path(), &["eigs"], "[problem]\np = 7.0\n");
    assert_eq!(o.status.code(), Some(2));
    let o = Command::new(env!("CARGO_BIN_EXE_cylcurl"))
        .args(["eigs", "--config", "/nonexistent/run.toml"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("cannot read config"));
}

#[test]
fn solver_failure_exits_with_one_and_writes_diagnostics() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(
        tmp.path(),
        &["ground"],
        "[domain]\nn_r = 8\nn_z = 8\n[solver]\nmax_iter = 1\ntol = 1e-14\nescape_trials = 0\n",
    );
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(tmp.path().join("out/ground_error.json").exists());
}

#[test]
fn unit_materials_reduce_the_anisotropic_count() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(
        tmp.path(),
        &["aniso-check"],
        "[domain]\nn_r = 10\nn_z = 10\n[problem]\np = 4.0\nflavor = \"anisotropic\"\n",
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("out/aniso_check.json")).unwrap()).unwrap();
    let b = &json["result"]["bounds"];
    assert_eq!(b["constants"]["mu_inf"], 1.0);
    assert_eq!(b["constants"]["gamma_0"], 1.0);
    assert_eq!(b["m_tilde"]["count"], b["m_tilde_printed"]["count"]);

    let eig = run(tmp.path(), &["eigs"], "[domain]\nn_r = 10\nn_z = 10\n[problem]\np = 4.0\nk = 40\n");
    assert!(eig.status.success());
    let text = std::fs::read_to_string(tmp.path().join("out/eigs.csv")).unwrap();
    let values: Vec<f64> = text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    let gap = b["m_tilde"]["gap"].as_f64().unwrap();
    let brute = values.iter().filter(|l| **l > 1.0 && **l - 1.0 < gap).count();
    assert_eq!(b["m_tilde"]["count"].as_u64().unwrap() as usize, brute);
}

#[test]
fn material_csv_files_are_read_per_node() {
    let tmp = tempfile::tempdir().unwrap();
    let mut rows = String::from("r,z,value\n");
    for i in 0..=8 {
        for j in 0..=8 {
            rows.push_str(&format!("{},{},{}\n", i as f64 / 8.0, j as f64 / 8.0, 2.0));
        }
    }
    std::fs::write(tmp.path().join("v.csv"), rows).unwrap();
    let o = run(
        tmp.path(),
        &["aniso-check"],
        "[domain]\nn_r = 8\nn_z = 8\n[materials]\na_v = \"v.csv\"\n[problem]\np = 4.0\nflavor = \"anisotropic\"\n",
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("out/aniso_check.json")).unwrap()).unwrap();
    assert_eq!(json["result"]["bounds"]["constants"]["v_inf"], 2.0);
}

#[test]
fn emit_grid_writes_the_mask() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.toml");
    std::fs::write(&cfg, "[domain]\nshape = \"ball\"\nradius = 0.45\nn_r = 8\nn_z = 8\n").unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_cylcurl"))
        .args(["eigs", "--emit-grid", "--threads", "1", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(tmp.path().join("out"))
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(tmp.path().join("out/grid.csv")).unwrap();
    assert_eq!(text.lines().count(), 1 + 81);
    let interior = text.lines().skip(1).filter(|l| l.ends_with(",1")).count();
    assert!(interior > 0 && interior < 49);
}
