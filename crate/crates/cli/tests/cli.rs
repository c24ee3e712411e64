use std::process::{Command, Output};
use std::time::Instant;

use kfree_core::diffraction::IntensityResult;

fn kfree(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kfree"))
        .args(args)
        .env_remove("KFREE_SIEVE_LIMIT")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn constants_json_has_all_fields() {
    let o = kfree(&["constants", "--k", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    for name in ["xi_k", "gamma_k", "c_k"] {
        assert!(v[name]["tail"].as_f64().unwrap() <= 1e-20);
    }
    assert!((v["c_k"]["value"].as_f64().unwrap() - 2.702_531_94).abs() < 1e-8);
    let again: serde_json::Value = serde_json::from_str(&serde_json::to_string(&v).unwrap()).unwrap();
    assert_eq!(again, v);
}

#[test]
fn small_k_is_a_usage_error() {
    let o = kfree(&["constants", "--k", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("k must be ≥ 2"));
    assert_eq!(kfree(&["scan", "--k", "0", "--eps", "1e-3:1e-2:3"]).status.code(), Some(2));
    assert_eq!(kfree(&["intensity", "--k", "2", "--eps", "1.5"]).status.code(), Some(2));
    assert_eq!(kfree(&["scan", "--k", "2", "--eps", "1e-2:1e-3:3"]).status.code(), Some(2));
    assert_eq!(kfree(&["intensity", "--k", "2"]).status.code(), Some(2));
}

#[test]
fn tight_constant_tail() {
    let o = kfree(&["constants", "--k", "2", "--tail", "1e-30"]);
    match o.status.code() {
        Some(0) => {
            let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
            assert!(v["c_k"]["tail"].as_f64().unwrap() <= 1e-30);
        }
        Some(3) => {}
        other => panic!("unexpected exit {other:?}"),
    }
}

#[test]
fn intensity_json_round_trips() {
    for args in [
        &["intensity", "--k", "2", "--eps", "0.001", "--method", "direct"][..],
        &["intensity", "--k", "3", "--n", "7"][..],
        &["intensity", "--k", "3", "--n", "7", "--method", "via-zk"][..],
    ] {
        let o = kfree(args);
        assert_eq!(o.status.code(), Some(0), "{args:?}");
        let text = stdout(&o);
        let r: IntensityResult = serde_json::from_str(&text).unwrap();
        assert_eq!(serde_json::to_string_pretty(&r).unwrap() + "\n", text);
        assert!(r.value.value > 0.0 && r.value.tail > 0.0);
    }
}

#[test]
fn zk_point_reports_cutoffs() {
    let o = kfree(&["intensity", "--k", "2", "--c", "5"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["method"], "factorised");
    assert!(v["t_max"].as_u64().unwrap() > 0);
}

#[test]
fn scan_csv_shape() {
    let o = kfree(&["scan", "--k", "2", "--eps", "1e-4:1e-2:9", "--log"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "epsilon,Z,tail,method");
    let rows: Vec<&str> = lines[1..].iter().copied().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows.len(), 9);
    for row in &rows {
        let cells: Vec<&str> = row.split(',').collect();
        assert_eq!(cells.len(), 4);
        assert_eq!(cells[3], "direct-bmp");
        // 17 significant digits
        assert_eq!(cells[1].split('e').next().unwrap().len(), 18);
        cells[1].parse::<f64>().unwrap();
    }
    assert!(lines.last().unwrap().starts_with("# expected"));
    assert!(text.contains("# fit exponent="));
}

#[test]
fn sieve_limit_is_enforced() {
    let o = kfree(&["--sieve-limit", "1000", "intensity", "--k", "2", "--eps", "0.001"]);
    assert_eq!(o.status.code(), Some(3));
    let o = Command::new(env!("CARGO_BIN_EXE_kfree"))
        .args(["scan", "--k", "2", "--eps", "1e-4:1e-2:9"])
        .env("KFREE_SIEVE_LIMIT", "1000")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn verify_quick_passes_fast() {
    let start = Instant::now();
    let o = kfree(&["verify", "--level", "quick"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(start.elapsed().as_secs() < 60);
    assert!(!stdout(&o).contains("FAIL"));
}

#[test]
fn walfisz_json_round_trips() {
    let o = kfree(&["walfisz", "--x", "1e3:1e6:4", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["series"]["x"].as_array().unwrap().len(), 4);
    assert!(v["max_abs_normalized"].as_f64().unwrap() < 1.0);
}

#[test]
fn output_file_matches_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.json");
    let o = kfree(&["constants", "--k", "3", "--output", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    assert_eq!(std::fs::read_to_string(path).unwrap(), stdout(&kfree(&["constants", "--k", "3"])));
}
