use serde_json::Value;
use std::path::Path;
use std::process::{Command, Output};

fn hartree(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hartree")).args(args).output().expect("binary runs")
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn mono_hydrogen_writes_the_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_str().unwrap();
    let o = hartree(&["mono", "--dim", "3", "--coupling", "0", "--rmax", "40", "--n", "4000", "--out", out, "--name", "h"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let run = tmp.path().join("h");
    let mono = read_json(&run.join("mono.json"));
    assert!((mono["mu"].as_f64().unwrap() + 0.25).abs() < 1e-3);
    assert!(mono["m1"].as_f64().is_some() && mono["decay_fit"]["rate"].as_f64().is_some());
    let manifest = read_json(&run.join("run-manifest.json"));
    assert_eq!(manifest["complete"], true);
    assert_eq!(manifest["config"]["model"]["dim"], 3);
    assert!(manifest["version"].as_str().is_some() && manifest["seed"].as_u64().is_some());
    let csv = std::fs::read_to_string(run.join("mono.csv")).unwrap();
    assert!(csv.starts_with('#') && csv.lines().nth(1) == Some("r,u,vmf"));
}

#[test]
fn hartree_atom_has_a_negative_multiplier() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_str().unwrap();
    let o = hartree(&["mono", "--dim", "3", "--rmax", "40", "--n", "4000", "--out", out]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let mono = read_json(&tmp.path().join("mono-d3/mono.json"));
    assert!(mono["mu"].as_f64().unwrap() < 0.0);
}

#[test]
fn usage_errors_exit_with_code_two() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_str().unwrap();
    for args in [
        vec!["mono", "--out", out],
        vec!["mono", "--dim", "4", "--out", out],
        vec!["mono", "--dim", "2", "--mixing", "0", "--out", out],
        vec!["sweep", "--dim", "2", "--rmax", "nope"],
        vec!["check", "--dim", "2", "--suites", "bogus", "--out", out],
        vec!["frobnicate"],
    ] {
        assert_eq!(hartree(&args).status.code(), Some(2), "{args:?}");
    }
    let bad = tmp.path().join("bad.toml");
    std::fs::write(&bad, "[model]\ndimension = 2\n").unwrap();
    assert_eq!(hartree(&["mono", "--config", bad.to_str().unwrap()]).status.code(), Some(2));
    // the nuclei would leave the mesh
    let o = hartree(&["diatomic", "--dim", "2", "--coupling", "0", "--rmax", "30", "--n", "800", "--box", "6,5", "--h", "0.5", "--L", "20", "--out", out]);
    let stderr = String::from_utf8_lossy(&o.stderr);
    assert_eq!(o.status.code(), Some(2), "{stderr}");
    assert!(stderr.contains("leave the mesh"), "{stderr}");
    assert_eq!(hartree(&["mono", "--dim", "2", "--box", "6"]).status.code(), Some(2));
}

#[test]
fn diatomic_run_with_field_dumps() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_str().unwrap();
    let o = hartree(&[
        "diatomic", "--dim", "2", "--coupling", "0", "--rmax", "30", "--n", "800", "--box", "13,11", "--h", "0.25", "--L-list", "2,4",
        "--fields", "--out", out, "--name", "pair",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let run = tmp.path().join("pair");
    let d = read_json(&run.join("diatomic.json"));
    let recs = d["records"].as_array().unwrap();
    assert_eq!(recs.len(), 2);
    for r in recs {
        assert!(r["gap"].as_f64().unwrap() > 0.0);
        assert!(r["mu_plus"].as_f64().unwrap() < r["mu_minus"].as_f64().unwrap());
    }
    let fields = std::fs::read_to_string(run.join("fields/L4.csv")).unwrap();
    assert_eq!(fields.lines().nth(1), Some("x1,r,u_plus,u_minus,potential"));
}

#[test]
fn sweep_writes_csv_and_json_and_reruns_from_the_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_str().unwrap();
    let cfg = tmp.path().join("sweep.toml");
    std::fs::write(
        &cfg,
        "[model]\ndim = 2\ncoupling = 0.0\n[radial]\nrmax = 30.0\nn = 800\n[mesh]\nbox = [14.0, 11.0]\nh = 0.25\n[sweep]\nL = [2.0, 3.0, 4.0, 5.0]\n[run]\nname = \"first\"\n",
    )
    .unwrap();
    let o = hartree(&["sweep", "--config", cfg.to_str().unwrap(), "--out", out, "--jobs", "1"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("gap/T_L"));
    let first = tmp.path().join("first");
    let csv = std::fs::read_to_string(first.join("sweep.csv")).unwrap();
    assert!(csv.starts_with('#'));
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 5);
    let a = read_json(&first.join("sweep.json"));
    assert_eq!(a["rows"].as_array().unwrap().len(), 4);

    let manifest = first.join("run-manifest.json");
    let o = hartree(&["sweep", "--config", manifest.to_str().unwrap(), "--name", "second", "--jobs", "1"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let b = read_json(&tmp.path().join("second/sweep.json"));
    for (ra, rb) in a["rows"].as_array().unwrap().iter().zip(b["rows"].as_array().unwrap()) {
        for key in ["mu_plus", "mu_minus", "gap", "E_L"] {
            let (x, y) = (ra[key].as_f64().unwrap(), rb[key].as_f64().unwrap());
            assert!((x - y).abs() <= 1e-12 * x.abs().max(1e-300), "{key}: {x} vs {y}");
        }
    }
}

#[test]
fn check_suites_report_and_set_the_exit_code() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_str().unwrap();
    let o = hartree(&["check", "--dim", "2", "--rmax", "50", "--n", "1500", "--suites", "stability,yukawa", "--trials", "40", "--seed", "7", "--out", out, "--name", "c"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    let run = tmp.path().join("c");
    let stab = read_json(&run.join("checks/stability.json"));
    assert_eq!(stab["seed"], 7);
    assert_eq!(stab["violations"], 0);
    assert_eq!(read_json(&run.join("checks/summary.json"))["passed"], true);
}
