use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use super::{execute, Execution};

fn bin(args: &[&str]) -> Execution {
    execute(std::iter::once("nstorus").chain(args.iter().copied()))
}

fn config(trunc: usize, horizon: f64, grid: usize) -> Value {
    json!({"dim": 2, "trunc": trunc, "viscosity": 1.0, "smoothness": 2.0, "horizon": horizon,
           "grid_size": grid, "picard_tol": 1e-12, "quadrature_tol": 1e-6})
}

fn write_manifest(dir: &Path, value: &Value) -> PathBuf {
    let p = dir.join("manifest.json");
    fs::write(&p, serde_json::to_string_pretty(value).unwrap()).unwrap();
    p
}

fn run(sub: &str, manifest: &Path, out: &Path, extra: &[&str]) -> Execution {
    let mut args: Vec<OsString> = ["nstorus", sub, "--manifest"].map(OsString::from).into();
    args.push(manifest.into());
    args.push("--out".into());
    args.push(out.into());
    args.extend(extra.iter().map(OsString::from));
    execute(args)
}

fn error_json(o: &Execution) -> Value {
    let line = o.stderr.lines().rev().find(|l| l.starts_with('{')).expect("error JSON on stderr");
    serde_json::from_str::<Value>(line).unwrap()["error"].clone()
}

#[test]
fn malformed_manifest_exits_2_and_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(4, 0.5, 8);
    cfg["trunc"] = json!(-3);
    let m = write_manifest(
        dir.path(),
        &json!({"version": 1, "experiment": {"kind": "solve"}, "config": cfg,
                "initial": {"generator": "taylor-green"}}),
    );
    let o = run("solve", &m, &dir.path().join("out"), &[]);
    assert_eq!(o.code, 2);
    let e = error_json(&o);
    assert_eq!(e["field"], "config.trunc");
    assert_eq!(e["exit_code"], 2);

    fs::write(&m, "{ not json").unwrap();
    let o = run("solve", &m, &dir.path().join("out"), &[]);
    assert_eq!(o.code, 2);

    let m = write_manifest(
        dir.path(),
        &json!({"version": 1, "experiment": {"kind": "solve"}, "config": config(4, 0.5, 8),
                "initial": {"generator": "vortex-sheet"}}),
    );
    let o = run("solve", &m, &dir.path().join("out"), &[]);
    assert_eq!(o.code, 2);
    assert_eq!(error_json(&o)["field"], "initial.generator");
}

#[test]
fn usage_errors_exit_2() {
    let o = bin(&["solve"]);
    assert_eq!(o.code, 2);
    assert_eq!(error_json(&o)["field"], "--manifest");

    let o = bin(&["frobnicate"]);
    assert_eq!(o.code, 2);

    let dir = tempfile::tempdir().unwrap();
    let m = write_manifest(
        dir.path(),
        &json!({"version": 1, "experiment": {"kind": "solve"}, "config": config(4, 0.5, 8),
                "initial": {"generator": "taylor-green"}}),
    );
    let o = run("decay", &m, &dir.path().join("out"), &[]);
    assert_eq!(o.code, 2);
    assert_eq!(error_json(&o)["field"], "experiment.kind");
    let o = run("solve", &m, &dir.path().join("out"), &["--threads", "0"]);
    assert_eq!(o.code, 2);
}

#[test]
fn taylor_green_solve_writes_its_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let m = write_manifest(
        dir.path(),
        &json!({"version": 1, "experiment": {"kind": "solve", "residual_bound": 1e-2},
                "config": config(8, 0.5, 32), "initial": {"generator": "taylor-green"}}),
    );
    let out = dir.path().join("out");
    let o = run("solve", &m, &out, &[]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let summary: Value = serde_json::from_str(&o.stdout).unwrap();
    assert_eq!(summary["passed"], true);
    assert!(summary["result"]["max_momentum_residual"].as_f64().unwrap() <= 1e-2);
    let traj = nstorus::Trajectory::read_dir(&out.join("trajectory")).unwrap();
    assert_eq!(traj.len(), 33);
    let csv = fs::read_to_string(out.join("residual.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("t,residual"));
    assert_eq!(csv.lines().count(), 32);
    let on_disk: Value = serde_json::from_slice(&fs::read(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(on_disk, summary);
}

#[test]
fn failing_residual_bound_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let m = write_manifest(
        dir.path(),
        &json!({"version": 1, "experiment": {"kind": "solve", "residual_bound": 1e-12},
                "config": config(4, 0.5, 8), "initial": {"generator": "taylor-green"}}),
    );
    let o = run("solve", &m, &dir.path().join("out"), &[]);
    assert_eq!(o.code, 1);
}

#[test]
fn divergence_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let m = write_manifest(
        dir.path(),
        &json!({"version": 1, "experiment": {"kind": "solve"},
                "config": {"dim": 2, "trunc": 8, "viscosity": 0.01, "smoothness": 2.0, "horizon": 5.0,
                           "grid_size": 16, "picard_tol": 1e-12, "quadrature_tol": 1e-6},
                "initial": {"generator": "random-hs", "s": 2.0, "amplitude": 1.0, "norm": 40.0, "seed": 1}}),
    );
    let o = run("solve", &m, &dir.path().join("out"), &[]);
    assert_eq!(o.code, 1);
    assert_eq!(error_json(&o)["kind"], "diverged");
}

fn tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            for (name, bytes) in tree(&p) {
                out.push((format!("{}/{name}", p.file_name().unwrap().to_string_lossy()), bytes));
            }
        } else {
            out.push((p.file_name().unwrap().to_string_lossy().into(), fs::read(&p).unwrap()));
        }
    }
    out.sort();
    out
}

#[test]
fn reproducible_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let m = write_manifest(
        dir.path(),
        &json!({"version": 1, "experiment": {"kind": "solve"}, "config": config(6, 0.3, 16),
                "initial": {"generator": "random-hs", "s": 2.0, "amplitude": 1.0, "norm": 0.1}}),
    );
    let (a, b, c) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
    let oa = run("solve", &m, &a, &["--seed", "7", "--reproducible"]);
    let ob = run("solve", &m, &b, &["--seed", "7", "--reproducible", "--threads", "1"]);
    let oc = run("solve", &m, &c, &["--seed", "8", "--reproducible"]);
    for o in [&oa, &ob, &oc] {
        assert_eq!(o.code, 0);
    }
    let strip = |t: Vec<(String, Vec<u8>)>| t.into_iter().filter(|f| f.0 != "summary.json").collect::<Vec<_>>();
    assert_eq!(strip(tree(&a)), strip(tree(&b)));
    assert_ne!(strip(tree(&a)), strip(tree(&c)));
    let sa: Value = serde_json::from_str(&oa.stdout).unwrap();
    let sb: Value = serde_json::from_str(&ob.stdout).unwrap();
    assert!(sa.get("elapsed_seconds").is_none());
    assert_eq!(sa["result"], sb["result"]);
}

#[test]
fn field_file_initial_data() {
    let dir = tempfile::tempdir().unwrap();
    let lat = nstorus::Lattice::new(2, 4).unwrap();
    let v = nstorus::initial::random_hs_with_norm(&lat, 2.0, 0.05, 3).unwrap();
    fs::write(dir.path().join("v0.json"), nstorus::format::to_json(&v).unwrap()).unwrap();
    fs::write(dir.path().join("v0.tmf"), nstorus::format::to_binary(&v)).unwrap();
    for name in ["v0.json", "v0.tmf"] {
        let m = write_manifest(
            dir.path(),
            &json!({"version": 1, "experiment": {"kind": "majorant-check"}, "config": config(4, 1.0, 16),
                    "initial": {"generator": "file", "path": name}}),
        );
        let o = run("majorant-check", &m, &dir.path().join("out"), &[]);
        assert_eq!(o.code, 0, "{}", o.stderr);
        let s: Value = serde_json::from_str(&o.stdout).unwrap();
        assert_eq!(s["result"]["violations"], 0);
    }
    let m = write_manifest(
        dir.path(),
        &json!({"version": 1, "experiment": {"kind": "solve"}, "config": config(6, 1.0, 16),
                "initial": {"generator": "file", "path": "v0.json"}}),
    );
    let o = run("solve", &m, &dir.path().join("out"), &[]);
    assert_eq!(o.code, 2);
    assert_eq!(error_json(&o)["field"], "initial.path");
}

#[test]
fn every_subcommand_runs_on_small_problems() {
    let dir = tempfile::tempdir().unwrap();
    let data = json!({"generator": "random-hs", "s": 2.0, "amplitude": 1.0, "norm": 0.02});
    let cases = [
        ("certify", json!({"kind": "certify", "scan_range": 6, "trials": 2,
                           "probe": {"horizon": 5.0, "intervals": 50, "midpoint": 2.5, "fraction": 0.5}}),
         config(4, 1.0, 16), "cert_report.json"),
        ("decay", json!({"kind": "decay"}), config(12, 1.0, 16), "decay_fit.csv"),
        ("uniqueness", json!({"kind": "uniqueness", "r_tilde": 0.1, "t_hat": 0.5}), config(4, 1.0, 16), "gap.csv"),
        ("majorant-check", json!({"kind": "majorant-check"}), config(4, 1.0, 16), "domination.json"),
        ("props", json!({"kind": "props", "cases": 5, "lattices": [[2, 3]], "scan_range": 5, "trials": 2}),
         config(4, 1.0, 16), "props.csv"),
    ];
    for (sub, exp, cfg, artifact) in cases {
        let m = write_manifest(
            dir.path(),
            &json!({"version": 1, "experiment": exp, "config": cfg, "initial": data}),
        );
        let out = dir.path().join(sub);
        let o = run(sub, &m, &out, &["--reproducible"]);
        assert_eq!(o.code, 0, "{sub}: {}", o.stderr);
        let s: Value = serde_json::from_str(&o.stdout).unwrap();
        assert_eq!(s["experiment"], sub);
        assert_eq!(s["passed"], true);
        assert!(out.join(artifact).exists(), "{sub}");
        for a in s["artifacts"].as_array().unwrap() {
            assert!(out.join(a.as_str().unwrap()).exists());
        }
    }
}
