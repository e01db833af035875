use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_ricci-lab"));
    c.env_remove("RICCI_LAB_OUT");
    c
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

const SPHERE: &str = "[model]\npreset = \"round-sphere\"\n\n[flow]\nt_end = 0.2\nrel_tol = 1e-12\nabs_tol = 1e-14\n\n[output]\nrecord_every = 0.00025\n";

#[test]
fn flow_writes_csv_and_sidecar() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "s.toml", SPHERE);
    let out = tmp.path().join("run");
    let o = run(&["flow", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = fs::read_to_string(out.join("trajectory.csv")).unwrap();
    let header = csv.lines().next().unwrap();
    assert_eq!(
        header,
        "t,g_11,vol,rm_norm,scalar_R,rm_n2_norm,J,theta,chi,ric_min,ric_max"
            .replace("g_11", "g_11,g_12,g_13,g_22,g_23,g_33")
    );
    let meta = json(&out.join("trajectory.meta.json"));
    assert_eq!(meta["termination"], "horizon-reached");
    assert_eq!(meta["seed"], 20240601);
    assert!(meta["primitives"]["c_n"].is_number());
    assert!(meta["integrator"]["accepted_steps"].as_u64().unwrap() > 0);
}

#[test]
fn gamma_override_doubles_horizon() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = configs().join("heisenberg.toml");
    let t0 = |extra: &[&str], dir: &str| {
        let out = tmp.path().join(dir);
        let mut args = vec!["flow", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
        args.extend_from_slice(extra);
        args.extend_from_slice(&["--override", "flow.t_end=0.1"]);
        let o = run(&args);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        json(&out.join("trajectory.meta.json"))["integrator"]["t0_horizon"].as_f64().unwrap()
    };
    let a = t0(&[], "a");
    let b = t0(&["--override", "flow.gamma=2"], "b");
    assert!((b / a - 2.0).abs() < 1e-12);
}

#[test]
fn config_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cases = [
        ("[flow]\nt_end = 0.1\n", "flow", "[model]"),
        ("[model]\npreset = \"round-sphere\"\nradius_typo = 1.0\n", "flow", "line 3"),
        ("[model]\npreset = \"round-sphere\"\n[constants]\nc_n = -1.0\n", "constants", "c_n"),
        ("[model]\npreset = \"round-sphere\"\n", "constants", "[constants]"),
        ("[model]\npreset = \"round-sphere\"\n[sweep]\nparameter = \"model.radius\"\nvalues = []\n", "sweep", "empty"),
        ("[model]\npreset = \"heisenberg\"\n", "flow", "C_S(0)"),
    ];
    for (i, (text, cmd, needle)) in cases.iter().enumerate() {
        let cfg = write(tmp.path(), &format!("c{i}.toml"), text);
        let out = tmp.path().join(format!("o{i}"));
        let o = run(&[cmd, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert_eq!(code(&o), 2, "case {i}: {}", stderr(&o));
        assert!(stderr(&o).contains(needle), "case {i}: {}", stderr(&o));
    }
    let cfg = write(tmp.path(), "ok.toml", SPHERE);
    let o = run(&["flow", "--config", cfg.to_str().unwrap(), "--override", "flow.rel_tol=2"]);
    assert_eq!(code(&o), 2);
    let o = run(&["flow", "--config", cfg.to_str().unwrap(), "--override", "flow.bogus=1"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("bogus"));
}

#[test]
fn missing_config_file_is_io() {
    let o = run(&["flow", "--config", "/nonexistent/x.toml"]);
    assert_eq!(code(&o), 4);
}

#[test]
fn check_single_and_schema_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "s.toml", SPHERE);
    let out = tmp.path().join("run");
    let (c, o) = (cfg.to_str().unwrap(), out.to_str().unwrap());
    assert_eq!(code(&run(&["flow", "--config", c, "--out", o])), 0);
    let traj = out.join("trajectory.csv");

    let r = run(&["check", "--config", c, "--out", o, "--trajectory", traj.to_str().unwrap(), "--checks", "volume_identity"]);
    assert_eq!(code(&r), 0, "{}", stderr(&r));
    let rep = json(&out.join("report.json"));
    let arr = rep.as_array().unwrap();
    assert_eq!(arr.len(), 1);
    assert_eq!(arr[0]["name"], "volume_identity");
    assert_eq!(arr[0]["status"], "pass");

    let r = run(&["check", "--config", c, "--out", o, "--trajectory", traj.to_str().unwrap(), "--checks", "nope"]);
    assert_eq!(code(&r), 2);

    let text = fs::read_to_string(&traj).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    lines.swap(3, 4);
    let bad = write(tmp.path(), "swapped.csv", &(lines.join("\n") + "\n"));
    let r = run(&["check", "--config", c, "--out", o, "--trajectory", bad.to_str().unwrap()]);
    assert_eq!(code(&r), 3);
    assert!(stderr(&r).contains("`t`"), "{}", stderr(&r));

    let renamed = write(tmp.path(), "renamed.csv", &text.replacen("rm_norm", "rm", 1));
    let r = run(&["check", "--config", c, "--out", o, "--trajectory", renamed.to_str().unwrap()]);
    assert_eq!(code(&r), 3);
    assert!(stderr(&r).contains("rm_norm"));
}

#[test]
fn full_suite_on_torus_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = configs().join("torus.toml");
    let out = tmp.path().join("t");
    let (c, o) = (cfg.to_str().unwrap(), out.to_str().unwrap());
    assert_eq!(code(&run(&["flow", "--config", c, "--out", o])), 0);
    let traj = out.join("trajectory.csv");
    let r = run(&["check", "--config", c, "--out", o, "--trajectory", traj.to_str().unwrap()]);
    assert_eq!(code(&r), 0, "{}", stderr(&r));
    let rep = json(&out.join("report.json"));
    let names: Vec<&str> = rep.as_array().unwrap().iter().map(|r| r["name"].as_str().unwrap()).collect();
    let mut sorted = names.clone();
    sorted.sort_unstable();
    assert_eq!(names, sorted);
    for r in rep.as_array().unwrap() {
        let st = r["status"].as_str().unwrap();
        let ok = st == "pass" || (st == "ratio-extracted" && (r["vacuous"] == true || r["name"] == "sobolev_along_flow"));
        assert!(ok, "{}: {st}", r["name"]);
    }
}

#[test]
fn constants_defaults_n4() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("c");
    let cfg = configs().join("constants_n4.toml");
    let r = run(&["constants", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&r), 0);
    let v = json(&out.join("constants.json"));
    assert_eq!(v["moser"]["mu"], 1.5);
    assert_eq!(v["moser"]["q0"], 4.0);
    let sums = &v["moser"]["limit_sums"];
    assert!((sums[0].as_f64().unwrap() - 0.5).abs() < 1e-15);
    assert!((sums[1].as_f64().unwrap() - 0.75).abs() < 1e-15);
    assert_eq!(v["moser_exact"]["limits"][0], "1/2");

    let three = write(tmp.path(), "n3.toml", "[constants]\nn = 3\n");
    let r = run(&["constants", "--config", three.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&r), 0);
    let root = json(&out.join("constants.json"))["root"]["root"].as_f64().unwrap();
    assert!(root > 0.03 && root < 0.05);
}

#[test]
fn sweep_product_slope_and_order() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("s");
    let cfg = configs().join("sweep_product.toml");
    let r = run(&["sweep", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--format", "json"]);
    assert_eq!(code(&r), 0, "{}", stderr(&r));
    let rows = json(&out.join("sweep.json"));
    let pts: Vec<(f64, f64)> = rows
        .as_array()
        .unwrap()
        .iter()
        .map(|r| (r["value"].as_f64().unwrap().ln(), r["rm_n2"].as_f64().unwrap().ln()))
        .collect();
    assert_eq!(pts.len(), 8);
    assert!(pts.windows(2).all(|w| w[1].0 < w[0].0));
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
        / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    assert!((slope - 0.5).abs() < 1e-6, "{slope}");

    let one = tmp.path().join("one");
    let r = run(&[
        "sweep", "--config", cfg.to_str().unwrap(), "--out", one.to_str().unwrap(),
        "--override", "sweep.geometric.count=1",
    ]);
    assert_eq!(code(&r), 0, "{}", stderr(&r));
    assert_eq!(fs::read_to_string(one.join("sweep.csv")).unwrap().lines().count(), 2);
}

#[test]
fn heisenberg_sweep_margin_is_monotone() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("h");
    let cfg = configs().join("sweep_heisenberg.toml");
    let r = run(&["sweep", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--format", "json"]);
    assert_eq!(code(&r), 0, "{}", stderr(&r));
    let rows = json(&out.join("sweep.json"));
    let m: Vec<f64> = rows.as_array().unwrap().iter().map(|r| r["margin_sobolev"].as_f64().unwrap()).collect();
    assert!(m.windows(2).all(|w| w[1] > w[0]), "{m:?}");
}

#[test]
fn outputs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "s.toml", SPHERE);
    let mut files = Vec::new();
    for d in ["a", "b"] {
        let out = tmp.path().join(d);
        let (c, o) = (cfg.to_str().unwrap(), out.to_str().unwrap());
        assert_eq!(code(&run(&["flow", "--config", c, "--out", o, "--seed", "7"])), 0);
        let traj = out.join("trajectory.csv");
        assert_eq!(code(&run(&["check", "--config", c, "--out", o, "--seed", "7", "--trajectory", traj.to_str().unwrap()])), 0);
        files.push(["trajectory.csv", "trajectory.meta.json", "report.json"].map(|f| fs::read(out.join(f)).unwrap()));
    }
    assert!(files[0] == files[1]);
}

#[test]
fn env_selects_default_output_dir() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "s.toml", "[constants]\nn = 5\n");
    let out = tmp.path().join("env-out");
    let o = bin()
        .args(["constants", "--config", cfg.to_str().unwrap()])
        .env("RICCI_LAB_OUT", &out)
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert!(out.join("constants.json").exists());
}
