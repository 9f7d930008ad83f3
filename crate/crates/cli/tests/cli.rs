use std::path::Path;
use std::process::{Command, Output};

use curvflow::io::{write_operator, OperatorFile};
use curvflow::models;
use serde_json::{Map, Value};

fn curvflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_curvflow"))
        .args(args)
        .env_remove("CURVFLOW_WORKERS")
        .output()
        .expect("binary runs")
}

fn json_file(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_op(path: &Path, r: &curvflow::curvature::CurvatureOperator) {
    write_operator(std::fs::File::create(path).unwrap(), r, Map::new()).unwrap();
}

#[test]
fn build_sphere_normalized() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s4.json");
    let o = curvflow(&["build", "sphere", "--n", "4", "--normalize", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let s_line = stderr(&o).lines().find(|l| l.starts_with("s = ")).unwrap().to_string();
    let s: f64 = s_line[4..].parse().unwrap();
    assert!((s - 1.0).abs() < 1e-14);
    let v = json_file(&out);
    assert_eq!(v["n"], 4);
    assert_eq!(v["basis"], "lex-pairs-1based");
    let m = v["matrix"].as_array().unwrap();
    assert_eq!(m.len(), 6);
    assert!((m[0][0].as_f64().unwrap() - 1.0 / 12.0).abs() < 1e-15);
}

#[test]
fn build_product_and_cp2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("p.json");
    let o = curvflow(&["build", "product", "--factors", "s3:1,flat:2", "--normalize", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(json_file(&out)["n"], 5);

    let o = curvflow(&["build", "cp2", "--normalize", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let line = stderr(&o).lines().find(|l| l.starts_with("spectrum")).unwrap().to_string();
    let nums: Vec<f64> = line
        .trim_start_matches("spectrum = [")
        .trim_end_matches(']')
        .split(", ")
        .map(|x| x.parse().unwrap())
        .collect();
    let expected = [0.0, 0.0, 1.0 / 12.0, 1.0 / 12.0, 1.0 / 12.0, 0.25];
    for (a, b) in nums.iter().zip(expected) {
        assert!((a - b).abs() < 1e-14, "{line}");
    }
}

#[test]
fn non_bianchi_input_needs_projection() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("bad.json");
    let r = models::random_bianchi(4, 2, 1.0).unwrap();
    let mut file = OperatorFile::from_operator(&r, Map::new());
    file.matrix[0][5] += 0.2;
    file.matrix[5][0] += 0.2;
    std::fs::write(&input, serde_json::to_string(&file).unwrap()).unwrap();
    let out = dir.path().join("good.json");
    let o = curvflow(&["build", "json", "--input", input.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--project"));
    let o = curvflow(&["build", "json", "--input", input.to_str().unwrap(), "--project", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn random_build_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"seed": 11}"#).unwrap();
    for p in [&a, &b] {
        let o = curvflow(&["build", "random", "--n", "5", "--config", cfg.to_str().unwrap(), "--out", p.to_str().unwrap()]);
        assert!(o.status.success());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(json_file(&a)["meta"]["seed"], 11);
    // the flag wins over the config file
    let o = curvflow(&["build", "random", "--n", "5", "--config", cfg.to_str().unwrap(), "--seed", "12", "--out", b.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(json_file(&b)["meta"]["seed"], 12);
    assert_ne!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

#[test]
fn sphere_raw_flow_blows_up() {
    let dir = tempfile::tempdir().unwrap();
    let op = dir.path().join("s3.json");
    let csv = dir.path().join("t.csv");
    write_op(&op, &models::sphere(3, true).unwrap());
    let o = curvflow(&["flow", "--input", op.to_str().unwrap(), "--t-end", "10", "--step", "1e-3", "--out", csv.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(10), "{}", stderr(&o));
    let (header, rows) = read_csv(&csv);
    assert_eq!(header, ["t", "s", "norm_I", "norm_Ric0", "norm_W", "bianchi_residual"]);
    // Q(R) = R/3 at s = 1: blow-up at t = 3
    let t_last = rows.last().unwrap()[0];
    assert!((t_last - 3.0).abs() < 0.01, "{t_last}");
}

#[test]
fn normalized_flow_at_a_zero_is_constant() {
    let dir = tempfile::tempdir().unwrap();
    let op = dir.path().join("snr.json");
    let csv = dir.path().join("t.csv");
    write_op(&op, &models::sphere_times_flat(3, 1).unwrap());
    let o = curvflow(&[
        "flow", "--input", op.to_str().unwrap(), "--mode", "normalized", "--t-end", "5", "--step", "0.1", "--out",
        csv.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (header, rows) = read_csv(&csv);
    assert_eq!(header[0], "tau");
    for row in &rows {
        for c in 1..5 {
            assert!((row[c] - rows[0][c]).abs() < 1e-13);
        }
    }
}

#[test]
fn weyl_normalized_flow_reaches_weyl_direction() {
    let dir = tempfile::tempdir().unwrap();
    let op = dir.path().join("p.json");
    let csv = dir.path().join("t.csv");
    let r = models::product(&"s2:1,s2:1".parse().unwrap(), true).unwrap();
    let parts = r.decompose().unwrap();
    write_op(&op, &(&parts.r_i.scaled(0.99) + &parts.r_w));
    let o = curvflow(&[
        "flow", "--input", op.to_str().unwrap(), "--t-end", "100", "--step", "1e-4", "--weyl-normalize",
        "--sample-every", "1000", "--out", csv.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(10), "{}", stderr(&o));
    let (header, rows) = read_csv(&csv);
    assert_eq!(header.last().unwrap(), "weyl_target_distance");
    let d = *rows.last().unwrap().last().unwrap();
    assert!(d <= 1e-3, "{d}");
}

#[test]
fn stability_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let sphere = dir.path().join("s4.json");
    let cp2 = dir.path().join("cp2.json");
    write_op(&sphere, &models::sphere(4, true).unwrap());
    write_op(&cp2, &models::cp2(true).unwrap());
    let out = dir.path().join("rep.json");
    let o = curvflow(&[
        "stability", "--input", sphere.to_str().unwrap(), "--input", cp2.to_str().unwrap(), "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v = json_file(&out);
    assert_eq!(v[0]["verdict"], "not-unstable-at-linear-order");
    assert_eq!(v[1]["verdict"], "unstable");

    let off = dir.path().join("off.json");
    write_op(&off, &models::random_bianchi_shifted(4, 1, 0.01, 1.0 / 12.0).unwrap());
    let o = curvflow(&["stability", "--input", off.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(stderr(&o).contains("not a zero"));
}

#[test]
fn holonomy_report_fields() {
    let dir = tempfile::tempdir().unwrap();
    let op = dir.path().join("p.json");
    write_op(&op, &models::sphere_times_flat(3, 2).unwrap());
    let out = dir.path().join("h.json");
    let o = curvflow(&["holonomy", "--input", op.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v = json_file(&out);
    assert_eq!(v["dim"], 3);
    assert_eq!(v["contained"], true);
    assert_eq!(v["singular_values"].as_array().unwrap().len(), 10);
}

#[test]
fn reproduce_targets() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    for args in [
        vec!["reproduce", "dim4-einstein-zeros"],
        vec!["reproduce", "snrk-system", "--n", "3", "--k", "2"],
        vec!["reproduce", "gradient-check"],
        vec!["reproduce", "dim4-zeros"],
    ] {
        let mut a = args.clone();
        a.extend(["--out", out.to_str().unwrap()]);
        let o = curvflow(&a);
        assert!(o.status.success(), "{args:?}: {}", stderr(&o));
        let v = json_file(&out);
        assert_eq!(v["passed"], true);
    }
    let v = json_file(&out);
    assert_eq!(v["target"], "dim4-zeros");
}

#[test]
fn reproduce_output_is_independent_of_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    let o = curvflow(&["reproduce", "holonomy", "--workers", "1", "--out", a.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = Command::new(env!("CARGO_BIN_EXE_curvflow"))
        .args(["reproduce", "holonomy", "--out", b.to_str().unwrap()])
        .env("CURVFLOW_WORKERS", "3")
        .output()
        .unwrap();
    assert!(o.status.success());
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn failing_checks_give_nonzero_exit() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    // a zero-tolerance that no defect meets flips product-zero verdicts
    std::fs::write(&cfg, r#"{"policy": {"zero_tol": 1e-300}}"#).unwrap();
    let o = curvflow(&["reproduce", "product-zeros", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    let o = curvflow(&["reproduce", "product-zeros"]);
    assert!(o.status.success());
}
