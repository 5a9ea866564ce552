use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn ricobs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ricobs"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn json_of(o: &Output) -> Value {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).expect("valid JSON")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn analyze_flat_is_unobstructed_with_zero_residuals() {
    let r = json_of(&ricobs(&["analyze", "flat", "-n", "10", "-m", "16", "--json"]));
    assert_eq!(r["verdict"], "unobstructed-at-samples");
    assert_eq!(r["rank_histogram"], serde_json::json!([10, 0, 0, 0]));
    assert_eq!(r["obstruction_quantiles"]["max"].as_f64().unwrap(), 0.0);
}

#[test]
fn analyze_heisenberg_is_obstructed_with_full_rank() {
    let r = json_of(&ricobs(&["analyze", "heisenberg", "--param", "L=1", "--json"]));
    assert_eq!(r["verdict"], "obstructed");
    assert_eq!(r["rank_histogram"], serde_json::json!([0, 0, 0, 10]));
    for p in r["points"].as_array().unwrap() {
        assert_eq!(p["ric_nonpositive"], false);
    }
}

#[test]
fn analyze_sol_reports_rank_one_checks() {
    let r = json_of(&ricobs(&["analyze", "sol", "--json"]));
    assert_eq!(r["rank_histogram"], serde_json::json!([0, 10, 0, 0]));
    for p in r["points"].as_array().unwrap() {
        let d = p["rank1"]["u1_max_defect"].as_f64().unwrap();
        assert!(d > 0.0);
    }
    assert_eq!(r["verdict"], "obstructed");
}

#[test]
fn analyze_is_deterministic_and_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let a = ricobs(&["analyze", "hyperbolic", "--seed", "5", "--json", "--out", out.to_str().unwrap()]);
    let b = ricobs(&["analyze", "hyperbolic", "--seed", "5", "--json"]);
    assert_eq!(stdout(&a), stdout(&b));
    let csv = std::fs::read_to_string(out.join("samples.csv")).unwrap();
    assert!(csv.starts_with("point_index,dir_index,v1,v2,v3,lhs,rhs,residual,relative\n"));
    assert_eq!(csv.lines().count(), 1 + 10 * 16);
    let rep: Value = serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(rep["verdict"], "unobstructed-at-samples");
    let q = &rep["obstruction_quantiles"];
    let seq: Vec<f64> = ["min", "q25", "median", "q75", "q90", "max"]
        .iter()
        .map(|k| q[*k].as_f64().unwrap())
        .collect();
    assert!(seq.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn analyze_reads_config_and_metric_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cfg.toml", "points = 3\ndirs = 5\nseed = 2\n");
    let metric = write(
        dir.path(),
        "m.toml",
        r#"name = "custom"
[params]
k = 2.0
[components]
g11 = "k^2"
g12 = "0"
g13 = "0"
g22 = "k^2"
g23 = "0"
g33 = "k^2"
"#,
    );
    let r = json_of(&ricobs(&["analyze", &metric, "--config", &cfg, "--json"]));
    assert_eq!(r["config"]["points"], 3);
    assert_eq!(r["config"]["dirs"], 5);
    assert_eq!(r["config"]["seed"], 2);
    assert_eq!(r["verdict"], "unobstructed-at-samples");
    let builtin = write(dir.path(), "h.toml", "name = \"heisenberg\"\n[params]\nL = 2.0\n");
    let r = json_of(&ricobs(&["analyze", &builtin, "-n", "2", "-m", "4", "--json"]));
    assert_eq!(r["params"], serde_json::json!([["L", 2.0]]));
}

#[test]
fn analyze_rejects_unknown_metric() {
    let o = ricobs(&["analyze", "no-such-metric"]);
    assert_eq!(o.status.code(), Some(2));
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "t,x1,x2,x3,u11,u12,u22,trace_defect,status");
    lines.map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn riccati_flat_zero_stays_zero() {
    let rows = csv_rows(&stdout(&ricobs(&["riccati", "flat", "--t-end", "1"])));
    assert!(rows.len() > 10);
    for r in rows {
        assert_eq!(r[8], "ok");
        for cell in &r[4..7] {
            assert_eq!(cell.parse::<f64>().unwrap(), 0.0);
        }
    }
}

#[test]
fn riccati_flat_blows_up_near_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("traj.csv");
    let o = ricobs(&[
        "riccati", "flat", "--u0", "1,0,-1", "--t-end", "2", "--dt", "0.001", "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let rows = csv_rows(&std::fs::read_to_string(out).unwrap());
    let last = rows.last().unwrap();
    assert_eq!(last[8], "blowup");
    let t: f64 = last[0].parse().unwrap();
    assert!((t - 1.0).abs() < 1e-3, "{}", t);
}

#[test]
fn riccati_hyperbolic_identity_is_constant() {
    let rows = csv_rows(&stdout(&ricobs(&["riccati", "hyperbolic", "--u0", "1,0,1", "--t-end", "2"])));
    for r in rows {
        let u: Vec<f64> = (4..8).map(|k| r[k].parse().unwrap()).collect();
        assert!((u[0] - 1.0).abs() < 1e-9 && u[1].abs() < 1e-9 && (u[2] - 1.0).abs() < 1e-9);
        assert!((u[3] - 2.0).abs() < 1e-9);
    }
}

#[test]
fn riccati_json_summary() {
    let r = json_of(&ricobs(&["riccati", "flat", "--u0", "1,0,-1", "--t-end", "2", "--json"]));
    let t = r["blowup_time"].as_f64().unwrap();
    assert!((t - 1.0).abs() < 2e-2);
}

#[test]
fn classify_files() {
    let dir = tempfile::tempdir().unwrap();
    let ii = write(
        dir.path(),
        "ii.json",
        r#"{"regime":"a12","Lambda":"4","a":["1/2","0","-3/4"],"c":["1","1"],"d1":["1","0","-3/2"],"P":[]}"#,
    );
    let r = json_of(&ricobs(&["classify", &ii, "--json"]));
    assert_eq!(r["branch"]["DEqualsSqrtLambdaA"], 1);
    assert_eq!(r["residual"].as_f64().unwrap(), 0.0);

    let s2 = 2f64.sqrt();
    let float_ii = write(
        dir.path(),
        "f.json",
        &format!(
            r#"{{"regime":"a12","Lambda":"2","a":["1","0","1"],"c":["1","1"],"d1":["{}","0","{}"],"P":[]}}"#,
            s2, s2
        ),
    );
    let r = json_of(&ricobs(&["classify", &float_ii, "--float", "--json"]));
    assert_eq!(r["branch"]["DEqualsSqrtLambdaA"], 1);

    let cz = write(
        dir.path(),
        "cz.json",
        r#"{"regime":"a3","lambda2":"-2","lambda3":"-1","a":["-1","0","-1/2"],"c":[],"d1":["3"],"P":[]}"#,
    );
    let r = json_of(&ricobs(&["classify", &cz, "--json"]));
    assert_eq!(r["branch"], "CZero");

    let rnd = write(
        dir.path(),
        "r.json",
        r#"{"regime":"a12","Lambda":"3","a":["1","2","3"],"c":["1","-1"],"d1":["0","1"],"P":["1","2","3"]}"#,
    );
    let o = ricobs(&["classify", &rnd]);
    let text = stdout(&o);
    assert!(text.contains("branch: Infeasible"), "{}", text);
    assert!(text.contains("oracle residual"));
}

#[test]
fn classify_rejects_bad_files() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "b.json", r#"{"regime":"a12","Lambda":"x","a":[],"c":[],"d1":[],"P":[]}"#);
    assert_eq!(ricobs(&["classify", &bad]).status.code(), Some(2));
}

#[test]
fn frame_check_random_and_file() {
    let r = json_of(&ricobs(&["frame-check", "--seed", "3", "--json"]));
    assert!(r["a1_crosscheck"]["residual13"].as_f64().unwrap() < 1e-9);
    assert!(r["root_identities_max"].as_f64().unwrap() < 1e-9);
    for (_, v) in r["gcd_residual"].as_object().unwrap() {
        assert!(v.as_f64().unwrap() < 1e-10);
    }
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "fd.txt", "lambda2 = -2\nlambda3 = -1\ngamma112 = 0.25\n");
    let r = json_of(&ricobs(&["frame-check", &f, "--eds", "--json"]));
    assert_eq!(r["mode"], "free");
    let closures = r["eds_closure"].as_array().unwrap();
    assert_eq!(closures.len(), 8);
    assert!(closures.iter().all(|c| c["contradiction"] == true));
    assert!(r["certificates"].as_array().unwrap().iter().all(|c| c["pass"] == true));
}

#[test]
fn selftest_passes_and_detects_tampering() {
    let o = ricobs(&["selftest", "--json"]);
    let r = json_of(&o);
    assert_eq!(r["pass"], true, "{}", r);
    let tampered = ricobs(&["selftest", "--tamper-sign"]);
    assert_eq!(tampered.status.code(), Some(1));
    let text = stdout(&tampered);
    assert!(text.contains("FAIL identity.kulkarni_nomizu"), "{}", text);
    assert!(text.contains("FAIL identity.trace_jacobi_equals_ric"));
}
