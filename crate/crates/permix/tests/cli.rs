use std::path::PathBuf;

use serde_json::Value;

fn fixture(name: &str, body: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("permix-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("permix").chain(args.iter().copied());
    let code = permix::cli::run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn json(s: &str) -> Value {
    serde_json::from_str(s).unwrap()
}

const TWO_BERN: &str = r#"{"alphabet_size":2,"components":[[0.8,0.2],[0.2,0.8]]}"#;
const FOUR: &str = r#"{"alphabet_size":3,"components":[[0.5,0.3,0.2],[0.2,0.5,0.3],[0.3,0.2,0.5],[0.4,0.4,0.2]]}"#;

#[test]
fn divergence_golden() {
    let f = fixture("two_bern.json", TWO_BERN);
    let (code, out, _) = run(&["divergence", "--components", f.to_str().unwrap()]);
    assert_eq!(code, 0);
    let v = json(&out);
    let x = v["results"]["exact_chi2_permanent"].as_f64().unwrap();
    assert!((x - 0.1296).abs() < 1e-10);
    assert!((v["results"]["lambda2"].as_f64().unwrap() - 0.36).abs() < 1e-10);
    assert_eq!(v["passed"], true);
}

#[test]
fn esp_small_ratio() {
    let (code, out, _) = run(&["esp", "verify", "--n-max", "2", "--trials", "100"]);
    assert_eq!(code, 0);
    let r = json(&out)["results"]["max_ratio_real"].as_f64().unwrap();
    assert!((r - 0.1f64.sqrt()).abs() < 1e-12);
}

#[test]
fn every_component_command_passes() {
    let f = fixture("four.json", FOUR);
    let p = f.to_str().unwrap();
    for args in [
        vec!["bounds", "evaluate", "--components", p],
        vec!["bounds", "evaluate", "--components", p, "--c", "2", "--delta", "3", "--d", "1"],
        vec!["series", "--components", p],
        vec!["series", "--components", p, "--method", "direct"],
        vec!["definetti", "--components", p],
        vec!["definetti", "--components", p, "--k", "3"],
        vec!["two-mixtures", "--components", p],
        vec!["mutual-info", "--components", p],
        vec!["mutual-info", "--components", p, "--part", "2"],
    ] {
        let (code, out, err) = run(&args);
        assert_eq!(code, 0, "{args:?}: {err}");
        assert_eq!(json(&out)["passed"], true, "{args:?}");
    }
}

#[test]
fn family_commands() {
    let fam = fixture("fam.json", r#"{"variant":"bernoulli","eps":0.1}"#);
    let comps = fixture("four_fam.json", r#"{"alphabet_size":2,"components":[[0.5,0.5],[0.4,0.6],[0.6,0.4]]}"#);
    let (code, out, err) = run(&["capacity", "--family", fam.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    assert!(json(&out)["results"]["functionals"].is_object());
    let (code, out, err) =
        run(&["bounds", "evaluate", "--components", comps.to_str().unwrap(), "--family", fam.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    assert_eq!(json(&out)["results"]["inputs"]["provenance"], "family");
}

#[test]
fn matrix_series() {
    let m = fixture("m.json", r#"{"n":2,"rows":[[0.5,0.5],[0.5,0.5]]}"#);
    let (code, out, err) = run(&["series", "--matrix", m.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let v = json(&out);
    assert!((v["results"]["permanent"].as_f64().unwrap() - 0.5).abs() < 1e-15);
    assert!(v["results"]["direct"]["chi2"].as_f64().unwrap().abs() < 1e-12);
}

#[test]
fn scalar_commands() {
    for args in [
        vec!["worst-case", "--c", "2", "--delta", "0.25"],
        vec!["worst-case", "--c", "2", "--delta", "0.5", "--m", "2", "--n", "2"],
        vec!["toy", "gaussian", "--mu", "0.5"],
        vec!["bounds", "eb-risk", "--m-loss", "1", "--n", "100", "--c", "0.36", "--delta", "1.5625", "--d", "0.36"],
        vec!["demo", "moments"],
        vec!["demo", "cumulants"],
    ] {
        let (code, _, err) = run(&args);
        assert_eq!(code, 0, "{args:?}: {err}");
    }
}

#[test]
fn csv_tables() {
    let (code, out, _) = run(&["demo", "cumulants", "--format", "csv", "--l-max", "4"]);
    assert_eq!(code, 0);
    let b: Vec<&str> = out.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(b, ["1", "2", "16", "272", "7936"]);
    let (_, out, _) = run(&["toy", "gaussian", "--mu", "1", "--format", "csv"]);
    assert!(out.starts_with("name,lhs,rhs,margin,pass\n"));
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["--help"]).0, 0);
    assert_eq!(run(&["no-such-command"]).0, 2);
    assert_eq!(run(&["divergence", "--components", "/nonexistent/x.json"]).0, 2);
    let bad = fixture("bad.json", r#"{"alphabet_size":2,"components":[[0.7,0.7]]}"#);
    assert_eq!(run(&["divergence", "--components", bad.to_str().unwrap()]).0, 2);
    assert_eq!(run(&["worst-case", "--c", "2", "--delta", "1.5"]).0, 2);
    let (code, _, err) = run(&["demo", "moments", "--ell", "3"]);
    assert_eq!(code, 1);
    assert!(err.contains("slope_ell_3"));
}

#[test]
fn out_file_and_threads_are_deterministic() {
    let dir = std::env::temp_dir().join(format!("permix-cli-out-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let a = dir.join("a.json");
    let (code, out, _) = run(&["verify-all", "--seed", "3", "--threads", "1", "--out", a.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(out.is_empty());
    let (_, b, _) = run(&["verify-all", "--seed", "3", "--threads", "3"]);
    assert_eq!(std::fs::read_to_string(&a).unwrap(), b);
    assert!(!b.contains("wall_time_s"));
    let (_, t, _) = run(&["verify-all", "--seed", "3", "--timing"]);
    assert!(json(&t)["wall_time_s"].is_number());
}

#[test]
fn binary_matches_library_entry_point() {
    let f = fixture("bin.json", TWO_BERN);
    let o = std::process::Command::new(env!("CARGO_BIN_EXE_permix"))
        .args(["divergence", "--components", f.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(o.status.success());
    let (_, lib, _) = run(&["divergence", "--components", f.to_str().unwrap()]);
    assert_eq!(String::from_utf8(o.stdout).unwrap(), lib);
}
