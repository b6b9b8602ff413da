use std::path::Path;
use std::process::Command;

use serde_json::Value;

fn qchannel(args: &[&str]) -> (i32, String) {
    qchannel_env(args, None)
}

fn qchannel_env(args: &[&str], threads: Option<&str>) -> (i32, String) {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_qchannel"));
    cmd.args(args);
    if let Some(t) = threads {
        cmd.env("QCHANNEL_THREADS", t);
    }
    let out = cmd.output().expect("binary runs");
    (out.status.code().unwrap_or(-1), String::from_utf8(out.stdout).expect("utf-8"))
}

fn json_ok(args: &[&str]) -> Value {
    let (code, stdout) = qchannel(args);
    assert_eq!(code, 0, "{args:?}: {stdout}");
    serde_json::from_str(&stdout).expect("valid JSON")
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap_or_else(|| panic!("not a number: {v}"))
}

fn data(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name).display().to_string()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<csv::StringRecord>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    (header, r.records().map(Result::unwrap).collect())
}

#[test]
fn analyze_singlet() {
    let v = json_ok(&["analyze", "--kind", "bell", "--k", "0"]);
    assert_eq!(v["tool"], "qchannel");
    assert_eq!(v["command"], "analyze");
    let r = &v["report"];
    assert_eq!(f(&r["f_max"]), 1.0);
    assert_eq!(r["useful"], true);
    assert_eq!(r["extended_formula"], false);
    assert_eq!(r["marginal"], false);
    assert_eq!(v["decomposition"]["t"][0][0], -1.0);
    assert_eq!(v["decomposition"]["r"], serde_json::json!([0.0, 0.0, 0.0]));
}

#[test]
fn analyze_inseparable_but_not_useful() {
    let v = json_ok(&["analyze", "--kind", "paper_family", "--p1", "0.6", "--a2", "0.9"]);
    let r = &v["report"];
    assert_eq!(r["useful"], false);
    assert_eq!(r["separable"], false);
    assert_eq!(r["bell_violating"], false);
    assert!((f(&r["m_value"]) - 0.4).abs() < 1e-11);
}

#[test]
fn analyze_raw_rejects_non_positive() {
    let pairs = std::fs::read_to_string(data("not_positive.txt")).unwrap();
    for arg in [pairs.as_str(), data("not_positive.txt").as_str()] {
        let (code, stdout) = qchannel(&["analyze", "--kind", "raw", "--matrix", arg]);
        assert_eq!(code, 2);
        let v: Value = serde_json::from_str(&stdout).unwrap();
        assert_eq!(v["error"]["kind"], "NotPositive");
        assert!(f(&v["error"]["min_eigenvalue"]) < 0.0);
    }
}

#[test]
fn analyze_raw_json_file_matches_family() {
    let raw = json_ok(&["analyze", "--kind", "raw", "--matrix", &data("werner_0.8.json")]);
    let fam = json_ok(&["analyze", "--kind", "werner", "--p", "0.8"]);
    assert_eq!(raw["report"], fam["report"]);
}

#[test]
fn invalid_specs_exit_2() {
    for args in [
        vec!["analyze", "--kind", "werner"],
        vec!["analyze", "--kind", "werner", "--p", "1.5"],
        vec!["analyze", "--kind", "bell", "--k", "4"],
        vec!["strategy", "--kind", "random"],
        vec!["simulate", "--kind", "bell", "--k", "0", "--samples", "0"],
    ] {
        let (code, stdout) = qchannel(&args);
        assert_eq!(code, 2, "{args:?}");
        let v: Value = serde_json::from_str(&stdout).unwrap();
        assert!(v["error"]["kind"].is_string());
    }
}

#[test]
fn sweep_family_region_map() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("region.csv");
    #[rustfmt::skip]
    let v = json_ok(&[
        "sweep", "--kind", "paper_family",
        "--param", "p1", "--start", "0.5", "--stop", "1.0", "--steps", "51",
        "--param2", "a2", "--start2", "0.5", "--stop2", "1.0", "--steps2", "51",
        "--out", out.to_str().unwrap(),
    ]);
    assert!(f(&v["summary"]["inseparable_not_useful"]) > 0.0);
    let (header, rows) = read_csv(&out);
    assert_eq!(&header[..3], ["p1", "a2", "n_value"]);
    assert_eq!(header.last().unwrap(), "status");
    assert_eq!(rows.len(), 51 * 51);
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    let hits = rows
        .iter()
        .filter(|r| &r[col("status")] == "ok" && &r[col("separable")] == "false" && &r[col("useful")] == "false")
        .count();
    assert!(hits > 0);
    assert_eq!(hits as f64, f(&v["summary"]["inseparable_not_useful"]));
}

#[test]
fn sweep_werner_thresholds() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("w.csv");
    json_ok(&[
        "sweep", "--kind", "werner", "--param", "p", "--start", "0", "--stop", "1", "--steps", "101", "--out",
        out.to_str().unwrap(),
    ]);
    let (header, rows) = read_csv(&out);
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    let onset = |c: usize| -> f64 {
        let r = rows.iter().find(|r| &r[c] == "true").unwrap();
        r[col("p")].parse().unwrap()
    };
    assert!((onset(col("useful")) - 1.0 / 3.0).abs() <= 0.01);
    assert!((onset(col("bell_violating")) - 0.5f64.sqrt()).abs() <= 0.01);
}

#[test]
fn sweep_rejects_single_step_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("w.csv");
    let (code, _) = qchannel(&[
        "sweep", "--kind", "werner", "--param", "p", "--start", "0", "--stop", "1", "--steps", "1", "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 2);
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn sweep_output_independent_of_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let mut files = Vec::new();
    for threads in ["1", "4", "0"] {
        let out = dir.path().join(format!("t{threads}.csv"));
        #[rustfmt::skip]
        let (code, _) = qchannel_env(&[
            "sweep", "--kind", "paper_family", "--allow-unconstrained",
            "--param", "p1", "--start", "0", "--stop", "1", "--steps", "21",
            "--param2", "a2", "--start2", "0.05", "--stop2", "0.95", "--steps2", "19",
            "--out", out.to_str().unwrap(),
        ], Some(threads));
        assert_eq!(code, 0);
        files.push(std::fs::read(&out).unwrap());
    }
    assert_eq!(files[0], files[1]);
    assert_eq!(files[0], files[2]);
}

#[test]
fn simulate_singlet_is_perfect() {
    let v = json_ok(&["simulate", "--kind", "bell", "--k", "0", "--samples", "10000", "--seed", "7"]);
    let fid = &v["fidelity"];
    assert_eq!(f(&fid["f_max"]), 1.0);
    assert_eq!(f(&fid["closed_form"]), 1.0);
    assert_eq!(f(&fid["monte_carlo"]["mean"]), 1.0);
    assert_eq!(v["self_check"], "pass");
}

#[test]
fn simulate_werner_half() {
    let v = json_ok(&["simulate", "--kind", "werner", "--p", "0.5", "--samples", "20000", "--seed", "1"]);
    let fid = &v["fidelity"];
    assert!((f(&fid["f_max"]) - 0.75).abs() < 1e-11);
    let mc = &fid["monte_carlo"];
    assert!((f(&mc["mean"]) - 0.75).abs() <= 3.0 * f(&mc["standard_error"]) + 1e-9);
    assert_eq!(mc["samples"], 20000);
}

#[test]
fn identical_invocations_are_byte_identical() {
    for args in [
        vec!["simulate", "--kind", "random", "--seed", "12", "--samples", "5000"],
        vec!["strategy", "--kind", "random_separable", "--seed", "4", "--terms", "3"],
        vec!["analyze", "--kind", "random", "--seed", "3"],
    ] {
        let (c1, a) = qchannel(&args);
        let (c2, b) = qchannel(&args);
        assert_eq!((c1, c2), (0, 0));
        assert_eq!(a, b);
    }
}

fn overlap_up_to_phase(m: &Value, pauli: [[(f64, f64); 2]; 2]) -> f64 {
    // |Tr(P† M)| / 2 equals 1 exactly when M is P times a phase.
    let (mut re, mut im) = (0.0, 0.0);
    for i in 0..2 {
        for j in 0..2 {
            let (pr, pi) = pauli[i][j];
            let (mr, mi) = (f(&m[i][j][0]), f(&m[i][j][1]));
            re += pr * mr + pi * mi;
            im += pr * mi - pi * mr;
        }
    }
    (re * re + im * im).sqrt() / 2.0
}

#[test]
fn strategy_singlet_recovers_pauli_corrections() {
    let v = json_ok(&["strategy", "--kind", "bell", "--k", "0"]);
    let s = &v["strategy"];
    let paulis = [
        [[(1.0, 0.0), (0.0, 0.0)], [(0.0, 0.0), (1.0, 0.0)]],
        [[(0.0, 0.0), (1.0, 0.0)], [(1.0, 0.0), (0.0, 0.0)]],
        [[(0.0, 0.0), (0.0, -1.0)], [(0.0, 1.0), (0.0, 0.0)]],
        [[(1.0, 0.0), (0.0, 0.0)], [(0.0, 0.0), (-1.0, 0.0)]],
    ];
    for (k, p) in paulis.into_iter().enumerate() {
        let o = overlap_up_to_phase(&s["corrections"][k], p);
        assert!((o - 1.0).abs() < 1e-11, "correction {k}: overlap {o}");
    }
    assert_eq!(f(&s["achieved_fidelity"]), 1.0);
    assert_eq!(s["d"].as_array().unwrap().len(), 3);
}

#[test]
fn strategy_werner_shares_singlet_rotation() {
    let singlet = json_ok(&["strategy", "--kind", "bell", "--k", "0"]);
    let werner = json_ok(&["strategy", "--kind", "werner", "--p", "0.9"]);
    assert_eq!(singlet["strategy"]["rotation"], werner["strategy"]["rotation"]);
    assert!((f(&werner["strategy"]["achieved_fidelity"]) - 0.95).abs() < 1e-11);
}

#[test]
fn commands_agree_on_fidelity() {
    for seed in ["3", "8", "21"] {
        let a = json_ok(&["analyze", "--kind", "random", "--seed", seed]);
        let s = json_ok(&["strategy", "--kind", "random", "--seed", seed]);
        let m = json_ok(&["simulate", "--kind", "random", "--seed", seed, "--samples", "2000"]);
        let f_max = f(&a["report"]["f_max"]);
        assert!((f_max - f(&s["strategy"]["achieved_fidelity"])).abs() <= 1e-9);
        assert!((f_max - f(&m["fidelity"]["closed_form"])).abs() <= 1e-9);
    }
}

#[test]
fn state_seed_decouples_monte_carlo_seed() {
    let a = json_ok(&["simulate", "--kind", "random", "--state-seed", "5", "--seed", "1", "--samples", "500"]);
    let b = json_ok(&["simulate", "--kind", "random", "--state-seed", "5", "--seed", "2", "--samples", "500"]);
    assert_eq!(a["fidelity"]["f_max"], b["fidelity"]["f_max"]);
    assert_ne!(a["fidelity"]["monte_carlo"]["mean"], b["fidelity"]["monte_carlo"]["mean"]);
}
