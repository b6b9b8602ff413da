//! Acceptance suite. Run with `cargo test -p qchannel --test acceptance`.
//!
//! Prints one PASS/FAIL line per criterion and exits nonzero if any fails.
//! A criterion that exceeds its runtime budget fails too.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qchannel::criteria::{analyze, b_max, f_max, m_value, n_value};
use qchannel::linalg::{ComplexMat2, RealMat3};
use qchannel::sim::{average_fidelity_mc, closed_form_fidelity};
use qchannel::states::{
    bell_state, hs_decompose, pauli_dot, random_density, random_separable, singlet, tilted_mixture,
    tilted_singlet, QubitState,
};
use qchannel::strategy::{optimal_strategy, random_unitary, so3_from_su2, su2_from_so3, Rotation, Strategy};

type Check = fn() -> Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn singlet_channel() -> Result<String, String> {
    let rho = singlet();
    let d = hs_decompose(&rho);
    let (n, m, b, f) = (n_value(&d), m_value(&d), b_max(&d), f_max(&d));
    ensure((n - 3.0).abs() <= 1e-9, || format!("N = {n}"))?;
    ensure((m - 2.0).abs() <= 1e-9, || format!("M = {m}"))?;
    ensure((b - 2.0 * 2f64.sqrt()).abs() <= 1e-9, || format!("B_max = {b}"))?;
    ensure((f - 1.0).abs() <= 1e-9, || format!("F_max = {f}"))?;
    let est = average_fidelity_mc(&rho, &optimal_strategy(&d).strategy, 10_000, 11).map_err(|e| e.to_string())?;
    ensure((est.mean - 1.0).abs() <= 1e-8, || format!("MC mean = {}", est.mean))?;
    Ok(format!("N={n} M={m} F_max={f} MC={:.12}", est.mean))
}

fn pure_state_example() -> Result<String, String> {
    let mut worst = 0f64;
    for (i, a) in [0.6f64, 0.7, 0.8, 0.9].into_iter().enumerate() {
        let b = (1.0 - a * a).sqrt();
        let expected = 2.0 / 3.0 * (a.powi(3) - b.powi(3)) / (a - b);
        let rho = tilted_singlet(a).map_err(|e| e.to_string())?;
        let d = hs_decompose(&rho);
        let f = f_max(&d);
        ensure((f - expected).abs() <= 1e-9, || format!("a={a}: F_max={f}, expected {expected}"))?;
        let est = average_fidelity_mc(&rho, &optimal_strategy(&d).strategy, 20_000, 100 + i as u64)
            .map_err(|e| e.to_string())?;
        let dev = (est.mean - f).abs();
        ensure(dev <= 3.0 * est.standard_error, || {
            format!("a={a}: MC {} vs {f}, SE {}", est.mean, est.standard_error)
        })?;
        worst = worst.max(dev / est.standard_error);
    }
    Ok(format!("max MC deviation {worst:.2} SE"))
}

fn counterexample_family() -> Result<String, String> {
    let (p1, a2) = (0.6f64, 0.9f64);
    let rho = tilted_mixture(p1, a2.sqrt()).map_err(|e| e.to_string())?;
    let report = analyze(&rho);
    let (p2, b2) = (1.0 - p1, 1.0 - a2);
    let m_formula = 1.0 + (p1 - p2).powi(2) - (a2 - b2).powi(2);
    ensure(report.ppt_min_eigenvalue < -1e-3, || format!("PPT min {}", report.ppt_min_eigenvalue))?;
    ensure(!report.separable, || "classified separable".into())?;
    ensure((report.m_value - 0.4).abs() <= 1e-9, || format!("M = {}", report.m_value))?;
    ensure((report.m_value - m_formula).abs() <= 1e-9, || format!("M formula {m_formula}"))?;
    ensure(!report.bell_violating, || "Bell violating".into())?;
    ensure((report.n_value - 0.92).abs() <= 1e-9 && report.n_value <= 1.0, || {
        format!("N = {}", report.n_value)
    })?;
    ensure(!report.useful, || "useful".into())?;
    Ok(format!(
        "PPT min {:.6} M={} N={}",
        report.ppt_min_eigenvalue, report.m_value, report.n_value
    ))
}

fn m_formula_grid() -> Result<String, String> {
    // In-constraint points of a 0.01 grid with a margin, thinned to 100.
    let mut candidates = Vec::new();
    for i in 1..100 {
        for j in 1..100 {
            let (p1, a2) = (i as f64 / 100.0, j as f64 / 100.0);
            let lhs = (2.0 * p1 - 1.0).powi(2);
            if lhs > 1e-6 && lhs + 1e-6 < (2.0 * a2 - 1.0).powi(2) {
                candidates.push((p1, a2));
            }
        }
    }
    ensure(candidates.len() >= 100, || "grid too small".into())?;
    let stride = candidates.len() as f64 / 100.0;
    let mut worst = 0f64;
    for n in 0..100 {
        let (p1, a2) = candidates[(n as f64 * stride) as usize];
        let rho = tilted_mixture(p1, a2.sqrt()).map_err(|e| format!("p1={p1} a2={a2}: {e}"))?;
        let m = m_value(&hs_decompose(&rho));
        let expected = 1.0 + (2.0 * p1 - 1.0).powi(2) - (2.0 * a2 - 1.0).powi(2);
        worst = worst.max((m - expected).abs());
        ensure(worst <= 1e-9, || format!("p1={p1} a2={a2}: M={m}, expected {expected}"))?;
    }
    Ok(format!("100 points, max error {worst:.2e}"))
}

fn relation_suite() -> Result<String, String> {
    let mut bell = 0;
    for seed in 0..10_000u64 {
        let d = hs_decompose(&random_density(seed));
        let (n, m, f) = (n_value(&d), m_value(&d), f_max(&d));
        ensure(n >= m - 1e-9, || format!("seed {seed}: N={n} < M={m}"))?;
        for u in d.correlation_eigenvalues() {
            ensure(u <= 1.0 + 1e-9, || format!("seed {seed}: u={u}"))?;
        }
        if m > 1.0 {
            bell += 1;
            ensure(n > 1.0, || format!("seed {seed}: M={m} but N={n}"))?;
        }
        let floor = 0.5 * (1.0 + m / 3.0);
        ensure(f >= floor - 1e-9, || format!("seed {seed}: F_max={f} < {floor}"))?;
    }
    Ok(format!("10000 states, {bell} with M > 1"))
}

fn separable_ceiling() -> Result<String, String> {
    let mut max_f = 0f64;
    for seed in 0..1_000u64 {
        let terms = 1 + (seed % 8) as usize;
        let rho = random_separable(seed, terms).map_err(|e| e.to_string())?;
        let d = hs_decompose(&rho);
        let (n, b) = (n_value(&d), b_max(&d));
        let f = closed_form_fidelity(&d, &optimal_strategy(&d).strategy);
        ensure(n <= 1.0 + 1e-9, || format!("seed {seed}: N={n}"))?;
        ensure(b <= 2.0 + 1e-9, || format!("seed {seed}: B_max={b}"))?;
        ensure(f <= 2.0 / 3.0 + 1e-9, || format!("seed {seed}: F={f}"))?;
        max_f = max_f.max(f);
    }
    Ok(format!("max fidelity {max_f:.12}"))
}

fn optimality_oracle() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut worst_gap, mut best_margin) = (0f64, f64::INFINITY);
    for i in 0..1_000u64 {
        let d = hs_decompose(&random_density(1_000_000 + i));
        let fm = f_max(&d);
        let achieved = closed_form_fidelity(&d, &optimal_strategy(&d).strategy);
        worst_gap = worst_gap.max((achieved - fm).abs());
        ensure(worst_gap <= 1e-8, || format!("state {i}: optimal {achieved} vs F_max {fm}"))?;
        for _ in 0..1_000 {
            let f = closed_form_fidelity(&d, &Strategy::random(&mut rng));
            ensure(f <= fm + 1e-9, || format!("state {i}: random strategy {f} > F_max {fm}"))?;
            best_margin = best_margin.min(fm - f);
        }
    }
    Ok(format!("max |optimal - F_max| {worst_gap:.2e}, closest random search {best_margin:.2e}"))
}

fn estimator_cross_validation() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut failures = Vec::new();
    for i in 0..100u64 {
        let rho = random_density(2_000_000 + i);
        let strat = Strategy::random(&mut rng);
        let cf = closed_form_fidelity(&hs_decompose(&rho), &strat);
        let est = average_fidelity_mc(&rho, &strat, 10_000, 3_000 + i).map_err(|e| e.to_string())?;
        if (est.mean - cf).abs() > 3.0 * est.standard_error {
            failures.push(i);
        }
    }
    ensure(failures.len() <= 1, || format!("3-SE failures at pairs {failures:?}"))?;
    Ok(format!("{} of 100 pairs outside 3 SE", failures.len()))
}

fn homomorphism_suite() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut worst = 0f64;
    for _ in 0..100 {
        let u = random_unitary(&mut rng);
        let n = QubitState::random(&mut rng).bloch();
        let o = so3_from_su2(&u).map_err(|e| e.to_string())?;
        let lhs = pauli_dot(&n).conjugate_by(&u);
        let rhs = pauli_dot(&o.matrix().transpose().mul_vec(&n));
        worst = worst.max(lhs.max_abs_diff(&rhs));
        ensure(worst <= 1e-9, || format!("defining relation off by {worst}"))?;

        let neg: ComplexMat2 = u.scale(Complex64::new(-1.0, 0.0));
        let o_neg = so3_from_su2(&neg).map_err(|e| e.to_string())?;
        ensure(o_neg.matrix().max_abs_diff(o.matrix()) <= 1e-12, || "O(-U) != O(U)".into())?;

        let r = Rotation::random(&mut rng);
        let lifted = su2_from_so3(r.matrix()).map_err(|e| e.to_string())?;
        let back: RealMat3 = *so3_from_su2(&lifted).map_err(|e| e.to_string())?.matrix();
        ensure(back.max_abs_diff(r.matrix()) <= 1e-8, || "lift round trip".into())?;
    }
    Ok(format!("max relation error {worst:.2e}"))
}

fn bell_projector_constants() -> Result<String, String> {
    let expected = [[-1.0, -1.0, -1.0], [-1.0, 1.0, 1.0], [1.0, -1.0, 1.0], [1.0, 1.0, -1.0]];
    for (k, diag) in expected.into_iter().enumerate() {
        let d = hs_decompose(&bell_state(k).map_err(|e| e.to_string())?);
        let err = d.t.max_abs_diff(&RealMat3::diag(diag));
        ensure(err <= 1e-12, || format!("T_{k} off by {err}"))?;
        let loc = d.r.norm().max(d.s.norm());
        ensure(loc <= 1e-12, || format!("k={k}: local vectors {loc}"))?;
    }
    Ok("T_0..T_3 exact, r = s = 0".into())
}

fn werner_thresholds() -> Result<String, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let out = dir.path().join("werner.csv");
    let status = Command::new(env!("CARGO_BIN_EXE_qchannel"))
        .args(["sweep", "--kind", "werner", "--param", "p", "--start", "0", "--stop", "1", "--steps", "1001"])
        .arg("--out")
        .arg(&out)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(status.status.success(), || format!("sweep exited with {}", status.status))?;
    let mut reader = csv::Reader::from_path(&out).map_err(|e| e.to_string())?;
    let headers = reader.headers().map_err(|e| e.to_string())?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name).ok_or(format!("no column {name}"));
    let (cp, cu, cb) = (col("p")?, col("useful")?, col("bell_violating")?);
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| e.to_string())?;
        let p: f64 = rec[cp].parse().map_err(|_| "bad p".to_string())?;
        rows.push((p, &rec[cu] == "true", &rec[cb] == "true"));
    }
    ensure(rows.len() == 1001, || format!("{} rows", rows.len()))?;
    let step = 1.0 / 1000.0;
    let onset = |pick: fn(&(f64, bool, bool)) -> bool| -> Result<f64, String> {
        let first = rows.iter().position(pick).ok_or("no onset")?;
        ensure(rows[first..].iter().all(pick), || "onset not monotone".into())?;
        Ok(rows[first].0)
    };
    let useful = onset(|r| r.1)?;
    let bell = onset(|r| r.2)?;
    ensure((useful - 1.0 / 3.0).abs() <= step, || format!("usefulness onset at {useful}"))?;
    ensure((bell - 0.5f64.sqrt()).abs() <= step, || format!("Bell onset at {bell}"))?;
    Ok(format!("useful from p={useful}, Bell violation from p={bell}"))
}

fn main() -> ExitCode {
    let criteria: [(u32, &str, u64, Check); 11] = [
        (1, "singlet channel", 1, singlet_channel),
        (2, "pure-state example", 5, pure_state_example),
        (3, "counterexample family", 1, counterexample_family),
        (4, "M-formula grid", 1, m_formula_grid),
        (5, "relation suite", 30, relation_suite),
        (6, "separable ceiling", 10, separable_ceiling),
        (7, "optimal strategy oracle", 60, optimality_oracle),
        (8, "estimator cross-validation", 120, estimator_cross_validation),
        (9, "homomorphism suite", 1, homomorphism_suite),
        (10, "Bell-projector constants", 1, bell_projector_constants),
        (11, "Werner thresholds", 5, werner_thresholds),
    ];
    let mut failed = 0;
    for (id, name, budget, check) in criteria {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let result = match result {
            Ok(detail) if elapsed > Duration::from_secs(budget) => {
                Err(format!("over runtime budget of {budget} s; {detail}"))
            }
            other => other,
        };
        let (tag, detail) = match &result {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        println!("criterion {id:>2} {tag} {name} ({:.3} s): {detail}", elapsed.as_secs_f64());
        failed += result.is_err() as u32;
    }
    println!("{} of 11 criteria passed", 11 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
