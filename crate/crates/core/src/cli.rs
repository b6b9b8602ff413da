//! Command-line front end: `analyze`, `sweep`, `simulate` and `strategy`.
//!
//! Every command writes a JSON document to stdout. Failures print
//! `{"error": {"kind": ..., "message": ...}}` instead and exit with code 2
//! (invalid specification or state) or 3 (`simulate` self-check failure).
//! Floating-point output is rounded to 12 significant digits.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::criteria::{analyze_with, f_max, ChannelReport};
use crate::error::Error;
use crate::linalg::{CMat, ComplexMat2, ComplexMat4};
use crate::sim::{average_fidelity_mc, closed_form_fidelity};
use crate::states::{self, hs_decompose, DensityMatrix, HsDecomposition};
use crate::strategy::{optimal_strategy, OptimalStrategy};
use num_complex::Complex64;

pub const TOOL: &str = "qchannel";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Environment variable capping sweep and Monte Carlo parallelism (0 = auto).
pub const THREADS_ENV: &str = "QCHANNEL_THREADS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_SELF_CHECK: i32 = 3;

/// Fixed trailing columns of the sweep CSV, after the swept parameter columns.
pub const SWEEP_COLUMNS: [&str; 10] = [
    "n_value",
    "m_value",
    "f_max",
    "b_max",
    "ppt_min_eigenvalue",
    "separable",
    "bell_violating",
    "useful",
    "marginal",
    "status",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum StateKind {
    Raw,
    Werner,
    PaperFamily,
    PaperPure,
    Bell,
    Random,
    RandomSeparable,
}

impl StateKind {
    /// Numeric parameters that must be present, and therefore may be swept.
    pub fn required_parameters(self) -> &'static [&'static str] {
        match self {
            StateKind::Raw | StateKind::Random | StateKind::RandomSeparable => &[],
            StateKind::Werner => &["p"],
            StateKind::PaperFamily => &["p1", "a2"],
            StateKind::PaperPure => &["a"],
            StateKind::Bell => &["k"],
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "qchannel", version, about = "Two-qubit states as teleportation channels")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Fidelity, CHSH and separability diagnostics for one state
    Analyze(StateArgs),
    /// Evaluate a state family on a one- or two-parameter grid and write CSV
    Sweep(SweepArgs),
    /// Compare closed-form, Monte Carlo and maximal fidelity of the optimal strategy
    Simulate(SimulateArgs),
    /// Optimal correction unitaries for one state
    Strategy(StateArgs),
}

#[derive(Args, Debug, Clone, Default)]
pub struct StateArgs {
    /// State family
    #[arg(long, value_enum)]
    pub kind: Option<StateKind>,
    /// Werner singlet weight
    #[arg(long, allow_negative_numbers = true)]
    pub p: Option<f64>,
    /// Weight of the first component of `paper_family`
    #[arg(long)]
    pub p1: Option<f64>,
    /// Squared amplitude a² of `paper_family`
    #[arg(long)]
    pub a2: Option<f64>,
    /// Amplitude a of `paper_pure`
    #[arg(long)]
    pub a: Option<f64>,
    /// Bell state index 0..3 (0 is the singlet)
    #[arg(long)]
    pub k: Option<u64>,
    /// Seed of `random` / `random_separable` states (and of Monte Carlo in `simulate`)
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of product terms of `random_separable` [default: 4]
    #[arg(long)]
    pub terms: Option<u64>,
    /// Raw matrix: 16 whitespace-separated "re,im" pairs row-major, or a JSON file path
    #[arg(long, allow_hyphen_values = true)]
    pub matrix: Option<String>,
    /// Downgrade the `paper_family` inequality constraint to a warning
    #[arg(long)]
    pub allow_unconstrained: bool,
}

#[derive(Args, Debug, Clone)]
pub struct SweepArgs {
    #[command(flatten)]
    pub state: StateArgs,
    /// First swept parameter
    #[arg(long)]
    pub param: String,
    #[arg(long, allow_negative_numbers = true)]
    pub start: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub stop: f64,
    #[arg(long)]
    pub steps: usize,
    /// Optional second swept parameter (inner loop)
    #[arg(long, requires_all = ["start2", "stop2", "steps2"])]
    pub param2: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    pub start2: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub stop2: Option<f64>,
    #[arg(long)]
    pub steps2: Option<usize>,
    /// Output CSV path
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub state: StateArgs,
    /// Monte Carlo samples
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    /// Seed for random states when it should differ from the Monte Carlo seed
    #[arg(long)]
    pub state_seed: Option<u64>,
}

/// Failure of a command, carrying its exit code.
#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    InvalidSpec(String),
    State(Error),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        EXIT_INVALID
    }

    pub fn to_json(&self) -> Value {
        let body = match self {
            CliError::InvalidSpec(msg) => json!({ "kind": "InvalidSpec", "message": msg }),
            CliError::Io(msg) => json!({ "kind": "Io", "message": msg }),
            CliError::State(e) => {
                let mut obj = json!({ "kind": e.kind(), "message": e.to_string() });
                let extra = match e {
                    Error::NotPositive { min_eigenvalue } => Some(("min_eigenvalue", *min_eigenvalue)),
                    Error::TraceNotOne { deviation } | Error::NotHermitian { deviation } => {
                        Some(("deviation", *deviation))
                    }
                    _ => None,
                };
                if let Some((key, value)) = extra {
                    obj[key] = json!(value);
                }
                obj
            }
        };
        json!({ "error": body })
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::State(e)
    }
}

/// A validated state specification.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateSpec {
    pub kind: StateKind,
    pub parameters: BTreeMap<String, f64>,
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<[f64; 2]>>,
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub allow_unconstrained: bool,
}

/// A constructed state plus any downgraded constraint violations.
#[derive(Debug, Clone)]
pub struct BuiltState {
    pub rho: DensityMatrix,
    pub warnings: Vec<String>,
}

impl StateSpec {
    pub fn from_args(args: &StateArgs) -> Result<Self, CliError> {
        let kind = args
            .kind
            .ok_or_else(|| CliError::InvalidSpec("--kind is required".into()))?;
        let mut parameters = BTreeMap::new();
        let named = [
            ("p", args.p),
            ("p1", args.p1),
            ("a2", args.a2),
            ("a", args.a),
            ("k", args.k.map(|k| k as f64)),
            ("terms", args.terms.map(|t| t as f64)),
        ];
        for (name, value) in named {
            if let Some(v) = value {
                parameters.insert(name.to_string(), v);
            }
        }
        let matrix = match (&args.matrix, kind) {
            (Some(m), StateKind::Raw) => Some(parse_matrix_arg(m)?),
            (None, StateKind::Raw) => {
                return Err(CliError::InvalidSpec("kind raw requires --matrix".into()))
            }
            (Some(_), _) => {
                return Err(CliError::InvalidSpec("--matrix is only valid with --kind raw".into()))
            }
            (None, _) => None,
        };
        let spec = StateSpec {
            kind,
            parameters,
            seed: args.seed,
            matrix,
            allow_unconstrained: args.allow_unconstrained,
        };
        spec.check()?;
        Ok(spec)
    }

    fn check(&self) -> Result<(), CliError> {
        for name in self.kind.required_parameters() {
            match self.parameters.get(*name) {
                Some(v) if v.is_finite() => {}
                Some(v) => {
                    return Err(CliError::InvalidSpec(format!("parameter {name} = {v} is not finite")))
                }
                None => {
                    return Err(CliError::InvalidSpec(format!(
                        "kind {} requires --{name}",
                        kind_name(self.kind)
                    )))
                }
            }
        }
        if matches!(self.kind, StateKind::Random | StateKind::RandomSeparable) && self.seed.is_none() {
            return Err(CliError::InvalidSpec(format!(
                "kind {} requires --seed",
                kind_name(self.kind)
            )));
        }
        Ok(())
    }

    fn param(&self, name: &str) -> f64 {
        self.parameters[name]
    }

    pub fn build(&self) -> Result<BuiltState, CliError> {
        let mut warnings = Vec::new();
        let rho = match self.kind {
            StateKind::Raw => {
                let pairs = self.matrix.as_ref().expect("checked in from_args");
                states::validate(matrix_from_pairs(pairs)?)?
            }
            StateKind::Werner => states::werner(self.param("p"))?,
            StateKind::PaperPure => states::tilted_singlet(self.param("a"))?,
            StateKind::PaperFamily => {
                let a2 = self.param("a2");
                if !(a2 > 0.0 && a2 < 1.0) {
                    return Err(Error::ConstraintViolated {
                        constraint: format!("0 < a^2 < 1 (a2 = {a2})"),
                    }
                    .into());
                }
                let a = a2.sqrt();
                if self.allow_unconstrained {
                    let (rho, violation) = states::tilted_mixture_relaxed(self.param("p1"), a)?;
                    if let Some(v) = violation {
                        warnings.push(v.to_string());
                    }
                    rho
                } else {
                    states::tilted_mixture(self.param("p1"), a)?
                }
            }
            StateKind::Bell => {
                let k = self.param("k");
                if k.fract() != 0.0 || k < 0.0 {
                    return Err(CliError::InvalidSpec(format!("k = {k} is not an index")));
                }
                states::bell_state(k as usize)?
            }
            StateKind::Random => states::random_density(self.seed.expect("checked")),
            StateKind::RandomSeparable => {
                let terms = self.parameters.get("terms").copied().unwrap_or(4.0);
                states::random_separable(self.seed.expect("checked"), terms as usize)?
            }
        };
        Ok(BuiltState { rho, warnings })
    }
}

fn kind_name(kind: StateKind) -> String {
    kind.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default()
}

/// Parses `--matrix`: an existing file holds JSON or `re,im` pairs, anything
/// else is taken as 16 whitespace-separated `re,im` pairs.
pub fn parse_matrix_arg(arg: &str) -> Result<Vec<[f64; 2]>, CliError> {
    let path = Path::new(arg);
    if path.is_file() {
        let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        if text.trim_start().starts_with('[') {
            parse_matrix_json(&text)
        } else {
            parse_matrix_pairs(&text)
        }
    } else {
        parse_matrix_pairs(arg)
    }
}

pub fn parse_matrix_pairs(text: &str) -> Result<Vec<[f64; 2]>, CliError> {
    let pairs = text
        .split_whitespace()
        .map(|tok| {
            let (re, im) = tok
                .split_once(',')
                .ok_or_else(|| CliError::InvalidSpec(format!("matrix entry {tok:?} is not a re,im pair")))?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| CliError::InvalidSpec(format!("matrix entry {tok:?} is not numeric")))
            };
            Ok([parse(re)?, parse(im)?])
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    check_entry_count(pairs)
}

/// Accepts either 16 `[re, im]` pairs or 4 rows of 4 `[re, im]` pairs.
pub fn parse_matrix_json(text: &str) -> Result<Vec<[f64; 2]>, CliError> {
    let invalid = |e: serde_json::Error| CliError::InvalidSpec(format!("matrix JSON: {e}"));
    let pairs = match serde_json::from_str::<Vec<[f64; 2]>>(text) {
        Ok(flat) => flat,
        Err(_) => serde_json::from_str::<Vec<Vec<[f64; 2]>>>(text)
            .map_err(invalid)?
            .into_iter()
            .flatten()
            .collect(),
    };
    check_entry_count(pairs)
}

fn check_entry_count(pairs: Vec<[f64; 2]>) -> Result<Vec<[f64; 2]>, CliError> {
    if pairs.len() != 16 {
        return Err(CliError::InvalidSpec(format!(
            "raw matrix needs 16 entries, got {}",
            pairs.len()
        )));
    }
    if pairs.iter().flatten().any(|x| !x.is_finite()) {
        return Err(CliError::InvalidSpec("raw matrix has non-finite entries".into()));
    }
    Ok(pairs)
}

fn matrix_from_pairs(pairs: &[[f64; 2]]) -> Result<ComplexMat4, CliError> {
    let pairs = check_entry_count(pairs.to_vec())?;
    Ok(CMat(std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            let [re, im] = pairs[4 * i + j];
            Complex64::new(re, im)
        })
    })))
}

/// Rounds to 12 significant digits.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

fn round_numbers(v: &mut Value) {
    match v {
        Value::Number(n) if !(n.is_i64() || n.is_u64()) => {
            if let Some(x) = n.as_f64() {
                *v = json!(round_sig(x));
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_numbers),
        Value::Object(map) => map.values_mut().for_each(round_numbers),
        _ => {}
    }
}

fn pairs_2x2(m: &ComplexMat2) -> Value {
    json!(m.0.map(|row| row.map(|z| [z.re, z.im])))
}

fn decomposition_json(d: &HsDecomposition) -> Value {
    json!({ "r": d.r, "s": d.s, "t": d.t })
}

fn strategy_json(opt: &OptimalStrategy, achieved: f64) -> Value {
    json!({
        "base_unitary": pairs_2x2(opt.strategy.base_unitary()),
        "corrections": opt.strategy.corrections().iter().map(pairs_2x2).collect::<Vec<_>>(),
        "rotation": opt.rotation,
        "d": opt.diagonalization.d,
        "achieved_fidelity": achieved,
    })
}

fn envelope(command: &str, spec: &StateSpec, warnings: &[String]) -> Value {
    json!({
        "tool": TOOL,
        "version": VERSION,
        "command": command,
        "spec": spec,
        "warnings": warnings,
    })
}

/// Output of a command: exit code and the JSON document for stdout.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub code: i32,
    pub json: Value,
}

impl Outcome {
    fn ok(mut json: Value) -> Self {
        round_numbers(&mut json);
        Outcome { code: EXIT_OK, json }
    }

    fn failed(e: CliError) -> Self {
        Outcome { code: e.exit_code(), json: e.to_json() }
    }

    /// Pretty-printed JSON followed by a newline.
    pub fn render(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.json).expect("serializable");
        s.push('\n');
        s
    }
}

pub fn cmd_analyze(args: &StateArgs) -> Result<Value, CliError> {
    let spec = StateSpec::from_args(args)?;
    let built = spec.build()?;
    let d = hs_decompose(&built.rho);
    let report: ChannelReport = analyze_with(&built.rho, &d);
    let mut out = envelope("analyze", &spec, &built.warnings);
    out["report"] = json!(report);
    out["decomposition"] = decomposition_json(&d);
    Ok(out)
}

pub fn cmd_strategy(args: &StateArgs) -> Result<Value, CliError> {
    let spec = StateSpec::from_args(args)?;
    let built = spec.build()?;
    let d = hs_decompose(&built.rho);
    let opt = optimal_strategy(&d);
    let achieved = closed_form_fidelity(&d, &opt.strategy);
    let mut out = envelope("strategy", &spec, &built.warnings);
    out["strategy"] = strategy_json(&opt, achieved);
    out["f_max"] = json!(f_max(&d));
    Ok(out)
}

/// Runs `simulate`; the boolean is the self-check verdict.
pub fn cmd_simulate(args: &SimulateArgs) -> Result<(Value, bool), CliError> {
    if args.samples == 0 {
        return Err(CliError::InvalidSpec("--samples must be at least 1".into()));
    }
    let mc_seed = args.state.seed.unwrap_or(0);
    let mut state_args = args.state.clone();
    if args.state_seed.is_some() {
        state_args.seed = args.state_seed;
    }
    let spec = StateSpec::from_args(&state_args)?;
    let built = spec.build()?;
    let d = hs_decompose(&built.rho);
    let opt = optimal_strategy(&d);
    let analytic = f_max(&d);
    let closed = closed_form_fidelity(&d, &opt.strategy);
    let est = with_thread_cap(|| average_fidelity_mc(&built.rho, &opt.strategy, args.samples, mc_seed))?;
    let mc_agrees = est.agrees_with(closed, 3.0);
    let closed_agrees = (closed - analytic).abs() <= 1e-8;
    let pass = mc_agrees && closed_agrees;

    let mut out = envelope("simulate", &spec, &built.warnings);
    out["samples"] = json!(args.samples);
    out["seed"] = json!(mc_seed);
    out["strategy"] = strategy_json(&opt, closed);
    out["fidelity"] = json!({
        "f_max": analytic,
        "closed_form": closed,
        "monte_carlo": est,
        "mc_within_3_standard_errors": mc_agrees,
        "closed_form_matches_f_max": closed_agrees,
    });
    out["self_check"] = json!(if pass { "pass" } else { "fail" });
    Ok((out, pass))
}

/// One-dimensional grid `start + i·(stop − start)/(steps − 1)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Axis {
    pub param: String,
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

impl Axis {
    fn check(&self, kind: StateKind) -> Result<(), CliError> {
        if !kind.required_parameters().contains(&self.param.as_str()) {
            return Err(CliError::InvalidSpec(format!(
                "parameter {} cannot be swept for kind {} (sweepable: {:?})",
                self.param,
                kind_name(kind),
                kind.required_parameters()
            )));
        }
        if self.steps < 2 {
            return Err(CliError::InvalidSpec(format!("steps = {} must be at least 2", self.steps)));
        }
        if !(self.start.is_finite() && self.stop.is_finite() && self.start < self.stop) {
            return Err(CliError::InvalidSpec(format!(
                "sweep range requires start < stop (got {} .. {})",
                self.start, self.stop
            )));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        let h = (self.stop - self.start) / (self.steps - 1) as f64;
        (0..self.steps)
            .map(|i| if i + 1 == self.steps { self.stop } else { self.start + h * i as f64 })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSpec {
    pub base: StateSpec,
    pub axes: Vec<Axis>,
}

impl SweepSpec {
    pub fn from_args(args: &SweepArgs) -> Result<Self, CliError> {
        let mut axes = vec![Axis {
            param: args.param.clone(),
            start: args.start,
            stop: args.stop,
            steps: args.steps,
        }];
        if let Some(p2) = &args.param2 {
            axes.push(Axis {
                param: p2.clone(),
                start: args.start2.unwrap_or(f64::NAN),
                stop: args.stop2.unwrap_or(f64::NAN),
                steps: args.steps2.unwrap_or(0),
            });
            if args.param == *p2 {
                return Err(CliError::InvalidSpec("the two swept parameters must differ".into()));
            }
        }
        let kind = args
            .state
            .kind
            .ok_or_else(|| CliError::InvalidSpec("--kind is required".into()))?;
        if !matches!(kind, StateKind::Werner | StateKind::PaperFamily | StateKind::PaperPure) {
            return Err(CliError::InvalidSpec(format!(
                "kind {} has no continuous parameters to sweep",
                kind_name(kind)
            )));
        }
        for axis in &axes {
            axis.check(kind)?;
        }
        // Swept parameters get placeholders so the fixed ones are validated now.
        let mut state = args.state.clone();
        for axis in &axes {
            let v = Some(axis.start);
            match axis.param.as_str() {
                "p" => state.p = v,
                "p1" => state.p1 = v,
                "a2" => state.a2 = v,
                "a" => state.a = v,
                _ => unreachable!("checked against required_parameters"),
            }
        }
        let base = StateSpec::from_args(&state)?;
        Ok(SweepSpec { base, axes })
    }

    /// Grid points in row order (first axis outer).
    pub fn points(&self) -> Vec<Vec<f64>> {
        let first = self.axes[0].values();
        match self.axes.get(1) {
            None => first.into_iter().map(|x| vec![x]).collect(),
            Some(second) => {
                let inner = second.values();
                first
                    .iter()
                    .flat_map(|&x| inner.iter().map(move |&y| vec![x, y]))
                    .collect()
            }
        }
    }

    pub fn header(&self) -> Vec<String> {
        self.axes
            .iter()
            .map(|a| a.param.clone())
            .chain(SWEEP_COLUMNS.iter().map(|c| c.to_string()))
            .collect()
    }
}

/// One evaluated grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub point: Vec<f64>,
    pub report: Option<ChannelReport>,
    /// `ok`, `warning:<kind>` or the error kind of an invalid point.
    pub status: String,
}

impl SweepRow {
    fn record(&self) -> Vec<String> {
        let num = |x: f64| round_sig(x).to_string();
        let mut rec: Vec<String> = self.point.iter().map(|&x| num(x)).collect();
        match &self.report {
            Some(r) => rec.extend([
                num(r.n_value),
                num(r.m_value),
                num(r.f_max),
                num(r.b_max),
                num(r.ppt_min_eigenvalue),
                r.separable.to_string(),
                r.bell_violating.to_string(),
                r.useful.to_string(),
                r.marginal.to_string(),
            ]),
            None => rec.extend(std::iter::repeat_n(String::new(), SWEEP_COLUMNS.len() - 1)),
        }
        rec.push(self.status.clone());
        rec
    }
}

pub fn evaluate_sweep(spec: &SweepSpec) -> Vec<SweepRow> {
    let points = spec.points();
    with_thread_cap(|| {
        points
            .into_par_iter()
            .map(|point| {
                let mut state = spec.base.clone();
                for (axis, &x) in spec.axes.iter().zip(&point) {
                    state.parameters.insert(axis.param.clone(), x);
                }
                match state.build() {
                    Ok(built) => {
                        let status = if built.warnings.is_empty() {
                            "ok".to_string()
                        } else {
                            "warning:ConstraintViolated".to_string()
                        };
                        let report = analyze_with(&built.rho, &hs_decompose(&built.rho));
                        SweepRow { point, report: Some(report), status }
                    }
                    Err(e) => {
                        let status = match e {
                            CliError::State(err) => err.kind().to_string(),
                            CliError::InvalidSpec(_) => "InvalidSpec".to_string(),
                            CliError::Io(_) => "Io".to_string(),
                        };
                        SweepRow { point, report: None, status }
                    }
                }
            })
            .collect()
    })
}

/// Writes the CSV through a temporary file in the target directory and
/// renames it into place, so a failed run never leaves a partial file.
pub fn write_sweep_csv(spec: &SweepSpec, rows: &[SweepRow], out: &Path) -> Result<(), CliError> {
    let dir = out.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let file_name = out
        .file_name()
        .ok_or_else(|| CliError::InvalidSpec(format!("{} is not a file path", out.display())))?;
    let tmp = dir.join(format!(".{}.tmp-{}", file_name.to_string_lossy(), std::process::id()));
    let io = |e: &dyn std::fmt::Display| CliError::Io(format!("{}: {e}", out.display()));

    let result = (|| {
        let mut w = csv::Writer::from_path(&tmp).map_err(|e| io(&e))?;
        w.write_record(spec.header()).map_err(|e| io(&e))?;
        for row in rows {
            w.write_record(row.record()).map_err(|e| io(&e))?;
        }
        w.flush().map_err(|e| io(&e))?;
        drop(w);
        fs::rename(&tmp, out).map_err(|e| io(&e))
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<Value, CliError> {
    let spec = SweepSpec::from_args(args)?;
    let rows = evaluate_sweep(&spec);
    write_sweep_csv(&spec, &rows, &args.out)?;

    let count = |f: &dyn Fn(&ChannelReport) -> bool| rows.iter().filter_map(|r| r.report.as_ref()).filter(|r| f(r)).count();
    let mut out = envelope("sweep", &spec.base, &[]);
    out["axes"] = json!(spec.axes);
    out["out"] = json!(args.out.display().to_string());
    out["columns"] = json!(spec.header());
    out["summary"] = json!({
        "rows": rows.len(),
        "valid": rows.iter().filter(|r| r.report.is_some()).count(),
        "useful": count(&|r| r.useful),
        "bell_violating": count(&|r| r.bell_violating),
        "separable": count(&|r| r.separable),
        "inseparable_not_useful": count(&|r| !r.separable && !r.useful),
    });
    Ok(out)
}

fn thread_cap() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .unwrap_or(0)
}

fn with_thread_cap<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    match thread_cap() {
        0 => f(),
        n => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        },
    }
}

/// Executes a parsed command line.
pub fn execute(cli: &Cli) -> Outcome {
    let result = match &cli.command {
        Command::Analyze(a) => cmd_analyze(a).map(|v| (v, true)),
        Command::Strategy(a) => cmd_strategy(a).map(|v| (v, true)),
        Command::Sweep(a) => cmd_sweep(a).map(|v| (v, true)),
        Command::Simulate(a) => cmd_simulate(a),
    };
    match result {
        Ok((json, pass)) => {
            let mut outcome = Outcome::ok(json);
            if !pass {
                outcome.code = EXIT_SELF_CHECK;
            }
            outcome
        }
        Err(e) => Outcome::failed(e),
    }
}

/// Parses `argv` (including the program name) and executes it. Argument
/// errors from clap are reported as `Err` with clap's rendered message.
pub fn run<I, T>(argv: I) -> Result<Outcome, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv)?;
    Ok(execute(&cli))
}
