//! Command-line front end: argument parsing, the four workflows and JSON rendering.
//!
//! Complex numbers are written as `[re, im]`, matrices as row-major nested
//! arrays, operators as `{"dim": d, "entries": …}` and weights as integer
//! arrays. Every report is a pure function of the [`RunConfig`], so repeated
//! runs produce byte-identical output.

use std::f64::consts::PI;
use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde_json::{json, Value};

use crate::classical::{self, Basis};
use crate::error::{Category, Error, Result};
use crate::gtrep::{self, HighestWeight, Rep};
use crate::linalg::{self, CMat};
use crate::quantum;
use crate::specfun;
use crate::verify::{self, BigSystem, NumericConfig, NumericStokesReport};

type C = Complex64;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_MATH: i32 = 3;
pub const EXIT_VERIFY: i32 = 4;

/// Integration tolerance of the numeric oracle.
pub const ODE_TOL: f64 = 1e-11;
pub const DEFAULT_TOL: f64 = 1e-5;
pub const DEFAULT_MAX_TERMS: usize = 40;
pub const TOL_RANGE: (f64, f64) = (1e-12, 1e-3);
pub const MAX_TERMS_RANGE: (usize, usize) = (4, 200);
/// Entry bound of `--random` matrices.
pub const RANDOM_ENTRY_BOUND: f64 = 0.7;
pub const THREADS_ENV: &str = "STOKES_LAB_THREADS";

const BRANCH_ARGUMENT: &str = "points live on the universal cover of C*: z = (r, theta) with unbounded theta; z^w = exp(w (ln r + i theta))";
const BRANCH_SECTORS: &str = "F_0 is anchored on theta = 0, F_{-1} on theta = -pi; S+ is matched on theta = -pi/2, S- on pi/2 against -3pi/2";
const BRANCH_H_PHASE: &str = "(h e^{i phi}) with h < 0 is taken as |h| e^{i(phi + pi)}";

#[derive(Debug, Parser)]
#[command(name = "stokes-lab", version, about = "Stokes matrices of the classical and quantum confluent hypergeometric systems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: CliCommand,
    #[command(flatten)]
    pub global: GlobalArgs,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Include tolerances, radii, truncation orders and branch conventions.
    #[arg(long, global = true)]
    pub manifest: bool,
    /// Pass/fail tolerance of the checks, in [1e-12, 1e-3].
    #[arg(long, global = true, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    /// Cap on the formal-series truncation order used for anchoring.
    #[arg(long, global = true, default_value_t = DEFAULT_MAX_TERMS)]
    pub max_terms: usize,
    /// Seed for `--random` inputs.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Subcommand)]
pub enum CliCommand {
    /// Closed-form S₊ of the classical n×n system.
    Classical {
        #[command(flatten)]
        input: MatrixInput,
        /// Cross-check against the numeric Stokes matrix.
        #[arg(long)]
        verify: bool,
        /// Anchor radius for the cross-check ("auto" or a number).
        #[arg(long, default_value = "auto")]
        radius: String,
    },
    /// Closed-form S_{h+} on L(λ), rendered as an N×N matrix.
    Quantum {
        /// Dominant integral highest weight, e.g. 2,1,0.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        weight: Vec<i64>,
        /// Nonzero real deformation parameter.
        #[arg(long, allow_hyphen_values = true)]
        h: f64,
        /// Cross-check against the numeric Stokes matrix.
        #[arg(long)]
        verify: bool,
        /// Anchor radius for the cross-check ("auto" or a number).
        #[arg(long, default_value = "auto")]
        radius: String,
    },
    /// Numeric Stokes matrices and their deviation from the closed form.
    Verify {
        /// Highest weight of a quantum system (needs --h); otherwise give a matrix.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, conflicts_with_all = ["matrix", "random"])]
        weight: Option<Vec<i64>>,
        /// Deformation parameter for --weight.
        #[arg(long, allow_hyphen_values = true)]
        h: Option<f64>,
        #[command(flatten)]
        input: MatrixInput,
        /// Anchor radius ("auto" or a number).
        #[arg(long, default_value = "auto")]
        radius: String,
    },
    /// Run the representation identity suite on L(λ).
    RepCheck {
        /// Dominant integral highest weight, e.g. 2,1,0.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        weight: Vec<i64>,
    },
}

#[derive(Debug, Args)]
pub struct MatrixInput {
    /// JSON file holding the matrix A (nested rows of numbers or [re, im]).
    #[arg(long, conflicts_with = "random")]
    pub matrix: Option<PathBuf>,
    /// Use a seeded random N×N matrix instead.
    #[arg(long)]
    pub random: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Classical,
    Quantum,
    Verify,
    RepCheck,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Classical => "classical",
            Command::Quantum => "quantum",
            Command::Verify => "verify",
            Command::RepCheck => "rep-check",
        }
    }
}

/// Fully resolved run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub input_path: Option<PathBuf>,
    pub output_path: Option<PathBuf>,
    pub h: Option<f64>,
    pub weight: Option<Vec<i64>>,
    pub tol: f64,
    /// `None` selects the automatic anchor radius.
    pub radius: Option<f64>,
    pub seed: u64,
    pub max_terms: usize,
    pub random: Option<usize>,
    pub verify: bool,
    pub manifest: bool,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        RunConfig {
            command,
            input_path: None,
            output_path: None,
            h: None,
            weight: None,
            tol: DEFAULT_TOL,
            radius: None,
            seed: 0,
            max_terms: DEFAULT_MAX_TERMS,
            random: None,
            verify: false,
            manifest: false,
        }
    }

    pub fn from_cli(cli: Cli) -> Result<Self> {
        let g = cli.global;
        let mut cfg = RunConfig {
            output_path: g.output,
            tol: g.tol,
            seed: g.seed,
            max_terms: g.max_terms,
            manifest: g.manifest,
            ..RunConfig::new(Command::Classical)
        };
        match cli.command {
            CliCommand::Classical { input, verify, radius } => {
                cfg.input_path = input.matrix;
                cfg.random = input.random;
                cfg.verify = verify;
                cfg.radius = parse_radius(&radius)?;
            }
            CliCommand::Quantum { weight, h, verify, radius } => {
                cfg.command = Command::Quantum;
                cfg.weight = Some(weight);
                cfg.h = Some(h);
                cfg.verify = verify;
                cfg.radius = parse_radius(&radius)?;
            }
            CliCommand::Verify { weight, h, input, radius } => {
                cfg.command = Command::Verify;
                cfg.weight = weight;
                cfg.h = h;
                cfg.input_path = input.matrix;
                cfg.random = input.random;
                cfg.verify = true;
                cfg.radius = parse_radius(&radius)?;
            }
            CliCommand::RepCheck { weight } => {
                cfg.command = Command::RepCheck;
                cfg.weight = Some(weight);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Command-specific required fields and value ranges.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.tol >= TOL_RANGE.0 && self.tol <= TOL_RANGE.1) {
            return bad(format!("tol {} outside [{:e}, {:e}]", self.tol, TOL_RANGE.0, TOL_RANGE.1));
        }
        if !(MAX_TERMS_RANGE.0..=MAX_TERMS_RANGE.1).contains(&self.max_terms) {
            return bad(format!("max-terms {} outside [{}, {}]", self.max_terms, MAX_TERMS_RANGE.0, MAX_TERMS_RANGE.1));
        }
        if let Some(r) = self.radius {
            if !(r.is_finite() && r > 0.0) {
                return bad(format!("radius {r} must be a positive number"));
            }
        }
        if let Some(h) = self.h {
            if !h.is_finite() {
                return bad(format!("h = {h} is not finite"));
            }
        }
        if let Some(n) = self.random {
            if !(2..=8).contains(&n) {
                return bad(format!("--random {n}: size must be in 2..=8"));
            }
        }
        let has_matrix = self.input_path.is_some() || self.random.is_some();
        if self.input_path.is_some() && self.random.is_some() {
            return bad("give either --matrix or --random, not both".into());
        }
        match self.command {
            Command::Classical if !has_matrix => bad("classical needs --matrix or --random".into()),
            Command::Classical if self.weight.is_some() || self.h.is_some() => bad("classical takes no weight or h".into()),
            Command::Quantum | Command::RepCheck if self.weight.is_none() => bad(format!("{} needs --weight", self.command.name())),
            Command::Quantum if self.h.is_none() => bad("quantum needs --h".into()),
            Command::Verify => match (self.weight.is_some(), has_matrix) {
                (true, true) => bad("verify takes either --weight or a matrix, not both".into()),
                (false, false) => bad("verify needs --weight with --h, or --matrix/--random".into()),
                (true, false) if self.h.is_none() => bad("verify --weight needs --h".into()),
                (false, true) if self.h.is_some() => bad("--h only applies to --weight".into()),
                _ => Ok(()),
            },
            _ => Ok(()),
        }
    }
}

fn parse_radius(s: &str) -> Result<Option<f64>> {
    if s == "auto" {
        return Ok(None);
    }
    s.parse::<f64>().map(Some).map_err(|_| Error::Config(format!("radius must be \"auto\" or a number, got {s:?}")))
}

/// Read the `STOKES_LAB_THREADS` cap; `None` when unset.
pub fn thread_cap() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::Config(format!("{THREADS_ENV}={v:?} is not a positive integer"))),
        },
    }
}

/// Exit code and JSON report of one run.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub code: i32,
    pub report: Value,
}

pub fn exit_code(e: &Error) -> i32 {
    match e.category() {
        Category::Config => EXIT_CONFIG,
        Category::MathDomain => EXIT_MATH,
        Category::Verification => EXIT_VERIFY,
    }
}

pub fn error_report(command: Option<Command>, e: &Error) -> Value {
    let category = match e.category() {
        Category::Config => "config",
        Category::MathDomain => "math_domain",
        Category::Verification => "verification",
    };
    json!({
        "command": command.map(Command::name),
        "error": { "kind": e.kind(), "category": category, "message": e.to_string() },
    })
}

pub fn run(cfg: &RunConfig) -> Outcome {
    let result = cfg.validate().and_then(|()| match cfg.command {
        Command::Classical => run_classical(cfg),
        Command::Quantum => run_quantum(cfg),
        Command::Verify => run_verify(cfg),
        Command::RepCheck => run_rep_check(cfg),
    });
    match result {
        Ok((passed, report)) => Outcome { code: if passed { EXIT_OK } else { EXIT_VERIFY }, report },
        Err(e) => Outcome { code: exit_code(&e), report: error_report(Some(cfg.command), &e) },
    }
}

pub fn render(report: &Value) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("JSON values always serialize");
    s.push('\n');
    s
}

// ---------------------------------------------------------------- rendering

pub fn complex_json(z: C) -> Value {
    // + 0.0 folds −0.0 into 0.0 so sign-of-zero noise never reaches the output
    json!([z.re + 0.0, z.im + 0.0])
}

pub fn matrix_json(m: &CMat) -> Value {
    Value::Array((0..m.nrows()).map(|i| Value::Array((0..m.ncols()).map(|j| complex_json(m[(i, j)])).collect())).collect())
}

pub fn operator_json(m: &CMat) -> Value {
    json!({ "dim": m.nrows(), "entries": matrix_json(m) })
}

fn basis_name(b: Basis) -> &'static str {
    match b {
        Basis::Original => "original",
        Basis::Diagonalized => "diagonalized",
    }
}

/// Parse A from JSON: either a bare nested array or `{"matrix": …}`; entries
/// are real numbers or `[re, im]` pairs.
pub fn parse_matrix(v: &Value) -> Result<CMat> {
    let rows = v.get("matrix").unwrap_or(v).as_array().ok_or_else(|| Error::Config("matrix must be an array of rows".into()))?;
    let entry = |x: &Value| -> Result<C> {
        match x {
            Value::Number(n) => n.as_f64().map(|r| C::new(r, 0.0)),
            Value::Array(p) if p.len() == 2 => match (p[0].as_f64(), p[1].as_f64()) {
                (Some(re), Some(im)) => Some(C::new(re, im)),
                _ => None,
            },
            _ => None,
        }
        .ok_or_else(|| Error::Config(format!("matrix entry {x} is neither a number nor [re, im]")))
    };
    let parsed = rows
        .iter()
        .map(|r| r.as_array().ok_or_else(|| Error::Config("matrix rows must be arrays".into()))?.iter().map(entry).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    linalg::from_rows(&parsed).map_err(|_| Error::Config("matrix must be a non-empty rectangular array".into()))
}

fn load_matrix(cfg: &RunConfig) -> Result<CMat> {
    if let Some(n) = cfg.random {
        return Ok(classical::seeded_matrix(cfg.seed, n, RANDOM_ENTRY_BOUND));
    }
    let path = cfg.input_path.as_ref().ok_or_else(|| Error::Config("no matrix input".into()))?;
    let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let v: Value = serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: invalid JSON: {e}", path.display())))?;
    parse_matrix(&v)
}

fn numeric_config(cfg: &RunConfig, big: &BigSystem) -> NumericConfig {
    let mut nc = NumericConfig::auto(big);
    if let Some(r) = cfg.radius {
        nc.radius = r;
    }
    nc.ode_tol = ODE_TOL;
    nc.max_order = cfg.max_terms;
    nc
}

fn manifest(cfg: &RunConfig, big: Option<(&BigSystem, &NumericConfig, &NumericStokesReport)>) -> Value {
    let numeric = big.map(|(b, nc, rep)| {
        json!({
            "anchor_radius": nc.radius,
            "radius_factor": nc.radius_factor,
            "match_radius": nc.match_radius,
            "match_theta_plus": nc.match_theta,
            "match_theta_minus": [PI / 2.0, -1.5 * PI],
            "ode_tol": nc.ode_tol,
            "radius_robustness_tol": 10.0 * nc.ode_tol,
            "max_truncation_order": nc.max_order,
            "truncation_order": rep.truncation_order,
            "anchor_err": rep.anchor_err,
            "system_convention": b.sign_conventions,
        })
    });
    json!({
        "version": env!("CARGO_PKG_VERSION"),
        "command": cfg.command.name(),
        "seed": cfg.seed,
        "tolerances": {
            "check_tol": cfg.tol,
            "nonresonance": classical::NONRESONANCE_TOL,
            "gamma_pole_guard": classical::GAMMA_POLE_GUARD,
            "eigen_gap_floor": classical::EIGEN_GAP_FLOOR,
            "cancellation_budget": classical::CANCELLATION_BUDGET,
            "pfq_pole_tol": specfun::POLE_TOL,
            "gt_degeneracy": gtrep::DEGENERACY_TOL,
        },
        "limits": {
            "max_terms": cfg.max_terms,
            "pfq_max_terms": specfun::DEFAULT_MAX_TERMS,
            "max_vectorized_dim": verify::MAX_BIG_DIM,
            "max_rank": gtrep::MAX_RANK,
            "max_rep_dim": gtrep::MAX_DIM,
        },
        "numeric": numeric,
        "branch_conventions": {
            "argument": BRANCH_ARGUMENT,
            "sectors": BRANCH_SECTORS,
            "h_phase": BRANCH_H_PHASE,
        },
    })
}

fn numeric_block(rep: &NumericStokesReport, closed: &CMat, tol: f64) -> (bool, Value) {
    let deviation = linalg::norm_inf(&(closed - &rep.s_plus));
    let passed = deviation <= tol;
    let v = json!({
        "report": rep,
        "s_plus": matrix_json(&rep.s_plus),
        "s_minus": matrix_json(&rep.s_minus),
        "deviation": deviation,
        "deviation_norm": "inf (max row sum)",
        "tol": tol,
        "passed": passed,
    });
    (passed, v)
}

fn attach_manifest(cfg: &RunConfig, out: &mut Value, numeric: Option<(&BigSystem, &NumericConfig, &NumericStokesReport)>) {
    if cfg.manifest {
        out["manifest"] = manifest(cfg, numeric);
    }
}

// ---------------------------------------------------------------- workflows

fn run_classical(cfg: &RunConfig) -> Result<(bool, Value)> {
    let a = load_matrix(cfg)?;
    let sys = classical::build_system(&a)?;
    let s = classical::stokes_plus_original(&sys)?;
    let two_path = linalg::max_abs(&(&s.closed.s_plus - &s.conjugated));
    let mut out = json!({
        "command": "classical",
        "input": { "matrix": matrix_json(&a), "seed": cfg.random.map(|_| cfg.seed) },
        "s_plus": {
            "basis": basis_name(s.closed.basis),
            "convention": "F_{-1} e^{-delta/2} S+ = F_0",
            "matrix": matrix_json(&s.closed.s_plus),
        },
        "b_plus": s.closed.b_plus.iter().map(|z| complex_json(*z)).collect::<Vec<_>>(),
        "two_path_deviation": two_path,
    });
    let mut passed = two_path <= cfg.tol;
    if cfg.verify {
        let big = verify::vectorize_classical(&sys);
        let nc = numeric_config(cfg, &big);
        let rep = verify::numeric_stokes(&big, &nc)?;
        let (ok, block) = numeric_block(&rep, &s.closed.s_plus, cfg.tol);
        passed &= ok;
        out["numeric"] = block;
        attach_manifest(cfg, &mut out, Some((&big, &nc, &rep)));
    } else {
        attach_manifest(cfg, &mut out, None);
    }
    out["passed"] = json!(passed);
    Ok((passed, out))
}

fn quantum_system(cfg: &RunConfig) -> Result<quantum::QuantumSystem> {
    let w = HighestWeight::new(cfg.weight.clone().unwrap_or_default())?;
    quantum::build_quantum(&w, cfg.h.unwrap_or(f64::NAN))
}

fn run_quantum(cfg: &RunConfig) -> Result<(bool, Value)> {
    let sys = quantum_system(cfg)?;
    let s = quantum::q_stokes_original(&sys)?;
    let mut out = json!({
        "command": "quantum",
        "weight": sys.weight.lambda,
        "h": sys.h,
        "basis_ordering": quantum::basis_ordering(&sys),
        "s_plus": {
            "basis": basis_name(s.basis),
            "convention": "F_{h,-1} e^{h delta(T)/2} S_h+ = F_{h,0}",
            "dim": s.s_plus.nrows(),
            "entries": matrix_json(&s.s_plus),
        },
        "b_plus": s.b_plus.iter().map(operator_json).collect::<Vec<_>>(),
    });
    let mut passed = true;
    if cfg.verify {
        let big = verify::vectorize_quantum(&sys)?;
        let nc = numeric_config(cfg, &big);
        let rep = verify::numeric_stokes(&big, &nc)?;
        let (ok, block) = numeric_block(&rep, &s.s_plus, cfg.tol);
        passed = ok;
        out["numeric"] = block;
        attach_manifest(cfg, &mut out, Some((&big, &nc, &rep)));
    } else {
        attach_manifest(cfg, &mut out, None);
    }
    out["passed"] = json!(passed);
    Ok((passed, out))
}

fn run_verify(cfg: &RunConfig) -> Result<(bool, Value)> {
    let (big, closed, mut out) = if cfg.weight.is_some() {
        let sys = quantum_system(cfg)?;
        let s = quantum::q_stokes_original(&sys)?;
        let out = json!({
            "command": "verify",
            "system": "quantum",
            "weight": sys.weight.lambda,
            "h": sys.h,
            "basis_ordering": quantum::basis_ordering(&sys),
            "s_plus_closed": operator_json(&s.s_plus),
        });
        (verify::vectorize_quantum(&sys)?, s.s_plus, out)
    } else {
        let a = load_matrix(cfg)?;
        let sys = classical::build_system(&a)?;
        let s = classical::stokes_plus_original(&sys)?;
        let out = json!({
            "command": "verify",
            "system": "classical",
            "input": { "matrix": matrix_json(&a), "seed": cfg.random.map(|_| cfg.seed) },
            "s_plus_closed": matrix_json(&s.closed.s_plus),
        });
        (verify::vectorize_classical(&sys), s.closed.s_plus, out)
    };
    let nc = numeric_config(cfg, &big);
    let rep = verify::numeric_stokes(&big, &nc)?;
    let (passed, block) = numeric_block(&rep, &closed, cfg.tol);
    out["numeric"] = block;
    out["deviation"] = out["numeric"]["deviation"].clone();
    attach_manifest(cfg, &mut out, Some((&big, &nc, &rep)));
    out["passed"] = json!(passed);
    Ok((passed, out))
}

fn run_rep_check(cfg: &RunConfig) -> Result<(bool, Value)> {
    let w = HighestWeight::new(cfg.weight.clone().unwrap_or_default())?;
    let rep = Rep::new(&w)?;
    let checks = gtrep::identity_suite(&rep)?;
    let passed = checks.iter().all(|c| c.passed);
    let mut out = json!({
        "command": "rep-check",
        "weight": w.lambda,
        "dim": rep.dim(),
        "checks": checks,
        "passed": passed,
    });
    attach_manifest(cfg, &mut out, None);
    Ok((passed, out))
}
