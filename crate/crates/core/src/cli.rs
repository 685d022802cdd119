//! Command-line front end: frame files, subcommands and JSON reports.
//!
//! Reals are written as hex-float strings (bit-exact) unless `--human` asks
//! for decimals. Subsets in reports are 1-based.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_rational::BigRational;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::error::FrameError;
use crate::frame::{MatrixFrame, DEFAULT_TOL};
use crate::generate;
use crate::linalg;
use crate::objective::cauchy_binet::{binomial, MinorExpansion, DEFAULT_MINOR_TOL, DEFAULT_SIZE_GUARD};
use crate::objective::log_capacity;
use crate::paulsen::{paulsen_round, PaulsenConfig};
use crate::polytope::in_orbit_polytope;
use crate::quiver::{is_equal_norm_pmf, is_pmf, nearness, rif_residual};
use crate::solver::{minimize, transform_to_rif, variety_residual, SolveStatus, SolverConfig};
use crate::weights::{FrameDatum, WeightVector};

pub const SCHEMA_VERSION: u32 = 1;
pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_CERTIFICATE: i32 = 3;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn input(message: impl Into<String>) -> Self {
        Self { code: EXIT_INPUT, message: message.into() }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<FrameError> for CliError {
    fn from(e: FrameError) -> Self {
        let code = match e {
            FrameError::NotConverged(_) | FrameError::RetryBudget { .. } => EXIT_CERTIFICATE,
            _ => EXIT_INPUT,
        };
        Self { code, message: e.to_string() }
    }
}

/// A finished command: the report text and the process exit code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub report: String,
    pub exit_code: i32,
}

// ---------------------------------------------------------------------------
// Reals

/// Hex-float text of `x`, e.g. `0x1.8p+1`; non-finite values become
/// `inf`, `-inf` or `nan`.
pub fn format_hex(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let bits = x.to_bits();
    let sign = if bits >> 63 == 1 { "-" } else { "" };
    let exp = ((bits >> 52) & 0x7ff) as i64;
    let mant = bits & ((1u64 << 52) - 1);
    if exp == 0 && mant == 0 {
        return format!("{sign}0x0p+0");
    }
    let (lead, e) = if exp == 0 { (0, -1022) } else { (1, exp - 1023) };
    let digits = format!("{mant:013x}");
    let digits = digits.trim_end_matches('0');
    if digits.is_empty() {
        format!("{sign}0x{lead}p{e:+}")
    } else {
        format!("{sign}0x{lead}.{digits}p{e:+}")
    }
}

/// Parse a hex-float (`0x...p...`) or decimal string.
pub fn parse_real(s: &str) -> Option<f64> {
    let t = s.trim();
    let body = t.trim_start_matches(['+', '-']);
    if body.starts_with("0x") || body.starts_with("0X") {
        hexf_parse::parse_hexf64(t, false).ok()
    } else {
        t.parse::<f64>().ok()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Real {
    Number(f64),
    Text(String),
}

impl Real {
    fn value(&self) -> Option<f64> {
        match self {
            Real::Number(x) => Some(*x),
            Real::Text(s) => parse_real(s),
        }
    }
}

/// Formats reals for a report or a frame file.
#[derive(Debug, Clone, Copy)]
pub struct RealFormat {
    pub human: bool,
}

impl RealFormat {
    pub fn real(&self, x: f64) -> Value {
        if self.human && x.is_finite() {
            json!(x)
        } else {
            Value::String(format_hex(x))
        }
    }

    fn reals<'a>(&self, xs: impl IntoIterator<Item = &'a f64>) -> Value {
        Value::Array(xs.into_iter().map(|&x| self.real(x)).collect())
    }

    fn row_major(&self, m: &DMatrix<f64>) -> Value {
        let mut out = Vec::with_capacity(m.len());
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                out.push(self.real(m[(r, c)]));
            }
        }
        Value::Array(out)
    }

    fn frame(&self, f: &MatrixFrame) -> Value {
        Value::Array(f.blocks().iter().map(|b| json!({"cols": b.ncols(), "data": self.row_major(b)})).collect())
    }
}

// ---------------------------------------------------------------------------
// Frame files

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockEntry {
    pub cols: usize,
    pub data: Vec<Real>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightEntry {
    pub num: i64,
    pub den: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameFile {
    pub schema_version: u32,
    pub d: usize,
    pub blocks: Vec<BlockEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<WeightEntry>>,
}

impl FrameFile {
    pub fn from_frame(frame: &MatrixFrame, weights: Option<&WeightVector>, fmt: RealFormat) -> Result<Self, CliError> {
        let blocks = frame
            .blocks()
            .iter()
            .map(|b| {
                let mut data = Vec::with_capacity(b.len());
                for r in 0..b.nrows() {
                    for c in 0..b.ncols() {
                        data.push(match fmt.real(b[(r, c)]) {
                            Value::String(s) => Real::Text(s),
                            v => Real::Number(v.as_f64().unwrap_or(f64::NAN)),
                        });
                    }
                }
                BlockEntry { cols: b.ncols(), data }
            })
            .collect();
        let weights = weights
            .map(|w| {
                w.as_slice()
                    .iter()
                    .enumerate()
                    .map(|(i, c)| {
                        let num = i64::try_from(c.numer())
                            .map_err(|_| CliError::input(format!("weight {i} numerator overflows")))?;
                        let den = i64::try_from(c.denom())
                            .map_err(|_| CliError::input(format!("weight {i} denominator overflows")))?;
                        Ok(WeightEntry { num, den })
                    })
                    .collect::<Result<Vec<_>, CliError>>()
            })
            .transpose()?;
        Ok(Self { schema_version: SCHEMA_VERSION, d: frame.dim(), blocks, weights })
    }

    pub fn to_frame(&self) -> Result<MatrixFrame, CliError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(CliError::input(format!(
                "schema_version: expected {SCHEMA_VERSION}, found {}",
                self.schema_version
            )));
        }
        if self.d == 0 {
            return Err(CliError::input("d: must be positive"));
        }
        if self.blocks.is_empty() {
            return Err(CliError::input("blocks: at least one block is required"));
        }
        let mut blocks = Vec::with_capacity(self.blocks.len());
        for (i, b) in self.blocks.iter().enumerate() {
            if b.cols == 0 {
                return Err(CliError::input(format!("blocks[{i}].cols: must be positive")));
            }
            if b.data.len() != self.d * b.cols {
                return Err(CliError::input(format!(
                    "blocks[{i}].data: has {} entries, expected d*cols = {}",
                    b.data.len(),
                    self.d * b.cols
                )));
            }
            let mut vals = Vec::with_capacity(b.data.len());
            for (k, r) in b.data.iter().enumerate() {
                match r.value() {
                    Some(x) if x.is_finite() => vals.push(x),
                    _ => return Err(CliError::input(format!("blocks[{i}].data[{k}]: not a finite real"))),
                }
            }
            blocks.push(DMatrix::from_row_slice(self.d, b.cols, &vals));
        }
        Ok(MatrixFrame::new(blocks)?)
    }

    pub fn to_weights(&self) -> Result<Option<WeightVector>, CliError> {
        let Some(ws) = &self.weights else { return Ok(None) };
        if ws.len() != self.blocks.len() {
            return Err(CliError::input(format!("weights: has {} entries for {} blocks", ws.len(), self.blocks.len())));
        }
        let mut out = Vec::with_capacity(ws.len());
        for (i, w) in ws.iter().enumerate() {
            if w.den <= 0 || w.num <= 0 {
                return Err(CliError::input(format!("weights[{i}]: num and den must be positive")));
            }
            out.push(BigRational::new(BigInt::from(w.num), BigInt::from(w.den)));
        }
        Ok(Some(WeightVector::new(out)?))
    }
}

pub fn read_frame_file(path: &Path) -> Result<FrameFile, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

pub fn write_frame_file(path: &Path, file: &FrameFile) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(file).map_err(|e| CliError::input(e.to_string()))?;
    write_text(path, &(text + "\n"))
}

fn load(path: &Path) -> Result<(MatrixFrame, Option<WeightVector>), CliError> {
    let file = read_frame_file(path)?;
    let frame = file.to_frame()?;
    let weights = file.to_weights()?;
    Ok((frame, weights))
}

// ---------------------------------------------------------------------------
// Flags

#[derive(Debug, Clone, PartialEq, Args)]
pub struct CommonFlags {
    /// Relative tolerance for rank, genericity and definiteness tests.
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    /// Print reals as decimals instead of hex floats.
    #[arg(long)]
    pub human: bool,
}

impl Default for CommonFlags {
    fn default() -> Self {
        Self { tol: DEFAULT_TOL, human: false }
    }
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct SolverFlags {
    /// Gradient-norm stopping tolerance (default 1e-9 * d).
    #[arg(long)]
    pub grad_tol: Option<f64>,
    #[arg(long, default_value_t = 100_000)]
    pub max_iters: usize,
    /// Largest number of Cauchy-Binet terms to enumerate.
    #[arg(long, default_value_t = DEFAULT_SIZE_GUARD)]
    pub size_guard: u128,
    /// Rescale blocks to unit Frobenius norm before solving.
    #[arg(long)]
    pub pre_normalize: bool,
}

impl Default for SolverFlags {
    fn default() -> Self {
        Self { grad_tol: None, max_iters: 100_000, size_guard: DEFAULT_SIZE_GUARD, pre_normalize: false }
    }
}

impl SolverFlags {
    fn config(&self, common: &CommonFlags) -> SolverConfig {
        SolverConfig {
            grad_tol: self.grad_tol,
            max_iters: self.max_iters,
            rank_tol: common.tol,
            pre_normalize: self.pre_normalize,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct CheckArgs {
    pub input: PathBuf,
    #[command(flatten)]
    pub common: CommonFlags,
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct SolveArgs {
    pub input: PathBuf,
    #[command(flatten)]
    pub common: CommonFlags,
    #[command(flatten)]
    pub solver: SolverFlags,
    /// Write the transformed frame here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct PaulsenArgs {
    pub input: PathBuf,
    #[command(flatten)]
    pub common: CommonFlags,
    #[command(flatten)]
    pub solver: SolverFlags,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write the rounded frame here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct MinorsArgs {
    pub input: PathBuf,
    #[command(flatten)]
    pub common: CommonFlags,
    #[arg(long, default_value_t = DEFAULT_SIZE_GUARD)]
    pub size_guard: u128,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FrameKind {
    Gaussian,
    Pmf,
    NearPmf,
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WeightKind {
    None,
    Uniform,
    Random,
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub dim: usize,
    /// Comma-separated block widths.
    #[arg(long, value_delimiter = ',', required = true)]
    pub widths: Vec<usize>,
    #[arg(long, value_enum, default_value_t = FrameKind::Gaussian)]
    pub kind: FrameKind,
    /// Target nearness for `near-pmf`.
    #[arg(long, default_value_t = 0.1)]
    pub epsilon: f64,
    /// Subspace dimension of the low blocks for `degenerate`.
    #[arg(long, default_value_t = 1)]
    pub rank: usize,
    /// Number of blocks placed in the low subspace for `degenerate`.
    #[arg(long, default_value_t = 2)]
    pub low: usize,
    #[arg(long, value_enum, default_value_t = WeightKind::None)]
    pub weights: WeightKind,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub human: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Subcommand)]
pub enum Command {
    /// Frame, Parseval, polytope and radial-isotropy predicates.
    Check(CheckArgs),
    /// Solve for the radial-isotropy transformer.
    SolveRif(SolveArgs),
    /// Round a nearly equal-norm Parseval frame to an exact one.
    Paulsen(PaulsenArgs),
    /// Dump the Cauchy-Binet terms of the frame.
    Minors(MinorsArgs),
    /// Generate a seeded random frame file.
    Gen(GenArgs),
}

#[derive(Debug, Clone, PartialEq, Parser)]
#[command(name = "matframe", version, about = "Radial isotropy and Paulsen rounding for matrix frames")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    match &cli.command {
        Command::Check(a) => cmd_check(a),
        Command::SolveRif(a) => cmd_solve_rif(a),
        Command::Paulsen(a) => cmd_paulsen(a),
        Command::Minors(a) => cmd_minors(a),
        Command::Gen(a) => cmd_gen(a),
    }
}

// ---------------------------------------------------------------------------
// Reports

fn header(command: &str, flags: Value) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("tool".into(), json!("matframe"));
    m.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
    m.insert("command".into(), json!(command));
    m.insert("flags".into(), flags);
    m
}

fn render(report: Map<String, Value>) -> String {
    serde_json::to_string_pretty(&Value::Object(report)).unwrap_or_default() + "\n"
}

fn one_based(subsets: &[Vec<usize>]) -> Value {
    json!(subsets.iter().map(|s| s.iter().map(|i| i + 1).collect::<Vec<_>>()).collect::<Vec<_>>())
}

fn common_flags(c: &CommonFlags) -> Value {
    json!({"tol": format!("{:?}", c.tol), "human": c.human})
}

fn solver_flags(s: &SolverFlags) -> Value {
    json!({
        "grad_tol": s.grad_tol.map(|g| format!("{g:?}")),
        "max_iters": s.max_iters,
        "size_guard": s.size_guard.to_string(),
        "pre_normalize": s.pre_normalize,
    })
}

fn merge(a: Value, b: Value) -> Value {
    let (Value::Object(mut a), Value::Object(b)) = (a, b) else { return Value::Null };
    a.extend(b);
    Value::Object(a)
}

fn polytope_json(datum: &FrameDatum, tol: f64) -> Value {
    let p = in_orbit_polytope(datum, tol);
    json!({
        "member": p.member,
        "sum_check": p.sum_check,
        "relint": p.in_relative_interior(),
        "tight_subsets": one_based(&p.tight_subsets),
        "violating_subsets": one_based(&p.violating_subsets),
    })
}

fn weights_json(w: &WeightVector) -> Value {
    json!(w.as_slice().iter().map(|c| c.to_string()).collect::<Vec<_>>())
}

pub fn cmd_check(args: &CheckArgs) -> Result<Outcome, CliError> {
    let fmt = RealFormat { human: args.common.human };
    let tol = args.common.tol;
    let (frame, weights) = load(&args.input)?;
    let mut r = header("check", common_flags(&args.common));
    r.insert("d".into(), json!(frame.dim()));
    r.insert("n".into(), json!(frame.len()));
    r.insert("widths".into(), json!(frame.widths()));
    r.insert("mf".into(), json!(frame.is_matrix_frame(tol)));
    r.insert("generic".into(), json!(frame.is_generic(tol)?));
    let near = nearness(&frame);
    r.insert(
        "nearness".into(),
        json!({
            "epsilon_operator": fmt.real(near.epsilon_operator),
            "epsilon_norms": fmt.real(near.epsilon_norms),
            "epsilon": fmt.real(near.epsilon),
        }),
    );
    r.insert("equal_norm_pmf".into(), json!(is_equal_norm_pmf(&frame, tol)));
    let uniform = weights.is_none();
    let weights = match weights {
        Some(w) => w,
        None => WeightVector::uniform(frame.dim(), frame.len())?,
    };
    let datum = FrameDatum::new(frame, weights)?;
    r.insert("weights".into(), weights_json(&datum.weights));
    r.insert("weights_source".into(), json!(if uniform { "uniform" } else { "file" }));
    r.insert("pmf".into(), json!(is_pmf(&datum, tol)));
    let polytope = polytope_json(&datum, tol);
    r.insert("relint".into(), polytope["relint"].clone());
    r.insert("polytope".into(), polytope);
    match rif_residual(&datum) {
        Ok(res) => {
            r.insert("rif".into(), json!(res <= tol));
            r.insert("rif_residual".into(), fmt.real(res));
        }
        Err(e) => {
            r.insert("rif".into(), Value::Null);
            r.insert("rif_residual".into(), json!(e.to_string()));
        }
    }
    Ok(Outcome { report: render(r), exit_code: EXIT_OK })
}

pub fn cmd_solve_rif(args: &SolveArgs) -> Result<Outcome, CliError> {
    let fmt = RealFormat { human: args.common.human };
    let (frame, weights) = load(&args.input)?;
    let weights = weights.ok_or_else(|| CliError::input("weights: solve-rif needs weights in the frame file"))?;
    let datum = FrameDatum::new(frame, weights)?;
    let config = args.solver.config(&args.common);
    let res = minimize(&datum, &config)?;

    let flags = merge(
        merge(common_flags(&args.common), solver_flags(&args.solver)),
        json!({"out": args.out.as_ref().map(|p| p.display().to_string())}),
    );
    let mut r = header("solve-rif", flags);
    r.insert("weights".into(), weights_json(&datum.weights));
    r.insert("status".into(), json!(res.status.as_str()));
    r.insert("iterations".into(), json!(res.iterations));
    r.insert("grad_norm".into(), fmt.real(res.grad_norm));
    r.insert("grad_tol".into(), fmt.real(res.grad_tol));
    r.insert("t_star".into(), fmt.reals(res.t_star.iter()));
    r.insert("transformer".into(), fmt.row_major(&res.transformer));
    r.insert("objective_value".into(), fmt.real(res.objective_value));
    r.insert("log_capacity".into(), fmt.real(log_capacity(&datum, res.objective_value)));
    r.insert("extremisers".into(), fmt.reals(res.extremisers.iter()));
    r.insert("note".into(), json!(res.note));
    if let Some(p) = &res.polytope {
        r.insert(
            "polytope".into(),
            json!({
                "member": p.member,
                "relint": p.in_relative_interior(),
                "tight_subsets": one_based(&p.tight_subsets),
                "violating_subsets": one_based(&p.violating_subsets),
            }),
        );
    }
    let rif_frame = if res.status == SolveStatus::Converged { Some(transform_to_rif(&datum, &res)?) } else { None };
    let rif_value = match &rif_frame {
        Some(g) => fmt.real(rif_residual(&FrameDatum::new(g.clone(), datum.weights.clone())?)?),
        None => Value::Null,
    };
    r.insert("rif_residual".into(), rif_value);
    let terms = binomial(datum.frame.total_columns(), datum.frame.dim());
    let variety = if terms <= args.solver.size_guard && res.status != SolveStatus::NotSemistable {
        match variety_residual(&datum, &res.t_star, args.solver.size_guard) {
            Ok(v) => fmt.real(v.amax()),
            Err(_) => json!("skipped"),
        }
    } else {
        json!("skipped")
    };
    r.insert("variety_residual_max".into(), variety);
    if let (Some(path), Some(g)) = (&args.out, &rif_frame) {
        write_frame_file(path, &FrameFile::from_frame(g, Some(&datum.weights), fmt)?)?;
    }
    Ok(Outcome { report: render(r), exit_code: EXIT_OK })
}

pub fn cmd_paulsen(args: &PaulsenArgs) -> Result<Outcome, CliError> {
    let fmt = RealFormat { human: args.common.human };
    let (frame, _) = load(&args.input)?;
    let config =
        PaulsenConfig { solver: args.solver.config(&args.common), generic_tol: args.common.tol, ..Default::default() };
    let rep = paulsen_round(&frame, &config, args.seed)?;

    let flags = merge(
        merge(common_flags(&args.common), solver_flags(&args.solver)),
        json!({"seed": args.seed, "out": args.out.as_ref().map(|p| p.display().to_string())}),
    );
    let mut r = header("paulsen", flags);
    r.insert("d".into(), json!(frame.dim()));
    r.insert("n".into(), json!(frame.len()));
    r.insert("input_epsilon".into(), fmt.real(rep.input_epsilon));
    r.insert("measured_epsilon".into(), fmt.real(rep.nearness.epsilon));
    r.insert("gamma".into(), fmt.real(rep.gamma));
    r.insert("perturbed".into(), fmt.frame(&rep.perturbed));
    r.insert("perturbed_epsilon".into(), fmt.real(rep.perturbed_epsilon));
    r.insert("solver_status".into(), json!(rep.solver_status.as_str()));
    r.insert("solver_iterations".into(), json!(rep.solver_iterations));
    r.insert("solver_grad_norm".into(), fmt.real(rep.solver_grad_norm));
    r.insert("u".into(), fmt.row_major(&rep.u));
    r.insert("m".into(), fmt.reals(rep.m.iter()));
    r.insert("v".into(), fmt.row_major(&rep.v));
    r.insert("helper".into(), fmt.frame(&rep.helper));
    r.insert("output".into(), fmt.frame(&rep.output));
    r.insert("dist_input_output".into(), fmt.real(rep.dist_input_output));
    r.insert("bound".into(), fmt.real(rep.bound));
    r.insert("ratio".into(), fmt.real(rep.ratio()));
    r.insert("dist_input_perturbed".into(), fmt.real(rep.dist_input_perturbed));
    r.insert("perturbation_bound".into(), fmt.real(rep.perturbation_bound));
    r.insert("dist_rotated_output".into(), fmt.real(rep.dist_rotated_output));
    r.insert("rotated_bound".into(), fmt.real(rep.rotated_bound));
    r.insert("dist_rotated_helper".into(), fmt.real(rep.dist_rotated_helper));
    r.insert("dist_helper_output".into(), fmt.real(rep.dist_helper_output));
    r.insert("majorization_holds".into(), json!(rep.majorization_holds));
    r.insert("output_is_equal_norm_pmf".into(), json!(rep.output_is_equal_norm_pmf));
    r.insert("output_tol".into(), fmt.real(rep.output_tol));
    r.insert("certified".into(), json!(rep.certified));
    if let Some(path) = &args.out {
        write_frame_file(path, &FrameFile::from_frame(&rep.output, None, fmt)?)?;
    }
    let exit_code = if rep.certified { EXIT_OK } else { EXIT_CERTIFICATE };
    Ok(Outcome { report: render(r), exit_code })
}

pub fn cmd_minors(args: &MinorsArgs) -> Result<Outcome, CliError> {
    let fmt = RealFormat { human: args.common.human };
    let (frame, _) = load(&args.input)?;
    let expansion = MinorExpansion::new(&frame, DEFAULT_MINOR_TOL, args.size_guard)?;
    let terms: Vec<Value> = expansion
        .terms()
        .iter()
        .map(|t| {
            json!({
                "support": t.support.iter().map(|i| i + 1).collect::<Vec<_>>(),
                "columns": one_based(&t.column_sets),
                "minor": fmt.real(t.minor),
                "negligible": t.negligible,
            })
        })
        .collect();
    let total: f64 = expansion.terms().iter().map(|t| t.minor).sum();
    let flags = merge(common_flags(&args.common), json!({"size_guard": args.size_guard.to_string()}));
    let mut r = header("minors", flags);
    r.insert("count".into(), json!(terms.len()));
    r.insert("sum".into(), fmt.real(total));
    r.insert("det_frame_operator".into(), fmt.real(linalg::determinant(&frame.frame_operator())));
    r.insert("terms".into(), Value::Array(terms));
    Ok(Outcome { report: render(r), exit_code: EXIT_OK })
}

pub fn cmd_gen(args: &GenArgs) -> Result<Outcome, CliError> {
    let fmt = RealFormat { human: args.human };
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let (d, widths) = (args.dim, args.widths.as_slice());
    if d == 0 || widths.is_empty() || widths.contains(&0) {
        return Err(CliError::input("dim and every width must be positive"));
    }
    let frame = match args.kind {
        FrameKind::Gaussian => generate::gaussian_frame(&mut rng, d, widths)?,
        FrameKind::Pmf => generate::equal_norm_pmf(&mut rng, d, widths)?,
        FrameKind::NearPmf => {
            let base = generate::equal_norm_pmf(&mut rng, d, widths)?;
            generate::near_pmf(&mut rng, &base, args.epsilon)?.0
        }
        FrameKind::Degenerate => generate::degenerate_frame(&mut rng, d, widths, args.low, args.rank)?,
    };
    let weights = match args.weights {
        WeightKind::None => None,
        WeightKind::Uniform => Some(WeightVector::uniform(d, widths.len())?),
        WeightKind::Random => Some(generate::random_weights(&mut rng, d, widths.len(), 5)?),
    };
    let file = FrameFile::from_frame(&frame, weights.as_ref(), fmt)?;
    let text = serde_json::to_string_pretty(&file).map_err(|e| CliError::input(e.to_string()))? + "\n";
    match &args.out {
        Some(path) => {
            write_text(path, &text)?;
            let mut r = header(
                "gen",
                json!({"seed": args.seed, "dim": d, "widths": widths, "out": path.display().to_string()}),
            );
            r.insert("written".into(), json!(path.display().to_string()));
            Ok(Outcome { report: render(r), exit_code: EXIT_OK })
        }
        None => Ok(Outcome { report: text, exit_code: EXIT_OK }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hex_examples() {
        assert_eq!(format_hex(1.0), "0x1p+0");
        assert_eq!(format_hex(3.0), "0x1.8p+1");
        assert_eq!(format_hex(-0.5), "-0x1p-1");
        assert_eq!(format_hex(0.0), "0x0p+0");
        assert_eq!(format_hex(-0.0), "-0x0p+0");
        assert_eq!(format_hex(f64::NEG_INFINITY), "-inf");
        assert_eq!(format_hex(f64::MIN_POSITIVE / 4.0), "0x0.4p-1022");
    }

    #[test]
    fn hex_round_trips() {
        for x in [1.0, 0.1, -2.5e-300, f64::MAX, f64::MIN_POSITIVE, 5e-324, 1.0 / 3.0, -0.0, 123456.789] {
            let back = parse_real(&format_hex(x)).unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{x}");
        }
        assert_eq!(parse_real("0.25"), Some(0.25));
        assert_eq!(parse_real("bogus"), None);
    }

    #[test]
    fn frame_file_round_trip() {
        let f = MatrixFrame::new(vec![
            DMatrix::from_row_slice(2, 2, &[0.1, -3.0, 1e-310, 2.0]),
            DMatrix::from_column_slice(2, 1, &[1.0 / 3.0, 7.0]),
        ])
        .unwrap();
        let w = WeightVector::from_ratios(&[(3, 2), (1, 2)]).unwrap();
        for human in [false, true] {
            let file = FrameFile::from_frame(&f, Some(&w), RealFormat { human }).unwrap();
            let text = serde_json::to_string(&file).unwrap();
            let back: FrameFile = serde_json::from_str(&text).unwrap();
            assert_eq!(back.to_frame().unwrap(), f);
            assert_eq!(back.to_weights().unwrap().unwrap(), w);
        }
    }

    #[test]
    fn frame_file_validation_names_the_field() {
        let text = r#"{"schema_version":1,"d":2,"blocks":[{"cols":1,"data":[1,0]},{"cols":2,"data":[1,2,3]}]}"#;
        let file: FrameFile = serde_json::from_str(text).unwrap();
        let err = file.to_frame().unwrap_err();
        assert_eq!(err.code, EXIT_INPUT);
        assert!(err.message.contains("blocks[1]"), "{}", err.message);

        let text = r#"{"schema_version":1,"d":1,"blocks":[{"cols":1,"data":[1]}],"weights":[{"num":1,"den":0}]}"#;
        let file: FrameFile = serde_json::from_str(text).unwrap();
        assert!(file.to_weights().unwrap_err().message.contains("weights[0]"));

        let text = r#"{"schema_version":2,"d":1,"blocks":[{"cols":1,"data":[1]}]}"#;
        let file: FrameFile = serde_json::from_str(text).unwrap();
        assert!(file.to_frame().unwrap_err().message.contains("schema_version"));
    }

    #[test]
    fn error_codes() {
        assert_eq!(CliError::from(FrameError::Precondition("x".into())).code, EXIT_INPUT);
        assert_eq!(CliError::from(FrameError::NotConverged("x".into())).code, EXIT_CERTIFICATE);
    }
}
