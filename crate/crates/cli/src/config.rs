//! Experiment configuration shared by the flag parser and `--config` files.

use std::path::PathBuf;

use clap::{Args, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

/// Everything needed to reproduce one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Command,
    /// Directory for CSV/JSON files; falls back to `SCALEDEL_OUT_DIR`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Stencil classification, application and decomposition.
    Op {
        #[command(subcommand)]
        op: OpCommand,
    },
    /// Generalized Leibniz rule for two-point operators.
    Leibniz {
        #[command(subcommand)]
        op: LeibnizCommand,
    },
    /// Discrete Euler-Lagrange residuals and boundary-value solves.
    Del {
        #[command(subcommand)]
        op: DelCommand,
    },
    /// Characteristic roots of the oscillator recurrence.
    Oscillator {
        #[command(subcommand)]
        op: OscillatorCommand,
    },
    /// Refinement sweeps.
    Converge {
        #[command(subcommand)]
        op: ConvergeCommand,
    },
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OpCommand {
    /// Membership in the consistent family and its defect.
    Classify(ClassifyArgs),
    /// Apply the operator to a test function on a grid.
    Apply(ApplyArgs),
    /// Forward difference plus shifted second differences.
    Decompose(ClassifyArgs),
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LeibnizCommand {
    /// Check the product rule on seeded random pairs.
    Check(LeibnizArgs),
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DelCommand {
    /// Residual of a sampled test function.
    Residual(DelResidualArgs),
    /// Solve the boundary-value problem.
    Solve(DelSolveArgs),
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OscillatorCommand {
    /// Root moduli and the four-inequality verdict.
    Roots(RootsArgs),
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConvergeCommand {
    /// Operator or D.E.L.-to-C.E.L. refinement sweep.
    Sweep(SweepArgs),
    /// Remainder kernel sup and its bound.
    Kernel(KernelArgs),
}

fn default_a() -> f64 {
    0.0
}

fn default_b() -> f64 {
    1.0
}

fn default_tol() -> f64 {
    scaledel::DEFAULT_TOL
}

fn default_p() -> f64 {
    1.0
}

fn default_q() -> f64 {
    -1.0
}

/// Stencil by key (`forward`, `backward`, `symmetric`, `cresson`) or inline
/// JSON `{"gamma": [[re, im], ...]}`.
#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct StencilArg {
    #[arg(long, default_value = "symmetric")]
    pub stencil: String,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct GridArgs {
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    #[serde(default = "default_a")]
    pub a: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    #[serde(default = "default_b")]
    pub b: f64,
    /// Number of subdivisions.
    #[arg(long = "M", default_value_t = 40)]
    #[serde(rename = "M")]
    pub m: usize,
}

/// Lagrangian preset (`harmonic`, `free`, `lq2d`) or inline JSON
/// `{"P": [[..]], "Q": [[..]], "R": [[..]], "J1": [..], "J2": [..]}`.
#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct LagrangianArg {
    #[arg(long, default_value = "harmonic")]
    pub lagrangian: String,
    /// `p` for the harmonic preset.
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    #[serde(default = "default_p")]
    pub p: f64,
    /// `q` for the harmonic preset.
    #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
    #[serde(default = "default_q")]
    pub q: f64,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ClassifyArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub stencil: StencilArg,
    /// Step used to scale the coefficients.
    #[arg(long, default_value_t = 0.1)]
    pub eps: f64,
    #[arg(long, default_value_t = scaledel::DEFAULT_TOL)]
    #[serde(default = "default_tol")]
    pub tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DirectionArg {
    Plus,
    Minus,
}

impl From<DirectionArg> for scaledel::Direction {
    fn from(d: DirectionArg) -> Self {
        match d {
            DirectionArg::Plus => scaledel::Direction::Plus,
            DirectionArg::Minus => scaledel::Direction::Minus,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ApplyArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub stencil: StencilArg,
    #[command(flatten)]
    #[serde(flatten)]
    pub grid: GridArgs,
    /// Test function key.
    #[arg(long = "fn", default_value = "sin")]
    #[serde(rename = "fn")]
    pub function: String,
    #[arg(long, value_enum, default_value = "plus")]
    pub direction: DirectionArg,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct LeibnizArgs {
    /// `r` as `re,im`.
    #[arg(long, default_value = "0.5,-0.5", allow_hyphen_values = true)]
    pub r: String,
    /// `s` as `re,im`.
    #[arg(long, default_value = "0.5,0.5", allow_hyphen_values = true)]
    pub s: String,
    /// Companion parameter `r'`; with `s'`, replaces the conjugate pair.
    #[arg(long, allow_hyphen_values = true, requires = "sp")]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rp: Option<String>,
    #[arg(long, allow_hyphen_values = true, requires = "rp")]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sp: Option<String>,
    #[arg(long = "M", default_value_t = 64)]
    #[serde(rename = "M")]
    pub m: usize,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    /// Relative tolerance for the pass verdict.
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct DelResidualArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub lagrangian: LagrangianArg,
    #[command(flatten)]
    #[serde(flatten)]
    pub stencil: StencilArg,
    #[command(flatten)]
    #[serde(flatten)]
    pub grid: GridArgs,
    #[arg(long = "fn", default_value = "sin")]
    #[serde(rename = "fn")]
    pub function: String,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct DelSolveArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub lagrangian: LagrangianArg,
    #[command(flatten)]
    #[serde(flatten)]
    pub stencil: StencilArg,
    #[command(flatten)]
    #[serde(flatten)]
    pub grid: GridArgs,
    /// `x(a)`, comma-separated components.
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    pub alpha: String,
    /// `x(b)`, comma-separated components.
    #[arg(long, default_value = "1", allow_hyphen_values = true)]
    pub beta: String,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct RootsArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub stencil: StencilArg,
    /// Use the unit-circle family member with this `k` instead of `--stencil`.
    #[arg(long, allow_hyphen_values = true)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub p: f64,
    #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
    pub q: f64,
    #[arg(long, default_value_t = 0.1)]
    pub eps: f64,
    #[arg(long, default_value_t = scaledel::oscillator::UNIT_TOL)]
    #[serde(default = "default_tol")]
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SweepArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub stencil: StencilArg,
    #[arg(long = "fn", default_value = "sin")]
    #[serde(rename = "fn")]
    pub function: String,
    /// Refinement list, e.g. `40,80,160`.
    #[arg(long = "M", value_delimiter = ',', default_value = "40,80,160")]
    #[serde(rename = "M")]
    pub m: Vec<usize>,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    #[serde(default = "default_a")]
    pub a: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    #[serde(default = "default_b")]
    pub b: f64,
    /// Interior margin; defaults to (b - a) / 10.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    /// Run the D.E.L.-to-C.E.L. sweep with this lagrangian instead of the
    /// operator sweep.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lagrangian: Option<String>,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    #[serde(default = "default_p")]
    pub p: f64,
    #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
    #[serde(default = "default_q")]
    pub q: f64,
    #[arg(long, value_enum, default_value = "plus")]
    pub direction: DirectionArg,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct KernelArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub stencil: StencilArg,
    #[command(flatten)]
    #[serde(flatten)]
    pub grid: GridArgs,
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
}
