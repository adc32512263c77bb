//! TOML run configuration. Every section rejects unknown keys; only
//! `[problem]` is required and it has no defaults.

use std::path::PathBuf;

use serde::Deserialize;

use rqdiff::bvp::{InitialGuess, PicardOptions, PicardScheme};
use rqdiff::scan::{ExecMode, ScanAxis};
use rqdiff::{CoefficientSpec, ProblemParams};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    problem: ProblemParams,
    #[serde(default)]
    coefficients: CoefficientSpec,
    #[serde(default)]
    solver: SolverSection,
    #[serde(default)]
    grid: GridSection,
    #[serde(default)]
    ivp: IvpSection,
    #[serde(default)]
    identity: IdentitySection,
    #[serde(default)]
    transform: TransformSection,
    scan: Option<ScanSection>,
    #[serde(default)]
    output: OutputSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GuessShape {
    Parabolic,
    Constant,
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SolverSection {
    theta: Option<f64>,
    tol: Option<f64>,
    max_iter: Option<usize>,
    divergence_cap: Option<f64>,
    initial_guess: Option<GuessShape>,
    initial_amplitude: Option<f64>,
    scheme: Option<PicardScheme>,
    residual_tol: Option<f64>,
    refine_check: Option<bool>,
    refine_tol: Option<f64>,
    truncation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridSection {
    n: Option<usize>,
    kappa: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IvpSection {
    pub r_max: f64,
    pub rtol: f64,
    pub lambda: f64,
    /// Source exponent of the pure-power run; defaults to `problem.p`.
    pub wp: Option<f64>,
    /// Threshold parameter of the broken problem.
    pub d: Option<f64>,
}

impl Default for IvpSection {
    fn default() -> Self {
        Self { r_max: 1e4, rtol: 1e-10, lambda: 1.0, wp: None, d: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IdentityKind {
    #[default]
    Pohozaev,
    Variational,
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdentitySection {
    #[serde(default)]
    pub kind: IdentityKind,
    /// Multiplier exponent; defaults to σ*.
    pub sigma: Option<f64>,
    /// Evaluation radius of the variational identity.
    pub r: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransformKind {
    #[default]
    DiffusionToPlain,
    BrokenToPlain,
    BlowupRescale,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TransformSection {
    pub kind: TransformKind,
    /// Truncation level of the rescaling; defaults to the sup norm.
    pub k: Option<f64>,
    /// Sample count on the broken segment.
    pub segment_nodes: usize,
}

impl Default for TransformSection {
    fn default() -> Self {
        Self { kind: TransformKind::default(), k: None, segment_nodes: 4096 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSection {
    pub axis1: ScanAxis,
    pub axis2: ScanAxis,
    pub mode: Option<ExecMode>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct OutputSection {
    dir: PathBuf,
    seed: u64,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: PathBuf::from("out"), seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem: ProblemParams,
    pub coefficients: CoefficientSpec,
    pub solver: PicardOptions,
    pub ivp: IvpSection,
    pub identity: IdentitySection,
    pub transform: TransformSection,
    pub scan: Option<ScanSection>,
    pub output_dir: PathBuf,
    pub seed: u64,
}

pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
    raw.problem.validate().map_err(|e| CliError::Validation(e.to_string()))?;
    raw.coefficients.validate().map_err(|e| CliError::Validation(e.to_string()))?;

    let mut solver = PicardOptions::default();
    let s = raw.solver;
    solver.theta = s.theta.unwrap_or(solver.theta);
    solver.tol = s.tol.unwrap_or(solver.tol);
    solver.max_iter = s.max_iter.unwrap_or(solver.max_iter);
    solver.divergence_cap = s.divergence_cap.unwrap_or(solver.divergence_cap);
    let amp = s.initial_amplitude.unwrap_or(1.0);
    solver.initial_guess = match s.initial_guess.unwrap_or(GuessShape::Parabolic) {
        GuessShape::Parabolic => InitialGuess::Parabolic(amp),
        GuessShape::Constant => InitialGuess::Constant(amp),
    };
    solver.scheme = s.scheme.unwrap_or(solver.scheme);
    solver.residual_tol = s.residual_tol.unwrap_or(solver.residual_tol);
    solver.refine_check = s.refine_check.unwrap_or(solver.refine_check);
    solver.refine_tol = s.refine_tol.unwrap_or(solver.refine_tol);
    solver.truncation = s.truncation.or(solver.truncation);
    solver.n = raw.grid.n.unwrap_or(solver.n);
    solver.kappa = raw.grid.kappa.or(solver.kappa);
    solver.validate().map_err(|e| CliError::Validation(e.to_string()))?;

    let ivp = raw.ivp;
    if !(ivp.r_max > 0.0 && ivp.rtol > 0.0 && ivp.rtol < 1.0) {
        return Err(CliError::Validation("ivp: r_max > 0 and 0 < rtol < 1".into()));
    }
    if let Some(scan) = &raw.scan {
        for axis in [scan.axis1, scan.axis2] {
            axis.validate().map_err(|e| CliError::Validation(e.to_string()))?;
        }
    }
    if raw.transform.segment_nodes < 8 {
        return Err(CliError::Validation("transform: segment_nodes ≥ 8".into()));
    }
    Ok(RunConfig {
        problem: raw.problem,
        coefficients: raw.coefficients,
        solver,
        ivp,
        identity: raw.identity,
        transform: raw.transform,
        scan: raw.scan,
        output_dir: raw.output.dir,
        seed: raw.output.seed,
    })
}
