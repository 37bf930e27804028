//! JSON config schema for the experiment runner. Unknown keys are rejected
//! at the top level of every command payload.

use serde::{Deserialize, Serialize};

use plaplab::continuity::Modulus;
use plaplab::error::Error;
use plaplab::grid::{Grid2D, ScalarField};
use plaplab::oracles::{HarmonicPolynomial, Oracle2d, RadialPPoisson};
use plaplab::problem::{ModelField, ProblemSpec, SolveConfig};

use crate::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub n: u32,
    pub p: f64,
    pub lambda: f64,
    pub big_lambda: f64,
    pub lambda_tilde: f64,
    /// Source integrability exponent; omit (or null) for a bounded source.
    #[serde(default)]
    pub q: Option<f64>,
}

impl ProblemConfig {
    pub fn to_spec(&self) -> Result<ProblemSpec, CliError> {
        ProblemSpec::new(
            self.n,
            self.p,
            self.lambda,
            self.big_lambda,
            self.lambda_tilde,
            self.q.unwrap_or(f64::INFINITY),
        )
        .map_err(CliError::from)
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub nx: usize,
    pub ny: usize,
    pub xmin: f64,
    pub xmax: f64,
    pub ymin: f64,
    pub ymax: f64,
}

impl GridConfig {
    pub fn build(&self) -> Result<Grid2D, CliError> {
        Grid2D::covering(self.nx, self.ny, self.xmin, self.xmax, self.ymin, self.ymax)
            .map_err(CliError::from)
    }
}

/// Spatial coefficient ς(X).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CoeffSpec {
    Constant { value: f64 },
    /// `base + amplitude |X - center|^exponent`
    HolderBump {
        #[serde(default = "one")]
        base: f64,
        amplitude: f64,
        exponent: f64,
        center: [f64; 2],
    },
}

fn one() -> f64 {
    1.0
}

impl CoeffSpec {
    pub fn callable(&self) -> impl Fn([f64; 2]) -> f64 + Send + Sync + Clone + 'static {
        let spec = self.clone();
        move |x: [f64; 2]| match &spec {
            CoeffSpec::Constant { value } => *value,
            CoeffSpec::HolderBump { base, amplitude, exponent, center } => {
                let r = (x[0] - center[0]).hypot(x[1] - center[1]);
                base + amplitude * r.powf(*exponent)
            }
        }
    }

    pub fn model(&self, p: f64) -> ModelField {
        ModelField::new(p, self.callable())
    }
}

/// Grid-sampled field data: analytic families or a field file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldSpec {
    Constant { value: f64 },
    /// `ax x + by y + c`
    Linear { ax: f64, by: f64, c: f64 },
    /// `x y`, odd in each variable
    ProductXy,
    /// `x^2 - y^2`
    Saddle,
    /// `x^3 - 3 x y^2`
    CubicHarmonic,
    /// radial solution of the unit-source problem
    Radial { p: f64, n: u32, radius: f64 },
    File { path: String },
}

impl FieldSpec {
    pub fn sample(&self, grid: Grid2D) -> Result<ScalarField, CliError> {
        match self {
            FieldSpec::Constant { value } => Ok(ScalarField::from_fn(grid, |_| *value)),
            FieldSpec::Linear { ax, by, c } => {
                Ok(ScalarField::from_fn(grid, |p| ax * p[0] + by * p[1] + c))
            }
            FieldSpec::ProductXy => Ok(ScalarField::from_fn(grid, |p| p[0] * p[1])),
            FieldSpec::Saddle => Ok(HarmonicPolynomial::saddle().sample(grid)),
            FieldSpec::CubicHarmonic => Ok(HarmonicPolynomial::degree3().sample(grid)),
            FieldSpec::Radial { p, n, radius } => {
                Ok(RadialPPoisson::new(*p, *n, *radius).map_err(CliError::from)?.sample(grid))
            }
            FieldSpec::File { path } => {
                let f = ScalarField::read_file(path).map_err(CliError::from)?;
                f.same_grid(&ScalarField::zeros(grid)).map_err(|_| {
                    CliError::Validation(format!(
                        "field file `{path}` does not match the configured grid"
                    ))
                })?;
                Ok(f)
            }
        }
    }

    /// Exact decay law at the critical point, when this family has one.
    pub fn known_decay(&self) -> Option<plaplab::oracles::KnownDecay> {
        match self {
            FieldSpec::Saddle => HarmonicPolynomial::saddle().known_decay(),
            FieldSpec::CubicHarmonic => HarmonicPolynomial::degree3().known_decay(),
            FieldSpec::Radial { p, n, radius } => {
                RadialPPoisson::new(*p, *n, *radius).ok()?.known_decay()
            }
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverTuning {
    pub eps0: Option<f64>,
    pub eps_min: Option<f64>,
    pub continuation_factor: Option<f64>,
    pub newton_tol: Option<f64>,
    pub max_newton: Option<usize>,
    pub armijo_c: Option<f64>,
}

impl SolverTuning {
    pub fn build(&self) -> SolveConfig {
        let d = SolveConfig::default();
        SolveConfig {
            eps0: self.eps0.unwrap_or(d.eps0),
            eps_min: self.eps_min.unwrap_or(d.eps_min),
            continuation_factor: self.continuation_factor.unwrap_or(d.continuation_factor),
            newton_tol: self.newton_tol.unwrap_or(d.newton_tol),
            max_newton: self.max_newton.unwrap_or(d.max_newton),
            armijo_c: self.armijo_c.unwrap_or(d.armijo_c),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveCmd {
    pub problem: ProblemConfig,
    pub grid: GridConfig,
    pub coefficient: CoeffSpec,
    pub source: FieldSpec,
    pub boundary: FieldSpec,
    #[serde(default)]
    pub solver: Option<SolverTuning>,
    #[serde(default = "default_field_name")]
    pub output_field: String,
}

fn default_field_name() -> String {
    "solution.field".into()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeCmd {
    /// Field file to probe; omitted inside a pipeline.
    #[serde(default)]
    pub field: Option<String>,
    pub problem: ProblemConfig,
    /// Maximal gradient exponent of the homogeneous constant-coefficient
    /// comparison problem; 1 in the linear case.
    #[serde(default = "one")]
    pub alpha_m: f64,
    #[serde(default = "default_rho")]
    pub rho: f64,
    #[serde(default = "default_levels")]
    pub levels: usize,
    /// Override for the singular-set tolerance (default: scale-aware).
    #[serde(default)]
    pub grad_tol: Option<f64>,
    #[serde(default = "default_slack")]
    pub slack: f64,
    /// Exponent of the p-mean profile; defaults to the problem's p.
    #[serde(default)]
    pub fit_p: Option<f64>,
    /// Extra node indices to probe besides the detected singular set.
    #[serde(default)]
    pub extra_points: Vec<[usize; 2]>,
    #[serde(default = "yes")]
    pub write_profiles: bool,
}

fn default_rho() -> f64 {
    0.5
}

fn default_levels() -> usize {
    8
}

fn default_slack() -> f64 {
    0.05
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiniCfg {
    #[serde(default = "one")]
    pub big_r: f64,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
}

fn default_sigma() -> f64 {
    0.1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructureCfg {
    pub coefficient: CoeffSpec,
    #[serde(default = "default_pairs")]
    pub x_pairs: usize,
    #[serde(default = "default_shells")]
    pub shells: usize,
    #[serde(default = "default_shells")]
    pub directions: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    pub domain_min: [f64; 2],
    pub domain_max: [f64; 2],
}

fn default_pairs() -> usize {
    100
}

fn default_shells() -> usize {
    10
}

fn default_seed() -> u64 {
    42
}

fn default_tol() -> f64 {
    1e-4
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckCmd {
    pub problem: ProblemConfig,
    pub modulus: Modulus,
    #[serde(default)]
    pub dini: Option<DiniCfg>,
    #[serde(default)]
    pub structure: Option<StructureCfg>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleCmd {
    pub oracle: FieldSpec,
    pub grid: GridConfig,
    #[serde(default = "default_oracle_name")]
    pub output_field: String,
}

fn default_oracle_name() -> String {
    "oracle.field".into()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineCmd {
    pub solve: SolveCmd,
    pub probe: ProbeCmd,
    #[serde(default)]
    pub check: Option<CheckCmd>,
}

pub fn load<T: serde::de::DeserializeOwned>(path: &std::path::Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read config `{}`: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Validation(format!("invalid config `{}`: {e}", path.display())))
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(err) => CliError::Io(err.to_string()),
            Error::SolverNonConvergence { .. } | Error::NonFinite(_) => {
                CliError::Solver(e.to_string())
            }
            other => CliError::Validation(other.to_string()),
        }
    }
}
