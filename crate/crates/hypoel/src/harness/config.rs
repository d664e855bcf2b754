//! TOML experiment configuration.
//!
//! One config file fully determines an experiment. Unknown keys are
//! rejected with an error naming the key; each experiment kind validates
//! that its required sections are present.

use serde::Deserialize;
use std::path::PathBuf;
use std::sync::Arc;
use thiserror::Error;

use crate::bspde::{BspdeProblem, FieldSpec, SolveOptions};
use crate::spectral::TorusGrid;
use crate::symbolic::{parse_expr, Expr, ExprMatrix, FirstOrderOperator};

#[derive(Debug, Error)]
pub enum HarnessError {
    /// Unreadable, unparsable, or inconsistent configuration (exit code 2).
    #[error("config error: {0}")]
    Config(String),
    /// A failure while running a valid experiment (exit code 1).
    #[error("runtime error: {0}")]
    Runtime(String),
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::Runtime(_) => 1,
        }
    }
}

macro_rules! runtime_from {
    ($($ty:ty),*) => {$(
        impl From<$ty> for HarnessError {
            fn from(e: $ty) -> Self {
                HarnessError::Runtime(e.to_string())
            }
        }
    )*};
}
runtime_from!(
    crate::bspde::SolveError,
    crate::spectral::SpectralError,
    crate::sde::SdeError,
    crate::feynman_kac::McError,
    crate::symbolic::SymbolicError,
    std::io::Error,
    csv::Error,
    serde_json::Error
);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Certify,
    Solve,
    Simulate,
    CrossValidate,
    SmoothingStudy,
    Lemma42Probe,
    Example12Verify,
}

impl ExperimentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::Certify => "certify",
            ExperimentKind::Solve => "solve",
            ExperimentKind::Simulate => "simulate",
            ExperimentKind::CrossValidate => "cross-validate",
            ExperimentKind::SmoothingStudy => "smoothing-study",
            ExperimentKind::Lemma42Probe => "lemma42-probe",
            ExperimentKind::Example12Verify => "example12-verify",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub dim: usize,
    pub n: usize,
    #[serde(default = "default_period")]
    pub period: f64,
}

fn default_period() -> f64 {
    1.0
}

impl GridConfig {
    pub fn build(&self) -> Result<Arc<TorusGrid>, HarnessError> {
        TorusGrid::new(self.dim, self.n, self.period)
            .map_err(|e| HarnessError::Config(e.to_string()))
    }
}

/// A data field: either an expression or the square-wave builtin.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub expr: Option<String>,
    pub square_wave_axis: Option<usize>,
}

impl DataConfig {
    fn build(&self, dim: usize) -> Result<FieldSpec, HarnessError> {
        match (&self.expr, self.square_wave_axis) {
            (Some(e), None) => Ok(FieldSpec::Expr(parse_config_expr(e, dim)?)),
            (None, Some(axis)) => Ok(FieldSpec::SquareWave { axis }),
            _ => Err(HarnessError::Config(
                "data field needs exactly one of `expr` or `square_wave_axis`".into(),
            )),
        }
    }
}

fn parse_config_expr(text: &str, dim: usize) -> Result<Expr, HarnessError> {
    parse_expr(text, dim).map_err(|e| HarnessError::Config(format!("in `{text}`: {e}")))
}

fn parse_matrix(
    rows: &[Vec<String>],
    dim: usize,
    noise_dim: usize,
    name: &str,
) -> Result<ExprMatrix, HarnessError> {
    if rows.is_empty() {
        return Ok(ExprMatrix::zeros(dim, noise_dim));
    }
    if rows.len() != dim || rows.iter().any(|r| r.len() != noise_dim) {
        return Err(HarnessError::Config(format!(
            "`{name}` must have {dim} rows of {noise_dim} entries"
        )));
    }
    let mut parsed = Vec::with_capacity(dim);
    for row in rows {
        let mut out = Vec::with_capacity(noise_dim);
        for e in row {
            out.push(parse_config_expr(e, dim)?);
        }
        parsed.push(out);
    }
    ExprMatrix::from_rows(parsed).map_err(|e| HarnessError::Config(e.to_string()))
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub noise_dim: usize,
    /// Rows are spatial axes, columns noise directions.
    #[serde(default)]
    pub sigma: Vec<Vec<String>>,
    #[serde(default)]
    pub theta: Vec<Vec<String>>,
    #[serde(default)]
    pub drift: Vec<String>,
    #[serde(default)]
    pub zero_order: Option<String>,
    #[serde(default)]
    pub gamma: Vec<String>,
    pub source: Option<DataConfig>,
    #[serde(default)]
    pub gradient_sources: Vec<DataConfig>,
    pub terminal: Option<DataConfig>,
    pub horizon: f64,
    #[serde(default)]
    pub viscosity: f64,
}

impl ProblemConfig {
    pub fn build(&self, grid: &Arc<TorusGrid>) -> Result<BspdeProblem, HarnessError> {
        let dim = grid.dim();
        let d1 = self.noise_dim;
        let mut p = BspdeProblem::empty(dim, d1);
        p.sigma = parse_matrix(&self.sigma, dim, d1, "sigma")?;
        p.theta = parse_matrix(&self.theta, dim, d1, "theta")?;
        if !self.drift.is_empty() {
            if self.drift.len() != dim {
                return Err(HarnessError::Config(format!(
                    "`drift` must have {dim} entries"
                )));
            }
            p.drift = self
                .drift
                .iter()
                .map(|e| parse_config_expr(e, dim))
                .collect::<Result<_, _>>()?;
        }
        if let Some(c) = &self.zero_order {
            p.zero_order = parse_config_expr(c, dim)?;
        }
        if !self.gamma.is_empty() {
            if self.gamma.len() != d1 {
                return Err(HarnessError::Config(format!(
                    "`gamma` must have {d1} entries"
                )));
            }
            p.gamma = self
                .gamma
                .iter()
                .map(|e| parse_config_expr(e, dim))
                .collect::<Result<_, _>>()?;
        }
        if let Some(f) = &self.source {
            p.source = f.build(dim)?;
        }
        if !self.gradient_sources.is_empty() {
            if self.gradient_sources.len() != d1 {
                return Err(HarnessError::Config(format!(
                    "`gradient_sources` must have {d1} entries"
                )));
            }
            p.gradient_sources = self
                .gradient_sources
                .iter()
                .map(|g| g.build(dim))
                .collect::<Result<_, _>>()?;
        }
        if let Some(g) = &self.terminal {
            p.terminal = g.build(dim)?;
        }
        p.horizon = self.horizon;
        p.viscosity = self.viscosity;
        p.validate()
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        p.check_denominators(grid)
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        Ok(p)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertifyConfig {
    /// Coefficient vectors of the operator family, one row per field.
    pub fields: Vec<Vec<String>>,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    pub n_max: usize,
    #[serde(default = "default_sample_per_axis")]
    pub sample_points_per_axis: usize,
    #[serde(default)]
    pub time: f64,
}

fn default_tolerance() -> f64 {
    1e-8
}

fn default_sample_per_axis() -> usize {
    32
}

impl CertifyConfig {
    pub fn build_fields(&self, dim: usize) -> Result<Vec<FirstOrderOperator>, HarnessError> {
        if self.fields.is_empty() {
            return Err(HarnessError::Config("`fields` must be nonempty".into()));
        }
        self.fields
            .iter()
            .map(|row| {
                if row.len() != dim {
                    return Err(HarnessError::Config(format!(
                        "each field needs {dim} coefficients"
                    )));
                }
                let coeffs = row
                    .iter()
                    .map(|e| parse_config_expr(e, dim))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(FirstOrderOperator::new(coeffs))
            })
            .collect()
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveConfig {
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
    pub dt: Option<f64>,
    #[serde(default)]
    pub norm_orders: Vec<f64>,
    pub energy_order: Option<f64>,
    pub tail_axis: Option<usize>,
    pub tail_min_index: Option<usize>,
    #[serde(default = "default_stability_factor")]
    pub stability_factor: f64,
    /// Write binary snapshots alongside the norm ledger.
    #[serde(default)]
    pub dump_snapshots: bool,
}

fn default_stability_factor() -> f64 {
    0.25
}

impl SolveConfig {
    pub fn options(&self) -> SolveOptions {
        SolveOptions {
            snapshot_times: if self.snapshot_times.is_empty() {
                vec![0.0]
            } else {
                self.snapshot_times.clone()
            },
            dt: self.dt,
            norm_orders: if self.norm_orders.is_empty() {
                vec![0.0]
            } else {
                self.norm_orders.clone()
            },
            energy_order: self.energy_order,
            tail_axis: self.tail_axis,
            tail_min_index: self.tail_min_index,
            stability_factor: self.stability_factor,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub start_time: f64,
    pub start: Vec<f64>,
    pub steps: usize,
    pub n_paths: u64,
    /// How many paths to dump as CSV files.
    #[serde(default)]
    pub dump_paths: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrossValidateConfig {
    /// Probe rows `[t, x1, ..., xd]`.
    pub probes: Vec<Vec<f64>>,
    pub n_samples: u64,
    pub path_steps: usize,
    #[serde(default = "default_confidence")]
    pub confidence_k: f64,
    pub budget: f64,
}

fn default_confidence() -> f64 {
    3.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmoothingConfig {
    pub base_order: f64,
    pub epsilon: f64,
    pub j_max: usize,
    pub tail_axis: usize,
    /// Regularity step for uncertified control problems; certified runs
    /// take it from the certificate.
    pub eta_override: Option<f64>,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_cert_levels")]
    pub n_max: usize,
    #[serde(default = "default_sample_per_axis")]
    pub sample_points_per_axis: usize,
}

fn default_cert_levels() -> usize {
    4
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Lemma42Config {
    pub fields: Vec<Vec<String>>,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    pub n_max: usize,
    #[serde(default = "default_sample_per_axis")]
    pub sample_points_per_axis: usize,
    pub base_order: f64,
    pub epsilons: Vec<f64>,
    pub n_probes: usize,
    pub band: usize,
    pub decay: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Example12Config {
    pub alpha: f64,
    pub utility: String,
    pub horizon: f64,
    /// `shifted-noise`, `bridge`, or `drifted`.
    pub case: String,
    /// Start value of the auxiliary state for bridge/drifted cases.
    #[serde(default)]
    pub start: f64,
    /// Drift expression in `(t, x1)` for the drifted case.
    pub drift: Option<String>,
    pub freeze_time: f64,
    pub scenario_steps: usize,
    pub path_steps: usize,
    pub n_samples: u64,
    pub probes: Vec<f64>,
    #[serde(default = "default_confidence")]
    pub confidence_k: f64,
    /// Absolute slack added to the confidence band; covers round-off in the
    /// exactly-cancelling cases where the standard error collapses to zero.
    #[serde(default = "default_exact_budget")]
    pub budget: f64,
}

fn default_exact_budget() -> f64 {
    1e-9
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default)]
    pub seed: u64,
    pub out_dir: Option<PathBuf>,
    pub grid: Option<GridConfig>,
    pub problem: Option<ProblemConfig>,
    pub certify: Option<CertifyConfig>,
    pub solve: Option<SolveConfig>,
    pub simulate: Option<SimulateConfig>,
    pub cross_validate: Option<CrossValidateConfig>,
    pub smoothing: Option<SmoothingConfig>,
    pub lemma42: Option<Lemma42Config>,
    pub example12: Option<Example12Config>,
}

impl ExperimentConfig {
    pub fn parse_str(text: &str) -> Result<ExperimentConfig, HarnessError> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<ExperimentConfig, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse_str(&text)
    }

    fn require<T>(section: &Option<T>, name: &str, kind: &str) -> Result<(), HarnessError> {
        if section.is_none() {
            return Err(HarnessError::Config(format!(
                "kind `{kind}` requires a `[{name}]` section"
            )));
        }
        Ok(())
    }

    /// Check that the sections required by the experiment kind are present.
    pub fn validate(&self) -> Result<(), HarnessError> {
        let kind = self.kind.as_str();
        match self.kind {
            ExperimentKind::Certify => {
                Self::require(&self.grid, "grid", kind)?;
                Self::require(&self.certify, "certify", kind)?;
            }
            ExperimentKind::Solve => {
                Self::require(&self.grid, "grid", kind)?;
                Self::require(&self.problem, "problem", kind)?;
                Self::require(&self.solve, "solve", kind)?;
            }
            ExperimentKind::Simulate => {
                Self::require(&self.grid, "grid", kind)?;
                Self::require(&self.problem, "problem", kind)?;
                Self::require(&self.simulate, "simulate", kind)?;
            }
            ExperimentKind::CrossValidate => {
                Self::require(&self.grid, "grid", kind)?;
                Self::require(&self.problem, "problem", kind)?;
                Self::require(&self.solve, "solve", kind)?;
                Self::require(&self.cross_validate, "cross_validate", kind)?;
            }
            ExperimentKind::SmoothingStudy => {
                Self::require(&self.grid, "grid", kind)?;
                Self::require(&self.problem, "problem", kind)?;
                Self::require(&self.smoothing, "smoothing", kind)?;
            }
            ExperimentKind::Lemma42Probe => {
                Self::require(&self.grid, "grid", kind)?;
                Self::require(&self.lemma42, "lemma42", kind)?;
            }
            ExperimentKind::Example12Verify => {
                Self::require(&self.example12, "example12", kind)?;
            }
        }
        Ok(())
    }
}
