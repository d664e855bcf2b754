//! Configuration-driven experiment harness: TOML configs in, deterministic
//! CSV/JSON/binary artifacts plus a manifest out.

mod config;
mod emit;
mod run;

pub use config::{
    CertifyConfig, CrossValidateConfig, DataConfig, Example12Config, ExperimentConfig,
    ExperimentKind, GridConfig, HarnessError, Lemma42Config, ProblemConfig, SimulateConfig,
    SmoothingConfig, SolveConfig,
};
pub use emit::{fmt_f64, write_atomic, Emitter};
pub use run::{run_experiment, RunOutcome};
