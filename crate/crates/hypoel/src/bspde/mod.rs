//! The backward Hörmander-form solver: problem declaration, the RK4
//! pseudo-spectral march with viscosity splitting, energy and smoothing
//! ledgers, and distributional residual checks.

mod ledger;
mod problem;
mod residual;
mod smoothing;
mod solve;

pub use ledger::{energy_ledger, EnergyRecords, EnergyReport, SolutionLedger, SolveOptions};
pub use problem::{BspdeProblem, FieldSpec, SolveError};
pub use residual::{
    default_test_bank, weak_residual, weighted_shift_check, StochasticTerm, TestFunction, TimePoly,
};
pub use smoothing::{smoothing_study, smoothing_table, SmoothingRow};
pub use solve::{solve_backward, stability_step, viscosity_continuation};
