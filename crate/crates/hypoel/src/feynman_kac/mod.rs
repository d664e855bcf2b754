//! Conditional Monte Carlo estimation of the backward solution and
//! cross-validation against solver output and closed forms.

mod cross_validate;
mod estimate;

pub use cross_validate::{cross_validate, CrossValidationReport, Probe, ProbeResult, Reference};
pub use estimate::{
    estimate_u, estimate_u_streamed, Estimate, Example12Model, MarkovianModel, McError, PayoffModel,
};
