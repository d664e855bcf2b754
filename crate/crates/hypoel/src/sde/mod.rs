//! Itô-process simulation: dual-noise increments, Euler-Maruyama paths,
//! exact Brownian-bridge sampling, frozen scenarios, and the shifted-utility
//! closed-form example.

mod bridge;
mod example12;
mod noise;
mod path;
mod scenario;

pub use bridge::brownian_bridge;
pub use example12::{Example12, Example12State, HistoryKind};
pub use noise::{NoiseGrid, SdeError};
pub use path::{simulate_path, CompiledDynamics, SdePath};
pub use scenario::Scenario;
