//! A numerical laboratory for hypoelliptic smoothing in degenerate backward
//! parabolic equations: symbolic bracket-condition certificates, spectral
//! Sobolev calculus on the periodic torus, a backward pseudo-spectral
//! solver with energy and smoothing ledgers, Itô-process simulation, and
//! conditional Monte Carlo cross-validation.
//!
//! The layers, bottom up:
//!
//! - [`symbolic`] — coefficient expressions in canonical form with exact
//!   rational arithmetic, first-order operators, Lie brackets, bracket
//!   generations, and the pointwise spanning certificate (`n0`,
//!   `eta = 2^-n0`).
//! - [`spectral`] — torus grids, sampled fields with cached spectra, the
//!   Bessel potential `(1 - Lap)^{n/2}` as an exact Fourier multiplier,
//!   Sobolev norms of any real order, pseudo-spectral operator application,
//!   mollification, and probe generation.
//! - [`sde`] — deterministic dual-noise increments, Euler-Maruyama paths,
//!   exact Brownian-bridge sampling, frozen scenarios, and the
//!   shifted-utility closed-form example.
//! - [`bspde`] — the backward solver (RK4 method of lines, 2/3-rule
//!   dealiasing, exactly integrated viscosity splitting), solution ledgers,
//!   energy balances, distributional residuals, and smoothing studies.
//! - [`feynman_kac`] — conditional Monte Carlo estimation of the solution
//!   along simulated paths and cross-validation against solver output and
//!   closed forms.
//! - [`harness`] — the TOML-driven batch front end behind the `hypoel`
//!   binary, emitting deterministic CSV/JSON/binary artifacts.
//!
//! The narrative guide lives in `book/` (mdBook); its code snippets are
//! compiled and executed as doc-tests below, so guide and library cannot
//! drift apart.

pub mod bspde;
pub mod feynman_kac;
pub mod harness;
pub mod sde;
pub mod spectral;
pub mod symbolic;

// Run every snippet in the guide as a doc-test.
#[cfg(doctest)]
mod guide {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/expressions.md")]
    mod expressions {}
    #[doc = include_str!("../../../book/src/brackets.md")]
    mod brackets {}
    #[doc = include_str!("../../../book/src/spectral.md")]
    mod spectral {}
    #[doc = include_str!("../../../book/src/solver.md")]
    mod solver {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
    #[doc = include_str!("../../../book/src/monte-carlo.md")]
    mod monte_carlo {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
