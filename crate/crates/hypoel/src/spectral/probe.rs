//! Test-probe generation and the bracket-estimate ratio.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use std::sync::Arc;

use crate::symbolic::{lie_bracket, FirstOrderOperator};

use super::field::GridField;
use super::grid::{SpectralError, TorusGrid};
use super::norms::h_norm;
use super::ops::apply_operator;

/// A deterministic random field with Fourier support in `|k| <= band`
/// (integer frequency indices) and amplitudes damped like
/// `(1 + |xi|^2)^{-decay/2}`.
///
/// The mode coefficients are drawn in a fixed order that depends only on
/// `(seed, band)`, not on the grid, so the same seed realizes the *same*
/// field on grids of different resolution — the property that makes
/// two-resolution comparisons meaningful.
pub fn random_band_limited(
    grid: &Arc<TorusGrid>,
    seed: u64,
    band: usize,
    decay: f64,
) -> Result<GridField, SpectralError> {
    if band >= grid.n() / 2 {
        return Err(SpectralError::BandTooLarge { band, n: grid.n() });
    }
    let d = grid.dim();
    let n = grid.n();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut spec = vec![Complex64::new(0.0, 0.0); grid.len()];

    // Iterate the integer cube [-band, band]^d in lexicographic order and
    // keep the canonical representative of each +-k pair (first nonzero
    // component positive).
    let side = 2 * band + 1;
    let total = side.pow(d as u32);
    for mut flat in 0..total {
        let mut k = vec![0i64; d];
        for slot in k.iter_mut().rev() {
            *slot = (flat % side) as i64 - band as i64;
            flat /= side;
        }
        let norm_sq: i64 = k.iter().map(|c| c * c).sum();
        if norm_sq > (band * band) as i64 {
            continue;
        }
        let canonical = k.iter().find(|c| **c != 0).map(|c| *c > 0).unwrap_or(true);
        if !canonical {
            continue;
        }
        // Fixed draw order: one amplitude and one phase per canonical mode.
        let a: f64 = rng.sample(rand_distr::StandardNormal);
        let phase: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let xi_sq: f64 = k
            .iter()
            .map(|c| {
                let xi = *c as f64 / grid.period();
                xi * xi
            })
            .sum();
        let amp = a * (1.0 + xi_sq).powf(-decay / 2.0);
        if norm_sq == 0 {
            spec[0] += Complex64::new(amp, 0.0);
            continue;
        }
        // a * amp * cos(xi . x + phase) split over the +-k pair.
        let c = Complex64::new(phase.cos(), phase.sin()) * (amp / 2.0);
        let mut pos = 0usize;
        let mut neg = 0usize;
        for comp in &k {
            let jp = comp.rem_euclid(n as i64) as usize;
            let jn = (-comp).rem_euclid(n as i64) as usize;
            pos = pos * n + jp;
            neg = neg * n + jn;
        }
        spec[pos] += c;
        spec[neg] += c.conj();
    }
    GridField::from_spectrum(grid, spec)
}

/// Both sides of the bracket estimate
/// `|[Lt, L] phi|_{m-1+e/2} <= C (|Lt phi|_{m-1+e} + |L phi|_m + |phi|_m)`.
#[derive(Clone, Copy, Debug)]
pub struct CommutatorRatio {
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs / rhs`, defined as 0 when `rhs` vanishes.
    pub ratio: f64,
}

/// Evaluate the bracket-estimate ratio for a pair of first-order operators
/// on a probe field, with coefficients frozen at time `t`.
/// Requires `epsilon` in `[0, 1]`.
pub fn commutator_ratio(
    lt: &FirstOrderOperator,
    l: &FirstOrderOperator,
    phi: &GridField,
    m: f64,
    epsilon: f64,
    t: f64,
) -> Result<CommutatorRatio, SpectralError> {
    assert!((0.0..=1.0).contains(&epsilon), "epsilon must lie in [0, 1]");
    let bracket = lie_bracket(lt, l).map_err(|e| SpectralError::CoefficientEval {
        detail: e.to_string(),
    })?;
    let lhs = h_norm(&apply_operator(&bracket, phi, t)?, m - 1.0 + epsilon / 2.0);
    let rhs = h_norm(&apply_operator(lt, phi, t)?, m - 1.0 + epsilon)
        + h_norm(&apply_operator(l, phi, t)?, m)
        + h_norm(phi, m);
    let ratio = if rhs == 0.0 { 0.0 } else { lhs / rhs };
    Ok(CommutatorRatio { lhs, rhs, ratio })
}
