//! Pseudo-spectral application of first-order operators: derivatives in
//! spectral space, coefficient products in physical space.

use std::sync::Arc;

use crate::symbolic::FirstOrderOperator;

use super::field::GridField;
use super::grid::{SpectralError, TorusGrid};
use super::norms::derivative;

/// Sample each coefficient of an operator on the grid at time `t`,
/// requiring finite values. Structurally zero coefficients yield `None`
/// so callers can skip the corresponding axis entirely.
pub fn sample_coeffs(
    op: &FirstOrderOperator,
    grid: &Arc<TorusGrid>,
    t: f64,
) -> Result<Vec<Option<GridField>>, SpectralError> {
    op.coeffs()
        .iter()
        .map(|a| {
            if a.is_zero() {
                Ok(None)
            } else {
                GridField::from_expr(grid, a, t).map(Some)
            }
        })
        .collect()
}

/// Apply `F = sum_j a^j D_j` to a field: derivatives spectrally,
/// coefficient multiplication pointwise.
pub fn apply_operator(
    op: &FirstOrderOperator,
    phi: &GridField,
    t: f64,
) -> Result<GridField, SpectralError> {
    let coeffs = sample_coeffs(op, phi.grid(), t)?;
    apply_sampled(&coeffs, phi)
}

/// Apply an operator whose coefficients were already sampled with
/// [`sample_coeffs`]; the hot path inside solvers.
pub fn apply_sampled(
    coeffs: &[Option<GridField>],
    phi: &GridField,
) -> Result<GridField, SpectralError> {
    let mut acc = GridField::zeros(phi.grid());
    for (j, coeff) in coeffs.iter().enumerate() {
        let Some(a) = coeff else { continue };
        if a.grid() != phi.grid() {
            return Err(SpectralError::GridMismatch);
        }
        let d = derivative(phi, j + 1)?;
        acc = acc.add(&a.mul_pointwise(&d));
    }
    Ok(acc)
}
