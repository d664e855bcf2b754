//! Mollification by a scaled smooth bump kernel.
//!
//! The kernel is the standard bump `rho(y) = exp(-1/(1-|y|^2))` supported in
//! the unit ball, normalized to unit mass, rescaled to support radius
//! `1/n_moll`, and applied as a convolution. The convolution is evaluated as
//! a Fourier symbol computed by a fixed 64-point-per-axis midpoint
//! quadrature over the kernel support, with the mass normalization taken
//! from the same quadrature so that constants (and means) are preserved to
//! round-off.

use num_complex::Complex64;

use super::field::GridField;
use super::grid::SpectralError;

const QUAD_POINTS: usize = 64;

fn bump(r_sq: f64) -> f64 {
    if r_sq < 1.0 {
        (-1.0 / (1.0 - r_sq)).exp()
    } else {
        0.0
    }
}

/// Convolve with the unit-mass bump scaled to support radius `1/n_moll`.
/// Preserves the mean exactly (up to round-off) and contracts the maximum
/// norm of band-limited fields. Errors if the scaled support would wrap
/// around more than half the torus.
pub fn mollify(field: &GridField, n_moll: usize) -> Result<GridField, SpectralError> {
    let grid = field.grid().clone();
    if n_moll == 0 || 1.0 / n_moll as f64 > std::f64::consts::PI * grid.period() {
        return Err(SpectralError::MollifierTooWide {
            n_moll,
            period: grid.period(),
        });
    }
    let d = grid.dim();
    let n = grid.n();

    // Midpoint nodes on [-1, 1] for the unscaled kernel variable.
    let nodes: Vec<f64> = (0..QUAD_POINTS)
        .map(|i| -1.0 + (i as f64 + 0.5) * 2.0 / QUAD_POINTS as f64)
        .collect();

    // Kernel values on the tensor quadrature grid (unnormalized; the common
    // quadrature weight cancels against the mass below).
    let q_total = QUAD_POINTS.pow(d as u32);
    let mut kernel: Vec<Complex64> = Vec::with_capacity(q_total);
    let mut mass = 0.0;
    for mut flat in 0..q_total {
        let mut r_sq = 0.0;
        for _ in 0..d {
            let z = nodes[flat % QUAD_POINTS];
            flat /= QUAD_POINTS;
            r_sq += z * z;
        }
        let v = bump(r_sq);
        mass += v;
        kernel.push(Complex64::new(v, 0.0));
    }

    // Phase table: e^{-i xi z / n_moll} for each per-axis frequency index
    // and quadrature node.
    let scale = 1.0 / n_moll as f64;
    let phases: Vec<Vec<Complex64>> = (0..n)
        .map(|j| {
            let xi = grid.freq(j);
            nodes
                .iter()
                .map(|z| {
                    let arg = -xi * z * scale;
                    Complex64::new(arg.cos(), arg.sin())
                })
                .collect()
        })
        .collect();

    // Contract the kernel tensor against the phase table one axis at a time:
    // after processing axis a (from the last to the first), the buffer is
    // indexed by (q_1..q_a, xi_{a+1}..xi_d).
    let mut buf = kernel;
    let mut q_axes = d;
    while q_axes > 0 {
        let lead = QUAD_POINTS.pow((q_axes - 1) as u32);
        let trail = buf.len() / (lead * QUAD_POINTS);
        let mut next = vec![Complex64::new(0.0, 0.0); lead * n * trail];
        for l in 0..lead {
            for q in 0..QUAD_POINTS {
                for tr in 0..trail {
                    let v = buf[(l * QUAD_POINTS + q) * trail + tr];
                    if v.norm_sqr() == 0.0 {
                        continue;
                    }
                    for (j, row) in phases.iter().enumerate() {
                        next[(l * n + j) * trail + tr] += v * row[q];
                    }
                }
            }
        }
        buf = next;
        q_axes -= 1;
    }

    let inv_mass = 1.0 / mass;
    let spec: Vec<Complex64> = field
        .spectrum()
        .iter()
        .zip(&buf)
        .map(|(c, s)| c * s * inv_mass)
        .collect();
    GridField::from_spectrum(&grid, spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{h_norm, TorusGrid};

    #[test]
    fn constants_are_fixed_points() {
        let g = TorusGrid::new(2, 16, 1.0).unwrap();
        let f = GridField::from_fn(&g, |_| 2.75);
        for n_moll in [1usize, 4, 16] {
            let out = mollify(&f, n_moll).unwrap();
            assert!(out.sub(&f).linf() < 1e-12, "n_moll={n_moll}");
        }
    }

    #[test]
    fn mean_is_preserved() {
        let g = TorusGrid::new(1, 64, 1.0).unwrap();
        let f = GridField::from_fn(&g, |p| p[0].sin() + 0.37 + (5.0 * p[0]).cos());
        let out = mollify(&f, 8).unwrap();
        assert!((out.mean() - f.mean()).abs() < 1e-13);
    }

    #[test]
    fn lipschitz_error_bound_for_sine() {
        // |G_N - G|_inf <= Lip(G)/N = 1/N for G = sin.
        let g = TorusGrid::new(1, 128, 1.0).unwrap();
        let f = GridField::from_fn(&g, |p| p[0].sin());
        for n_moll in [4usize, 8, 16, 32] {
            let out = mollify(&f, n_moll).unwrap();
            let err = out.sub(&f).linf();
            assert!(
                err <= 1.0 / n_moll as f64,
                "n_moll={n_moll}: err {err} > {}",
                1.0 / n_moll as f64
            );
        }
    }

    #[test]
    fn max_norm_contracts_on_band_limited_fields() {
        let g = TorusGrid::new(1, 64, 1.0).unwrap();
        let f = GridField::from_fn(&g, |p| p[0].sin() - 0.6 * (4.0 * p[0]).cos());
        let out = mollify(&f, 8).unwrap();
        assert!(out.linf() <= f.linf() + 1e-12);
    }

    #[test]
    fn square_wave_h2_norm_diverges_with_sharpness() {
        // Mollifying rough data at increasing sharpness N gives smooth fields
        // whose H^2 norms are finite per N but grow without bound. Oracle:
        // an independent direct quadrature of the same convolution.
        let g = TorusGrid::new(1, 128, 1.0).unwrap();
        let f = GridField::square_wave(&g, 1).unwrap();
        let norms: Vec<f64> = [4usize, 8, 16]
            .iter()
            .map(|&m| h_norm(&mollify(&f, m).unwrap(), 2.0))
            .collect();
        assert!(norms[0].is_finite() && norms[1].is_finite() && norms[2].is_finite());
        assert!(norms[0] < norms[1] && norms[1] < norms[2], "{norms:?}");
        // Direct physical-space quadrature oracle at N=4: convolve the
        // band-limited interpolant against the kernel by brute force.
        let m = 4usize;
        let nodes: Vec<f64> = (0..64)
            .map(|i| -1.0 + (i as f64 + 0.5) * 2.0 / 64.0)
            .collect();
        let weights: Vec<f64> = nodes.iter().map(|z| bump(z * z)).collect();
        let mass: f64 = weights.iter().sum();
        // Evaluate the interpolant of f at arbitrary points via its spectrum.
        let spec = f.spectrum().to_vec();
        let eval = |x: f64| -> f64 {
            let mut acc = 0.0;
            for (j, c) in spec.iter().enumerate() {
                let xi = g.freq(j);
                acc += (c * Complex64::new(0.0, xi * x).exp()).re;
            }
            acc
        };
        let direct = GridField::from_fn(&g, |p| {
            let mut acc = 0.0;
            for (z, w) in nodes.iter().zip(&weights) {
                acc += w * eval(p[0] - z / m as f64);
            }
            acc / mass
        });
        let spectral = mollify(&f, m).unwrap();
        let rel = direct.sub(&spectral).linf() / spectral.linf();
        assert!(rel < 1e-10, "direct vs spectral mollify: {rel}");
    }

    #[test]
    fn l2_distance_decreases_monotonically_in_sharpness() {
        let g = TorusGrid::new(1, 64, 1.0).unwrap();
        let f = GridField::from_fn(&g, |p| p[0].sin() + 0.5 * (3.0 * p[0]).cos());
        let dists: Vec<f64> = [2usize, 4, 8, 16]
            .iter()
            .map(|&m| mollify(&f, m).unwrap().sub(&f).l2())
            .collect();
        for pair in dists.windows(2) {
            assert!(pair[1] < pair[0], "not monotone: {dists:?}");
        }
    }

    #[test]
    fn support_wider_than_half_period_rejected() {
        let g = TorusGrid::new(1, 32, 0.1).unwrap();
        let f = GridField::from_fn(&g, |p| p[0].cos());
        assert!(matches!(
            mollify(&f, 2),
            Err(SpectralError::MollifierTooWide { .. })
        ));
        assert!(mollify(&f, 8).is_ok());
    }
}
