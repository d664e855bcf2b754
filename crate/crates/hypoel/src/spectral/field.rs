//! Sampled fields on a torus grid with a lazily computed spectral view.

use num_complex::Complex64;
use std::sync::{Arc, OnceLock};

use crate::symbolic::Expr;

use super::grid::{SpectralError, TorusGrid};

/// A real field sampled on a [`TorusGrid`], with Fourier coefficients
/// computed on demand and cached. Values are immutable once constructed;
/// operations return new fields. Fields on different grids never combine.
pub struct GridField {
    grid: Arc<TorusGrid>,
    samples: Vec<f64>,
    spectrum: OnceLock<Vec<Complex64>>,
}

impl Clone for GridField {
    fn clone(&self) -> Self {
        GridField {
            grid: self.grid.clone(),
            samples: self.samples.clone(),
            spectrum: self.spectrum.clone(),
        }
    }
}

impl std::fmt::Debug for GridField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "GridField({:?}, linf={:.3e})", self.grid, self.linf())
    }
}

impl GridField {
    /// The zero field.
    pub fn zeros(grid: &Arc<TorusGrid>) -> GridField {
        GridField {
            grid: grid.clone(),
            samples: vec![0.0; grid.len()],
            spectrum: OnceLock::new(),
        }
    }

    /// Wrap an explicit sample buffer (row-major, axis 0 outermost).
    pub fn from_samples(
        grid: &Arc<TorusGrid>,
        samples: Vec<f64>,
    ) -> Result<GridField, SpectralError> {
        if samples.len() != grid.len() {
            return Err(SpectralError::LengthMismatch {
                expected: grid.len(),
                got: samples.len(),
            });
        }
        Ok(GridField {
            grid: grid.clone(),
            samples,
            spectrum: OnceLock::new(),
        })
    }

    /// Sample a function of the grid point coordinates.
    pub fn from_fn(grid: &Arc<TorusGrid>, f: impl Fn(&[f64]) -> f64) -> GridField {
        let samples = (0..grid.len()).map(|i| f(&grid.point(i))).collect();
        GridField {
            grid: grid.clone(),
            samples,
            spectrum: OnceLock::new(),
        }
    }

    /// Sample a symbolic expression at time `t`, requiring every value to be
    /// finite.
    pub fn from_expr(grid: &Arc<TorusGrid>, e: &Expr, t: f64) -> Result<GridField, SpectralError> {
        let ev = e.evaluator();
        let mut samples = Vec::with_capacity(grid.len());
        for i in 0..grid.len() {
            let p = grid.point(i);
            let v = ev.eval(&p, t);
            if !v.is_finite() {
                return Err(SpectralError::CoefficientEval {
                    detail: format!("`{e}` at {p:?}, t={t}"),
                });
            }
            samples.push(v);
        }
        Ok(GridField {
            grid: grid.clone(),
            samples,
            spectrum: OnceLock::new(),
        })
    }

    /// Build a field from its normalized DFT coefficients.
    pub fn from_spectrum(
        grid: &Arc<TorusGrid>,
        spectrum: Vec<Complex64>,
    ) -> Result<GridField, SpectralError> {
        if spectrum.len() != grid.len() {
            return Err(SpectralError::LengthMismatch {
                expected: grid.len(),
                got: spectrum.len(),
            });
        }
        let samples = grid.inverse(&spectrum);
        let cell = OnceLock::new();
        let _ = cell.set(spectrum);
        Ok(GridField {
            grid: grid.clone(),
            samples,
            spectrum: cell,
        })
    }

    /// The truncated Fourier series of the unit square wave along one axis
    /// (1-based): `sum_{odd k <= cut} (4 / (pi k)) sin(k x / P)`. The cutoff
    /// is the grid's dealias band `n/3`, so the rough data is exactly
    /// representable by the solver's working band.
    pub fn square_wave(grid: &Arc<TorusGrid>, axis: usize) -> Result<GridField, SpectralError> {
        if axis == 0 || axis > grid.dim() {
            return Err(SpectralError::AxisOutOfRange {
                axis,
                dim: grid.dim(),
            });
        }
        let cut = grid.n() / 3;
        let n = grid.n();
        let mut spec = vec![Complex64::new(0.0, 0.0); grid.len()];
        // Flat index of the mode with k on `axis` and zero elsewhere.
        let stride = n.pow((grid.dim() - axis) as u32);
        let mut k = 1usize;
        while k <= cut {
            let c = 2.0 / (std::f64::consts::PI * k as f64);
            // sin(k x) = (e^{ikx} - e^{-ikx}) / (2i): coefficient -i*c at +k.
            spec[k * stride] = Complex64::new(0.0, -c);
            spec[(n - k) * stride] = Complex64::new(0.0, c);
            k += 2;
        }
        GridField::from_spectrum(grid, spec)
    }

    pub fn grid(&self) -> &Arc<TorusGrid> {
        &self.grid
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    /// Normalized DFT coefficients (computed once, then cached).
    pub fn spectrum(&self) -> &[Complex64] {
        self.spectrum
            .get_or_init(|| self.grid.forward(&self.samples))
    }

    pub fn at(&self, flat: usize) -> f64 {
        self.samples[flat]
    }

    fn same_grid(&self, other: &GridField) {
        assert!(
            self.grid == other.grid,
            "fields on different grids never combine"
        );
    }

    pub fn add(&self, other: &GridField) -> GridField {
        self.same_grid(other);
        let samples = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| a + b)
            .collect();
        GridField {
            grid: self.grid.clone(),
            samples,
            spectrum: OnceLock::new(),
        }
    }

    pub fn sub(&self, other: &GridField) -> GridField {
        self.same_grid(other);
        let samples = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| a - b)
            .collect();
        GridField {
            grid: self.grid.clone(),
            samples,
            spectrum: OnceLock::new(),
        }
    }

    pub fn scale(&self, c: f64) -> GridField {
        GridField {
            grid: self.grid.clone(),
            samples: self.samples.iter().map(|s| s * c).collect(),
            spectrum: OnceLock::new(),
        }
    }

    /// Pointwise product, the physical-space half of a pseudo-spectral
    /// operator application.
    pub fn mul_pointwise(&self, other: &GridField) -> GridField {
        self.same_grid(other);
        let samples = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| a * b)
            .collect();
        GridField {
            grid: self.grid.clone(),
            samples,
            spectrum: OnceLock::new(),
        }
    }

    /// `self + c * other`, fused to avoid an intermediate field.
    pub fn axpy(&self, c: f64, other: &GridField) -> GridField {
        self.same_grid(other);
        let samples = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| a + c * b)
            .collect();
        GridField {
            grid: self.grid.clone(),
            samples,
            spectrum: OnceLock::new(),
        }
    }

    /// Apply a spectral multiplier `m(flat spectral index)`.
    pub fn spectral_multiplier(&self, m: impl Fn(usize) -> Complex64) -> GridField {
        let spec: Vec<Complex64> = self
            .spectrum()
            .iter()
            .enumerate()
            .map(|(i, c)| c * m(i))
            .collect();
        GridField::from_spectrum(&self.grid, spec).expect("same grid")
    }

    /// Zero every mode with an axis index above `cut` in absolute value.
    pub fn low_pass(&self, cut: usize) -> GridField {
        let n = self.grid.n();
        let dim = self.grid.dim();
        let spec: Vec<Complex64> = self
            .spectrum()
            .iter()
            .enumerate()
            .map(|(flat, c)| {
                let mut rem = flat;
                for _ in 0..dim {
                    let j = rem % n;
                    rem /= n;
                    if self.grid.freq_int(j).unsigned_abs() as usize > cut {
                        return Complex64::new(0.0, 0.0);
                    }
                }
                *c
            })
            .collect();
        GridField::from_spectrum(&self.grid, spec).expect("same grid")
    }

    /// Evaluate the trigonometric interpolant at an arbitrary point (the
    /// real part of the mode sum). Exact on band-limited fields; reproduces
    /// the samples at grid points.
    pub fn eval_at(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.grid.dim(), "point dimension mismatch");
        let n = self.grid.n();
        let dim = self.grid.dim();
        // Per-axis phase tables e^{i xi_j x_a}.
        let phases: Vec<Vec<Complex64>> = (0..dim)
            .map(|a| {
                (0..n)
                    .map(|j| {
                        let arg = self.grid.freq(j) * x[a];
                        Complex64::new(arg.cos(), arg.sin())
                    })
                    .collect()
            })
            .collect();
        let mut acc = Complex64::new(0.0, 0.0);
        for (flat, c) in self.spectrum().iter().enumerate() {
            if c.norm_sqr() == 0.0 {
                continue;
            }
            let mut phase = Complex64::new(1.0, 0.0);
            let mut rem = flat;
            for a in (0..dim).rev() {
                phase *= phases[a][rem % n];
                rem /= n;
            }
            acc += c * phase;
        }
        acc.re
    }

    /// Maximum absolute sample value.
    pub fn linf(&self) -> f64 {
        self.samples.iter().fold(0.0f64, |m, s| m.max(s.abs()))
    }

    /// L2 norm under the grid quadrature `(2 pi P / n)^d`.
    pub fn l2(&self) -> f64 {
        let sum: f64 = self.samples.iter().map(|s| s * s).sum();
        (self.grid.cell_volume() * sum).sqrt()
    }

    /// Mean value over the torus.
    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.samples.len() as f64
    }

    /// L2 inner product under the grid quadrature.
    pub fn inner(&self, other: &GridField) -> f64 {
        self.same_grid(other);
        let sum: f64 = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| a * b)
            .sum();
        self.grid.cell_volume() * sum
    }
}
