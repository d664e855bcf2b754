//! The periodic computational domain and its Fourier transform machinery.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectralError {
    #[error("grid must have a power-of-two axis length >= 4, got {n}")]
    BadAxisLength { n: usize },
    #[error("grid dimension must be >= 1")]
    BadDimension,
    #[error("grid period multiplier must be positive, got {period}")]
    BadPeriod { period: f64 },
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("sample buffer length {got}, expected {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("coefficient evaluation produced a non-finite value: {detail}")]
    CoefficientEval { detail: String },
    #[error("band {band} too large for grid with {n} points per axis (need band < n/2)")]
    BandTooLarge { band: usize, n: usize },
    #[error("mollifier support 1/{n_moll} exceeds half the period (period multiplier {period})")]
    MollifierTooWide { n_moll: usize, period: f64 },
    #[error("Sobolev order {order} exceeds the grid's resolvable cap {cap:.2}")]
    UnresolvedOrder { order: f64, cap: f64 },
    #[error("axis {axis} out of range 1..={dim}")]
    AxisOutOfRange { axis: usize, dim: usize },
}

/// A uniform grid on the torus `[0, 2*pi*P)^d` with `n` points per axis
/// (`n` a power of two). Carries the cached frequency table and FFT plans;
/// fields hold an `Arc` to their grid and refuse to combine across grids.
pub struct TorusGrid {
    dim: usize,
    n: usize,
    period: f64,
    /// Integer frequency per axis index, in DFT order: 0, 1, ..., n/2, -n/2+1, ..., -1.
    freq_int: Vec<i64>,
    /// Physical frequency `k / P` per axis index.
    freq: Vec<f64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for TorusGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "TorusGrid(d={}, n={}, period={})",
            self.dim, self.n, self.period
        )
    }
}

impl PartialEq for TorusGrid {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.n == other.n && self.period == other.period
    }
}

impl TorusGrid {
    /// Create a grid of dimension `dim` with `n` points per axis and axis
    /// period `2*pi*period`.
    pub fn new(dim: usize, n: usize, period: f64) -> Result<Arc<TorusGrid>, SpectralError> {
        if dim == 0 {
            return Err(SpectralError::BadDimension);
        }
        if n < 4 || !n.is_power_of_two() {
            return Err(SpectralError::BadAxisLength { n });
        }
        if period <= 0.0 || !period.is_finite() {
            return Err(SpectralError::BadPeriod { period });
        }
        let freq_int: Vec<i64> = (0..n)
            .map(|j| {
                if j <= n / 2 {
                    j as i64
                } else {
                    j as i64 - n as i64
                }
            })
            .collect();
        let freq = freq_int.iter().map(|k| *k as f64 / period).collect();
        let mut planner = FftPlanner::new();
        Ok(Arc::new(TorusGrid {
            dim,
            n,
            period,
            freq_int,
            freq,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        }))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Points per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Period multiplier `P`; the axis length is `2*pi*P`.
    pub fn period(&self) -> f64 {
        self.period
    }

    /// Total number of grid points, `n^d`.
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Axis length `2*pi*P`.
    pub fn axis_len(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.period
    }

    /// Grid spacing per axis.
    pub fn spacing(&self) -> f64 {
        self.axis_len() / self.n as f64
    }

    /// Quadrature weight of one cell, `spacing^d`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Torus volume `(2*pi*P)^d`.
    pub fn volume(&self) -> f64 {
        self.axis_len().powi(self.dim as i32)
    }

    /// Integer frequency of axis index `j`.
    pub fn freq_int(&self, j: usize) -> i64 {
        self.freq_int[j]
    }

    /// Physical frequency `k/P` of axis index `j`.
    pub fn freq(&self, j: usize) -> f64 {
        self.freq[j]
    }

    /// Decompose a flat index into per-axis indices (row-major, axis 0
    /// outermost).
    pub fn axis_indices(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0usize; self.dim];
        for slot in idx.iter_mut().rev() {
            *slot = flat % self.n;
            flat /= self.n;
        }
        idx
    }

    /// Coordinates of the grid point with the given flat index.
    pub fn point(&self, flat: usize) -> Vec<f64> {
        let h = self.spacing();
        self.axis_indices(flat)
            .iter()
            .map(|i| *i as f64 * h)
            .collect()
    }

    /// `1 + |xi|^2` at a flat spectral index.
    pub fn one_plus_xi_sq(&self, flat: usize) -> f64 {
        let mut acc = 1.0;
        let mut rem = flat;
        for _ in 0..self.dim {
            let j = rem % self.n;
            rem /= self.n;
            let f = self.freq[j];
            acc += f * f;
        }
        acc
    }

    /// Largest Sobolev order whose Bessel multiplier stays within the f64
    /// dynamic range on this grid. Orders beyond the cap amplify round-off
    /// at the Nyquist frequency past any useful accuracy.
    pub fn resolvable_order_cap(&self) -> f64 {
        let xi_max = (self.n as f64 / 2.0) / self.period;
        52.0 * std::f64::consts::LN_2 / (1.0 + xi_max * xi_max).ln()
    }

    /// Forward transform: samples to normalized DFT coefficients, so that the
    /// coefficient at frequency `xi` is the amplitude of `exp(i xi . x)`.
    pub(crate) fn forward(&self, samples: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = samples.iter().map(|s| Complex64::new(*s, 0.0)).collect();
        self.fft_axes(&mut buf, true);
        let scale = 1.0 / self.len() as f64;
        for c in &mut buf {
            *c *= scale;
        }
        buf
    }

    /// Inverse transform: normalized DFT coefficients back to real samples
    /// (the imaginary residue of a Hermitian-symmetric spectrum is dropped).
    pub(crate) fn inverse(&self, spectrum: &[Complex64]) -> Vec<f64> {
        let mut buf = spectrum.to_vec();
        self.fft_axes(&mut buf, false);
        buf.iter().map(|c| c.re).collect()
    }

    fn fft_axes(&self, buf: &mut [Complex64], forward: bool) {
        let n = self.n;
        let plan = if forward { &self.fwd } else { &self.inv };
        let mut lane = vec![Complex64::new(0.0, 0.0); n];
        let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        for axis in 0..self.dim {
            let stride = n.pow((self.dim - 1 - axis) as u32);
            let block = stride * n;
            let lanes_outer = self.len() / block;
            for outer in 0..lanes_outer {
                for inner in 0..stride {
                    let start = outer * block + inner;
                    for (j, slot) in lane.iter_mut().enumerate() {
                        *slot = buf[start + j * stride];
                    }
                    plan.process_with_scratch(&mut lane, &mut scratch);
                    for (j, value) in lane.iter().enumerate() {
                        buf[start + j * stride] = *value;
                    }
                }
            }
        }
    }
}
