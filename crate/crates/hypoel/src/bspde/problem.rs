//! Problem declaration for the backward Hörmander-form equation
//!
//! ```text
//! -du = [ (1/2)(L_k^2 + M_k^2) u + M_k v^k + b.Du + c u + gamma.v
//!         + f + L_k g^k + delta Lap u ] dt - v dW,
//! ```
//!
//! with `L_k`, `M_k` the column operators of the diffusion coefficient
//! matrices.

use std::sync::Arc;
use thiserror::Error;

use crate::spectral::{GridField, SpectralError, TorusGrid};
use crate::symbolic::{Expr, ExprMatrix, FirstOrderOperator};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("solve_backward requires a Markovian problem (deterministic coefficients, v = 0)")]
    NotMarkovian,
    #[error("problem shape error: {detail}")]
    BadShape { detail: String },
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error("step {dt} violates the stability rule (max {dt_max:.3e})")]
    StabilityRule { dt: f64, dt_max: f64 },
    #[error("norm blow-up detected at t={t:.4} (L2 norm {norm:.3e}); reduce dt")]
    BlowUp { t: f64, norm: f64 },
    #[error("snapshot times must be sorted, distinct, and lie in [0, T]")]
    BadSnapshotTimes,
    #[error("empty test bank")]
    EmptyTestBank,
    #[error("epsilon {epsilon} outside (0, min(T, 1))")]
    BadEpsilon { epsilon: f64 },
    #[error("ledger does not carry energy records at order {order}")]
    LedgerMissingOrder { order: f64 },
    #[error("viscosity ladder must be strictly decreasing and nonnegative")]
    BadLadder,
    #[error(
        "coefficient `{expr}` has a denominator vanishing on the torus (min |den| = {min_abs:.3e})"
    )]
    VanishingDenominator { expr: String, min_abs: f64 },
}

/// Data fields (`f`, `g^k`, `G`) declared either symbolically or as rough
/// built-ins, materialized on a grid at a given time.
#[derive(Clone, Debug)]
pub enum FieldSpec {
    Zero,
    /// A coefficient expression, possibly time-dependent.
    Expr(Expr),
    /// The square wave along an axis, represented by its Fourier series
    /// truncated to the grid's dealias band.
    SquareWave {
        axis: usize,
    },
    /// An explicit (time-independent) field.
    Samples(GridField),
}

impl FieldSpec {
    pub fn is_zero(&self) -> bool {
        match self {
            FieldSpec::Zero => true,
            FieldSpec::Expr(e) => e.is_zero(),
            _ => false,
        }
    }

    pub fn uses_time(&self) -> bool {
        match self {
            FieldSpec::Expr(e) => e.uses_time(),
            _ => false,
        }
    }

    /// Sample on `grid` at time `t`.
    pub fn materialize(&self, grid: &Arc<TorusGrid>, t: f64) -> Result<GridField, SolveError> {
        match self {
            FieldSpec::Zero => Ok(GridField::zeros(grid)),
            FieldSpec::Expr(e) => Ok(GridField::from_expr(grid, e, t)?),
            FieldSpec::SquareWave { axis } => Ok(GridField::square_wave(grid, *axis)?),
            FieldSpec::Samples(f) => {
                if f.grid() != grid {
                    return Err(SolveError::Spectral(SpectralError::GridMismatch));
                }
                Ok(f.clone())
            }
        }
    }
}

/// The full problem data: coefficients, sources, terminal data, horizon,
/// and the viscosity regularization weight.
#[derive(Clone, Debug)]
pub struct BspdeProblem {
    pub dim: usize,
    pub noise_dim: usize,
    /// `d x d1`; column `k` is the operator `L_k`.
    pub sigma: ExprMatrix,
    /// `d x d1`; column `k` is the operator `M_k`.
    pub theta: ExprMatrix,
    /// First-order drift `b`, length `d`.
    pub drift: Vec<Expr>,
    /// Zeroth-order coefficient `c`.
    pub zero_order: Expr,
    /// Coefficients `gamma` of the `v` terms, length `d1`.
    pub gamma: Vec<Expr>,
    /// Running source `f`.
    pub source: FieldSpec,
    /// Gradient sources `g^k`, length `d1`.
    pub gradient_sources: Vec<FieldSpec>,
    /// Terminal data `G`.
    pub terminal: FieldSpec,
    /// Horizon `T`.
    pub horizon: f64,
    /// Deterministic coefficients and data; required by the backward solver,
    /// under which the martingale density `v` vanishes identically.
    pub markovian: bool,
    /// Viscosity weight `delta >= 0`.
    pub viscosity: f64,
}

impl BspdeProblem {
    /// A problem skeleton with zero coefficients and data, unit horizon.
    pub fn empty(dim: usize, noise_dim: usize) -> BspdeProblem {
        BspdeProblem {
            dim,
            noise_dim,
            sigma: ExprMatrix::zeros(dim, noise_dim),
            theta: ExprMatrix::zeros(dim, noise_dim),
            drift: vec![Expr::zero(); dim],
            zero_order: Expr::zero(),
            gamma: vec![Expr::zero(); noise_dim],
            source: FieldSpec::Zero,
            gradient_sources: vec![FieldSpec::Zero; noise_dim],
            terminal: FieldSpec::Zero,
            horizon: 1.0,
            markovian: true,
            viscosity: 0.0,
        }
    }

    /// The isotropic heat problem: `L_k = D_k` for every axis, terminal
    /// data `G`. Its solution on a single Fourier mode is the classical
    /// separation-of-variables decay.
    pub fn heat(dim: usize, horizon: f64, terminal: FieldSpec) -> BspdeProblem {
        let mut sigma_rows = Vec::with_capacity(dim);
        for i in 1..=dim {
            let row = (1..=dim)
                .map(|k| if i == k { Expr::one() } else { Expr::zero() })
                .collect();
            sigma_rows.push(row);
        }
        BspdeProblem {
            sigma: ExprMatrix::from_rows(sigma_rows).expect("square identity"),
            terminal,
            horizon,
            ..BspdeProblem::empty(dim, dim)
        }
    }

    /// Shape and range validation.
    pub fn validate(&self) -> Result<(), SolveError> {
        let fail = |detail: String| Err(SolveError::BadShape { detail });
        if self.dim == 0 || self.noise_dim == 0 {
            return fail("dimensions must be positive".into());
        }
        if self.sigma.rows() != self.dim || self.sigma.cols() != self.noise_dim {
            return fail(format!(
                "sigma is {}x{}, expected {}x{}",
                self.sigma.rows(),
                self.sigma.cols(),
                self.dim,
                self.noise_dim
            ));
        }
        if self.theta.rows() != self.dim || self.theta.cols() != self.noise_dim {
            return fail(format!(
                "theta is {}x{}, expected {}x{}",
                self.theta.rows(),
                self.theta.cols(),
                self.dim,
                self.noise_dim
            ));
        }
        if self.drift.len() != self.dim {
            return fail(format!("drift has length {}", self.drift.len()));
        }
        if self.gamma.len() != self.noise_dim {
            return fail(format!("gamma has length {}", self.gamma.len()));
        }
        if self.gradient_sources.len() != self.noise_dim {
            return fail(format!(
                "gradient sources have length {}",
                self.gradient_sources.len()
            ));
        }
        if self.horizon <= 0.0 || self.horizon.is_nan() {
            return fail(format!("horizon {} must be positive", self.horizon));
        }
        if self.viscosity < 0.0 {
            return fail(format!("viscosity {} must be nonnegative", self.viscosity));
        }
        Ok(())
    }

    /// Check that every declared expression is safe on the torus: no
    /// division denominator vanishes (or nearly vanishes) on an oversampled
    /// probe lattice. A denominator is rejected when its sampled minimum
    /// falls below 5% of its sampled maximum, a conservative guard for the
    /// bounded-coefficient requirement.
    pub fn check_denominators(&self, grid: &Arc<TorusGrid>) -> Result<(), SolveError> {
        let mut exprs: Vec<&Expr> = Vec::new();
        for k in 1..=self.noise_dim {
            for i in 1..=self.dim {
                exprs.push(self.sigma.get(i, k));
                exprs.push(self.theta.get(i, k));
            }
        }
        exprs.extend(self.drift.iter());
        exprs.push(&self.zero_order);
        exprs.extend(self.gamma.iter());
        for spec in std::iter::once(&self.source)
            .chain(self.gradient_sources.iter())
            .chain(std::iter::once(&self.terminal))
        {
            if let FieldSpec::Expr(e) = spec {
                exprs.push(e);
            }
        }
        let per_axis = if self.dim <= 2 {
            grid.n().max(128)
        } else {
            grid.n().max(32)
        };
        let probes = crate::symbolic::sample_lattice(self.dim, per_axis, grid.period());
        for e in exprs {
            for den in e.denominators() {
                let ev = den.evaluator();
                let mut min_abs = f64::INFINITY;
                let mut max_abs = 0.0f64;
                for p in &probes {
                    let v = ev.eval(p, 0.0).abs();
                    min_abs = min_abs.min(v);
                    max_abs = max_abs.max(v);
                }
                if min_abs < 0.05 * max_abs || min_abs == 0.0 {
                    return Err(SolveError::VanishingDenominator {
                        expr: den.to_string(),
                        min_abs,
                    });
                }
            }
        }
        Ok(())
    }

    /// The diffusion operators `L_k` (columns of sigma).
    pub fn sigma_operators(&self) -> Vec<FirstOrderOperator> {
        self.sigma.column_operators()
    }

    /// The `W`-diffusion operators `M_k` (columns of theta).
    pub fn theta_operators(&self) -> Vec<FirstOrderOperator> {
        self.theta.column_operators()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolic::parse_expr;

    #[test]
    fn validation_catches_shape_errors() {
        let mut p = BspdeProblem::empty(2, 1);
        assert!(p.validate().is_ok());
        p.drift = vec![Expr::zero()];
        assert!(matches!(p.validate(), Err(SolveError::BadShape { .. })));
    }

    #[test]
    fn heat_problem_has_identity_sigma() {
        let p = BspdeProblem::heat(2, 1.0, FieldSpec::Zero);
        let ops = p.sigma_operators();
        assert_eq!(ops.len(), 2);
        assert_eq!(*ops[0].coeff(1), Expr::one());
        assert!(ops[0].coeff(2).is_zero());
    }

    #[test]
    fn denominator_check_flags_torus_poles() {
        let grid = TorusGrid::new(1, 32, 1.0).unwrap();
        let mut p = BspdeProblem::empty(1, 1);
        // 1/(2 + sin(x1)) is safe; 1/sin(x1) vanishes on the torus.
        p.zero_order = parse_expr("1/(2 + sin(x1))", 1).unwrap();
        assert!(p.check_denominators(&grid).is_ok());
        p.zero_order = parse_expr("1/(1/2 + sin(x1))", 1).unwrap();
        assert!(matches!(
            p.check_denominators(&grid),
            Err(SolveError::VanishingDenominator { .. })
        ));
    }

    #[test]
    fn square_wave_materializes_per_grid() {
        let spec = FieldSpec::SquareWave { axis: 1 };
        let g32 = TorusGrid::new(1, 32, 1.0).unwrap();
        let g64 = TorusGrid::new(1, 64, 1.0).unwrap();
        let a = spec.materialize(&g32, 0.0).unwrap();
        let b = spec.materialize(&g64, 0.0).unwrap();
        // Finer grids carry more modes of the series.
        assert!(b.l2() > a.l2());
    }
}
