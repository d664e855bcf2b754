//! Distributional-identity residuals.
//!
//! For a test function `zeta(t, x) = tau(t) psi(x)` the solution pair must
//! satisfy, for every `t`,
//!
//! ```text
//! <zeta(t), u(t)> - <zeta(T), G> + int_t^T <d_s zeta, u> ds
//!   + int_t^T <zeta, v^r> dW^r  =  int_t^T <zeta, RHS(s)> ds
//! ```
//!
//! with `RHS` the full generator plus data. Deterministic time integrals are
//! evaluated by the trapezoid rule on the snapshot mesh. The stochastic
//! integral uses left-point Itô sums with a second-order compensation
//! `(1/2) <zeta, vt> (dW^2 - dt)` when the caller supplies the noise
//! derivative `vt` of `v` (the coefficient of `dW` in `dv`); without the
//! compensation the pathwise quadrature error of the Itô sum dominates at
//! order `sqrt(dt)` instead of `dt`.

use crate::spectral::GridField;
use crate::symbolic::Expr;

use super::problem::{BspdeProblem, SolveError};
use super::solve::AssembledCoeffs;

/// Polynomial time profile of a test function.
#[derive(Clone, Debug)]
pub struct TimePoly {
    coeffs: Vec<f64>,
}

impl TimePoly {
    /// `coeffs[k]` multiplies `t^k`.
    pub fn new(coeffs: Vec<f64>) -> TimePoly {
        TimePoly { coeffs }
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c)
    }

    pub fn derivative(&self) -> TimePoly {
        TimePoly {
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| k as f64 * c)
                .collect(),
        }
    }
}

/// A smooth space-time test function `tau(t) psi(x)`.
#[derive(Clone, Debug)]
pub struct TestFunction {
    pub space: Expr,
    pub time: TimePoly,
}

/// A small bank of separated test functions: low trigonometric modes in
/// space crossed with constant, linear, and quadratic time profiles.
pub fn default_test_bank(dim: usize, horizon: f64) -> Vec<TestFunction> {
    let mut spaces: Vec<Expr> = Vec::new();
    for a in 1..=dim {
        spaces.push(Expr::var(a).sin());
    }
    spaces.push(Expr::var(1).cos());
    if dim > 1 {
        let sum = (1..=dim).fold(Expr::zero(), |acc, a| acc.add(&Expr::var(a)));
        spaces.push(sum.sin());
    }
    let times = [
        TimePoly::new(vec![1.0]),
        TimePoly::new(vec![0.25, 1.0 / horizon]),
        TimePoly::new(vec![1.0, 0.0, -0.5 / (horizon * horizon)]),
    ];
    spaces
        .into_iter()
        .flat_map(|s| {
            times
                .iter()
                .map(move |t| TestFunction {
                    space: s.clone(),
                    time: t.clone(),
                })
                .collect::<Vec<_>>()
        })
        .collect()
}

/// The pathwise data for residuals of non-Markovian solutions: the frozen
/// noise increments, the `v` snapshots, and optionally the noise derivative
/// of `v` for the compensated quadrature.
#[derive(Clone, Debug)]
pub struct StochasticTerm {
    /// Per step, the `d1` components of the `W` increment.
    pub dw: Vec<Vec<f64>>,
    /// Per snapshot, the `d1` components of `v`.
    pub v: Vec<Vec<GridField>>,
    /// Per snapshot, the `d1` components of the `dW`-coefficient of `dv`.
    pub v_noise_deriv: Option<Vec<Vec<GridField>>>,
}

/// Maximum normalized residual of the distributional identity over the test
/// bank, with the identity anchored at every snapshot time.
pub fn weak_residual(
    times: &[f64],
    u: &[GridField],
    problem: &BspdeProblem,
    stochastic: Option<&StochasticTerm>,
    bank: &[TestFunction],
) -> Result<f64, SolveError> {
    let data = assemble_data(times, problem, u)?;
    weak_residual_with_data(times, u, problem, &data, stochastic, bank)
}

fn assemble_data(
    times: &[f64],
    problem: &BspdeProblem,
    u: &[GridField],
) -> Result<Vec<Option<GridField>>, SolveError> {
    let grid = u
        .first()
        .ok_or(SolveError::BadSnapshotTimes)?
        .grid()
        .clone();
    let mut coeffs: Option<AssembledCoeffs> = None;
    times
        .iter()
        .map(|t| {
            let mut acc: Option<GridField> = None;
            if !problem.source.is_zero() {
                acc = Some(problem.source.materialize(&grid, *t)?);
            }
            let needs_g = problem.gradient_sources.iter().any(|g| !g.is_zero());
            if needs_g {
                if coeffs.is_none() || problem.sigma.uses_time() {
                    coeffs = Some(AssembledCoeffs::sample(problem, &grid, *t)?);
                }
                let cs = coeffs.as_ref().unwrap();
                for (k, spec) in problem.gradient_sources.iter().enumerate() {
                    if spec.is_zero() {
                        continue;
                    }
                    let g = spec.materialize(&grid, *t)?;
                    let lg = crate::spectral::apply_sampled(&cs.sigma[k], &g)?;
                    acc = Some(match acc {
                        Some(a) => a.add(&lg),
                        None => lg,
                    });
                }
            }
            Ok(acc)
        })
        .collect()
}

/// Residual with an explicit per-snapshot data term (used directly by the
/// weighted-shift check, where the data is modified).
pub(crate) fn weak_residual_with_data(
    times: &[f64],
    u: &[GridField],
    problem: &BspdeProblem,
    data: &[Option<GridField>],
    stochastic: Option<&StochasticTerm>,
    bank: &[TestFunction],
) -> Result<f64, SolveError> {
    if bank.is_empty() {
        return Err(SolveError::EmptyTestBank);
    }
    if times.len() < 2 || times.len() != u.len() || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(SolveError::BadSnapshotTimes);
    }
    if let Some(st) = stochastic {
        if st.dw.len() + 1 != times.len()
            || st.v.len() != times.len()
            || st
                .v_noise_deriv
                .as_ref()
                .is_some_and(|vt| vt.len() != times.len())
        {
            return Err(SolveError::BadSnapshotTimes);
        }
    }
    let grid = u[0].grid().clone();
    let n_times = times.len();

    // Generator output at every snapshot.
    let time_dep_coeffs = problem.sigma.uses_time()
        || problem.theta.uses_time()
        || problem.drift.iter().any(|e| e.uses_time())
        || problem.zero_order.uses_time()
        || problem.gamma.iter().any(|e| e.uses_time());
    let mut coeffs = AssembledCoeffs::sample(problem, &grid, times[0])?;
    let mut rhs: Vec<GridField> = Vec::with_capacity(n_times);
    for (k, t) in times.iter().enumerate() {
        if time_dep_coeffs && k > 0 {
            coeffs = AssembledCoeffs::sample(problem, &grid, *t)?;
        }
        let v_k: Option<&[GridField]> = stochastic.map(|st| st.v[k].as_slice());
        let mut r = coeffs.generator(&u[k], v_k, true)?;
        if let Some(d) = &data[k] {
            r = r.add(d);
        }
        rhs.push(r);
    }

    let mut worst = 0.0f64;
    for test in bank {
        let psi = GridField::from_expr(&grid, &test.space, 0.0)?;
        let tau = &test.time;
        let dtau = tau.derivative();
        let uw: Vec<f64> = u.iter().map(|uk| psi.inner(uk)).collect();
        let rw: Vec<f64> = rhs.iter().map(|rk| psi.inner(rk)).collect();
        // Per-step stochastic sums (left-point Itô plus compensation).
        let stoch: Vec<f64> = match stochastic {
            None => vec![0.0; n_times - 1],
            Some(st) => (0..n_times - 1)
                .map(|k| {
                    let dt = times[k + 1] - times[k];
                    let mut s = 0.0;
                    for (r, dw) in st.dw[k].iter().enumerate() {
                        s += psi.inner(&st.v[k][r]) * dw;
                        if let Some(vt) = &st.v_noise_deriv {
                            s += 0.5 * psi.inner(&vt[k][r]) * (dw * dw - dt);
                        }
                    }
                    s
                })
                .collect(),
        };

        // Suffix accumulation of the three time integrals.
        let mut residual_max = 0.0f64;
        let mut dzeta_int = 0.0;
        let mut rhs_int = 0.0;
        let mut stoch_sum = 0.0;
        let terminal = tau.eval(times[n_times - 1]) * uw[n_times - 1];
        // Anchor the identity at each snapshot, accumulating from the right.
        let mut scale_tau = tau.eval(times[n_times - 1]).abs();
        let mut scale_dtau = dtau.eval(times[n_times - 1]).abs();
        for i in (0..n_times - 1).rev() {
            let dt = times[i + 1] - times[i];
            dzeta_int +=
                0.5 * (dtau.eval(times[i]) * uw[i] + dtau.eval(times[i + 1]) * uw[i + 1]) * dt;
            rhs_int += 0.5 * (tau.eval(times[i]) * rw[i] + tau.eval(times[i + 1]) * rw[i + 1]) * dt;
            stoch_sum += tau.eval(times[i]) * stoch[i];
            let r = tau.eval(times[i]) * uw[i] - terminal + dzeta_int + stoch_sum - rhs_int;
            residual_max = residual_max.max(r.abs());
            scale_tau = scale_tau.max(tau.eval(times[i]).abs());
            scale_dtau = scale_dtau.max(dtau.eval(times[i]).abs());
        }
        let scale = ((scale_tau + scale_dtau) * psi.l2()).max(1e-30);
        worst = worst.max(residual_max / scale);
    }
    Ok(worst)
}

/// Verify that the time-weighted pair `(T - t) u` satisfies the shifted
/// equation: the same generator, data `(T - t)(f + L_k g^k) + u`, and zero
/// terminal value. Returns the weighted pair's weak residual.
pub fn weighted_shift_check(
    ledger: &super::ledger::SolutionLedger,
    problem: &BspdeProblem,
    bank: &[TestFunction],
) -> Result<f64, SolveError> {
    let times = &ledger.times;
    let big_t = problem.horizon;
    let weighted: Vec<GridField> = times
        .iter()
        .zip(&ledger.snapshots)
        .map(|(t, u)| u.scale(big_t - t))
        .collect();
    let base_data = assemble_data(times, problem, &ledger.snapshots)?;
    let data: Vec<Option<GridField>> = base_data
        .into_iter()
        .zip(times.iter().zip(&ledger.snapshots))
        .map(|(d, (t, u))| {
            let shifted = match d {
                Some(d) => d.scale(big_t - t).add(u),
                None => u.clone(),
            };
            Some(shifted)
        })
        .collect();
    weak_residual_with_data(times, &weighted, problem, &data, None, bank)
}
