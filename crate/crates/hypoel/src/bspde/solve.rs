//! Backward method-of-lines solver.
//!
//! The Markovian reduction (`v = 0`) of the backward equation is marched
//! from the terminal data with classical RK4 on the pseudo-spectral
//! semidiscretization: derivatives in spectral space, coefficient products
//! in physical space. The stiff viscosity term `delta Lap u` is split off
//! and applied exactly through its Fourier multiplier (Strang splitting),
//! so the step restriction comes only from the transport part. Products
//! are dealiased with the 2/3 rule; the working band is `|k| <= n/3` per
//! axis, and rough terminal data is represented by its truncation to that
//! band.

use num_complex::Complex64;
use std::sync::Arc;

use crate::spectral::{apply_sampled, gradient, h_norm, tail_mass, GridField, TorusGrid};
use crate::symbolic::Evaluator;

use super::ledger::{EnergyRecords, SolutionLedger, SolveOptions};
use super::problem::{BspdeProblem, FieldSpec, SolveError};

/// Coefficient fields sampled on the grid at a fixed time. `None` entries
/// mark structurally zero coefficients so the solver can skip their work.
pub(crate) struct AssembledCoeffs {
    pub sigma: Vec<Vec<Option<GridField>>>,
    pub theta: Vec<Vec<Option<GridField>>>,
    pub drift: Vec<Option<GridField>>,
    pub zero_order: Option<GridField>,
    pub gamma: Vec<Option<GridField>>,
    pub viscosity: f64,
}

fn sample_expr_opt(
    e: &crate::symbolic::Expr,
    grid: &Arc<TorusGrid>,
    t: f64,
) -> Result<Option<GridField>, SolveError> {
    if e.is_zero() {
        Ok(None)
    } else {
        Ok(Some(GridField::from_expr(grid, e, t)?))
    }
}

impl AssembledCoeffs {
    pub(crate) fn sample(
        problem: &BspdeProblem,
        grid: &Arc<TorusGrid>,
        t: f64,
    ) -> Result<AssembledCoeffs, SolveError> {
        let column = |m: &crate::symbolic::ExprMatrix,
                      k: usize|
         -> Result<Vec<Option<GridField>>, SolveError> {
            (1..=problem.dim)
                .map(|i| sample_expr_opt(m.get(i, k), grid, t))
                .collect()
        };
        Ok(AssembledCoeffs {
            sigma: (1..=problem.noise_dim)
                .map(|k| column(&problem.sigma, k))
                .collect::<Result<_, _>>()?,
            theta: (1..=problem.noise_dim)
                .map(|k| column(&problem.theta, k))
                .collect::<Result<_, _>>()?,
            drift: problem
                .drift
                .iter()
                .map(|e| sample_expr_opt(e, grid, t))
                .collect::<Result<_, _>>()?,
            zero_order: sample_expr_opt(&problem.zero_order, grid, t)?,
            gamma: problem
                .gamma
                .iter()
                .map(|e| sample_expr_opt(e, grid, t))
                .collect::<Result<_, _>>()?,
            viscosity: problem.viscosity,
        })
    }

    fn column_is_zero(col: &[Option<GridField>]) -> bool {
        col.iter().all(Option::is_none)
    }

    /// The generator applied to `u` (with optional `v` fields):
    /// `(1/2)(L_k^2 + M_k^2) u + b.Du + c u [+ M_k v^k + gamma.v]`,
    /// plus `delta Lap u` when `include_viscosity` is set.
    pub(crate) fn generator(
        &self,
        u: &GridField,
        v: Option<&[GridField]>,
        include_viscosity: bool,
    ) -> Result<GridField, SolveError> {
        let grid = u.grid().clone();
        let mut acc = GridField::zeros(&grid);
        for col in self.sigma.iter().chain(self.theta.iter()) {
            if Self::column_is_zero(col) {
                continue;
            }
            let first = apply_sampled(col, u)?;
            let second = apply_sampled(col, &first)?;
            acc = acc.axpy(0.5, &second);
        }
        if !Self::column_is_zero(&self.drift) {
            acc = acc.add(&apply_sampled(&self.drift, u)?);
        }
        if let Some(c) = &self.zero_order {
            acc = acc.add(&c.mul_pointwise(u));
        }
        if let Some(vs) = v {
            for (k, col) in self.theta.iter().enumerate() {
                if !Self::column_is_zero(col) {
                    acc = acc.add(&apply_sampled(col, &vs[k])?);
                }
            }
            for (k, g) in self.gamma.iter().enumerate() {
                if let Some(g) = g {
                    acc = acc.add(&g.mul_pointwise(&vs[k]));
                }
            }
        }
        if include_viscosity && self.viscosity > 0.0 {
            let visc = self.viscosity;
            acc = acc.add(&u.spectral_multiplier(|flat| {
                Complex64::new(visc * (1.0 - grid.one_plus_xi_sq(flat)), 0.0)
            }));
        }
        Ok(acc)
    }
}

/// Data term `f(t) + sum_k L_k g^k(t)` sampled at time `t`.
fn data_term(
    problem: &BspdeProblem,
    coeffs: &AssembledCoeffs,
    grid: &Arc<TorusGrid>,
    t: f64,
) -> Result<Option<GridField>, SolveError> {
    let mut acc: Option<GridField> = None;
    if !problem.source.is_zero() {
        acc = Some(problem.source.materialize(grid, t)?);
    }
    for (k, spec) in problem.gradient_sources.iter().enumerate() {
        if spec.is_zero() || AssembledCoeffs::column_is_zero(&coeffs.sigma[k]) {
            continue;
        }
        let g = spec.materialize(grid, t)?;
        let lg = apply_sampled(&coeffs.sigma[k], &g)?;
        acc = Some(match acc {
            Some(a) => a.add(&lg),
            None => lg,
        });
    }
    Ok(acc)
}

/// The stability rule: `dt <= c dx^2 / (S d)` with
/// `S = max_x sum_k (|sigma^k|^2 + |theta^k|^2)`, intersected with an
/// advection bound `dt <= 2 c dx / max|b|` and a zeroth-order bound. The
/// exactly integrated viscosity term imposes no restriction.
pub fn stability_step(
    problem: &BspdeProblem,
    grid: &Arc<TorusGrid>,
    factor: f64,
) -> Result<f64, SolveError> {
    let sample_times: Vec<f64> = {
        let time_dep = problem.sigma.uses_time()
            || problem.theta.uses_time()
            || problem.drift.iter().any(|e| e.uses_time())
            || problem.zero_order.uses_time();
        if time_dep {
            (0..=8).map(|i| problem.horizon * i as f64 / 8.0).collect()
        } else {
            vec![0.0]
        }
    };
    let mut diffusion_max = 0.0f64;
    let mut drift_max = 0.0f64;
    let mut zero_max = 0.0f64;
    let sigma_eval: Vec<Vec<Evaluator>> = (1..=problem.noise_dim)
        .map(|k| {
            (1..=problem.dim)
                .map(|i| problem.sigma.get(i, k).evaluator())
                .collect()
        })
        .collect();
    let theta_eval: Vec<Vec<Evaluator>> = (1..=problem.noise_dim)
        .map(|k| {
            (1..=problem.dim)
                .map(|i| problem.theta.get(i, k).evaluator())
                .collect()
        })
        .collect();
    let drift_eval: Vec<Evaluator> = problem.drift.iter().map(|e| e.evaluator()).collect();
    let zero_eval = problem.zero_order.evaluator();
    for t in &sample_times {
        for flat in 0..grid.len() {
            let p = grid.point(flat);
            let mut s = 0.0;
            for col in sigma_eval.iter().chain(theta_eval.iter()) {
                s += col.iter().map(|e| e.eval(&p, *t).powi(2)).sum::<f64>();
            }
            diffusion_max = diffusion_max.max(s);
            let b: f64 = drift_eval.iter().map(|e| e.eval(&p, *t).powi(2)).sum();
            drift_max = drift_max.max(b.sqrt());
            zero_max = zero_max.max(zero_eval.eval(&p, *t).abs());
        }
    }
    let dx = grid.spacing();
    let mut dt = problem.horizon / 16.0;
    if diffusion_max > 0.0 {
        dt = dt.min(factor * dx * dx / (diffusion_max * grid.dim() as f64));
    }
    if drift_max > 0.0 {
        dt = dt.min(2.0 * factor * dx / drift_max);
    }
    if zero_max > 0.0 {
        dt = dt.min(0.5 / zero_max);
    }
    Ok(dt)
}

/// March the Markovian reduction backward from the terminal data, recording
/// snapshots and norm tables at the requested times.
pub fn solve_backward(
    problem: &BspdeProblem,
    grid: &Arc<TorusGrid>,
    opts: &SolveOptions,
) -> Result<SolutionLedger, SolveError> {
    problem.validate()?;
    if !problem.markovian {
        return Err(SolveError::NotMarkovian);
    }
    let big_t = problem.horizon;

    // Snapshot times, ascending, horizon appended.
    let mut snap_times = opts.snapshot_times.clone();
    if snap_times
        .iter()
        .any(|t| !(0.0..=big_t + 1e-12).contains(t))
        || snap_times.windows(2).any(|w| w[1] <= w[0])
    {
        return Err(SolveError::BadSnapshotTimes);
    }
    if snap_times.last().map(|t| (t - big_t).abs() > 1e-12) != Some(false) {
        snap_times.push(big_t);
    }

    let dt_max = stability_step(problem, grid, opts.stability_factor)?;
    let dt = match opts.dt {
        Some(dt) => {
            if dt > dt_max * (1.0 + 1e-9) {
                return Err(SolveError::StabilityRule { dt, dt_max });
            }
            dt
        }
        None => dt_max,
    };

    let terminal_raw = problem.terminal.materialize(grid, big_t)?;
    let cut = grid.n() / 3;
    let mut state = terminal_raw.low_pass(cut);

    let coeffs_time_dep = problem.sigma.uses_time()
        || problem.theta.uses_time()
        || problem.drift.iter().any(|e| e.uses_time())
        || problem.zero_order.uses_time();
    let mut coeffs = AssembledCoeffs::sample(problem, grid, big_t)?;
    let data_time_dep =
        problem.source.uses_time() || problem.gradient_sources.iter().any(FieldSpec::uses_time);
    let mut data_cache = data_term(problem, &coeffs, grid, big_t)?;

    // Blow-up monitor scale: the terminal data plus what the sources can
    // accumulate over the horizon.
    let data_scale = data_cache.as_ref().map(|d| d.l2() * big_t).unwrap_or(0.0);
    let blowup_threshold = 1e6 * (terminal_raw.l2() + data_scale).max(1e-6);

    // Viscosity half-step multiplier cache (recomputed per segment step size).
    let visc_half = |h: f64| -> Option<Vec<f64>> {
        if problem.viscosity == 0.0 {
            return None;
        }
        let delta = problem.viscosity;
        Some(
            (0..grid.len())
                .map(|flat| (-delta * (grid.one_plus_xi_sq(flat) - 1.0) * h / 2.0).exp())
                .collect(),
        )
    };

    let energy_order = opts.energy_order;
    let mut records = SnapshotRecorder::new(problem, grid, opts, energy_order)?;
    records.record(big_t, &terminal_raw, &state, &coeffs)?;

    // March backward over segments between consecutive snapshot times.
    let mut seg_end = big_t;
    for target in snap_times.iter().rev().skip(1) {
        let seg = seg_end - target;
        let steps = (seg / dt).ceil().max(1.0) as usize;
        let h = seg / steps as f64;
        let e_half = visc_half(h);
        for step in 0..steps {
            let t_hi = seg_end - h * step as f64;
            // Strang split: exact viscosity half-step, RK4 transport, half-step.
            if let Some(mult) = &e_half {
                state = state.spectral_multiplier(|flat| Complex64::new(mult[flat], 0.0));
            }
            state = rk4_step(
                problem,
                grid,
                &mut coeffs,
                &mut data_cache,
                coeffs_time_dep,
                data_time_dep,
                &state,
                t_hi,
                h,
            )?;
            if let Some(mult) = &e_half {
                state = state.spectral_multiplier(|flat| Complex64::new(mult[flat], 0.0));
            }
            state = state.low_pass(cut);
            let t_lo = t_hi - h;
            let l2 = state.l2();
            if !l2.is_finite() || l2 > blowup_threshold {
                return Err(SolveError::BlowUp { t: t_lo, norm: l2 });
            }
            records.accumulate_step(t_hi, t_lo, &state, &coeffs)?;
        }
        seg_end = *target;
        records.record(seg_end, &state, &state, &coeffs)?;
    }

    records.finish(problem, grid, dt)
}

/// One RK4 step of the transport part, backward in time from `t_hi` to
/// `t_hi - h`. In backward time `tau = T - t` the system is
/// `du/dtau = Gen u + data(T - tau)`.
#[allow(clippy::too_many_arguments)]
fn rk4_step(
    problem: &BspdeProblem,
    grid: &Arc<TorusGrid>,
    coeffs: &mut AssembledCoeffs,
    data_cache: &mut Option<GridField>,
    coeffs_time_dep: bool,
    data_time_dep: bool,
    state: &GridField,
    t_hi: f64,
    h: f64,
) -> Result<GridField, SolveError> {
    let mut eval_rhs = |u: &GridField, t: f64| -> Result<GridField, SolveError> {
        if coeffs_time_dep {
            *coeffs = AssembledCoeffs::sample(problem, grid, t)?;
        }
        if data_time_dep {
            *data_cache = data_term(problem, coeffs, grid, t)?;
        }
        let mut rhs = coeffs.generator(u, None, false)?;
        if let Some(d) = data_cache.as_ref() {
            rhs = rhs.add(d);
        }
        Ok(rhs)
    };
    let k1 = eval_rhs(state, t_hi)?;
    let mid = t_hi - h / 2.0;
    let k2 = eval_rhs(&state.axpy(h / 2.0, &k1), mid)?;
    let k3 = eval_rhs(&state.axpy(h / 2.0, &k2), mid)?;
    let k4 = eval_rhs(&state.axpy(h, &k3), t_hi - h)?;
    let mut out = state.axpy(h / 6.0, &k1);
    out = out.axpy(h / 3.0, &k2);
    out = out.axpy(h / 3.0, &k3);
    out = out.axpy(h / 6.0, &k4);
    Ok(out)
}

/// Collects snapshots, norm tables, and the per-step energy integrals.
struct SnapshotRecorder<'a> {
    opts: &'a SolveOptions,
    grid: &'a Arc<TorusGrid>,
    energy_order: Option<f64>,
    times: Vec<f64>,
    snapshots: Vec<GridField>,
    u_norms: Vec<Vec<f64>>,
    op_norms: Vec<Vec<f64>>,
    grad_theta_norms: Vec<f64>,
    tail: Option<Vec<f64>>,
    tail_min: usize,
    /// Running dissipation integral from the current time up to T.
    dissipation_acc: f64,
    dissipation_at_snap: Vec<f64>,
    last_integrand: f64,
    data_integral: f64,
    last_data_sq: f64,
    terminal_norm_sq: f64,
    problem: &'a BspdeProblem,
}

impl<'a> SnapshotRecorder<'a> {
    fn new(
        problem: &'a BspdeProblem,
        grid: &'a Arc<TorusGrid>,
        opts: &'a SolveOptions,
        energy_order: Option<f64>,
    ) -> Result<Self, SolveError> {
        if let Some(axis) = opts.tail_axis {
            if axis == 0 || axis > grid.dim() {
                return Err(SolveError::BadShape {
                    detail: format!("tail axis {axis} out of range"),
                });
            }
        }
        Ok(SnapshotRecorder {
            opts,
            grid,
            energy_order,
            times: Vec::new(),
            snapshots: Vec::new(),
            u_norms: Vec::new(),
            op_norms: Vec::new(),
            grad_theta_norms: Vec::new(),
            tail: opts.tail_axis.map(|_| Vec::new()),
            tail_min: opts.tail_min_index.unwrap_or(grid.n() / 4),
            dissipation_acc: 0.0,
            dissipation_at_snap: Vec::new(),
            last_integrand: 0.0,
            data_integral: 0.0,
            last_data_sq: 0.0,
            terminal_norm_sq: 0.0,
            problem,
        })
    }

    /// Dissipation integrand and squared data norm at one time.
    fn energy_integrand(
        &self,
        m: f64,
        t: f64,
        u: &GridField,
        coeffs: &AssembledCoeffs,
    ) -> Result<(f64, Vec<f64>, f64, f64), SolveError> {
        let grad = gradient(u);
        let mut integrand = 0.0;
        if coeffs.viscosity > 0.0 {
            integrand += coeffs.viscosity * grad.iter().map(|g| h_norm(g, m).powi(2)).sum::<f64>();
        }
        let mut op_norms = Vec::with_capacity(coeffs.sigma.len());
        for col in &coeffs.sigma {
            let mut lu = GridField::zeros(self.grid);
            for (i, c) in col.iter().enumerate() {
                if let Some(c) = c {
                    lu = lu.add(&c.mul_pointwise(&grad[i]));
                }
            }
            let norm = h_norm(&lu, m);
            integrand += norm * norm;
            op_norms.push(norm);
        }
        let mut grad_theta_sq = 0.0;
        for col in &coeffs.theta {
            let mut mu = GridField::zeros(self.grid);
            for (i, c) in col.iter().enumerate() {
                if let Some(c) = c {
                    mu = mu.add(&c.mul_pointwise(&grad[i]));
                }
            }
            let norm = h_norm(&mu, m);
            grad_theta_sq += norm * norm;
        }
        integrand += grad_theta_sq;
        // Squared data norms |f|_m^2 + |g|_m^2 at this time.
        let mut data_sq = 0.0;
        if !self.problem.source.is_zero() {
            let f = self.problem.source.materialize(self.grid, t)?;
            data_sq += h_norm(&f, m).powi(2);
        }
        for spec in &self.problem.gradient_sources {
            if !spec.is_zero() {
                let g = spec.materialize(self.grid, t)?;
                data_sq += h_norm(&g, m).powi(2);
            }
        }
        Ok((integrand, op_norms, grad_theta_sq.sqrt(), data_sq))
    }

    /// Called once per time step with the new state at `t_lo`.
    fn accumulate_step(
        &mut self,
        t_hi: f64,
        t_lo: f64,
        state: &GridField,
        coeffs: &AssembledCoeffs,
    ) -> Result<(), SolveError> {
        let Some(m) = self.energy_order else {
            return Ok(());
        };
        let h = t_hi - t_lo;
        let (integrand, _, _, data_sq) = self.energy_integrand(m, t_lo, state, coeffs)?;
        self.dissipation_acc += 0.5 * (self.last_integrand + integrand) * h;
        self.data_integral += 0.5 * (self.last_data_sq + data_sq) * h;
        self.last_integrand = integrand;
        self.last_data_sq = data_sq;
        Ok(())
    }

    /// Record a snapshot at time `t`. `display_state` is stored (the raw
    /// terminal data at the horizon); `march_state` feeds the energy terms.
    fn record(
        &mut self,
        t: f64,
        display_state: &GridField,
        march_state: &GridField,
        coeffs: &AssembledCoeffs,
    ) -> Result<(), SolveError> {
        self.times.push(t);
        self.snapshots.push(display_state.clone());
        self.u_norms.push(
            self.opts
                .norm_orders
                .iter()
                .map(|n| h_norm(display_state, *n))
                .collect(),
        );
        if let (Some(axis), Some(tail)) = (self.opts.tail_axis, self.tail.as_mut()) {
            tail.push(tail_mass(display_state, axis, self.tail_min)?);
        }
        if let Some(m) = self.energy_order {
            let (integrand, op_norms, grad_theta, data_sq) =
                self.energy_integrand(m, t, march_state, coeffs)?;
            self.op_norms.push(op_norms);
            self.grad_theta_norms.push(grad_theta);
            self.dissipation_at_snap.push(self.dissipation_acc);
            if self.times.len() == 1 {
                // First (terminal) snapshot: seed the trapezoid state.
                self.last_integrand = integrand;
                self.last_data_sq = data_sq;
                self.terminal_norm_sq = h_norm(display_state, m).powi(2);
            }
        }
        Ok(())
    }

    fn finish(
        mut self,
        _problem: &BspdeProblem,
        _grid: &Arc<TorusGrid>,
        dt: f64,
    ) -> Result<SolutionLedger, SolveError> {
        // The march went from T downward; flip everything ascending.
        self.times.reverse();
        self.snapshots.reverse();
        self.u_norms.reverse();
        if let Some(tail) = self.tail.as_mut() {
            tail.reverse();
        }
        let energy = self.energy_order.map(|m| {
            self.op_norms.reverse();
            self.grad_theta_norms.reverse();
            self.dissipation_at_snap.reverse();
            EnergyRecords {
                order: m,
                op_norms: std::mem::take(&mut self.op_norms),
                grad_theta_norms: std::mem::take(&mut self.grad_theta_norms),
                dissipation: std::mem::take(&mut self.dissipation_at_snap),
                data_integral: self.data_integral,
                terminal_norm_sq: self.terminal_norm_sq,
            }
        });
        Ok(SolutionLedger {
            times: self.times,
            snapshots: self.snapshots,
            norm_orders: self.opts.norm_orders.clone(),
            u_norms: self.u_norms,
            energy,
            tail_mass: self.tail,
            tail_axis: self.opts.tail_axis,
            tail_min_index: Some(self.tail_min),
            dt_used: dt,
        })
    }
}

/// Solve once per viscosity rung; the ladder must be strictly decreasing
/// and nonnegative. A trailing rung of zero reproduces the plain solve.
pub fn viscosity_continuation(
    problem: &BspdeProblem,
    ladder: &[f64],
    grid: &Arc<TorusGrid>,
    opts: &SolveOptions,
) -> Result<Vec<SolutionLedger>, SolveError> {
    if ladder.is_empty()
        || ladder.iter().any(|d| *d < 0.0)
        || ladder.windows(2).any(|w| w[1] >= w[0])
    {
        return Err(SolveError::BadLadder);
    }
    ladder
        .iter()
        .map(|delta| {
            let mut rung = problem.clone();
            rung.viscosity = *delta;
            solve_backward(&rung, grid, opts)
        })
        .collect()
}
