//! The desk-scale smoothing study: norm gains along the proof's epsilon
//! schedule plus degenerate-direction tail diagnostics.

use std::sync::Arc;

use crate::spectral::{h_norm, TorusGrid};
use crate::symbolic::HormanderCertificate;

use super::ledger::SolveOptions;
use super::problem::{BspdeProblem, SolveError};
use super::solve::solve_backward;

/// One row of the smoothing table.
#[derive(Clone, Copy, Debug)]
pub struct SmoothingRow {
    /// Snapshot time `T - eps_j`.
    pub t: f64,
    /// Sobolev order `m + j eta`.
    pub order: f64,
    /// `|u(t)|` at that order.
    pub value: f64,
    /// Degenerate-direction spectral tail mass at that time.
    pub tail_mass: f64,
}

/// Smoothing table for a certified problem: measures
/// `|u(T - eps_j)|_{m + j eta}` for `j = 0..=j_max` along the schedule
/// `eps_j = sum_{i<=j} eps / 2^i`, with the per-step gain `eta` taken from
/// the certificate.
#[allow(clippy::too_many_arguments)]
pub fn smoothing_study(
    problem: &BspdeProblem,
    certificate: &HormanderCertificate,
    m: f64,
    epsilon: f64,
    j_max: usize,
    grid: &Arc<TorusGrid>,
    tail_axis: usize,
    opts: &SolveOptions,
) -> Result<Vec<SmoothingRow>, SolveError> {
    smoothing_table(
        problem,
        certificate.eta,
        m,
        epsilon,
        j_max,
        grid,
        tail_axis,
        opts,
    )
}

/// The same table for an arbitrary (possibly uncertified) problem with an
/// explicit regularity step `eta`; this is how a control problem is run
/// against a certified one's `eta`.
#[allow(clippy::too_many_arguments)]
pub fn smoothing_table(
    problem: &BspdeProblem,
    eta: f64,
    m: f64,
    epsilon: f64,
    j_max: usize,
    grid: &Arc<TorusGrid>,
    tail_axis: usize,
    opts: &SolveOptions,
) -> Result<Vec<SmoothingRow>, SolveError> {
    let big_t = problem.horizon;
    if !(epsilon > 0.0 && epsilon < big_t.min(1.0)) {
        return Err(SolveError::BadEpsilon { epsilon });
    }
    // Orders beyond the grid's multiplier range are flagged, not reported.
    let max_order = m + j_max as f64 * eta;
    let cap = grid.resolvable_order_cap();
    if max_order > cap {
        return Err(SolveError::Spectral(
            crate::spectral::SpectralError::UnresolvedOrder {
                order: max_order,
                cap,
            },
        ));
    }

    // eps_j = eps (1 - 2^{-j}); snapshot times descend from T toward T - eps.
    let times: Vec<f64> = (0..=j_max)
        .map(|j| big_t - epsilon * (1.0 - 0.5f64.powi(j as i32)))
        .collect();
    let mut snapshot_times: Vec<f64> = times.iter().copied().filter(|t| *t < big_t).collect();
    snapshot_times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    snapshot_times.dedup();

    let solve_opts = SolveOptions {
        snapshot_times,
        dt: opts.dt,
        norm_orders: Vec::new(),
        energy_order: None,
        tail_axis: Some(tail_axis),
        tail_min_index: opts.tail_min_index,
        stability_factor: opts.stability_factor,
    };
    let ledger = solve_backward(problem, grid, &solve_opts)?;
    let tails = ledger.tail_mass.as_ref().expect("tail axis configured");

    let mut rows = Vec::with_capacity(j_max + 1);
    for (j, t) in times.iter().enumerate() {
        let idx = ledger.index_of(*t).ok_or(SolveError::BadSnapshotTimes)?;
        let order = m + j as f64 * eta;
        rows.push(SmoothingRow {
            t: *t,
            order,
            value: h_norm(&ledger.snapshots[idx], order),
            tail_mass: tails[idx],
        });
    }
    Ok(rows)
}
