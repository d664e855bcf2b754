//! Solve options, the time-indexed solution ledger, and the energy-balance
//! report.

use crate::spectral::GridField;

use super::problem::SolveError;

/// Options controlling a backward solve.
#[derive(Clone, Debug)]
pub struct SolveOptions {
    /// Times at which to record snapshots and norms; the horizon is always
    /// recorded. Must be sorted ascending, within `[0, T]`.
    pub snapshot_times: Vec<f64>,
    /// Time step; `None` takes the step from the stability rule.
    pub dt: Option<f64>,
    /// Orders for the per-snapshot norm table.
    pub norm_orders: Vec<f64>,
    /// Order `m` for the energy accumulators; `None` skips the per-step
    /// dissipation integrals.
    pub energy_order: Option<f64>,
    /// Axis (1-based) for degenerate-direction tail diagnostics.
    pub tail_axis: Option<usize>,
    /// Minimum integer frequency counted as tail; default `n/4`.
    pub tail_min_index: Option<usize>,
    /// Safety factor of the parabolic step rule `dt <= c dx^2 / (S d)`.
    pub stability_factor: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            snapshot_times: vec![0.0],
            dt: None,
            norm_orders: vec![0.0],
            energy_order: None,
            tail_axis: None,
            tail_min_index: None,
            stability_factor: 0.25,
        }
    }
}

/// Per-step energy accumulators for the balance-inequality report: the
/// dissipation integrals carried alongside the solution norms.
#[derive(Clone, Debug)]
pub struct EnergyRecords {
    /// Sobolev order `m` the records are taken at.
    pub order: f64,
    /// Per snapshot, per noise column: the diffusion-derivative norms.
    pub op_norms: Vec<Vec<f64>>,
    /// Per snapshot: the norm of the `W`-direction gradient combination.
    pub grad_theta_norms: Vec<f64>,
    /// Per snapshot `t`: the dissipation integral from `t` to the horizon,
    /// accumulated by per-step trapezoid.
    pub dissipation: Vec<f64>,
    /// Integral over `[0, T]` of the squared data norms.
    pub data_integral: f64,
    /// Squared norm of the terminal data at order `m`.
    pub terminal_norm_sq: f64,
}

/// Time-indexed snapshots and norm tables produced by a backward solve.
#[derive(Clone, Debug)]
pub struct SolutionLedger {
    /// Snapshot times, ascending; the last entry is the horizon.
    pub times: Vec<f64>,
    /// Solution snapshots; the one at the horizon is the supplied terminal
    /// data, bit-exactly.
    pub snapshots: Vec<GridField>,
    pub norm_orders: Vec<f64>,
    /// `u_norms[i][j]` is the order-`norm_orders[j]` norm at `times[i]`.
    pub u_norms: Vec<Vec<f64>>,
    pub energy: Option<EnergyRecords>,
    /// Degenerate-direction tail mass per snapshot, when configured.
    pub tail_mass: Option<Vec<f64>>,
    pub tail_axis: Option<usize>,
    pub tail_min_index: Option<usize>,
    pub dt_used: f64,
}

impl SolutionLedger {
    /// Snapshot index of a given time, to absolute tolerance 1e-9.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        self.times.iter().position(|s| (s - t).abs() <= 1e-9)
    }

    /// Snapshot at a given time.
    pub fn snapshot_at(&self, t: f64) -> Option<&GridField> {
        self.index_of(t).map(|i| &self.snapshots[i])
    }

    pub fn terminal(&self) -> &GridField {
        self.snapshots.last().expect("ledger has snapshots")
    }
}

/// The energy balance: `lhs(t) = |u(t)|_m^2 + dissipation(t)` against
/// `rhs = |G|_m^2 + data integral`.
#[derive(Clone, Debug)]
pub struct EnergyReport {
    pub order: f64,
    pub times: Vec<f64>,
    pub lhs: Vec<f64>,
    pub rhs: f64,
    /// `sup_t lhs(t) / rhs`, defined as 0 when both sides vanish.
    pub ratio: f64,
}

/// Evaluate the energy balance at order `m` from a ledger that recorded
/// energy accumulators at that order.
pub fn energy_ledger(ledger: &SolutionLedger, m: f64) -> Result<EnergyReport, SolveError> {
    let energy = ledger
        .energy
        .as_ref()
        .filter(|e| e.order == m)
        .ok_or(SolveError::LedgerMissingOrder { order: m })?;
    let j = ledger
        .norm_orders
        .iter()
        .position(|n| *n == m)
        .ok_or(SolveError::LedgerMissingOrder { order: m })?;
    let lhs: Vec<f64> = ledger
        .u_norms
        .iter()
        .zip(&energy.dissipation)
        .map(|(norms, diss)| norms[j] * norms[j] + diss)
        .collect();
    let rhs = energy.terminal_norm_sq + energy.data_integral;
    let sup = lhs.iter().fold(0.0f64, |a, b| a.max(*b));
    let ratio = if rhs == 0.0 {
        if sup == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        sup / rhs
    };
    Ok(EnergyReport {
        order: m,
        times: ledger.times.clone(),
        lhs,
        rhs,
        ratio,
    })
}
