//! Cross-validation of Monte Carlo estimates against references.

use crate::bspde::SolutionLedger;

use super::estimate::{estimate_u_streamed, Estimate, McError, PayoffModel};

/// One space-time probe.
#[derive(Clone, Debug)]
pub struct Probe {
    pub t: f64,
    pub x: Vec<f64>,
}

/// Reference values to validate against: a solver ledger (evaluated by
/// trigonometric interpolation at the probe points) or a closed form.
pub enum Reference<'a> {
    Ledger(&'a SolutionLedger),
    Oracle(&'a (dyn Fn(f64, &[f64]) -> f64 + Sync)),
}

impl Reference<'_> {
    fn value(&self, t: f64, x: &[f64]) -> Result<f64, McError> {
        match self {
            Reference::Oracle(f) => Ok(f(t, x)),
            Reference::Ledger(ledger) => {
                let snap = ledger
                    .snapshot_at(t)
                    .ok_or(McError::ProbeOutsideCoverage { t })?;
                Ok(snap.eval_at(x))
            }
        }
    }
}

/// Per-probe comparison outcome.
#[derive(Clone, Debug)]
pub struct ProbeResult {
    pub t: f64,
    pub x: Vec<f64>,
    pub estimate: Estimate,
    pub reference: f64,
    /// `|mean - reference| / stderr` (infinite when stderr is zero and the
    /// deviation is not).
    pub z: f64,
    pub pass: bool,
}

/// Aggregate cross-validation report.
#[derive(Clone, Debug)]
pub struct CrossValidationReport {
    pub probes: Vec<ProbeResult>,
    pub n_pass: usize,
    pub max_z: f64,
    pub confidence_k: f64,
    pub budget: f64,
}

impl CrossValidationReport {
    pub fn all_pass(&self) -> bool {
        self.n_pass == self.probes.len()
    }
}

/// Estimate at every probe and compare against the reference: a probe
/// passes when `|mean - ref| <= k stderr + budget`, the budget covering
/// path- and grid-discretization bias.
pub fn cross_validate(
    model: &impl PayoffModel,
    probes: &[Probe],
    n_samples: u64,
    seed: u64,
    reference: &Reference<'_>,
    confidence_k: f64,
    budget: f64,
) -> Result<CrossValidationReport, McError> {
    let mut results = Vec::with_capacity(probes.len());
    let mut n_pass = 0;
    let mut max_z = 0.0f64;
    for (i, probe) in probes.iter().enumerate() {
        let reference_value = reference.value(probe.t, &probe.x)?;
        let estimate = estimate_u_streamed(
            model,
            probe.t,
            &probe.x,
            n_samples,
            seed,
            (i as u64) * n_samples,
        )?;
        let dev = (estimate.mean - reference_value).abs();
        let z = if estimate.stderr > 0.0 {
            dev / estimate.stderr
        } else if dev == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        let pass = dev <= confidence_k * estimate.stderr + budget;
        if pass {
            n_pass += 1;
        }
        max_z = max_z.max(z);
        results.push(ProbeResult {
            t: probe.t,
            x: probe.x.clone(),
            estimate,
            reference: reference_value,
            z,
            pass,
        });
    }
    Ok(CrossValidationReport {
        probes: results,
        n_pass,
        max_z,
        confidence_k,
        budget,
    })
}
