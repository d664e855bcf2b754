//! Conditional Monte Carlo estimation of the terminal-plus-running payoff.

use rayon::prelude::*;
use thiserror::Error;

use crate::bspde::{BspdeProblem, FieldSpec};
use crate::sde::{simulate_path, CompiledDynamics, Example12, Example12State, NoiseGrid, SdeError};
use crate::symbolic::{Evaluator, Expr};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum McError {
    #[error("estimation time {t} is not before the horizon {horizon}")]
    TimeAfterHorizon { t: f64, horizon: f64 },
    #[error(transparent)]
    Sde(#[from] SdeError),
    #[error("terminal data must be a closed-form expression for path evaluation")]
    TerminalNotClosedForm,
    #[error("probe time {t} is outside the reference coverage")]
    ProbeOutsideCoverage { t: f64 },
    #[error("evaluation failure: {detail}")]
    EvalFailure { detail: String },
    #[error("need at least two samples")]
    TooFewSamples,
    #[error("scenario freeze time {scenario_t} does not match estimation time {t}")]
    ScenarioMismatch { scenario_t: f64, t: f64 },
}

/// A Monte Carlo sample mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    /// Sample standard deviation divided by `sqrt(n_samples)`.
    pub stderr: f64,
    pub n_samples: u64,
    pub seed: u64,
}

/// Anything that can realize one payoff sample from `(t, x)`: a full model
/// of the path law and the data along it.
pub trait PayoffModel: Sync {
    fn horizon(&self) -> f64;

    /// Simulate one fresh continuation (substream-indexed) and return the
    /// realized payoff.
    fn sample_payoff(&self, t: f64, x: &[f64], seed: u64, substream: u64) -> Result<f64, McError>;
}

/// Unbiased sample mean of the payoff over `n_samples` independent
/// substreams, with a deterministic chunked reduction: the merge order of
/// partial statistics is fixed by the chunk index, so results are identical
/// across thread counts.
pub fn estimate_u(
    model: &impl PayoffModel,
    t: f64,
    x: &[f64],
    n_samples: u64,
    seed: u64,
) -> Result<Estimate, McError> {
    estimate_u_streamed(model, t, x, n_samples, seed, 0)
}

/// As [`estimate_u`], with a substream offset so that several estimates can
/// share one seed without overlapping noise.
pub fn estimate_u_streamed(
    model: &impl PayoffModel,
    t: f64,
    x: &[f64],
    n_samples: u64,
    seed: u64,
    substream_base: u64,
) -> Result<Estimate, McError> {
    if t >= model.horizon() {
        return Err(McError::TimeAfterHorizon {
            t,
            horizon: model.horizon(),
        });
    }
    if n_samples < 2 {
        return Err(McError::TooFewSamples);
    }
    const CHUNK: u64 = 4096;
    let chunks = n_samples.div_ceil(CHUNK);
    let partials: Vec<Result<(u64, f64, f64), McError>> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let lo = chunk * CHUNK;
            let hi = (lo + CHUNK).min(n_samples);
            let mut count = 0u64;
            let mut mean = 0.0f64;
            let mut m2 = 0.0f64;
            for i in lo..hi {
                let p = model.sample_payoff(t, x, seed, substream_base + i)?;
                count += 1;
                let delta = p - mean;
                mean += delta / count as f64;
                m2 += delta * (p - mean);
            }
            Ok((count, mean, m2))
        })
        .collect();
    // Fixed-order tree (left fold) over chunk statistics.
    let mut count = 0u64;
    let mut mean = 0.0f64;
    let mut m2 = 0.0f64;
    for p in partials {
        let (nb, mb, m2b) = p?;
        if nb == 0 {
            continue;
        }
        let na = count;
        count += nb;
        let delta = mb - mean;
        mean += delta * nb as f64 / count as f64;
        m2 += m2b + delta * delta * (na as f64 * nb as f64 / count as f64);
    }
    let stderr = (m2 / (count.saturating_sub(1)) as f64 / count as f64).sqrt();
    Ok(Estimate {
        mean,
        stderr,
        n_samples: count,
        seed,
    })
}

/// The Markovian path model: deterministic coefficients, terminal data and
/// running source given as closed-form expressions, payoffs computed along
/// Euler-Maruyama paths with trapezoidal quadrature for the running term.
pub struct MarkovianModel {
    dynamics: CompiledDynamics,
    source: Option<Evaluator>,
    terminal: Evaluator,
    horizon: f64,
    steps: usize,
}

impl MarkovianModel {
    /// Build from a problem; `steps` is the path-mesh resolution on `[t, T]`.
    pub fn new(problem: &BspdeProblem, steps: usize) -> Result<MarkovianModel, McError> {
        let as_expr = |spec: &FieldSpec| -> Result<Option<Expr>, McError> {
            match spec {
                FieldSpec::Zero => Ok(None),
                FieldSpec::Expr(e) => Ok(Some(e.clone())),
                _ => Err(McError::TerminalNotClosedForm),
            }
        };
        let terminal = as_expr(&problem.terminal)?
            .ok_or(McError::TerminalNotClosedForm)?
            .evaluator();
        let source = as_expr(&problem.source)?.map(|e| e.evaluator());
        let dynamics = CompiledDynamics::new(&problem.drift, &problem.sigma, &problem.theta)?;
        Ok(MarkovianModel {
            dynamics,
            source,
            terminal,
            horizon: problem.horizon,
            steps: steps.max(1),
        })
    }
}

impl PayoffModel for MarkovianModel {
    fn horizon(&self) -> f64 {
        self.horizon
    }

    fn sample_payoff(&self, t: f64, x: &[f64], seed: u64, substream: u64) -> Result<f64, McError> {
        let mesh = NoiseGrid::uniform_mesh(t, self.horizon, self.steps);
        let noise = NoiseGrid::sample(seed, substream, mesh, self.dynamics.noise_dim())?;
        let path = simulate_path(&self.dynamics, t, x, &noise)?;
        let mut payoff = 0.0;
        if let Some(f) = &self.source {
            let mut prev = f.eval(&path.values[0], path.times[0]);
            for k in 1..path.times.len() {
                let cur = f.eval(&path.values[k], path.times[k]);
                payoff += 0.5 * (prev + cur) * (path.times[k] - path.times[k - 1]);
                prev = cur;
            }
        }
        let g = self.terminal.eval(path.terminal(), self.horizon);
        if !g.is_finite() || !payoff.is_finite() {
            return Err(McError::EvalFailure {
                detail: format!("payoff at terminal state {:?}", path.terminal()),
            });
        }
        Ok(payoff + g)
    }
}

/// The shifted-utility model: scenario-frozen noise history on `[0, t]`,
/// fresh continuations beyond, scenario-dependent terminal data
/// `U(x - H_T) M_T`.
pub struct Example12Model {
    example: Example12,
    frozen: Example12State,
    steps: usize,
}

impl Example12Model {
    /// `frozen` must be the history up to the estimation time.
    pub fn new(example: Example12, frozen: Example12State, steps: usize) -> Example12Model {
        Example12Model {
            example,
            frozen,
            steps: steps.max(1),
        }
    }

    pub fn frozen(&self) -> &Example12State {
        &self.frozen
    }

    pub fn example(&self) -> &Example12 {
        &self.example
    }
}

impl PayoffModel for Example12Model {
    fn horizon(&self) -> f64 {
        self.example.horizon
    }

    fn sample_payoff(&self, t: f64, x: &[f64], seed: u64, substream: u64) -> Result<f64, McError> {
        let frozen_t = self.frozen.end_time();
        if (frozen_t - t).abs() > 1e-12 {
            return Err(McError::ScenarioMismatch {
                scenario_t: frozen_t,
                t,
            });
        }
        let mesh = NoiseGrid::uniform_mesh(t, self.example.horizon, self.steps);
        let noise = NoiseGrid::sample(seed, substream, mesh, 1)?;
        let full = self.example.continue_history(&self.frozen, &noise)?;
        let xt = self.example.terminal_state(x[0], t, &full)?;
        Ok(self.example.payoff(xt, &full))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sde::HistoryKind;
    use crate::symbolic::parse_expr;

    fn brownian_problem() -> BspdeProblem {
        // b = 0, sigma = theta = 1, d = d1 = 1.
        let mut p = BspdeProblem::empty(1, 1);
        p.sigma = crate::symbolic::ExprMatrix::from_rows(vec![vec![Expr::one()]]).unwrap();
        p.theta = crate::symbolic::ExprMatrix::from_rows(vec![vec![Expr::one()]]).unwrap();
        p
    }

    #[test]
    fn martingale_terminal_data_recovers_start() {
        // G(x) = x, no dynamics beyond additive noise: estimate ~ x.
        let mut p = brownian_problem();
        p.terminal = FieldSpec::Expr(parse_expr("x1", 1).unwrap());
        let model = MarkovianModel::new(&p, 20).unwrap();
        let est = estimate_u(&model, 0.25, &[1.4], 20_000, 7).unwrap();
        assert!(
            (est.mean - 1.4).abs() < 3.0 * est.stderr,
            "mean {} stderr {}",
            est.mean,
            est.stderr
        );
    }

    #[test]
    fn quadratic_terminal_data_gains_variance() {
        // sigma = 1, theta = 0, G = x^2: u(t, x) = x^2 + (T - t).
        let mut p = BspdeProblem::empty(1, 1);
        p.sigma = crate::symbolic::ExprMatrix::from_rows(vec![vec![Expr::one()]]).unwrap();
        p.terminal = FieldSpec::Expr(parse_expr("x1^2", 1).unwrap());
        let model = MarkovianModel::new(&p, 25).unwrap();
        let (t, x) = (0.2, 0.6);
        let est = estimate_u(&model, t, &[x], 40_000, 11).unwrap();
        let want = x * x + (1.0 - t);
        assert!(
            (est.mean - want).abs() < 3.0 * est.stderr,
            "mean {} want {want} stderr {}",
            est.mean,
            est.stderr
        );
    }

    #[test]
    fn running_source_integrates_exactly_for_constant_f() {
        // No dynamics, f = 1, G = 0: payoff = T - t exactly on every path.
        let mut p = BspdeProblem::empty(1, 1);
        p.source = FieldSpec::Expr(Expr::one());
        p.terminal = FieldSpec::Expr(Expr::zero());
        let model = MarkovianModel::new(&p, 10).unwrap();
        let est = estimate_u(&model, 0.3, &[0.0], 100, 1).unwrap();
        assert!((est.mean - 0.7).abs() < 1e-12);
        assert!(est.stderr < 1e-13);
    }

    #[test]
    fn estimate_requires_time_before_horizon() {
        let mut p = brownian_problem();
        p.terminal = FieldSpec::Expr(parse_expr("x1", 1).unwrap());
        let model = MarkovianModel::new(&p, 10).unwrap();
        assert!(matches!(
            estimate_u(&model, 1.0, &[0.0], 100, 0),
            Err(McError::TimeAfterHorizon { .. })
        ));
    }

    #[test]
    fn shifted_noise_payoff_cancels_future_increments() {
        // alpha = 0, U = cos: every payoff sample equals cos(x - W_t) up to
        // round-off, so the variance collapses.
        let ex = Example12 {
            alpha: 0.0,
            utility: parse_expr("cos(x1)", 1).unwrap(),
            horizon: 1.0,
            history: HistoryKind::ShiftedNoise,
        };
        let t = 0.5;
        let frozen = ex.sample_history(3, 0, t, 32).unwrap();
        let w_t = frozen.w_end();
        let model = Example12Model::new(ex, frozen, 32);
        let x = 0.9;
        let est = estimate_u(&model, t, &[x], 1000, 4).unwrap();
        let want = (x - w_t).cos();
        assert!((est.mean - want).abs() < 1e-12);
        assert!(est.stderr.powi(2) < 10.0 * 0.5 / 32.0);
    }

    #[test]
    fn bridge_case_reproduces_shifted_utility_exactly() {
        // alpha = 0, H the pinned bridge: estimate equals U(x - H_t) up to
        // endpoint round-off.
        let ex = Example12 {
            alpha: 0.0,
            utility: parse_expr("cos(x1)", 1).unwrap(),
            horizon: 1.0,
            history: HistoryKind::Bridge { start: 0.7 },
        };
        let t = 0.5;
        let frozen = ex.sample_history(13, 0, t, 32).unwrap();
        let h_t = frozen.h_end();
        let model = Example12Model::new(ex, frozen, 32);
        let x = 1.2;
        let est = estimate_u(&model, t, &[x], 500, 9).unwrap();
        assert!((est.mean - (x - h_t).cos()).abs() < 1e-12);
        assert!(est.stderr < 1e-12);
    }

    #[test]
    fn drifted_history_estimator_matches_the_closed_form() {
        // General co-simulated drift with a martingale weight: the flow
        // cancellation leaves only the M_T average, so the estimate matches
        // U(x - H_t) M_t within Monte Carlo error.
        let ex = Example12 {
            alpha: 0.4,
            utility: parse_expr("cos(x1)", 1).unwrap(),
            horizon: 1.0,
            history: HistoryKind::Drifted {
                bbar: parse_expr("-1/2*x1", 1).unwrap(),
                start: 0.6,
            },
        };
        let t = 0.5;
        let frozen = ex.sample_history(8, u64::MAX, t, 32).unwrap();
        let (u_ref, _) = ex.oracle(frozen.h_end(), frozen.w_end(), t, 1.3);
        let model = Example12Model::new(ex, frozen, 32);
        let est = estimate_u(&model, t, &[1.3], 40_000, 19).unwrap();
        assert!(
            (est.mean - u_ref).abs() <= 3.0 * est.stderr,
            "mean {} vs oracle {u_ref} (stderr {})",
            est.mean,
            est.stderr
        );
        assert!(est.stderr > 0.0);
    }

    #[test]
    fn deterministic_reduction_is_thread_count_invariant() {
        // The chunked fold gives the same bits regardless of parallelism;
        // run twice and compare exactly.
        let mut p = brownian_problem();
        p.terminal = FieldSpec::Expr(parse_expr("sin(x1)", 1).unwrap());
        let model = MarkovianModel::new(&p, 10).unwrap();
        let a = estimate_u(&model, 0.0, &[0.3], 10_000, 5).unwrap();
        let b = estimate_u(&model, 0.0, &[0.3], 10_000, 5).unwrap();
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
    }
}
