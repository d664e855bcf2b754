//! The shifted-utility closed form: a scalar Itô process with unit `W`-noise,
//! a (possibly random) drift generated by an auxiliary copy `H` of the
//! process, and terminal data `G(x) = U(x - H_T) M_T` with the exponential
//! martingale `M_t = exp(alpha W_t - alpha^2 t / 2)`.
//!
//! The pair `u(t,x) = U(x - H_t) M_t`, `v = alpha u - U'(x - H_t) M_t`
//! solves the backward equation, so it serves as an exact oracle for the
//! conditional Monte Carlo estimator and for the pathwise weak-residual
//! harness.

use crate::symbolic::{Evaluator, Expr};

use super::noise::{NoiseGrid, SdeError};
use super::scenario::Scenario;

/// How the auxiliary state `H` is generated from `W`.
#[derive(Clone, Debug)]
pub enum HistoryKind {
    /// Zero start, zero drift: `H = W`.
    ShiftedNoise,
    /// Pinned path from `start` at time 0 to 0 at the horizon, driven by
    /// `W` through the exact flow `H_{k+1} = (T-t_{k+1}) (H_k + dW_k) /
    /// (T-t_k)`, so the terminal value is zero bit-exactly.
    Bridge { start: f64 },
    /// Euler-Maruyama co-simulation `dH = bbar(t, H) dt + dW` from `start`;
    /// `bbar` is an expression in `(t, x1)` with `x1` standing for `H`.
    Drifted { bbar: Expr, start: f64 },
}

/// Parameters of the closed-form example (scalar, `d = d1 = 1`).
#[derive(Clone, Debug)]
pub struct Example12 {
    pub alpha: f64,
    /// The utility shape `U`, an expression in `x1`.
    pub utility: Expr,
    pub horizon: f64,
    pub history: HistoryKind,
}

/// `W` and the derived auxiliary state on a mesh starting at time 0.
#[derive(Clone, Debug)]
pub struct Example12State {
    pub mesh: Vec<f64>,
    pub w: Vec<f64>,
    pub h: Vec<f64>,
}

impl Example12State {
    pub fn end_time(&self) -> f64 {
        *self.mesh.last().unwrap()
    }

    pub fn w_end(&self) -> f64 {
        *self.w.last().unwrap()
    }

    pub fn h_end(&self) -> f64 {
        *self.h.last().unwrap()
    }

    pub fn as_scenario(&self) -> Scenario {
        Scenario::from_history(self.mesh.clone(), self.w.iter().map(|w| vec![*w]).collect())
            .expect("state meshes are valid")
    }
}

impl Example12 {
    fn start_h(&self) -> f64 {
        match &self.history {
            HistoryKind::ShiftedNoise => 0.0,
            HistoryKind::Bridge { start } | HistoryKind::Drifted { start, .. } => *start,
        }
    }

    /// One step of the auxiliary-state recursion.
    fn step_h(
        &self,
        t: f64,
        t_next: f64,
        h_k: f64,
        w_next: f64,
        inc: f64,
        bbar_eval: Option<&Evaluator>,
    ) -> Result<f64, SdeError> {
        Ok(match &self.history {
            HistoryKind::ShiftedNoise => w_next,
            HistoryKind::Bridge { .. } => {
                // Exact solution flow of dH = -H/(T-t) dt + dW; the leading
                // factor vanishes at the horizon, pinning H_T = 0 bit-exactly.
                (self.horizon - t_next) * (h_k + inc) / (self.horizon - t)
            }
            HistoryKind::Drifted { .. } => {
                let b = bbar_eval
                    .expect("drifted history carries bbar")
                    .eval(&[h_k], t);
                if !b.is_finite() {
                    return Err(SdeError::CoefficientEval {
                        detail: format!("drift at t={t}, h={h_k}"),
                    });
                }
                h_k + b * (t_next - t) + inc
            }
        })
    }

    /// Derive `(W, H)` on `mesh` from per-step `W` increments. The mesh must
    /// start at 0 and stay within the horizon.
    pub fn derive_history(&self, mesh: &[f64], dw: &[f64]) -> Result<Example12State, SdeError> {
        if mesh.is_empty() || dw.len() + 1 != mesh.len() {
            return Err(SdeError::BadMesh);
        }
        let mut w = Vec::with_capacity(mesh.len());
        let mut h = Vec::with_capacity(mesh.len());
        w.push(0.0);
        h.push(self.start_h());
        let bbar_eval: Option<Evaluator> = match &self.history {
            HistoryKind::Drifted { bbar, .. } => Some(bbar.evaluator()),
            _ => None,
        };
        for (k, inc) in dw.iter().enumerate() {
            let w_next = w[k] + inc;
            w.push(w_next);
            let h_next =
                self.step_h(mesh[k], mesh[k + 1], h[k], w_next, *inc, bbar_eval.as_ref())?;
            h.push(h_next);
        }
        Ok(Example12State {
            mesh: mesh.to_vec(),
            w,
            h,
        })
    }

    /// Draw a fresh `(W, H)` history on a uniform mesh of `[0, t]`.
    pub fn sample_history(
        &self,
        seed: u64,
        substream: u64,
        t: f64,
        steps: usize,
    ) -> Result<Example12State, SdeError> {
        if t == 0.0 {
            return self.derive_history(&[0.0], &[]);
        }
        let noise = NoiseGrid::sample(seed, substream, NoiseGrid::uniform_mesh(0.0, t, steps), 1)?;
        let dw: Vec<f64> = (0..noise.steps()).map(|k| noise.dw(k)[0]).collect();
        self.derive_history(noise.mesh(), &dw)
    }

    /// Extend a frozen history to the horizon with fresh `W` increments
    /// (the conditional continuation used by the estimator). The frozen
    /// prefix is carried over unchanged.
    pub fn continue_history(
        &self,
        frozen: &Example12State,
        noise: &NoiseGrid,
    ) -> Result<Example12State, SdeError> {
        let t = frozen.end_time();
        if (noise.mesh()[0] - t).abs() > 1e-12 {
            return Err(SdeError::TimeNotOnMesh { t });
        }
        let mut mesh = frozen.mesh.clone();
        let mut w = frozen.w.clone();
        let mut h = frozen.h.clone();
        let bbar_eval: Option<Evaluator> = match &self.history {
            HistoryKind::Drifted { bbar, .. } => Some(bbar.evaluator()),
            _ => None,
        };
        for k in 0..noise.steps() {
            let inc = noise.dw(k)[0];
            let t_k = *mesh.last().unwrap();
            let t_next = noise.mesh()[k + 1];
            let w_next = w.last().unwrap() + inc;
            let h_next = self.step_h(
                t_k,
                t_next,
                *h.last().unwrap(),
                w_next,
                inc,
                bbar_eval.as_ref(),
            )?;
            mesh.push(t_next);
            w.push(w_next);
            h.push(h_next);
        }
        Ok(Example12State { mesh, w, h })
    }

    /// The exponential martingale `M_t`.
    pub fn martingale(&self, w_t: f64, t: f64) -> f64 {
        (self.alpha * w_t - self.alpha * self.alpha * t / 2.0).exp()
    }

    /// Closed-form `(u, v)` at `(t, x)` given the derived states.
    pub fn oracle(&self, h_t: f64, w_t: f64, t: f64, x: f64) -> (f64, f64) {
        let m = self.martingale(w_t, t);
        let du = self.utility.diff(1);
        let shifted = [x - h_t];
        let u_val = self.utility.eval(&shifted, t) * m;
        let v_val = self.alpha * u_val - du.eval(&shifted, t) * m;
        (u_val, v_val)
    }

    /// Terminal payoff `G(x) = U(x - H_T) M_T` along a full history.
    pub fn payoff(&self, x_terminal: f64, state: &Example12State) -> f64 {
        let m = self.martingale(state.w_end(), state.end_time());
        self.utility.eval(&[x_terminal - state.h_end()], 0.0) * m
    }

    /// Terminal state of the wealth process started at `(s, x)`, using the
    /// flow form `X = x - H_s + H`: for this coefficient structure
    /// (`sigma = 0`, `theta = 1`, drift shared with `H`) the Euler increments
    /// of `X` and `H` coincide term by term, so the flow is the scheme with
    /// the cancellation carried out algebraically.
    pub fn terminal_state(&self, x: f64, s: f64, full: &Example12State) -> Result<f64, SdeError> {
        let idx = full
            .mesh
            .iter()
            .position(|m| (m - s).abs() <= 1e-12)
            .ok_or(SdeError::TimeNotOnMesh { t: s })?;
        match &self.history {
            HistoryKind::ShiftedNoise => {
                // b = 0: X_T = x + W_T - W_s, summed increment by increment.
                let mut xt = x;
                for k in idx..full.w.len() - 1 {
                    xt += full.w[k + 1] - full.w[k];
                }
                Ok(xt)
            }
            _ => Ok(x - full.h[idx] + full.h_end()),
        }
    }
}
