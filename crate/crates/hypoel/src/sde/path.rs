//! Explicit Euler-Maruyama simulation of the dual-noise Itô process
//! `dX = b dt + sigma dB + theta dW`.

use crate::symbolic::{Evaluator, Expr, ExprMatrix};

use super::noise::{NoiseGrid, SdeError};

/// Compiled drift and diffusion coefficients, reusable across many paths.
pub struct CompiledDynamics {
    dim: usize,
    noise_dim: usize,
    drift: Vec<Evaluator>,
    /// Row-major `d x d1`.
    sigma: Vec<Evaluator>,
    theta: Vec<Evaluator>,
    drift_zero: bool,
    sigma_zero: bool,
    theta_zero: bool,
}

impl CompiledDynamics {
    pub fn new(drift: &[Expr], sigma: &ExprMatrix, theta: &ExprMatrix) -> Result<Self, SdeError> {
        let dim = drift.len();
        if sigma.rows() != dim || theta.rows() != dim {
            return Err(SdeError::DimensionMismatch {
                got: sigma.rows(),
                expected: dim,
            });
        }
        if sigma.cols() != theta.cols() {
            return Err(SdeError::NoiseDimension {
                got: theta.cols(),
                expected: sigma.cols(),
            });
        }
        let noise_dim = sigma.cols();
        let compile_matrix = |m: &ExprMatrix| -> Vec<Evaluator> {
            (1..=dim)
                .flat_map(|i| (1..=noise_dim).map(move |k| (i, k)))
                .map(|(i, k)| m.get(i, k).evaluator())
                .collect()
        };
        Ok(CompiledDynamics {
            dim,
            noise_dim,
            drift: drift.iter().map(Expr::evaluator).collect(),
            sigma: compile_matrix(sigma),
            theta: compile_matrix(theta),
            drift_zero: drift.iter().all(Expr::is_zero),
            sigma_zero: sigma.is_zero(),
            theta_zero: theta.is_zero(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn noise_dim(&self) -> usize {
        self.noise_dim
    }
}

/// One realized trajectory on the mesh restricted to `[s, T]`.
#[derive(Clone, Debug)]
pub struct SdePath {
    /// Mesh times from `s` to the terminal time.
    pub times: Vec<f64>,
    /// State at each time; `values[0]` is the start position exactly.
    pub values: Vec<Vec<f64>>,
}

impl SdePath {
    pub fn terminal(&self) -> &[f64] {
        self.values.last().expect("path has at least one point")
    }
}

/// Euler-Maruyama with coefficients frozen at the left endpoint:
/// `X_{k+1} = X_k + b dt + sigma dB + theta dW`, evaluated at `(t_k, X_k)`.
/// `s` must lie on the noise mesh; the result is deterministic given the
/// noise.
pub fn simulate_path(
    dynamics: &CompiledDynamics,
    s: f64,
    x: &[f64],
    noise: &NoiseGrid,
) -> Result<SdePath, SdeError> {
    if x.len() != dynamics.dim {
        return Err(SdeError::DimensionMismatch {
            got: x.len(),
            expected: dynamics.dim,
        });
    }
    if noise.noise_dim() != dynamics.noise_dim {
        return Err(SdeError::NoiseDimension {
            got: noise.noise_dim(),
            expected: dynamics.noise_dim,
        });
    }
    let start = noise.index_of(s)?;
    let mesh = noise.mesh();
    let steps = noise.steps();
    let d = dynamics.dim;
    let d1 = dynamics.noise_dim;

    let mut times = Vec::with_capacity(steps - start + 1);
    let mut values = Vec::with_capacity(steps - start + 1);
    times.push(mesh[start]);
    values.push(x.to_vec());

    let mut state = x.to_vec();
    let mut next = vec![0.0; d];
    for k in start..steps {
        let t = mesh[k];
        let dt = mesh[k + 1] - t;
        let dw = noise.dw(k);
        let db = noise.db(k);
        for i in 0..d {
            let mut v = state[i];
            if !dynamics.drift_zero {
                v += eval_checked(&dynamics.drift[i], &state, t)? * dt;
            }
            if !dynamics.sigma_zero {
                for (kk, inc) in db.iter().enumerate() {
                    v += eval_checked(&dynamics.sigma[i * d1 + kk], &state, t)? * inc;
                }
            }
            if !dynamics.theta_zero {
                for (kk, inc) in dw.iter().enumerate() {
                    v += eval_checked(&dynamics.theta[i * d1 + kk], &state, t)? * inc;
                }
            }
            next[i] = v;
        }
        state.copy_from_slice(&next);
        times.push(mesh[k + 1]);
        values.push(state.clone());
    }
    Ok(SdePath { times, values })
}

fn eval_checked(e: &Evaluator, state: &[f64], t: f64) -> Result<f64, SdeError> {
    let v = e.eval(state, t);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(SdeError::CoefficientEval {
            detail: format!("non-finite coefficient at t={t}, x={state:?}"),
        })
    }
}
