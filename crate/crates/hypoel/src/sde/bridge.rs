//! Exact conditional sampling of the Brownian bridge.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use super::noise::SdeError;

/// Sample a Brownian bridge from `start` at the first mesh point to
/// `endpoint` at the last, by exact per-step conditional Gaussians:
/// given `H_k`, the next value is normal with mean
/// `H_k + (endpoint - H_k) dt / (T - t_k)` and variance
/// `dt (T - t_{k+1}) / (T - t_k)`. The terminal value equals `endpoint`
/// bit-exactly.
pub fn brownian_bridge(
    start: f64,
    endpoint: f64,
    mesh: &[f64],
    seed: u64,
) -> Result<Vec<f64>, SdeError> {
    if mesh.len() < 2 {
        return Err(SdeError::EmptyMesh);
    }
    if mesh.windows(2).any(|w| w[1] <= w[0]) {
        return Err(SdeError::BadMesh);
    }
    let big_t = *mesh.last().unwrap();
    let steps = mesh.len() - 1;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(mesh.len());
    out.push(start);
    let mut h = start;
    for k in 0..steps {
        if k == steps - 1 {
            h = endpoint;
        } else {
            let dt = mesh[k + 1] - mesh[k];
            let remain = big_t - mesh[k];
            let remain_next = big_t - mesh[k + 1];
            let mean = h + (endpoint - h) * dt / remain;
            let var = dt * remain_next / remain;
            let z: f64 = rng.sample(StandardNormal);
            h = mean + var.sqrt() * z;
        }
        out.push(h);
    }
    Ok(out)
}
