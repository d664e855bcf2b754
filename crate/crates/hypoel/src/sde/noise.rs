//! Deterministic dual-noise increments on a time mesh.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SdeError {
    #[error("time mesh needs at least one step")]
    EmptyMesh,
    #[error("time mesh must be strictly increasing")]
    BadMesh,
    #[error("time {t} is not a mesh point")]
    TimeNotOnMesh { t: f64 },
    #[error("state dimension mismatch: got {got}, expected {expected}")]
    DimensionMismatch { got: usize, expected: usize },
    #[error("noise dimension mismatch: got {got}, expected {expected}")]
    NoiseDimension { got: usize, expected: usize },
    #[error("coefficient evaluation produced a non-finite value: {detail}")]
    CoefficientEval { detail: String },
}

/// Brownian increments for the two independent driving processes `W` and `B`
/// on a fixed mesh. Regenerating with the same `(seed, substream)` is
/// bit-identical; distinct substreams of one seed are independent.
#[derive(Clone, Debug)]
pub struct NoiseGrid {
    mesh: Vec<f64>,
    d1: usize,
    /// Row `k` holds the `d1` components of `W(t_{k+1}) - W(t_k)`.
    dw: Vec<f64>,
    db: Vec<f64>,
    seed: u64,
    substream: u64,
}

impl NoiseGrid {
    /// Draw increments on `mesh` (strictly increasing, at least two points).
    /// Per step, the `d1` components of `dW` are drawn before those of `dB`.
    pub fn sample(
        seed: u64,
        substream: u64,
        mesh: Vec<f64>,
        d1: usize,
    ) -> Result<NoiseGrid, SdeError> {
        if mesh.len() < 2 {
            return Err(SdeError::EmptyMesh);
        }
        if mesh.windows(2).any(|w| w[1] <= w[0]) {
            return Err(SdeError::BadMesh);
        }
        let steps = mesh.len() - 1;
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(substream);
        let mut dw = Vec::with_capacity(steps * d1);
        let mut db = Vec::with_capacity(steps * d1);
        for k in 0..steps {
            let sd = (mesh[k + 1] - mesh[k]).sqrt();
            for _ in 0..d1 {
                let z: f64 = rng.sample(StandardNormal);
                dw.push(z * sd);
            }
            for _ in 0..d1 {
                let z: f64 = rng.sample(StandardNormal);
                db.push(z * sd);
            }
        }
        Ok(NoiseGrid {
            mesh,
            d1,
            dw,
            db,
            seed,
            substream,
        })
    }

    /// Uniform mesh with `steps` steps on `[t0, t1]`.
    pub fn uniform_mesh(t0: f64, t1: f64, steps: usize) -> Vec<f64> {
        let h = (t1 - t0) / steps as f64;
        let mut mesh: Vec<f64> = (0..steps).map(|k| t0 + k as f64 * h).collect();
        mesh.push(t1);
        mesh
    }

    pub fn mesh(&self) -> &[f64] {
        &self.mesh
    }

    pub fn steps(&self) -> usize {
        self.mesh.len() - 1
    }

    pub fn noise_dim(&self) -> usize {
        self.d1
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn substream(&self) -> u64 {
        self.substream
    }

    /// `W` increments of step `k`.
    pub fn dw(&self, k: usize) -> &[f64] {
        &self.dw[k * self.d1..(k + 1) * self.d1]
    }

    /// `B` increments of step `k`.
    pub fn db(&self, k: usize) -> &[f64] {
        &self.db[k * self.d1..(k + 1) * self.d1]
    }

    /// Index of a mesh point equal to `t` (to absolute tolerance 1e-12).
    pub fn index_of(&self, t: f64) -> Result<usize, SdeError> {
        self.mesh
            .iter()
            .position(|m| (m - t).abs() <= 1e-12)
            .ok_or(SdeError::TimeNotOnMesh { t })
    }

    /// Cumulative `W` path started from zero: entry `k` is `W(t_k)`.
    pub fn w_path(&self) -> Vec<Vec<f64>> {
        let mut out = Vec::with_capacity(self.mesh.len());
        let mut acc = vec![0.0; self.d1];
        out.push(acc.clone());
        for k in 0..self.steps() {
            for (a, inc) in acc.iter_mut().zip(self.dw(k)) {
                *a += inc;
            }
            out.push(acc.clone());
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regeneration_is_bit_identical() {
        let mesh = NoiseGrid::uniform_mesh(0.0, 1.0, 50);
        let a = NoiseGrid::sample(42, 7, mesh.clone(), 2).unwrap();
        let b = NoiseGrid::sample(42, 7, mesh.clone(), 2).unwrap();
        assert_eq!(a.dw, b.dw);
        assert_eq!(a.db, b.db);
        let c = NoiseGrid::sample(42, 8, mesh, 2).unwrap();
        assert_ne!(a.dw, c.dw);
    }

    #[test]
    fn increment_variance_matches_step() {
        let mesh = NoiseGrid::uniform_mesh(0.0, 2.0, 100);
        let n = 2000;
        let mut sum_sq = 0.0;
        for sub in 0..n {
            let g = NoiseGrid::sample(1, sub, mesh.clone(), 1).unwrap();
            sum_sq += g.dw(0)[0] * g.dw(0)[0];
        }
        let var = sum_sq / n as f64;
        let dt = 0.02;
        // Chi-square concentration: relative error ~ sqrt(2/n) ~ 3%.
        assert!((var - dt).abs() < 4.0 * dt * (2.0 / n as f64).sqrt());
    }

    #[test]
    fn w_and_b_streams_are_uncorrelated() {
        let steps = 100_000;
        let mesh = NoiseGrid::uniform_mesh(0.0, 1.0, steps);
        let g = NoiseGrid::sample(3, 0, mesh, 1).unwrap();
        let mut cross = 0.0;
        let mut var_w = 0.0;
        let mut var_b = 0.0;
        for k in 0..steps {
            cross += g.dw(k)[0] * g.db(k)[0];
            var_w += g.dw(k)[0] * g.dw(k)[0];
            var_b += g.db(k)[0] * g.db(k)[0];
        }
        let corr = cross / (var_w * var_b).sqrt();
        assert!(corr.abs() < 3.0 / (steps as f64).sqrt(), "corr = {corr}");
    }

    #[test]
    fn degenerate_meshes_rejected() {
        assert!(matches!(
            NoiseGrid::sample(0, 0, vec![0.0], 1),
            Err(SdeError::EmptyMesh)
        ));
        assert!(matches!(
            NoiseGrid::sample(0, 0, vec![0.0, 0.5, 0.5], 1),
            Err(SdeError::BadMesh)
        ));
    }
}
