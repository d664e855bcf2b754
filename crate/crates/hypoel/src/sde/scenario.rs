//! Frozen noise histories: the conditioning data for conditional estimates.

use super::noise::{NoiseGrid, SdeError};

/// A frozen `W`-history on `[0, t]`. Conditional Monte Carlo freezes this
/// history and draws fresh noise beyond `t`; derived coefficient states
/// (such as the auxiliary processes of the shifted-utility example) are
/// deterministic functions of it.
#[derive(Clone, Debug)]
pub struct Scenario {
    mesh: Vec<f64>,
    /// `W` at each mesh point (`d1` components), starting at zero.
    w: Vec<Vec<f64>>,
}

impl Scenario {
    /// Draw a `W`-history on a uniform mesh of `[0, t]`.
    pub fn sample(
        seed: u64,
        substream: u64,
        t: f64,
        steps: usize,
        d1: usize,
    ) -> Result<Scenario, SdeError> {
        if t == 0.0 {
            return Ok(Scenario::trivial(0.0, d1));
        }
        let noise = NoiseGrid::sample(seed, substream, NoiseGrid::uniform_mesh(0.0, t, steps), d1)?;
        Ok(Scenario {
            mesh: noise.mesh().to_vec(),
            w: noise.w_path(),
        })
    }

    /// The vacuous scenario: `W` frozen at zero. Conditioning on it is
    /// trivial, which is the Markovian case.
    pub fn trivial(t: f64, d1: usize) -> Scenario {
        if t == 0.0 {
            return Scenario {
                mesh: vec![0.0],
                w: vec![vec![0.0; d1]],
            };
        }
        Scenario {
            mesh: vec![0.0, t],
            w: vec![vec![0.0; d1], vec![0.0; d1]],
        }
    }

    /// Wrap an explicit history.
    pub fn from_history(mesh: Vec<f64>, w: Vec<Vec<f64>>) -> Result<Scenario, SdeError> {
        if mesh.is_empty() || mesh.len() != w.len() {
            return Err(SdeError::BadMesh);
        }
        if mesh.windows(2).any(|m| m[1] <= m[0]) {
            return Err(SdeError::BadMesh);
        }
        Ok(Scenario { mesh, w })
    }

    /// The freeze time `t` (last mesh point).
    pub fn freeze_time(&self) -> f64 {
        *self.mesh.last().unwrap()
    }

    pub fn mesh(&self) -> &[f64] {
        &self.mesh
    }

    pub fn w(&self) -> &[Vec<f64>] {
        &self.w
    }

    /// `W(t)` at the freeze time.
    pub fn w_end(&self) -> &[f64] {
        self.w.last().unwrap()
    }

    pub fn noise_dim(&self) -> usize {
        self.w[0].len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sampled_scenario_is_reproducible() {
        let a = Scenario::sample(5, 1, 0.5, 20, 2).unwrap();
        let b = Scenario::sample(5, 1, 0.5, 20, 2).unwrap();
        assert_eq!(a.w, b.w);
        assert_eq!(a.freeze_time(), 0.5);
        assert_eq!(a.w[0], vec![0.0, 0.0]);
    }

    #[test]
    fn trivial_scenario_is_zero() {
        let s = Scenario::trivial(0.3, 1);
        assert_eq!(s.w_end(), &[0.0]);
        let s0 = Scenario::trivial(0.0, 1);
        assert_eq!(s0.freeze_time(), 0.0);
    }
}
