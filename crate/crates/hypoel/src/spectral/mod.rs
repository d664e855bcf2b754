//! Periodic-torus spectral calculus: grids, sampled fields, Bessel-potential
//! Sobolev norms, pseudo-spectral operator application, mollification, and
//! probe generation.

mod field;
mod grid;
mod mollify;
mod norms;
mod ops;
mod probe;
mod serialize;

pub use field::GridField;
pub use grid::{SpectralError, TorusGrid};
pub use mollify::mollify;
pub use norms::{
    bessel_apply, derivative, gradient, h_norm, h_norm_directional, laplacian, tail_mass,
};
pub use ops::{apply_operator, apply_sampled, sample_coeffs};
pub use probe::{commutator_ratio, random_band_limited, CommutatorRatio};
pub use serialize::{grid_descriptor, read_binary, write_binary, write_csv};
