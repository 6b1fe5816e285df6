//! Forward and inverse spectral problems for Sturm–Liouville operators
//! `ℓy = −(y^[1])' − σ y^[1] − σ² y` with `y^[1] = y' − σ y`, on `(0, π)`,
//! boundary conditions `y^[1](0) = 0`, `y^[1](π) + H y(π) = 0`, and
//! `σ ∈ L₂(0, π)`. Distributional potential `q = σ'`.

// `!(a <= b)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod forward;
pub mod grid;
pub mod inverse;
pub mod io;
pub mod kernels;
pub mod potential;
pub mod scalar;
pub mod spectral;
pub mod stability;

pub use error::{Result, SlError};
pub use grid::RealGrid;
pub use potential::{sigma_l2_distance, PotentialSigma};
pub use spectral::{Source, SpectralDatum, SpectralSequence};
