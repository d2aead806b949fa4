//! Simulation and numerical oracles for exponential functionals of Lévy
//! processes, the Riccati diffusion of one-dimensional disordered systems and
//! the winding of planar Brownian motion.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod densities;
pub mod error;
pub mod experiments;
pub mod expfunc;
pub mod levy;
pub mod moments;
pub mod quad;
pub mod rng;
pub mod specfun;
pub mod stats;
pub mod winding;

pub use error::{LabError, Result};
pub use levy::{JumpFamily, LevySpec, PathRecord};
