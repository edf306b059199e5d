//! Numerical laboratory for Fisher-KPP fronts and the large-deviation prefactor Φ(c).

pub mod asymptotics;
pub mod error;
pub mod harness;
pub mod interp;
pub mod logspace;
pub mod model;
pub mod observables;
pub mod pde_solver;
pub mod wave;

pub use error::{KppError, Result};
