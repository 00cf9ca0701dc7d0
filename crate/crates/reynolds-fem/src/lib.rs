//! Finite-element solver for the nonlinear Reynolds equation with a
//! regularized cavitation model.
//!
//! The equation is treated as a nonlinear convection-diffusion-reaction
//! problem on a rectangle, discretized with bilinear quadrilaterals and
//! stabilized with orthogonal subgrid scales (OSGS). The crate also ships
//! an artificial-diffusion comparator, a residual-scaled shock-capturing
//! term, manufactured-solution verification machinery, and a small CLI
//! for running solves, convergence studies, and line extractions.

pub mod assembly;
pub mod commands;
pub mod config;
pub mod error;
pub mod export;
pub mod mesh;
pub mod model;
pub mod solver;
pub mod sparse;
pub mod verification;

pub use error::{Error, Result};
