//! Stationary electrostatic MEMS free boundary problem.
//!
//! A clamped elastic plate hangs above a ground plate; the potential lives in
//! the gap between them. The crate solves the potential on a fixed rectangle,
//! evaluates the electrostatic energy and the plate traction, minimizes the
//! mechanical energy at fixed electrostatic energy, and traces the
//! small-voltage solution branch by Newton continuation.

pub mod banded;
pub mod cli;
pub mod continuation;
pub mod elliptic;
pub mod energy;
pub mod error;
pub mod model;
pub mod optimizer;
pub mod spectral;

pub use error::{Error, Result};
