//! Stationary time reversal of jump-diffusions on [0, 1].
//!
//! A forward model diffuses with variance `v` and drift `mu` and, at rate
//! `lambda`, jumps to 0 or 1. This crate computes its stationary density,
//! builds the time-reversed process (a diffusion whose jumps off the
//! boundaries are clocked by local time), simulates both, and checks the
//! reversal identity.

pub mod error;
pub mod expr;
pub mod hyp2f1;
pub mod linalg;
pub mod model;
pub mod ode;
pub mod quad;
pub mod real;
pub mod reversal;
pub mod simulate;
pub mod stats;
pub mod stationary;
pub mod verify;

pub use error::{Error, Result};
pub use real::Real;

/// Double-precision model.
pub type Model = model::ModelSpec<f64>;
