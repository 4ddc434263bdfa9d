//! Semiclassical propagators for the Jaynes–Cummings model.
//!
//! The exact propagator comes from the 2×2 invariant blocks of the
//! excitation number, with a dense matrix exponential as an independent
//! check. The dominant-path approximation solves the complexified classical
//! boundary-value problem by shooting and by its closed Weierstrass form.
//! At the poles a Gaussian fluctuation factor restores spontaneous emission.

pub mod dopa;
pub mod elliptic;
pub mod error;
pub mod exact;
pub mod export;
pub mod fluct;
pub mod model;
pub mod ode;
pub mod par;
pub mod poles;
pub mod quad;

pub use error::{JcError, Result};
pub use model::{Method, ModelParams, PropagatorElement};
