//! Exact quantum mechanics of generalized harmonic oscillators.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classical;
pub mod error;
pub mod export;
pub mod grid;
pub mod ode;
pub mod oracle;
pub mod params;
pub mod propagator;
pub mod states;
pub mod verify;
pub mod quadrature;

pub use num_complex::Complex64;
