//! Sublinear expectations under mean and volatility uncertainty.
//!
//! * [`scenario`]: finite scenario families, axioms, independence, risk.
//! * [`gpde`]: the G-heat equation, G-normal and maximal distributions.
//! * [`limits`]: robust law of large numbers and central limit theorem by
//!   dynamic programming.
//! * [`glattice`]: G-Brownian motion on a volatility-controlled lattice.
//! * [`gsde`]: forward SDEs, BSDEs and the nonlinear Feynman-Kac link.

pub mod decimal;
pub mod dp;
pub mod error;
pub mod func;
pub mod glattice;
pub mod gpde;
pub mod gsde;
pub mod limits;
pub mod scenario;

pub use error::{Error, Result};
pub use func::TestFunction;
