//! Spectral laboratory for the nonlinear Schrodinger (NLS) approximation of
//! the quasilinear Klein-Gordon equation
//!
//! ```text
//! u_tt = u_xx - u + (u^2)_xx
//! ```
//!
//! on a periodic box. The crate contains the spectral discretization, two
//! equivalent time steppers for the Klein-Gordon equation, a split-step NLS
//! solver, the second-order modulation ansatz with its residual, the
//! normal-form energy functionals, and the sweep harness that fits the
//! observed error exponents.

pub mod approximation;
pub mod dispersion;
pub mod energy;
pub mod error;
pub mod harness;
pub mod kg;
pub mod nls;
pub mod spectral;

pub use error::{Error, Result};
