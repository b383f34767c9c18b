//! Time-fractional heat equation `D_s^α u = u_xx + f` on `0 < x < s(t)` with a
//! prescribed, non-decreasing right boundary.
//!
//! The crate is organised bottom-up:
//!
//! * [`fraccalc`]: Riemann–Liouville integrals, Caputo derivatives (fixed and
//!   moving lower limit), the Mittag-Leffler function.
//! * [`boundary`]: the interface `s(t)` and its max-convention inverse.
//! * [`basis`]: the moving cosine basis `φ_n(x,t) = √(2/s) cos(λ_n x)`.
//! * [`assembly`]: Galerkin operators `B`, `D̂`, `D̃`, `E`, `G^ε` in closed form,
//!   mollified forcing, boundary lifting.
//! * [`solver`]: the coefficient integral equation `c = Pc` solved by windowed
//!   Picard iteration, and an independent L1 time stepper.
//! * [`verify`]: weak-form residual, energy inequalities and the
//!   fractional-calculus identity checks.

pub mod assembly;
pub mod basis;
pub mod boundary;
mod error;
pub mod field;
pub mod fraccalc;
pub mod quad;
pub mod solver;
pub mod verify;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
