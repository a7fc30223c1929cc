//! Numerical solver for the torus-invariant Calabi-Yau equation on the
//! Kodaira-Thurston manifold `S¹ × Nil³/Γ`.
//!
//! The crate is layered bottom-up:
//!
//! - [`grid`]: periodic fields on the unit 2-torus with pseudo-spectral calculus.
//! - [`forms`]: invariant differential forms in the coframe `{dx, dt, dy, dz - x dy}`.
//! - [`reduction`]: the scalar Monge-Ampère form of the equation and its identities.
//! - [`solver`]: Newton-Krylov iteration inside a continuity path.
//! - [`connection`]: exact structure equations of the canonical connection.

pub mod connection;
pub mod error;
pub mod exact;
pub mod field_io;
pub mod forms;
pub mod grid;
mod krylov;
pub mod presets;
pub mod reduction;
pub mod solver;

pub use error::{Error, Result};
pub use grid::{Deriv, Grid, TorusField};
