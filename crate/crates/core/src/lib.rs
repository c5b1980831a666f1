//! Radial finite-volume laboratory for the quasilinear parabolic-elliptic
//! Keller-Segel system
//!
//! ```text
//! u_t = div(D(u) grad u) - div(S(u) grad v),    0 = Δv - v + u    in B_R,
//! ```
//!
//! with no-flux boundary conditions.
//!
//! The crate evolves radial solutions, monitors the energy functional and
//! its dissipation, builds the concentrating initial-data family that drives
//! the energy to minus infinity, and checks the scaling laws and regime
//! boundaries that go with it.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod elliptic;
pub mod energy;
pub mod error;
pub mod evolution;
pub mod grid;
pub mod harness;
pub mod initdata;
pub mod linalg;
pub mod model;
pub mod quad;

pub use error::{Error, Result};
pub use grid::{RadialField, RadialGrid};
pub use model::{Model, ModelParams};
