//! Numerical laboratory for Wasserstein proximal (JKO) discretizations of the
//! heat equation on the flat torus Tⁿ, n ∈ {1, 2}.
//!
//! The crate builds discrete heat flows by iterated minimization of
//! ½·W₂²(ρ_prev, ρ)/τ-type proximal problems ([`jko`]), measures them against
//! a spectral reference solution ([`reference`]), and verifies the structural
//! identities and inequalities the scheme is supposed to satisfy: optimal
//! transport dualities and infimal-convolution identities ([`transport`]),
//! Hessian lower bounds, per-step pointwise comparisons and their chained
//! consequences ([`harnack`]). The [`torus`] module carries the geometry and
//! finite-difference calculus; [`io`] serializes fields, plans, trajectories,
//! and reports.

pub mod error;
pub mod harnack;
pub mod io;
pub mod jko;
pub mod reference;
pub mod torus;
pub mod transport;

pub use error::{Error, Result};
