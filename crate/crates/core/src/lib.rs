//! Jordan-algebra kernels and affine processes on symmetric cones.
//!
//! The crate is organised bottom-up:
//!
//! * [`jordan`] — Euclidean Jordan algebra kernel (products, quadratic
//!   representation, spectral and Peirce decompositions, cone tests);
//! * [`affine_params`] — admissible parameter sets, the functions F and R,
//!   and admissibility checks;
//! * [`riccati`] — numeric, closed-form and split solutions of the
//!   generalized Riccati equations;
//! * [`wishart`] — Wishart laws: Gindikin set, cone Gamma function, zonal
//!   polynomials, Laplace transforms, densities and exact sampling;
//! * [`simulate`] — path simulation and boundary statistics;
//! * [`exotic`] — polyhedral and dual-Vinberg cone examples;
//! * [`selftest`] — the end-to-end acceptance checks, shared by the
//!   `acceptance` test target and the command-line tool.

pub mod error;
pub mod exotic;
pub mod fixtures;
pub mod affine_params;
pub mod jordan;
pub mod ode;
pub mod quadrature;
pub mod riccati;
pub mod selftest;
pub mod simulate;
pub mod wishart;

pub use error::{Error, Result};

/// Library version.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
