//! Cylindrically symmetric solutions of the curl-curl problem
//! `∇×(∇×E) + λE = |E|^{p−2}E` in a rotationally invariant domain with
//! perfect-conductor boundary.
//!
//! Fields of the form `E = φ(r, z) e_θ` reduce the problem to a scalar one on
//! the meridian half-plane. The crate assembles the discrete energy there,
//! computes the low spectrum, and finds ground and bound states by minimizing
//! over the Nehari-Pankov manifold.

// `!(x > 0.0)` deliberately rejects NaN; index loops mirror the matrix formulas.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analysis;
pub mod error;
pub mod forms;
pub mod functional;
pub mod grid;
pub mod linalg;
pub mod nehari;
pub mod spectral;

pub use error::{Error, Result};
pub use forms::DiscreteForms;
pub use functional::{make_aniso_backend, make_backend, CurlCurlBackend, Flavor};
pub use grid::{MaterialField, MeridianGrid, Shape};
pub use nehari::{FunctionalBackend, Minimizer, NehariPoint, SphereOptions};
pub use spectral::{eigenpairs, SpectralSplit};
