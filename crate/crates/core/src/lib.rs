//! Grid-free sparse spike recovery over Radon measures.
//!
//! The crate solves the BLASSO
//!
//! ```text
//! min_m  1/2 |Phi m - y|^2 + lambda |m|_TV
//! ```
//!
//! over discrete measures `m = sum_i a_i delta_{x_i}` with the Sliding
//! Frank-Wolfe algorithm ([`sfw::run_sfw`]), and ships the machinery around it:
//!
//! - [`measures`]: discrete measures and their elementary algebra.
//! - [`kernels`]: measurement kernels `phi: X -> R^M` (sampled Gaussian,
//!   discretized Laplace, and the astigmatism / double-helix / MA-TIRF
//!   microscopy models) with analytic derivatives.
//! - [`certificates`]: dual certificates `eta_lambda`, `eta_V`, `eta_W`,
//!   closed-form Laplace oracles and nondegeneracy checks.
//! - [`solvers`]: the fixed-support LASSO (FISTA), the bounded quasi-Newton
//!   joint descent and the certificate argmax search.
//! - [`simulation`] and [`evaluation`]: SMLM phantom generation, the photon
//!   noise model, and localization scoring.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, configuration
//! and the command-line driver live in the `sfw-cli` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod certificates;
pub mod error;
pub mod evaluation;
pub mod grid;
pub mod kernels;
pub mod linalg;
pub mod measures;
pub mod sfw;
pub mod simulation;
pub mod solvers;

pub use error::{Error, Result};
pub use grid::Grid;
pub use kernels::{Kernel, KernelSpec};
pub use measures::{DiscreteMeasure, Domain, Point, Spike};
