//! Robust phase retrieval by composite optimization.
//!
//! The library recovers a real signal x⋆ from phaseless measurements
//! b_i ≈ ⟨a_i, x⋆⟩², a fraction of which may be grossly corrupted, by
//! minimizing the robust objective
//!
//! ```text
//! f(x) = (1/m) · Σ_i |⟨a_i, x⟩² − b_i|
//! ```
//!
//! with a prox-linear method: each outer step solves a convexified model
//! penalized by a quadratic, rescaled to the canonical form
//! min_u ‖Bu − c‖₁ + ½‖u‖² and handed to an ADMM-based inner solver with
//! dense or matrix-free (CG) graph projections. Spectral initializers put
//! the starting point inside the basin of local quadratic convergence, and
//! a truncated amplitude-flow baseline is included for comparison.
//!
//! Modules:
//! - [`numerics`]: vector kernels, quantiles, power iteration, CG, FWHT,
//!   seeded RNG.
//! - [`sensing`]: Gaussian and stacked-Hadamard ensembles, measurement,
//!   corruption, signal ingestion.
//! - [`init`]: spectral initializers (noiseless, outlier-robust, and the
//!   norm-quantile variants) with the robust radius estimate.
//! - [`subsolver`]: the ADMM inner solver and duality-gap certificate.
//! - [`proxlin`]: the outer prox-linear loop with its two-phase accuracy
//!   schedule.
//! - [`baselines`]: truncated amplitude flow.
//! - [`harness`]: seeded Monte-Carlo benchmark grids, CSV/SVG emission, and
//!   Monte-Carlo checks of the theory constants.

pub mod baselines;
pub mod error;
pub mod harness;
pub mod init;
pub mod numerics;
pub mod proxlin;
pub mod sensing;
pub mod subsolver;

pub use error::{Error, Result};
