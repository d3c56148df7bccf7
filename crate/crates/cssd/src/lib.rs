//! Compressed smooth-sparse decomposition (CSSD).
//!
//! This crate recovers a smooth background and a sparse anomaly component
//! directly from compressive linear measurements of a signal or image, without
//! reconstructing the raw signal first. It also ships the numerical
//! feasibility calculators for the underlying theory (uniqueness, restricted
//! isometry, measurement-count and recovery-constant bounds) and a seeded
//! simulation harness for recovery/detection sweeps.
//!
//! Modules:
//! - [`tensor`]: dense matrices/vectors/tensors, SVD, Kronecker and mode
//!   products, least squares.
//! - [`bases`]: B-spline and identity basis construction plus the diagnostics
//!   (incoherence, local support, isometry bounds) the theory needs.
//! - [`sensing`]: seeded Gaussian sensing operators, compression, empirical
//!   restricted-isometry estimation.
//! - [`solver`]: the 1-D and Kronecker 2-D decomposition solvers, the
//!   residual-constrained wrappers, and lambda cross-validation.
//! - [`theory`]: closed-form feasibility and recovery-constant calculators.
//! - [`evalsim`]: synthetic data generators, metrics, and sweep runners.
//! - [`io`]: matrix CSV and PGM image formats used by the CLI.

pub mod bases;
pub mod evalsim;
pub mod io;
pub mod rng;
pub mod sensing;
pub mod solver;
pub mod tensor;
pub mod theory;
