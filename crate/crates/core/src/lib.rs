//! Numerical toolkit for Weyl almost periodic functions on R^n.
//!
//! Variable-exponent norms over translated cubes, Stepanov and Weyl
//! distances, ε-almost-period certification for the weighted Weyl classes,
//! Bohr–Fourier mean values, and transfer of almost periodicity through
//! heat, evolution and wave operators.

pub mod ap_certifier;
pub mod error;
pub mod function_model;
pub mod harmonic;
pub mod pde_apps;
pub mod quadrature;
pub mod vexp_lebesgue;
pub mod weyl_metrics;

pub use error::{Error, Result};
pub use num_complex::Complex64;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
