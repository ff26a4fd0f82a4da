//! Spectral theory, classical dynamics and quantization of a string whose
//! endpoints carry point masses attached to springs.
//!
//! The crate is organised bottom-up:
//!
//! * [`model`] physical parameters, derived ratios and config ingestion
//! * [`quadrature`] composite Gauss–Legendre integration
//! * [`mu_space`] the Hilbert space `L²_μ[0,ℓ]` with boundary Dirac masses
//! * [`spectrum`] frequency equation, root finding and normalized modes
//! * [`dynamics`] mode-sum evolution, energies and the constraint chain
//! * [`fock`] truncated bosonic Fock space and boundary diagnostics
//! * [`bogoliubov`] Bogoliubov coefficients between space-like embeddings
//! * [`param_mech`] parametrized mechanics toy model
//!
//! Data-parallel loops go through [`par`], which falls back to sequential
//! iteration when the `parallel` feature is disabled.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bogoliubov;
pub mod dynamics;
mod error;
pub mod fock;
pub mod model;
pub mod mu_space;
pub mod par;
pub mod param_mech;
pub mod quadrature;
pub mod roots;
pub mod spectrum;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
