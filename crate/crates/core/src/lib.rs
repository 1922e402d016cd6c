//! Eigenenergies and eigenfunctions of a trapped ion driven by two
//! counter-propagating traveling-wave Raman beams, computed without the
//! rotating-wave approximation.
//!
//! The transformed Hamiltonian
//!
//! ```text
//! H_I = (Ω/2) σ_z + a†a + g (a† + a)(σ₊ + σ₋) + ε (σ₊ + σ₋) + g²,   g = η/2,  ε = −Δ/2
//! ```
//!
//! is written in the Bargmann (coherent-state) representation, where the
//! eigenvalue problem turns into a three-term recurrence for the power-series
//! coefficients of the wavefunction. Eigenenergies are the zeros of the
//! associated continued fraction. Every result can be checked against a
//! dense diagonalization of the truncated Fock-basis matrix ([`reference`]).
//!
//! # Basis ordering
//!
//! All matrices and spinor vectors in this crate use the product basis
//! `|n⟩ ⊗ |s⟩` with flat index `2n + s`, where `s = 0` is spin down and
//! `s = 1` is spin up (see [`model::basis_index`]).
//!
//! # Example
//!
//! ```
//! use iontrap_cf::{contfrac::CfConfig, model::ModelParams, recurrence::Branch, spectrum};
//!
//! let params = ModelParams::new(2.0, 0.2, 0.2).unwrap();
//! let spec = spectrum::find_roots(Branch::MinusExp, &params, -2.0, 1.0, 1e-3, &CfConfig::default())
//!     .unwrap();
//! assert!(!spec.roots.is_empty());
//! ```

pub(crate) mod dual;
pub mod contfrac;
pub mod linalg;
pub mod model;
pub mod recurrence;
pub mod reference;
pub(crate) mod scan;
pub mod spectrum;
pub mod sweep;

pub use contfrac::CfConfig;
pub use model::{FockSpinMatrix, ModelParams};
pub use recurrence::Branch;
pub use spectrum::{FockSpinor, RootDiagnostics, Spectrum};
pub use sweep::SweepTable;

/// Crate version recorded in sweep metadata.
pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");
