//! Uniformization of polynomial mean-field Hamiltonian systems.
//!
//! A polynomial Hamiltonian functional `γ(ρ) = Σ_m (1/m!)⟨ρ^⊗m, W^(m)⟩` over a
//! finite-dimensional Hamiltonian algebra generates a nonlinear Vlasov/Hartree
//! flow. Its ε-uniformization is the family of linear n-particle Hamiltonians
//! `H^(n) = Σ_m C(n,m) ε^(m-1) Sym(I^⊗(n-m) ⊗ W^(m))`. This crate builds both
//! sides, evolves them, and measures how coherent-state contractions of the
//! linear dynamics converge to the nonlinear one as ε → 0.
//!
//! Module map:
//! - [`tensor`]: dense complex linear algebra, symmetric/antisymmetric sectors, propagators.
//! - [`algebra`]: quantum and classical realizations, γ and its derivative.
//! - [`uniformize`]: sector Hamiltonians, number observables, representing functionals.
//! - [`dynamics`]: Hartree, von Neumann and phase-space Vlasov integrators; sector propagators.
//! - [`meanfield`]: disentangled propagators, ε-solutions, fixed points, gaps and solitons.
//! - [`verify`]: seeded property suites and their pass/fail summary.

pub mod algebra;
pub mod dynamics;
pub mod error;
pub mod meanfield;
pub mod random;
pub mod tensor;
pub mod uniformize;
pub mod verify;

#[cfg(any(test, feature = "oracles"))]
pub mod oracles;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
