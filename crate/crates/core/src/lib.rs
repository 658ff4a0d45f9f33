//! Exact quantum evolution and energy spectra for solvable bosonic ladder
//! models.
//!
//! A model lives on a finite invariant subspace spanned by states
//! `|Psi_0>, ..., |Psi_N>` on which the Hamiltonian `H = A + A^dag` acts
//! tridiagonally.  The whole model is captured by its beta-sequence
//! `beta_0, ..., beta_N` (with `beta_N = 0`), the non-negative rationals
//! appearing in `A |Psi_n> = sqrt(beta_{n-1}) |Psi_{n-1}>`.
//!
//! * [`model`] builds beta-sequences for the supported model families.
//! * [`gfactors`] computes the integer g-factor tables behind `H^l` matrix
//!   elements, by three independent routes.
//! * [`evolution`] sums the evolution series with certified error bounds.
//! * [`spectrum`] handles characteristic polynomials, eigenvalues,
//!   eigenvectors, continued-fraction ratios and stationary states.
//! * [`oracle`] is a deliberately naive dense cross-check (O(N^3) and worse).
//!
//! The crate is `no_std` (with `alloc`); all floating-point transcendentals
//! go through `libm`.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod error;
pub mod evolution;
pub mod gfactors;
pub mod model;
pub mod oracle;
pub mod rat;
pub mod spectrum;

pub use error::Error;
pub use model::{Family, LadderModel};

/// Convenience result alias used across the crate.
pub type Result<T> = core::result::Result<T, Error>;
