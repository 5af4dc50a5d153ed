//! Bound states of the non-relativistic hydrogen atom on R^3 x S^1.
//!
//! The extra dimension is a circle of radius `R`. The Hamiltonian is
//! diagonalized in truncated bases built from hydrogen eigenfunctions or
//! normalized exponentials, each combined with plane waves `e^{iqθ}` along
//! the circle. A Wronskian shooting solver for a Coulomb + Yukawa toy model
//! provides an independent check on the diagonalization.
//!
//! Units throughout: lengths in Bohr radii `a`, energies in `e²/2a`
//! (so `ħ²/2m = 1`, `e² = 2`, and the free hydrogen ground state is `-1`).

pub mod density;
pub mod eig;
mod error;
pub mod matrixbuild;
pub mod ode;
pub mod potential;
pub mod quad;
pub mod scanio;
pub mod shooting;
pub mod specialfn;

pub use error::{Error, Result};

/// Squared elementary charge in the `e²/2a`, `a` unit system.
pub const E2: f64 = 2.0;

/// Largest compactification radius for which the atom is stable.
pub const R_CRIT: f64 = 0.25;
