//! Translation-invariant quadratic fermion lattices.
//!
//! Builds BdG Hamiltonians from finite-support couplings, diagonalizes them
//! momentum by momentum, assembles the exact Gaussian ground-state covariance
//! and evaluates the spin-summed imaginary hopping correlator, which is
//! conserved by every translation-invariant quench and can only be nonzero in
//! gapless systems. A brute-force Fock-space oracle cross-checks everything on
//! small lattices.

pub mod cli;
pub mod lattice;
pub mod linalg;
pub mod model;
pub mod observables;
pub mod oracle;
pub mod solver;
