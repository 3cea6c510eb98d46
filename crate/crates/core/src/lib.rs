//! Floquet spectroscopy of periodically driven quantum systems.
//!
//! The crate solves the Floquet eigenproblem of time-periodic Hamiltonians,
//! evaluates harmonic-resolved probe matrix elements and band-resolved
//! susceptibilities, and checks the dark-state and band selection rules that
//! follow from dynamical symmetries.

pub mod cli;
pub mod dipole;
pub mod error;
pub mod floquet;
pub mod linalg;
pub mod models;
pub mod response;
pub mod symmetry;

pub use dipole::{dipole_elements, DipoleSet};
pub use error::{Error, Result};
pub use floquet::{extended_space_solve, floquet_solve, fold, match_branches, FloquetSolution, SolverConfig};
pub use models::{build_benzene, build_dimer, build_tls, ModelBundle, PeriodicHamiltonian, ProbeOperator};
pub use response::{susceptibility, Populations, ResponseConfig, ResponseSpectrum};
pub use symmetry::{SymmetryKind, SymmetryReport, SymmetrySpec};
