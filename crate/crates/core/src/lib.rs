//! Preparation of spin eigenstates and Dicke states with exchange dynamics.
//!
//! The crate works inside fixed-hamming-weight blocks of an `n`-qubit
//! register. Modules build on one another in this order:
//!
//! - [`spin`]: basis indexing, eigenstates, `S²`, fidelity
//! - [`hamiltonian`]: generalized exchange Hamiltonians and evolution
//! - [`expansion`]: single-qubit expansions and multi-qubit jumps
//! - [`amplification`]: spin pumping for the infeasible expansions
//! - [`planner`]: routes through the `(n, k)` plane and their cost
//! - [`scattering`]: the electron-scattering device and its channel

pub mod amplification;
pub mod error;
pub mod expansion;
pub mod half;
pub mod hamiltonian;
pub mod io;
pub mod planner;
pub mod scattering;
pub mod spin;

pub use error::{Error, Result};
pub use half::Half;
pub use hamiltonian::{build_hamiltonian, evolve, GeneralizedCoupling, SubspaceHamiltonian};
pub use spin::{build_spin_eigenstate, dicke, fidelity, BasisIndexer, DensityMatrix, SpinSpec, SubspaceState};
