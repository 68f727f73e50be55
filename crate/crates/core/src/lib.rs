//! Quantum-walk models of quantum-battery cells.
//!
//! A cell ("Q-Cell") is a continuous-time quantum walker on a small graph.
//! This crate builds the cell Hamiltonians ([`graphs`]), diagonalizes them
//! ([`spectral`]), evaluates stored and extractable work ([`thermo`]),
//! synthesizes discharge/recharge unitaries and the potentials generating
//! them ([`protocols`]), propagates cells under decoherence ([`noise`]) and
//! studies chiral phases as a bandwidth resource ([`chirality`]).
//!
//! Units: ħ = 1 and energies are measured in the coupling `J` carried by
//! every [`graphs::Hamiltonian`].

pub mod chirality;
pub mod error;
pub mod graphs;
pub mod linalg;
pub mod noise;
pub mod protocols;
pub mod spectral;
pub mod thermo;

pub use error::{Error, Result};
pub use graphs::{build_hamiltonian, is_circulant, Hamiltonian, Topology, TopologySpec};
pub use linalg::{CMatrix, CVector, C64};
pub use spectral::{
    circulant_spectrum, eigh, krylov_reduce, spectrum_of, KrylovReduction, Spectrum,
};
pub use thermo::{energy, ergotropy, passive_state, QuantumState, ThermalSpec};
