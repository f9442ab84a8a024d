//! Fermionic versus spin baths coupled to a single resonant level.
//!
//! Exact fixed-particle-number propagation for both operator algebras, a
//! single-particle shortcut for the fermionic model, a second-order
//! time-nonlocal master equation for the system level, and closed forms for
//! the four-point bath correlator that separates the two algebras.

pub mod corr4;
pub mod dense;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod fock;
pub mod hamiltonian;
pub mod me2;

pub use error::{Error, Result};
pub use fock::{OccupationState, SectorBasis, Statistics};
pub use hamiltonian::ModelSpec;
