//! Element-by-element reconstruction of the vibrational density matrix of a
//! trapped ion.
//!
//! A three-level ion with two vibrational modes `x` and `z` is prepared in
//! `ρ_vib ⊗ |0⟩⟨0|_z ⊗ |−⟩⟨−|`. A pulse sequence `U_mn` entangles the
//! electronic pair `{−, +}` with two copies of the unknown state so that the
//! transverse pseudospin expectations of the pair equal a single Fock-basis
//! matrix element `⟨m|ρ_vib|n⟩`.

pub mod checks;
pub mod cli;
pub mod error;
pub mod hilbert;
pub mod linalg;
pub mod protocol;
pub mod pulses;
pub mod states;
pub mod tomography;

pub use error::{Error, Result};
