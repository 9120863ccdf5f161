//! Sparse state-vector simulation and exhaustive verification of a two-step
//! hyperentangled GHZ-state analyzer for photons carrying polarization and
//! time-bin qubits.
//!
//! The crate is organized around five layers:
//!
//! - [`hilbert`] — composite-system state algebra: basis indexing, sparse
//!   amplitude storage, inner products, and seeded projective measurement.
//! - [`components`] — the optical and atom-cavity elements (controlled phase
//!   flip, wave plates, Pockels cells, beam splitters, delays, time-to-path
//!   transduction) as bound unitary operations.
//! - [`states`] — canonical labels and factories for the `2^N` single-DOF GHZ
//!   families and their `4^N` hyperentangled products.
//! - [`protocol`] — the two-step analysis circuit (cavity atoms, then
//!   time-bin analysis through the preserved polarization entanglement) and
//!   the record classifier.
//! - [`oracle`] — brute-force verification that regenerates the analyzer's
//!   truth tables from first principles and certifies complete discrimination.
//!
//! The crate is `no_std` (with `alloc`); everything that needs a clock, a
//! filesystem, or an output stream lives in the companion CLI crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod components;
mod error;
pub mod hilbert;
pub mod oracle;
pub mod protocol;
pub mod rng;
pub mod states;

pub use components::{apply_op, ElementOp};
pub use error::Error;
pub use hilbert::{
    AtomId, BasisState, MeasBasis, ModeSpec, Outcome, PhotonId, StateVector, SubsystemId,
};
pub use states::{GhzDof, GhzLabel, HyperLabel, Sign};

/// Complex amplitude type used throughout the simulator.
pub type Complex64 = num_complex::Complex<f64>;

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, Error>;

/// Norm deviation tolerated after any public state operation.
pub const NORM_TOL: f64 = 1e-10;

/// Amplitudes with magnitude below this are pruned from sparse storage.
pub const PRUNE_TOL: f64 = 1e-12;

/// Unitarity defect tolerated for constructed elements.
pub const UNITARY_TOL: f64 = 1e-12;
