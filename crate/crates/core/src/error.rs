use core::fmt;

use crate::hilbert::{PhotonId, SubsystemId};

/// Errors surfaced by state algebra, element construction, and protocol runs.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Mode specification outside the supported range.
    InvalidSpec(&'static str),
    /// Two states with different mode specifications were combined.
    SpecMismatch,
    /// Two states covering different subsystem sets were compared.
    CoverageMismatch,
    /// Tensor factors share a subsystem.
    OverlappingSubsystems(SubsystemId),
    /// An operation was bound to a subsystem the state does not carry.
    UnboundSubsystem(SubsystemId),
    /// The same subsystem appears twice in a measurement or plan.
    DuplicateSubsystem(SubsystemId),
    /// Malformed argument (bad photon count, identical paths, empty list, ...).
    Argument(&'static str),
    /// A basis value exceeds the range allowed by the mode specification.
    ValueOutOfRange { subsystem: SubsystemId, value: u8 },
    /// A state or projection came out with zero norm.
    ZeroNorm,
    /// Post-operation norm drifted beyond tolerance; indicates an internal bug.
    NormViolation { norm_sqr: f64 },
    /// A delay pushed amplitude past the last time slot of the lattice.
    LatticeOverflow { photon: PhotonId, slot: u8 },
    /// An element's stated precondition does not hold for the input state.
    Precondition(&'static str),
    /// Amplitude spread over more than one time slot at detection.
    TemporalSpread { photon: PhotonId },
    /// An element failed its isometry check.
    NotUnitary { defect: f64 },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidSpec(msg) => write!(f, "invalid mode spec: {msg}"),
            Error::SpecMismatch => write!(f, "composition error: mode specs differ"),
            Error::CoverageMismatch => {
                write!(f, "composition error: states cover different subsystems")
            }
            Error::OverlappingSubsystems(s) => {
                write!(f, "composition error: tensor factors both carry {s}")
            }
            Error::UnboundSubsystem(s) => {
                write!(f, "composition error: {s} is not carried by the state")
            }
            Error::DuplicateSubsystem(s) => write!(f, "argument error: {s} listed twice"),
            Error::Argument(msg) => write!(f, "argument error: {msg}"),
            Error::ValueOutOfRange { subsystem, value } => {
                write!(f, "argument error: value {value} out of range for {subsystem}")
            }
            Error::ZeroNorm => write!(f, "state has zero norm"),
            Error::NormViolation { norm_sqr } => {
                write!(f, "norm violation: |psi|^2 = {norm_sqr}")
            }
            Error::LatticeOverflow { photon, slot } => write!(
                f,
                "lattice overflow: photon {photon} delayed past the last slot (to {slot})"
            ),
            Error::Precondition(msg) => write!(f, "precondition error: {msg}"),
            Error::TemporalSpread { photon } => write!(
                f,
                "temporal distinguishability: photon {photon} arrives spread over several slots"
            ),
            Error::NotUnitary { defect } => {
                write!(f, "element error: not unitary (defect {defect:e})")
            }
        }
    }
}

impl core::error::Error for Error {}
