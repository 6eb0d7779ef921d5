//! Decoherence and environmental distinguishability for a harmonic oscillator
//! linearly coupled to a thermal Lorentz-Drude bath.
//!
//! The crate evaluates the noise, dissipation and quantum-Fisher-information
//! (QFI) kernels of the bath, the influence-functional exponents that control
//! decoherence, and the generalized overlap of the environment's conditional
//! states that controls how much of the system's position the environment can
//! resolve. A truncated-Fock-space oracle in [`fock`] checks the single-mode
//! overlap formula by brute force.
//!
//! Everything is in SI units unless a [`Constants::natural`] preset is used.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` deliberately rejects NaN

mod cmath;
pub mod error;
pub mod fock;
pub mod functional;
pub mod influence;
pub mod kernels;
pub mod overlap;
pub mod params;
pub mod quad;
pub mod scales;
pub mod trajectory;

pub use error::{Error, Result};
pub use kernels::{KernelEstimate, MatsubaraConfig, SpectralDensity, StructuredKernel};
pub use overlap::{Mode, ModeSet, ModeSetProvenance};
pub use params::{Constants, PhysicalParams, RegimeReport, ValidatedParams};
pub use scales::ScalesReport;
pub use trajectory::{DeltaTrajectory, Trajectory};
