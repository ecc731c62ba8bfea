//! Error-disturbance uncertainty relations for projective spin-1/2 measurements.
//!
//! The crate is organised bottom-up:
//!
//! * [`qmcore`]: 2×2 complex algebra, spin states, Bloch vectors, rotations.
//! * [`povm`]: general finite-dimensional measurement models, moment
//!   operators, exact rms error/disturbance and relation reports.
//! * [`spin`]: closed forms for projective spin apparatuses.
//! * [`threestate`]: reconstruction of error and disturbance from
//!   expectation values in three auxiliary input states.
//! * [`beamline`]: simulated two-apparatus polarimetry experiment with
//!   counting statistics, efficiency and Larmor-angle jitter.
//! * [`sweep`]: scenario engine, Bloch-sphere scans and violation analysis.
//! * [`config`], [`output`], [`verify`]: command-line plumbing.

pub mod beamline;
pub mod config;
pub mod error;
pub mod output;
pub mod povm;
pub mod qmcore;
pub mod random;
pub mod spin;
pub mod sweep;
pub mod threestate;
pub mod tolerance;
pub mod verify;

pub use error::{Error, Result};
pub use povm::{MeasurementModel, UncertaintyReport};
pub use qmcore::{BlochVector, Operator2, SpinState, UnitAxis, C64};
