//! Decoy-state bound estimation for BB84 and measurement-device-independent
//! QKD with four source intensities.
//!
//! The crate provides, per protocol: lower bounds on the single-photon (or
//! single-photon-pair) yield, tightened upper bounds on the corresponding
//! error rate obtained by eliminating the few-photon error variables across
//! three source intensities, forward channel simulators that generate both
//! ground truth and observables, key-rate optimization over the signal
//! intensity, and a brute-force oracle that certifies every bound against
//! arbitrary ground truth.
//!
//! Modules follow the data flow: [`sources`] builds photon-number
//! distributions and checks the structural conditions, [`channel`] simulates
//! detectors and assembles observables, [`bounds_bb84`] and [`bounds_mdi`]
//! hold the estimators, [`protocol`] optimizes and sweeps, [`oracle`]
//! certifies, and [`cli`] does file I/O.

// Indexed loops over photon-number matrices and NaN-rejecting comparisons
// (`!(x > 0.0)`) are the local idiom in the numeric code.
#![allow(clippy::needless_range_loop)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds_bb84;
pub mod bounds_mdi;
pub mod channel;
pub mod cli;
pub mod error;
pub mod oracle;
pub mod protocol;
pub mod sources;

pub use error::{Error, Result};
