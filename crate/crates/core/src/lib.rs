//! Simulation of a controlled-NOT between the polarization (control) and
//! frequency-bin (target) of a single photon, built from a phase modulator
//! inside a polarization Sagnac loop.
//!
//! [`freqbin`] and [`polarization`] hold the optical primitives, [`device`]
//! assembles the gate, [`measurement`] simulates detector counts and
//! [`tomography`] reconstructs states from them. [`experiments`] wires these
//! into the runs exposed by the `polfreq` binary.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod device;
pub mod error;
pub mod experiments;
pub mod freqbin;
pub mod measurement;
pub mod polarization;
pub mod qubits;
pub mod tomography;
