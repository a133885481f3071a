//! Characterization of two-mode Gaussian quantum channels from covariance
//! matrices: physicality, entanglement, capacity bounds, teleportation
//! fidelity, key rates, and five-setting homodyne tomography.

pub mod error;
pub mod numcore;
pub mod state;
pub mod channel;
pub mod report;
pub mod tomography;
pub mod synth;
pub mod io;
pub mod cli;
