//! Joint single-base localization and CSI enhancement for uplink OFDM
//! integrated sensing and communication with unsynchronized UE clocks.
//!
//! The pipeline, per trial:
//!
//! 1. [`scene`] synthesizes the multipath channel, the per-packet timing and
//!    carrier offsets, LS CSI and received data symbols.
//! 2. [`jaece`] decomposes the stacked CSI, estimates the AoA with 2D MUSIC
//!    and a Newton-refined grid search, and denoises the CSI with the
//!    closed-form combiner.
//! 3. [`ranging`] spatially filters toward the AoA and estimates range by
//!    MUSIC over the subcarrier autocorrelation (with an ML periodogram
//!    baseline).
//! 4. [`fusion`] demodulates data with the enhanced CSI, rebuilds data-based
//!    CSI from the decisions and repeats AoA/range on the joint matrix.
//! 5. [`experiment`] runs Monte Carlo sweeps and writes CSV metrics.

pub mod error;
pub mod experiment;
pub mod fusion;
pub mod jaece;
pub mod numerics;
pub mod ranging;
pub mod scene;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use numerics::ComplexMatrix;
