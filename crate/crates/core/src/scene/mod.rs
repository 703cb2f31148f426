//! Physical scene: geometry, multipath channel, clock impairments, noise
//! and the LS/MMSE CSI baselines.

mod channel;
mod csi;
mod geometry;
mod qam;

pub use channel::{
    channel_response, los_attenuation, path_energy, path_phase, scatter_attenuation, transmit_gain, uplink_snr,
    Layout, Path, PathSet, Waveform,
};
pub use csi::{
    complex_gaussian, equivalent_channel, ls_csi, mmse_csi, rx_data_symbol, spatial_covariance, ClockDraws,
    ClockModel, CsiTensor, NoiseModel, BOLTZMANN,
};
pub use geometry::{element_indices, steering_vector, Angles, ArrayGeometry, Panel, SPEED_OF_LIGHT};
pub use qam::Constellation;
