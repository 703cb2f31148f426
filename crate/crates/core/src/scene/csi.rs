//! Clock impairments, thermal noise, LS/MMSE CSI and received data symbols.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::channel::{path_phase, transmit_gain, PathSet, Waveform};
use super::geometry::{steering_vector, ArrayGeometry};
use crate::error::{Error, Result};
use crate::numerics::{hermitian_evd, ComplexMatrix};

/// Boltzmann constant as used for the thermal noise floor, J/K.
pub const BOLTZMANN: f64 = 1.38e-23;

/// Zero-mean Gaussian per-packet TO/CFO model.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ClockModel {
    pub timing_std_s: f64,
    pub frequency_std_hz: f64,
}

/// One TO and one CFO draw per packet.
#[derive(Debug, Clone, PartialEq)]
pub struct ClockDraws {
    pub timing_s: Vec<f64>,
    pub frequency_hz: Vec<f64>,
}

impl ClockModel {
    /// Draws `packets` i.i.d. pairs. Both standard normals are consumed per
    /// packet regardless of the deviations, so changing one deviation leaves
    /// the other's draws untouched for a given stream.
    pub fn draw(&self, packets: usize, rng: &mut impl Rng) -> ClockDraws {
        let mut timing_s = Vec::with_capacity(packets);
        let mut frequency_hz = Vec::with_capacity(packets);
        for _ in 0..packets {
            let zt: f64 = rng.sample(StandardNormal);
            let zf: f64 = rng.sample(StandardNormal);
            timing_s.push(self.timing_std_s * zt);
            frequency_hz.push(self.frequency_std_hz * zf);
        }
        ClockDraws { timing_s, frequency_hz }
    }
}

impl ClockDraws {
    pub fn none(packets: usize) -> Self {
        Self {
            timing_s: vec![0.0; packets],
            frequency_hz: vec![0.0; packets],
        }
    }

    /// `zeta_f,m * zeta_tau,m` on subcarrier `n` of packet `m`.
    pub fn phase(&self, waveform: &Waveform, n: usize, m: usize) -> Complex64 {
        let cfo = 2.0 * PI * m as f64 * waveform.packet_interval() * self.frequency_hz[m];
        let to = -2.0 * PI * n as f64 * waveform.subcarrier_spacing_hz * self.timing_s[m];
        Complex64::from_polar(1.0, cfo + to)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Per-element complex noise variance, W.
    pub variance: f64,
}

impl NoiseModel {
    /// `k F T B`.
    pub fn thermal(noise_factor: f64, temperature_k: f64, bandwidth_hz: f64) -> Self {
        Self {
            variance: BOLTZMANN * noise_factor * temperature_k * bandwidth_hz,
        }
    }
}

/// Circularly-symmetric complex Gaussian sample with the given variance.
pub fn complex_gaussian(variance: f64, rng: &mut impl Rng) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(s * re, s * im)
}

/// CSI samples for every (antenna, subcarrier, packet). Storage is the
/// stacked layout: column `m * subcarriers + n` holds the vector for
/// subcarrier `n` of packet `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct CsiTensor {
    pub subcarriers: usize,
    pub packets: usize,
    pub estimate: ComplexMatrix,
    /// Noiseless equivalent channel `h_{n,m}` including clock phases.
    pub truth: ComplexMatrix,
}

impl CsiTensor {
    pub fn new(subcarriers: usize, packets: usize, estimate: ComplexMatrix, truth: ComplexMatrix) -> Result<Self> {
        if estimate.shape() != truth.shape() || estimate.cols() != subcarriers * packets {
            return Err(Error::contract(
                "CsiTensor::new",
                format!(
                    "estimate {:?} / truth {:?} for {subcarriers} subcarriers x {packets} packets",
                    estimate.shape(),
                    truth.shape()
                ),
            ));
        }
        Ok(Self { subcarriers, packets, estimate, truth })
    }

    pub fn antennas(&self) -> usize {
        self.estimate.rows()
    }

    pub fn column_index(&self, n: usize, m: usize) -> usize {
        m * self.subcarriers + n
    }

    pub fn get(&self, antenna: usize, n: usize, m: usize) -> Complex64 {
        self.estimate[(antenna, self.column_index(n, m))]
    }

    /// Normalized squared error of the estimate against the truth.
    pub fn nmse(&self) -> f64 {
        let err = self.estimate.sub(&self.truth).expect("same shape").frobenius_norm_sqr();
        err / self.truth.frobenius_norm_sqr()
    }
}

/// Noiseless equivalent channel `sqrt(P) H_{n,m} w_T zeta_f zeta_tau` for
/// every subcarrier and packet, in the stacked layout.
pub fn equivalent_channel(
    paths: &PathSet,
    geometry: &ArrayGeometry,
    waveform: &Waveform,
    clock: &ClockDraws,
    w_t: &[Complex64],
) -> Result<ComplexMatrix> {
    check_beamformer(geometry, w_t)?;
    if clock.timing_s.len() != waveform.packets || clock.frequency_hz.len() != waveform.packets {
        return Err(Error::contract("equivalent_channel", "clock draws do not match packet count"));
    }
    let lambda = waveform.wavelength();
    let amp = waveform.tx_power_w.sqrt();
    let rx: Vec<Vec<Complex64>> = paths
        .paths
        .iter()
        .map(|p| {
            let g = amp * p.gain * transmit_gain(geometry, lambda, p.aod, w_t);
            steering_vector(geometry.bs, geometry.spacing, lambda, p.aoa)
                .into_iter()
                .map(|a| a * g)
                .collect()
        })
        .collect();

    let (nc, ms) = (waveform.subcarriers, waveform.packets);
    let mut h = ComplexMatrix::zeros(geometry.bs.elements(), nc * ms);
    let mut coefs = vec![Complex64::new(0.0, 0.0); paths.len()];
    for m in 0..ms {
        for n in 0..nc {
            let clk = clock.phase(waveform, n, m);
            for (c, p) in coefs.iter_mut().zip(&paths.paths) {
                *c = clk * path_phase(p, waveform, n, m);
            }
            let col = m * nc + n;
            for i in 0..geometry.bs.elements() {
                h[(i, col)] = rx.iter().zip(&coefs).map(|(v, c)| v[i] * c).sum();
            }
        }
    }
    Ok(h)
}

fn check_beamformer(geometry: &ArrayGeometry, w_t: &[Complex64]) -> Result<()> {
    if w_t.len() != geometry.ue.elements() {
        return Err(Error::contract(
            "ls_csi",
            format!("beamformer length {} for {} UE elements", w_t.len(), geometry.ue.elements()),
        ));
    }
    let norm: f64 = w_t.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::contract("ls_csi", format!("transmit beamformer norm {norm} != 1")));
    }
    Ok(())
}

/// LS CSI: the equivalent channel plus i.i.d. CN(0, sigma^2) per element.
pub fn ls_csi(
    paths: &PathSet,
    geometry: &ArrayGeometry,
    waveform: &Waveform,
    clock: &ClockDraws,
    noise: &NoiseModel,
    w_t: &[Complex64],
    rng: &mut impl Rng,
) -> Result<CsiTensor> {
    let truth = equivalent_channel(paths, geometry, waveform, clock, w_t)?;
    let estimate = add_noise(&truth, noise.variance, rng);
    CsiTensor::new(waveform.subcarriers, waveform.packets, estimate, truth)
}

pub(crate) fn add_noise(clean: &ComplexMatrix, variance: f64, rng: &mut impl Rng) -> ComplexMatrix {
    if variance == 0.0 {
        return clean.clone();
    }
    let mut out = clean.clone();
    for i in 0..out.rows() {
        for z in out.row_mut(i) {
            *z += complex_gaussian(variance, rng);
        }
    }
    out
}

/// Genie spatial covariance `P sum_k |b_k chi_T,k|^2 a_k a_k^H` of the
/// equivalent channel (paths are mutually incoherent across subcarriers and
/// packets, clock phases are unit-modulus).
pub fn spatial_covariance(
    paths: &PathSet,
    geometry: &ArrayGeometry,
    waveform: &Waveform,
    w_t: &[Complex64],
) -> ComplexMatrix {
    let lambda = waveform.wavelength();
    let n = geometry.bs.elements();
    let mut r = ComplexMatrix::zeros(n, n);
    for p in &paths.paths {
        let power = waveform.tx_power_w * (p.gain * transmit_gain(geometry, lambda, p.aod, w_t)).norm_sqr();
        let a = steering_vector(geometry.bs, geometry.spacing, lambda, p.aoa);
        for i in 0..n {
            for j in 0..n {
                r[(i, j)] += a[i] * a[j].conj() * power;
            }
        }
    }
    r
}

/// Linear MMSE CSI `R_h (R_h + sigma^2 I)^-1 h_LS` per column, applied
/// through the eigendecomposition of `R_h`.
pub fn mmse_csi(ls: &CsiTensor, channel_covariance: &ComplexMatrix, noise_power: f64) -> Result<CsiTensor> {
    let n = ls.antennas();
    if channel_covariance.shape() != (n, n) {
        return Err(Error::contract("mmse_csi", "covariance does not match antenna count"));
    }
    let evd = hermitian_evd(channel_covariance)?;
    let top = evd.values.first().copied().unwrap_or(0.0).max(0.0);
    if evd.values.last().copied().unwrap_or(0.0) < -1e-9 * top.max(f64::MIN_POSITIVE) {
        return Err(Error::contract("mmse_csi", "channel covariance is not positive semidefinite"));
    }
    let floor = top * 1e-12;
    let mut factors = Vec::new();
    let mut basis = Vec::new();
    for (i, &lam) in evd.values.iter().enumerate() {
        let lam = if lam > floor { lam } else { 0.0 };
        if lam + noise_power <= 0.0 {
            return Err(Error::contract("mmse_csi", "R_h + sigma^2 I is singular"));
        }
        if lam > 0.0 {
            factors.push(lam / (lam + noise_power));
            basis.push(evd.vector(i));
        }
    }

    let mut out = ComplexMatrix::zeros(n, ls.estimate.cols());
    let mut proj = vec![Complex64::new(0.0, 0.0); basis.len()];
    for col in 0..ls.estimate.cols() {
        for (pk, (u, f)) in proj.iter_mut().zip(basis.iter().zip(&factors)) {
            *pk = (0..n).map(|i| u[i].conj() * ls.estimate[(i, col)]).sum::<Complex64>() * f;
        }
        for i in 0..n {
            out[(i, col)] = basis.iter().zip(&proj).map(|(u, p)| u[i] * p).sum();
        }
    }
    CsiTensor::new(ls.subcarriers, ls.packets, out, ls.truth.clone())
}

/// `y = h d + n` on every BS element.
pub fn rx_data_symbol(h: &[Complex64], symbol: Complex64, noise_power: f64, rng: &mut impl Rng) -> Vec<Complex64> {
    h.iter()
        .map(|hi| {
            let noise = if noise_power > 0.0 { complex_gaussian(noise_power, rng) } else { Complex64::new(0.0, 0.0) };
            hi * symbol + noise
        })
        .collect()
}
