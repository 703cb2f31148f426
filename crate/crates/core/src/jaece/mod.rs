//! Joint AoA estimation and CSI enhancement.
//!
//! The stacked CSI is decomposed into signal and noise subspaces. The noise
//! subspace drives a 2D MUSIC search for the LoS angle, and the signal
//! subspace plus the noise-power estimate give the optimal linear combiner
//! that denoises the CSI.

mod spectrum;

pub use spectrum::{aoa_spectrum, spectrum_search_2d, AngleSpectrum, Candidate, MusicSpectrum, SearchConfig};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::{dot, hermitian_evd, ComplexMatrix};
use crate::scene::{steering_vector, Angles, Panel};

/// Minimum retained fraction of each signal eigenvalue after noise removal.
const ENHANCE_FLOOR: f64 = 0.05;
/// Consecutive-eigenvalue ratio needed to call a gap a subspace boundary.
const ORDER_GAP_RATIO: f64 = 3.0;

/// Stacks per-packet, per-subcarrier vectors `samples[m][n]` into columns
/// `m * N_c + n` (0-based).
pub fn stack_csi(samples: &[Vec<Vec<Complex64>>]) -> Result<ComplexMatrix> {
    let cols: Vec<Vec<Complex64>> = samples.iter().flatten().cloned().collect();
    let nc = samples.first().map_or(0, Vec::len);
    if cols.is_empty() || samples.iter().any(|p| p.len() != nc) {
        return Err(Error::contract("stack_csi", "incomplete CSI tensor"));
    }
    ComplexMatrix::from_columns(&cols)
}

/// Inverse of [`stack_csi`].
pub fn unstack_csi(h: &ComplexMatrix, subcarriers: usize, packets: usize) -> Result<Vec<Vec<Vec<Complex64>>>> {
    if subcarriers * packets != h.cols() {
        return Err(Error::contract(
            "unstack_csi",
            format!("{} columns for {subcarriers} x {packets}", h.cols()),
        ));
    }
    Ok((0..packets)
        .map(|m| (0..subcarriers).map(|n| h.column(m * subcarriers + n)).collect())
        .collect())
}

/// `R_x = H H^H / L` where `L` is the column count.
pub fn csi_correlation(h: &ComplexMatrix) -> Result<ComplexMatrix> {
    if h.cols() == 0 {
        return Err(Error::contract("csi_correlation", "no CSI columns"));
    }
    Ok(h.gram().scaled(1.0 / h.cols() as f64))
}

/// Largest consecutive gap among those with ratio above 3; 1 otherwise.
pub fn estimate_model_order(values: &[f64]) -> Result<usize> {
    if values.len() < 2 {
        return Err(Error::contract("estimate_model_order", "need at least two values"));
    }
    let mut best: Option<(usize, f64)> = None;
    for i in 1..values.len() {
        let (hi, lo) = (values[i - 1], values[i].max(0.0));
        if hi > ORDER_GAP_RATIO * lo && hi > 0.0 {
            let gap = hi - lo;
            if best.map_or(true, |(_, g)| gap > g) {
                best = Some((i, gap));
            }
        }
    }
    Ok(best.map_or(1, |(i, _)| i))
}

/// Mean of the trailing `len - order` eigenvalues.
pub fn estimate_noise_power(values: &[f64], order: usize) -> Result<f64> {
    if order >= values.len() {
        return Err(Error::contract(
            "estimate_noise_power",
            format!("model order {order} leaves no noise eigenvalues out of {}", values.len()),
        ));
    }
    let tail = &values[order..];
    Ok((tail.iter().sum::<f64>() / tail.len() as f64).max(0.0))
}

/// Signal/noise split of a stacked CSI matrix.
#[derive(Debug, Clone)]
pub struct SubspaceBasis {
    pub signal: ComplexMatrix,
    pub noise: ComplexMatrix,
    /// Singular values of the stacked matrix for the signal block.
    pub singulars: Vec<f64>,
    pub right: ComplexMatrix,
    pub order: usize,
    pub noise_power: f64,
    /// Eigenvalues of `R_x`, descending.
    pub values: Vec<f64>,
}

impl SubspaceBasis {
    /// Signal-subspace eigenvalues of `R_x`, i.e. `singulars^2 / L`.
    pub fn signal_values(&self) -> &[f64] {
        &self.values[..self.order]
    }

    pub fn spectrum(&self, panel: Panel, spacing: f64, wavelength: f64) -> MusicSpectrum {
        MusicSpectrum::from_signal_basis(&self.signal, panel, spacing, wavelength)
    }
}

/// Signal/noise split of `R_x` without the right singular block.
#[derive(Debug, Clone)]
pub struct SignalSubspace {
    pub signal: ComplexMatrix,
    pub noise: ComplexMatrix,
    pub order: usize,
    pub noise_power: f64,
    /// Eigenvalues of `R_x`, descending.
    pub values: Vec<f64>,
}

impl SignalSubspace {
    pub fn spectrum(&self, panel: Panel, spacing: f64, wavelength: f64) -> MusicSpectrum {
        MusicSpectrum::from_signal_basis(&self.signal, panel, spacing, wavelength)
    }
}

/// EVD of `R_x = H H^H / L`, model order and noise power.
pub fn signal_subspace(h: &ComplexMatrix) -> Result<SignalSubspace> {
    let rx = csi_correlation(h)?;
    let evd = hermitian_evd(&rx)?;
    let order = if h.rows() >= 2 { estimate_model_order(&evd.values)? } else { 1 };
    split(evd, order)
}

fn split(evd: crate::numerics::EigenDecomposition, order: usize) -> Result<SignalSubspace> {
    let n = evd.values.len();
    let noise_power = if order < n { estimate_noise_power(&evd.values, order)? } else { 0.0 };
    Ok(SignalSubspace {
        signal: evd.vectors.columns_range(0, order),
        noise: evd.vectors.columns_range(order, n),
        order,
        noise_power,
        values: evd.values,
    })
}

/// Decomposes `h` through the EVD of `R_x`. The left singular vectors of
/// `h` are the eigenvectors of `R_x`, `sigma_i = sqrt(L lambda_i)`, and the
/// right block follows as `V_s = H^H U_s Sigma_s^-1`.
pub fn decompose(h: &ComplexMatrix) -> Result<SubspaceBasis> {
    let sub = signal_subspace(h)?;
    basis_from_subspace(h, sub)
}

/// [`decompose`] with the model order fixed by the caller instead of the
/// gap rule.
pub fn decompose_with_order(h: &ComplexMatrix, order: usize) -> Result<SubspaceBasis> {
    if order == 0 || order > h.rows() {
        return Err(Error::contract("decompose_with_order", format!("order {order} outside 1..={}", h.rows())));
    }
    let evd = hermitian_evd(&csi_correlation(h)?)?;
    basis_from_subspace(h, split(evd, order)?)
}

fn basis_from_subspace(h: &ComplexMatrix, sub: SignalSubspace) -> Result<SubspaceBasis> {
    let l = h.cols() as f64;
    let order = sub.order;
    let singulars: Vec<f64> = sub.values[..order].iter().map(|v| (v.max(0.0) * l).sqrt()).collect();
    if singulars.iter().any(|&s| s == 0.0) {
        return Err(Error::contract("decompose", "zero signal singular value"));
    }
    let hu = h.adjoint().matmul(&sub.signal)?;
    let right = ComplexMatrix::from_fn(hu.rows(), order, |i, j| hu[(i, j)] / singulars[j]);
    Ok(SubspaceBasis {
        signal: sub.signal,
        noise: sub.noise,
        singulars,
        right,
        order,
        noise_power: sub.noise_power,
        values: sub.values,
    })
}

/// Enhanced CSI `U_s (S^2 - sigma^2) S^-1 V_s^H` with `S^2 = Sigma_s^2 / L`
/// the signal eigenvalues of `R_x`, so the noise power and the singular
/// values share per-sample units. Each factor `S^2 - sigma^2` is floored at
/// `0.05 S^2`.
pub fn enhance_csi(basis: &SubspaceBasis, noise_power: f64) -> Result<ComplexMatrix> {
    if basis.singulars.iter().any(|&s| !(s > 0.0)) {
        return Err(Error::contract("enhance_csi", "zero signal singular value"));
    }
    let l = basis.right.rows() as f64;
    let gains: Vec<f64> = basis
        .singulars
        .iter()
        .map(|&s| {
            let s2 = s * s / l;
            let kept = (s2 - noise_power).max(ENHANCE_FLOOR * s2);
            // (S^2 - sigma^2) S^-1 on the unnormalized singular value.
            kept / s2 * s
        })
        .collect();
    let us = ComplexMatrix::from_fn(basis.signal.rows(), basis.order, |i, j| basis.signal[(i, j)] * gains[j]);
    us.matmul(&basis.right.adjoint())
}

/// Receive beamformer steered at one AoA.
#[derive(Debug, Clone)]
pub struct SpatialFilter {
    pub weights: Vec<Complex64>,
    /// `w^H a(p)`, real and positive.
    pub gain: f64,
    /// `w^H a(p_k)` toward each listed interferer.
    pub residual_gains: Vec<Complex64>,
}

impl SpatialFilter {
    /// `w^H H`, one entry per column.
    pub fn apply(&self, h: &ComplexMatrix) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); h.cols()];
        for (i, w) in self.weights.iter().enumerate() {
            let wc = w.conj();
            for (o, x) in out.iter_mut().zip(h.row(i)) {
                *o += wc * x;
            }
        }
        out
    }
}

/// Matched filter `a(p) / |a(p)|`.
pub fn spatial_filter(p: Angles, panel: Panel, spacing: f64, wavelength: f64, interferers: &[Angles]) -> SpatialFilter {
    let a = steering_vector(panel, spacing, wavelength, p);
    let norm = crate::numerics::norm_sqr(&a).sqrt();
    let weights: Vec<Complex64> = a.iter().map(|z| z / norm).collect();
    let residual_gains = interferers
        .iter()
        .map(|&q| dot(&weights, &steering_vector(panel, spacing, wavelength, q)))
        .collect();
    SpatialFilter {
        gain: dot(&weights, &a).re,
        weights,
        residual_gains,
    }
}

/// LoS AoA from the refined minima: the largest peak among the first
/// `order` candidates (already sorted, ties toward smaller elevation).
#[derive(Debug, Clone)]
pub struct AoaEstimate {
    pub angles: Angles,
    pub peak_height: f64,
    pub candidates: Vec<Candidate>,
}

pub fn estimate_aoa(f: &impl AngleSpectrum, config: &SearchConfig) -> Result<AoaEstimate> {
    let candidates = spectrum_search_2d(f, config);
    let best = *candidates
        .first()
        .ok_or_else(|| Error::contract("estimate_aoa", "spectrum search returned no minima"))?;
    Ok(AoaEstimate {
        angles: best.angles,
        peak_height: best.peak_height,
        candidates,
    })
}
