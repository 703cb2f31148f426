//! Range estimation from the spatially filtered CSI.
//!
//! The filtered row is reshaped to subcarriers x packets. Packets act as
//! snapshots, so averaging their outer products suppresses the random
//! per-packet TO phase ramps; MUSIC then searches the delay axis. An ML
//! periodogram is kept as the reference estimator.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::numerics::{hermitian_evd, norm_sqr, ComplexMatrix};
use crate::scene::SPEED_OF_LIGHT;

/// Seeds on the delay axis before refinement.
pub const RANGE_GRID: usize = 512;
const NEWTON_TOL_M: f64 = 1e-7;
const NEWTON_MAX_ITER: usize = 20;
const GOLDEN_ITER: usize = 80;

/// `[H_R]_{n,m}` = filtered entry at flattened index `m * N_c + n`.
#[derive(Debug, Clone, PartialEq)]
pub struct RangeSnapshotMatrix {
    pub matrix: ComplexMatrix,
    pub subcarrier_spacing_hz: f64,
}

impl RangeSnapshotMatrix {
    pub fn subcarriers(&self) -> usize {
        self.matrix.rows()
    }

    pub fn packets(&self) -> usize {
        self.matrix.cols()
    }

    /// One full delay period, `c / delta_f`.
    pub fn unambiguous_range(&self) -> f64 {
        SPEED_OF_LIGHT / self.subcarrier_spacing_hz
    }

    pub fn flatten(&self) -> Vec<Complex64> {
        let (nc, ms) = self.matrix.shape();
        (0..nc * ms).map(|k| self.matrix[(k % nc, k / nc)]).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RangeEstimate {
    pub range_m: f64,
    pub spectrum_value: f64,
    pub converged: bool,
    pub iterations: usize,
}

pub fn range_matrix(row: &[Complex64], subcarriers: usize, packets: usize, subcarrier_spacing_hz: f64) -> Result<RangeSnapshotMatrix> {
    if row.len() != subcarriers * packets || row.is_empty() {
        return Err(Error::contract(
            "range_matrix",
            format!("row of {} for {subcarriers} x {packets}", row.len()),
        ));
    }
    Ok(RangeSnapshotMatrix {
        matrix: ComplexMatrix::from_fn(subcarriers, packets, |n, m| row[m * subcarriers + n]),
        subcarrier_spacing_hz,
    })
}

/// `R_r = H_R H_R^H / M_s`.
pub fn range_autocorrelation(h: &RangeSnapshotMatrix) -> ComplexMatrix {
    h.matrix.gram().scaled(1.0 / h.packets() as f64)
}

/// `a_r(r)_n = exp(-j 2 pi n delta_f r / c)`.
pub fn range_steering(subcarriers: usize, subcarrier_spacing_hz: f64, range_m: f64) -> Vec<Complex64> {
    let w = 2.0 * PI * subcarrier_spacing_hz * range_m / SPEED_OF_LIGHT;
    (0..subcarriers).map(|n| Complex64::from_polar(1.0, -w * n as f64)).collect()
}

/// `a_r^H U_rN U_rN^H a_r` for an explicit noise basis.
pub fn range_spectrum(noise: &ComplexMatrix, range_m: f64, subcarrier_spacing_hz: f64) -> f64 {
    let a = range_steering(noise.rows(), subcarrier_spacing_hz, range_m);
    (0..noise.cols())
        .map(|k| crate::numerics::dot(&noise.column(k), &a).norm_sqr())
        .sum()
}

/// Dominant eigenvector of `R_r`. When there are fewer packets than
/// subcarriers it comes from the `M_s x M_s` Gram matrix instead.
fn dominant_direction(h: &RangeSnapshotMatrix) -> Result<Vec<Complex64>> {
    let (nc, ms) = h.matrix.shape();
    if ms >= nc {
        return Ok(hermitian_evd(&range_autocorrelation(h))?.vector(0));
    }
    let small = h.matrix.adjoint().gram();
    let v = hermitian_evd(&small)?.vector(0);
    let u = h.matrix.mul_vec(&v)?;
    let n = norm_sqr(&u).sqrt();
    if !(n > 0.0) {
        return Err(Error::contract("estimate_range", "filtered CSI is identically zero"));
    }
    Ok(u.into_iter().map(|z| z / n).collect())
}

/// `f_r(r) = N_c - |u_1^H a_r(r)|^2`, i.e. the noise-subspace projection
/// with the dominant eigenvector as the whole signal subspace.
struct RangeMusic {
    conj_u: Vec<Complex64>,
    omega: f64,
}

impl RangeMusic {
    fn terms(&self, r: f64) -> (Complex64, Complex64, Complex64) {
        let (mut c0, mut c1, mut c2) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        let j = Complex64::new(0.0, 1.0);
        for (n, u) in self.conj_u.iter().enumerate() {
            let k = self.omega * n as f64;
            let t = u * Complex64::from_polar(1.0, -k * r);
            c0 += t;
            c1 += -j * k * t;
            c2 += -(k * k) * t;
        }
        (c0, c1, c2)
    }

    fn value(&self, r: f64) -> f64 {
        (self.conj_u.len() as f64 - self.terms(r).0.norm_sqr()).max(0.0)
    }

    fn derivatives(&self, r: f64) -> (f64, f64, f64) {
        let (c0, c1, c2) = self.terms(r);
        let f = (self.conj_u.len() as f64 - c0.norm_sqr()).max(0.0);
        let d1 = -2.0 * (c0.conj() * c1).re;
        let d2 = -2.0 * (c1.norm_sqr() + (c0.conj() * c2).re);
        (f, d1, d2)
    }
}

/// `sum_n x_n exp(sign j 2 pi n k / K)` for `k` in `0..K`.
fn padded_dft(x: &[Complex64], k: usize, inverse: bool) -> Vec<Complex64> {
    let mut buf = vec![Complex64::new(0.0, 0.0); k];
    buf[..x.len()].copy_from_slice(x);
    let mut planner = FftPlanner::new();
    let fft = if inverse { planner.plan_fft_inverse(k) } else { planner.plan_fft_forward(k) };
    fft.process(&mut buf);
    buf
}

fn grid_size(subcarriers: usize) -> usize {
    RANGE_GRID.max(subcarriers.next_power_of_two())
}

/// MUSIC range: dominant-eigenvector spectrum, FFT grid seed, then Newton
/// with a golden-section fallback inside one grid cell.
pub fn estimate_range(h: &RangeSnapshotMatrix) -> Result<RangeEstimate> {
    let nc = h.subcarriers();
    if nc < 2 {
        return Err(Error::contract("estimate_range", "need at least two subcarriers"));
    }
    let u = dominant_direction(h)?;
    let window = h.unambiguous_range();
    let music = RangeMusic {
        conj_u: u.iter().map(|z| z.conj()).collect(),
        omega: 2.0 * PI * h.subcarrier_spacing_hz / SPEED_OF_LIGHT,
    };

    let k = grid_size(nc);
    let captured = padded_dft(&music.conj_u, k, false);
    let best = (0..k).max_by(|&a, &b| captured[a].norm_sqr().total_cmp(&captured[b].norm_sqr()).then(b.cmp(&a))).unwrap();
    let cell = window / k as f64;
    let seed = best as f64 * cell;
    let lo = seed - cell;
    let hi = seed + cell;

    let mut r = seed;
    let (mut f, _, _) = music.derivatives(r);
    let mut converged = false;
    let mut iterations = 0;
    for it in 1..=NEWTON_MAX_ITER {
        iterations = it;
        let (_, d1, d2) = music.derivatives(r);
        if d2 <= 0.0 {
            break;
        }
        let next = (r - d1 / d2).clamp(lo, hi);
        let fn_ = music.value(next);
        if fn_ > f {
            break;
        }
        let step = (next - r).abs();
        r = next;
        f = fn_;
        if step <= NEWTON_TOL_M {
            converged = true;
            break;
        }
    }
    if !converged {
        let (rg, fg) = golden_section(|x| music.value(x), lo, hi);
        if fg <= f {
            r = rg;
            f = fg;
        }
        converged = true;
    }
    Ok(RangeEstimate {
        range_m: r.rem_euclid(window),
        spectrum_value: f,
        converged,
        iterations,
    })
}

/// Packet-averaged periodogram maximizer.
pub fn ml_range_baseline(h: &RangeSnapshotMatrix) -> Result<RangeEstimate> {
    let (nc, ms) = h.matrix.shape();
    if nc < 2 {
        return Err(Error::contract("ml_range_baseline", "need at least two subcarriers"));
    }
    let window = h.unambiguous_range();
    let k = grid_size(nc);
    let mut power = vec![0.0; k];
    for m in 0..ms {
        let spectrum = padded_dft(&h.matrix.column(m), k, true);
        for (p, s) in power.iter_mut().zip(&spectrum) {
            *p += s.norm_sqr() / ms as f64;
        }
    }
    let best = (0..k).max_by(|&a, &b| power[a].total_cmp(&power[b]).then(b.cmp(&a))).unwrap();
    let cell = window / k as f64;
    let seed = best as f64 * cell;

    let omega = 2.0 * PI * h.subcarrier_spacing_hz / SPEED_OF_LIGHT;
    let columns: Vec<Vec<Complex64>> = (0..ms).map(|m| h.matrix.column(m)).collect();
    let periodogram = |r: f64| {
        let ramp: Vec<Complex64> = (0..nc).map(|n| Complex64::from_polar(1.0, omega * n as f64 * r)).collect();
        columns
            .iter()
            .map(|c| c.iter().zip(&ramp).map(|(x, e)| x * e).sum::<Complex64>().norm_sqr())
            .sum::<f64>()
            / ms as f64
    };
    let (r, neg) = golden_section(|x| -periodogram(x), seed - cell, seed + cell);
    Ok(RangeEstimate {
        range_m: r.rem_euclid(window),
        spectrum_value: -neg,
        converged: true,
        iterations: GOLDEN_ITER,
    })
}

/// Minimizes a unimodal `f` on `[a, b]`.
fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..GOLDEN_ITER {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// `(1/M) sum_m exp(-j 2 pi n delta_f delta_tau(m))`.
pub fn timing_phase_average(n: usize, subcarrier_spacing_hz: f64, timing_s: &[f64]) -> Complex64 {
    let w = -2.0 * PI * n as f64 * subcarrier_spacing_hz;
    timing_s.iter().map(|&d| Complex64::from_polar(1.0, w * d)).sum::<Complex64>() / timing_s.len() as f64
}

/// Gaussian characteristic function `exp(-(2 pi n delta_f sigma)^2 / 2)`,
/// the limit of [`timing_phase_average`].
pub fn timing_characteristic(n: usize, subcarrier_spacing_hz: f64, timing_std_s: f64) -> f64 {
    (-(2.0 * PI * n as f64 * subcarrier_spacing_hz * timing_std_s).powi(2) / 2.0).exp()
}
