//! Multipath UL channel: waveform numerology, path synthesis from a
//! geometric layout, and per-subcarrier/per-packet channel matrices.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::geometry::{steering_vector, Angles, ArrayGeometry, SPEED_OF_LIGHT};
use crate::error::{Error, Result};
use crate::numerics::ComplexMatrix;

/// OFDM numerology. Symbol duration is `1 / subcarrier_spacing` (no cyclic
/// prefix) and packets are `symbols_per_packet` symbols apart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Waveform {
    pub carrier_hz: f64,
    pub subcarrier_spacing_hz: f64,
    pub subcarriers: usize,
    pub symbols_per_packet: usize,
    pub packets: usize,
    pub tx_power_w: f64,
}

impl Waveform {
    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_hz
    }

    pub fn symbol_duration(&self) -> f64 {
        1.0 / self.subcarrier_spacing_hz
    }

    pub fn packet_interval(&self) -> f64 {
        self.symbols_per_packet as f64 * self.symbol_duration()
    }

    pub fn bandwidth(&self) -> f64 {
        self.subcarriers as f64 * self.subcarrier_spacing_hz
    }

    /// Largest range representable without delay aliasing, `c / df`.
    pub fn unambiguous_range(&self) -> f64 {
        SPEED_OF_LIGHT / self.subcarrier_spacing_hz
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [self.carrier_hz, self.subcarrier_spacing_hz, self.tx_power_w];
        if positive.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::Config("carrier, subcarrier spacing and power must be positive".into()));
        }
        if self.subcarriers < 2 || self.packets < 1 || self.symbols_per_packet < 1 {
            return Err(Error::Config(
                "need at least 2 subcarriers, 1 packet and 1 symbol per packet".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    /// Complex attenuation `b_C,k`.
    pub gain: Complex64,
    pub doppler_hz: f64,
    pub delay_s: f64,
    pub aoa: Angles,
    pub aod: Angles,
    pub line_of_sight: bool,
}

/// Paths in order; index 0 is the LoS path when present.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PathSet {
    pub paths: Vec<Path>,
}

impl PathSet {
    pub fn los(&self) -> Option<&Path> {
        self.paths.first().filter(|p| p.line_of_sight)
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }
}

/// Free-space LoS attenuation `lambda / (4 pi r)`.
pub fn los_attenuation(wavelength: f64, range: f64) -> f64 {
    wavelength / (4.0 * PI * range)
}

/// Bistatic scatterer attenuation magnitude before the reflection factor.
pub fn scatter_attenuation(wavelength: f64, r_ue: f64, r_bs: f64) -> f64 {
    wavelength / ((4.0 * PI).powf(1.5) * r_ue * r_bs)
}

/// Physical placement of BS, UE and point scatterers in a global frame
/// (meters, m/s). The BS panel faces the ground: its frame is the global
/// frame rotated by pi about x, so every point below the BS has panel
/// elevation in `[0, pi/2]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layout {
    pub bs_position: [f64; 3],
    pub ue_position: [f64; 3],
    pub ue_velocity: [f64; 3],
    pub scatterers: Vec<[f64; 3]>,
    /// Variance of the CN(0, s^2) reflection factors.
    pub reflection_variance: f64,
}

fn sub3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn norm3(a: [f64; 3]) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

impl Layout {
    /// Global-frame offset to BS panel coordinates.
    pub fn to_bs_frame(v: [f64; 3]) -> [f64; 3] {
        [v[0], -v[1], -v[2]]
    }

    pub fn from_bs_frame(v: [f64; 3]) -> [f64; 3] {
        [v[0], -v[1], -v[2]]
    }

    /// UE position relative to the BS, in BS panel coordinates.
    pub fn ue_in_bs_frame(&self) -> [f64; 3] {
        Self::to_bs_frame(sub3(self.ue_position, self.bs_position))
    }

    pub fn ue_range(&self) -> f64 {
        norm3(sub3(self.ue_position, self.bs_position))
    }

    pub fn ue_aoa(&self) -> Angles {
        Angles::of_vector(self.ue_in_bs_frame())
    }

    /// Synthesizes the LoS path plus one NLoS path per scatterer. Draws one
    /// complex reflection factor per scatterer from `rng`.
    pub fn paths(&self, wavelength: f64, rng: &mut impl Rng) -> PathSet {
        let radial = |from: [f64; 3], to: [f64; 3]| {
            let d = sub3(to, from);
            dot3(self.ue_velocity, d) / norm3(d)
        };

        let los_vec = sub3(self.ue_position, self.bs_position);
        let r0 = norm3(los_vec);
        let mut paths = vec![Path {
            gain: Complex64::new(los_attenuation(wavelength, r0), 0.0),
            doppler_hz: radial(self.ue_position, self.bs_position) / wavelength,
            delay_s: r0 / SPEED_OF_LIGHT,
            aoa: Angles::of_vector(Self::to_bs_frame(los_vec)),
            aod: Angles::of_vector(sub3(self.bs_position, self.ue_position)),
            line_of_sight: true,
        }];

        let beta_std = (self.reflection_variance / 2.0).sqrt();
        for &s in &self.scatterers {
            let r1 = norm3(sub3(s, self.ue_position));
            let r2 = norm3(sub3(s, self.bs_position));
            let beta = Complex64::new(
                beta_std * rng.sample::<f64, _>(StandardNormal),
                beta_std * rng.sample::<f64, _>(StandardNormal),
            );
            paths.push(Path {
                gain: beta * scatter_attenuation(wavelength, r1, r2),
                // Scatterers and BS are static, so only the UE leg shifts.
                doppler_hz: radial(self.ue_position, s) / wavelength,
                delay_s: (r1 + r2) / SPEED_OF_LIGHT,
                aoa: Angles::of_vector(Self::to_bs_frame(sub3(s, self.bs_position))),
                aod: Angles::of_vector(sub3(s, self.ue_position)),
                line_of_sight: false,
            });
        }
        PathSet { paths }
    }
}

/// Channel matrix `H_{n,m}` (BS elements x UE elements).
pub fn channel_response(
    paths: &PathSet,
    geometry: &ArrayGeometry,
    waveform: &Waveform,
    n: usize,
    m: usize,
) -> Result<ComplexMatrix> {
    if n >= waveform.subcarriers || m >= waveform.packets {
        return Err(Error::contract(
            "channel_response",
            format!("index (n={n}, m={m}) outside {}x{}", waveform.subcarriers, waveform.packets),
        ));
    }
    let lambda = waveform.wavelength();
    let (rows, cols) = (geometry.bs.elements(), geometry.ue.elements());
    let mut h = ComplexMatrix::zeros(rows, cols);
    for path in &paths.paths {
        let coef = path.gain * path_phase(path, waveform, n, m);
        let ar = steering_vector(geometry.bs, geometry.spacing, lambda, path.aoa);
        let at = steering_vector(geometry.ue, geometry.spacing, lambda, path.aod);
        for i in 0..rows {
            for j in 0..cols {
                h[(i, j)] += coef * ar[i] * at[j];
            }
        }
    }
    Ok(h)
}

/// `exp(j 2pi f_d m T_p) exp(-j 2pi n df tau)` for one path.
pub fn path_phase(path: &Path, waveform: &Waveform, n: usize, m: usize) -> Complex64 {
    let doppler = 2.0 * PI * path.doppler_hz * m as f64 * waveform.packet_interval();
    let delay = -2.0 * PI * n as f64 * waveform.subcarrier_spacing_hz * path.delay_s;
    Complex64::from_polar(1.0, doppler + delay)
}

/// Transmit beamforming gain `a(p_T)^T w_T`.
pub fn transmit_gain(geometry: &ArrayGeometry, wavelength: f64, aod: Angles, w_t: &[Complex64]) -> Complex64 {
    steering_vector(geometry.ue, geometry.spacing, wavelength, aod)
        .iter()
        .zip(w_t)
        .map(|(a, w)| a * w)
        .sum()
}

/// Per-element UL SNR `P sum_k |b_k chi_k|^2 / sigma^2` (linear).
pub fn uplink_snr(
    paths: &PathSet,
    geometry: &ArrayGeometry,
    wavelength: f64,
    w_t: &[Complex64],
    tx_power_w: f64,
    noise_power: f64,
) -> Result<f64> {
    if !(noise_power > 0.0) {
        return Err(Error::contract("uplink_snr", "noise power must be positive"));
    }
    Ok(tx_power_w * path_energy(paths, geometry, wavelength, w_t) / noise_power)
}

/// `sum_k |b_k chi_T,k|^2`.
pub fn path_energy(paths: &PathSet, geometry: &ArrayGeometry, wavelength: f64, w_t: &[Complex64]) -> f64 {
    paths
        .paths
        .iter()
        .map(|p| (p.gain * transmit_gain(geometry, wavelength, p.aod, w_t)).norm_sqr())
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::geometry::Panel;

    fn waveform() -> Waveform {
        Waveform {
            carrier_hz: 28e9,
            subcarrier_spacing_hz: 480e3,
            subcarriers: 8,
            symbols_per_packet: 1,
            packets: 4,
            tx_power_w: 1.0,
        }
    }

    fn geometry() -> ArrayGeometry {
        ArrayGeometry::half_wavelength(Panel::new(2, 2), Panel::new(1, 2), waveform().wavelength())
    }

    fn path(gain: f64, delay: f64, doppler: f64, az: f64) -> Path {
        Path {
            gain: Complex64::new(gain, 0.3 * gain),
            doppler_hz: doppler,
            delay_s: delay,
            aoa: Angles::new(az, 0.8),
            aod: Angles::new(-az, 0.5),
            line_of_sight: false,
        }
    }

    #[test]
    fn los_attenuation_at_100_m() {
        let lambda = waveform().wavelength();
        assert!((lambda - 1.0707e-2).abs() < 1e-6);
        assert!((los_attenuation(lambda, 100.0) - 8.52e-6).abs() < 5e-9);
    }

    #[test]
    fn single_path_origin_is_outer_product() {
        let (w, g) = (waveform(), geometry());
        let p = path(1.0, 3e-7, 500.0, 0.2);
        let h = channel_response(&PathSet { paths: vec![p.clone()] }, &g, &w, 0, 0).unwrap();
        let ar = steering_vector(g.bs, g.spacing, w.wavelength(), p.aoa);
        let at = steering_vector(g.ue, g.spacing, w.wavelength(), p.aod);
        for i in 0..4 {
            for j in 0..2 {
                assert!((h[(i, j)] - p.gain * ar[i] * at[j]).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn two_paths_sum_entrywise() {
        let (w, g) = (waveform(), geometry());
        let a = path(1.0, 3e-7, 500.0, 0.2);
        let b = path(0.1, 5e-7, -200.0, -0.6);
        let both = channel_response(&PathSet { paths: vec![a.clone(), b.clone()] }, &g, &w, 5, 3).unwrap();
        let ha = channel_response(&PathSet { paths: vec![a] }, &g, &w, 5, 3).unwrap();
        let hb = channel_response(&PathSet { paths: vec![b] }, &g, &w, 5, 3).unwrap();
        assert!(both.sub(&ha.add(&hb).unwrap()).unwrap().frobenius_norm() < 1e-14);
    }

    #[test]
    fn out_of_range_index_is_rejected() {
        let (w, g) = (waveform(), geometry());
        assert!(channel_response(&PathSet::default(), &g, &w, 8, 0).is_err());
        assert!(channel_response(&PathSet::default(), &g, &w, 0, 4).is_err());
    }

    #[test]
    fn snr_examples() {
        let g = ArrayGeometry::half_wavelength(Panel::new(8, 8), Panel::new(1, 1), 0.0107);
        let w_t = [Complex64::new(1.0, 0.0)];
        let mut p = path(1.0, 0.0, 0.0, 0.0);
        p.gain = Complex64::new(1e-5, 0.0);
        let ps = PathSet { paths: vec![p] };
        let snr = uplink_snr(&ps, &g, 0.0107, &w_t, 1.0, 1e-10).unwrap();
        assert!((snr - 1.0).abs() < 1e-12);
        let snr2 = uplink_snr(&ps, &g, 0.0107, &w_t, 2.0, 1e-10).unwrap();
        assert!((snr2 - 2.0).abs() < 1e-12);
        let reference = uplink_snr(&ps, &g, 0.0107, &w_t, 1.0, 4.9177e-12).unwrap();
        assert!((10.0 * reference.log10() - 13.08).abs() < 0.005);
        assert!(uplink_snr(&ps, &g, 0.0107, &w_t, 1.0, 0.0).is_err());
    }

    #[test]
    fn default_layout_puts_ue_below_panel() {
        let layout = Layout {
            bs_position: [50.0, 4.75, 7.0],
            ue_position: [100.0, 0.0, 2.0],
            ue_velocity: [-40.0 / 3.6, 0.0, 0.0],
            scatterers: vec![[80.0, 20.0, 1.5]],
            reflection_variance: 1.0,
        };
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(9);
        let ps = layout.paths(0.0107, &mut rng);
        let los = ps.los().unwrap();
        assert!(los.aoa.elevation > 0.0 && los.aoa.elevation < PI / 2.0);
        assert!(los.aoa.azimuth > 0.0 && los.aoa.azimuth < PI / 2.0);
        // Approaching UE: positive Doppler.
        assert!(los.doppler_hz > 0.0);
        assert!((los.delay_s * SPEED_OF_LIGHT - layout.ue_range()).abs() < 1e-9);
        assert!(ps.paths[1].gain.norm() < 1e-1 * los.gain.norm());
    }
}
