//! 2D MUSIC angle spectrum and the grid-seeded Newton minimum search.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::numerics::{dot, ComplexMatrix};
use crate::scene::{element_indices, steering_vector, Angles, Panel};

/// A real function of (azimuth, elevation) with analytic derivatives.
pub trait AngleSpectrum {
    fn value(&self, p: Angles) -> f64;
    /// Value, gradient and Hessian with respect to (azimuth, elevation).
    fn derivatives(&self, p: Angles) -> (f64, [f64; 2], [[f64; 2]; 2]);
}

/// `f_a(p) = a^H U_0 U_0^H a`, evaluated through the signal-subspace
/// complement `|a|^2 - sum_k |u_k^H a|^2` because the signal block is the
/// thin one.
#[derive(Debug, Clone)]
pub struct MusicSpectrum {
    panel: Panel,
    /// Phase per unit of `(p cos az + q sin az) sin el`.
    kappa: f64,
    signal: Vec<Vec<Complex64>>,
    offsets: Vec<(f64, f64)>,
}

impl MusicSpectrum {
    /// `signal` holds orthonormal signal-subspace columns.
    pub fn from_signal_basis(signal: &ComplexMatrix, panel: Panel, spacing: f64, wavelength: f64) -> Self {
        Self {
            panel,
            kappa: 2.0 * PI * spacing / wavelength,
            signal: (0..signal.cols()).map(|k| signal.column(k)).collect(),
            offsets: element_indices(panel).collect(),
        }
    }

    fn steering(&self, p: Angles) -> Vec<Complex64> {
        // Spacing is folded into kappa, so evaluate at unit spacing/wavelength ratio.
        steering_vector(self.panel, self.kappa / (2.0 * PI), 1.0, p)
    }

    pub fn elements(&self) -> usize {
        self.panel.elements()
    }
}

impl AngleSpectrum for MusicSpectrum {
    fn value(&self, p: Angles) -> f64 {
        let a = self.steering(p);
        let captured: f64 = self.signal.iter().map(|u| dot(u, &a).norm_sqr()).sum();
        (a.len() as f64 - captured).max(0.0)
    }

    fn derivatives(&self, p: Angles) -> (f64, [f64; 2], [[f64; 2]; 2]) {
        let a = self.steering(p);
        let (sa, ca) = p.azimuth.sin_cos();
        let (se, ce) = p.elevation.sin_cos();
        let k = self.kappa;
        let n = a.len();
        let mut g1 = vec![0.0; n];
        let mut g2 = vec![0.0; n];
        let mut g11 = vec![0.0; n];
        let mut g12 = vec![0.0; n];
        let mut g22 = vec![0.0; n];
        for (i, &(pp, qq)) in self.offsets.iter().enumerate() {
            let along = pp * ca + qq * sa;
            let across = -pp * sa + qq * ca;
            g1[i] = k * across * se;
            g2[i] = k * along * ce;
            g11[i] = -k * along * se;
            g12[i] = k * across * ce;
            g22[i] = -k * along * se;
        }
        let j = Complex64::new(0.0, 1.0);
        let mut value = n as f64;
        let mut grad = [0.0; 2];
        let mut hess = [[0.0; 2]; 2];
        for u in &self.signal {
            let mut c = Complex64::new(0.0, 0.0);
            let mut c1 = c;
            let mut c2 = c;
            let mut c11 = c;
            let mut c12 = c;
            let mut c22 = c;
            for i in 0..n {
                let t = u[i].conj() * a[i];
                c += t;
                c1 += -j * g1[i] * t;
                c2 += -j * g2[i] * t;
                c11 += (-j * g11[i] - g1[i] * g1[i]) * t;
                c12 += (-j * g12[i] - g1[i] * g2[i]) * t;
                c22 += (-j * g22[i] - g2[i] * g2[i]) * t;
            }
            value -= c.norm_sqr();
            grad[0] -= 2.0 * (c.conj() * c1).re;
            grad[1] -= 2.0 * (c.conj() * c2).re;
            hess[0][0] -= 2.0 * (c1.norm_sqr() + (c.conj() * c11).re);
            hess[0][1] -= 2.0 * ((c1.conj() * c2).re + (c.conj() * c12).re);
            hess[1][1] -= 2.0 * (c2.norm_sqr() + (c.conj() * c22).re);
        }
        hess[1][0] = hess[0][1];
        (value.max(0.0), grad, hess)
    }
}

/// `a^H U_0 U_0^H a` with an explicit noise-subspace basis.
pub fn aoa_spectrum(noise: &ComplexMatrix, panel: Panel, spacing: f64, wavelength: f64, p: Angles) -> f64 {
    let a = steering_vector(panel, spacing, wavelength, p);
    (0..noise.cols()).map(|k| dot(&noise.column(k), &a).norm_sqr()).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub azimuth_range: (f64, f64),
    pub elevation_range: (f64, f64),
    pub grid_points: usize,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            azimuth_range: (-PI / 2.0, PI / 2.0),
            elevation_range: (0.0, PI / 2.0),
            grid_points: 64,
            tolerance: 1e-5,
            max_iterations: 20,
        }
    }
}

impl SearchConfig {
    fn clamp(&self, p: Angles) -> Angles {
        Angles::new(
            p.azimuth.clamp(self.azimuth_range.0, self.azimuth_range.1),
            p.elevation.clamp(self.elevation_range.0, self.elevation_range.1),
        )
    }

    fn grid(&self, range: (f64, f64), i: usize) -> f64 {
        range.0 + (range.1 - range.0) * i as f64 / (self.grid_points - 1) as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub angles: Angles,
    /// `1 / f` at the refined point.
    pub peak_height: f64,
    pub converged: bool,
}

/// Refined spectrum minima, sorted by descending peak height.
pub fn spectrum_search_2d(f: &impl AngleSpectrum, config: &SearchConfig) -> Vec<Candidate> {
    let n = config.grid_points.max(2);
    let config = SearchConfig { grid_points: n, ..*config };
    let inv: Vec<f64> = (0..n * n)
        .map(|idx| {
            let p = Angles::new(config.grid(config.azimuth_range, idx / n), config.grid(config.elevation_range, idx % n));
            1.0 / f.value(p).max(f64::MIN_POSITIVE)
        })
        .collect();

    let mut seeds = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let v = inv[i * n + j];
            let mut is_max = true;
            'nb: for di in -1i64..=1 {
                for dj in -1i64..=1 {
                    let (ii, jj) = (i as i64 + di, j as i64 + dj);
                    if (di, dj) == (0, 0) || ii < 0 || jj < 0 || ii >= n as i64 || jj >= n as i64 {
                        continue;
                    }
                    let w = inv[ii as usize * n + jj as usize];
                    // Strict on earlier neighbours so plateaus yield one seed.
                    let earlier = (ii, jj) < (i as i64, j as i64);
                    if w > v || (earlier && w == v) {
                        is_max = false;
                        break 'nb;
                    }
                }
            }
            if is_max {
                seeds.push(Angles::new(config.grid(config.azimuth_range, i), config.grid(config.elevation_range, j)));
            }
        }
    }

    let mut out: Vec<Candidate> = Vec::new();
    for seed in seeds {
        let (p, value, converged) = newton_refine(f, seed, &config);
        let cand = Candidate {
            angles: p,
            peak_height: 1.0 / value.max(f64::MIN_POSITIVE),
            converged,
        };
        match out.iter_mut().find(|c| c.angles.distance_sqr(&p) < 1e-6) {
            Some(c) if c.peak_height < cand.peak_height => *c = cand,
            Some(_) => {}
            None => out.push(cand),
        }
    }
    out.sort_by(|a, b| {
        b.peak_height
            .total_cmp(&a.peak_height)
            .then(a.angles.elevation.total_cmp(&b.angles.elevation))
    });
    out
}

/// Damped Newton descent from `seed`. A step is accepted only if it lowers
/// `f`; otherwise it is halved up to 8 times and the iterate is kept.
fn newton_refine(f: &impl AngleSpectrum, seed: Angles, config: &SearchConfig) -> (Angles, f64, bool) {
    let mut p = seed;
    let (mut value, _, _) = f.derivatives(p);
    for _ in 0..config.max_iterations {
        let (_, g, h) = f.derivatives(p);
        let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
        let mut step = if h[0][0] > 0.0 && det > 0.0 {
            [
                -(h[1][1] * g[0] - h[0][1] * g[1]) / det,
                -(-h[1][0] * g[0] + h[0][0] * g[1]) / det,
            ]
        } else {
            // Not a local bowl: steepest descent scaled to one grid cell.
            let gn = (g[0] * g[0] + g[1] * g[1]).sqrt();
            if gn == 0.0 {
                return (p, value, false);
            }
            let cell = (config.azimuth_range.1 - config.azimuth_range.0) / (config.grid_points - 1) as f64;
            [-g[0] / gn * cell, -g[1] / gn * cell]
        };
        let mut accepted = None;
        for _ in 0..=8 {
            let q = config.clamp(Angles::new(p.azimuth + step[0], p.elevation + step[1]));
            let vq = f.value(q);
            if vq <= value {
                accepted = Some((q, vq));
                break;
            }
            step = [step[0] / 2.0, step[1] / 2.0];
        }
        let Some((q, vq)) = accepted else {
            return (p, value, false);
        };
        let moved = q.distance_sqr(&p).sqrt();
        p = q;
        value = vq;
        if moved <= config.tolerance {
            return (p, value, true);
        }
    }
    (p, value, false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::ComplexMatrix;

    const LAMBDA: f64 = 0.0107;

    fn single_source(panel: Panel, p: Angles) -> MusicSpectrum {
        let a = steering_vector(panel, LAMBDA / 2.0, LAMBDA, p);
        let norm = (panel.elements() as f64).sqrt();
        let u = ComplexMatrix::from_columns(&[a.iter().map(|z| z / norm).collect()]).unwrap();
        MusicSpectrum::from_signal_basis(&u, panel, LAMBDA / 2.0, LAMBDA)
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let panel = Panel::new(4, 4);
        let f = single_source(panel, Angles::new(0.3, 1.0));
        let p = Angles::new(0.25, 0.95);
        let (v, g, h) = f.derivatives(p);
        assert!((v - f.value(p)).abs() < 1e-10);
        let e = 1e-5;
        let fd = |da: f64, de: f64| f.derivatives(Angles::new(p.azimuth + da, p.elevation + de));
        let (_, ga, _) = fd(e, 0.0);
        let (_, gb, _) = fd(-e, 0.0);
        let (_, gc, _) = fd(0.0, e);
        let (_, gd, _) = fd(0.0, -e);
        let va = f.value(Angles::new(p.azimuth + e, p.elevation));
        let vb = f.value(Angles::new(p.azimuth - e, p.elevation));
        assert!((g[0] - (va - vb) / (2.0 * e)).abs() < 1e-5 * (1.0 + g[0].abs()));
        assert!((h[0][0] - (ga[0] - gb[0]) / (2.0 * e)).abs() < 1e-4 * (1.0 + h[0][0].abs()));
        assert!((h[0][1] - (gc[0] - gd[0]) / (2.0 * e)).abs() < 1e-4 * (1.0 + h[0][1].abs()));
        assert!((h[1][1] - (gc[1] - gd[1]) / (2.0 * e)).abs() < 1e-4 * (1.0 + h[1][1].abs()));
    }

    #[test]
    fn spectrum_bounds_and_subspace_limits() {
        let panel = Panel::new(3, 3);
        let truth = Angles::new(-0.4, 0.7);
        let f = single_source(panel, truth);
        assert!(f.value(truth) < 1e-9);
        for k in 0..50 {
            let p = Angles::new(-1.5 + 0.06 * k as f64, 0.03 * k as f64);
            let v = f.value(p);
            assert!((0.0..=9.0 + 1e-12).contains(&v));
        }
    }

    #[test]
    fn explicit_noise_basis_form() {
        // Noise basis = all of C^N gives |a|^2.
        let panel = Panel::new(2, 2);
        let v = aoa_spectrum(&ComplexMatrix::identity(4), panel, LAMBDA / 2.0, LAMBDA, Angles::new(0.2, 0.4));
        assert!((v - 4.0).abs() < 1e-12);
    }

    #[test]
    fn finds_source_on_grid_node() {
        let cfg = SearchConfig::default();
        let truth = Angles::new(cfg.grid(cfg.azimuth_range, 40), cfg.grid(cfg.elevation_range, 20));
        let f = single_source(Panel::new(8, 8), truth);
        let c = spectrum_search_2d(&f, &cfg);
        assert!(c[0].angles.distance_sqr(&truth).sqrt() <= cfg.tolerance);
    }

    #[test]
    fn finds_off_grid_source() {
        let truth = Angles::new(30.3f64.to_radians(), 60.7f64.to_radians());
        let f = single_source(Panel::new(8, 8), truth);
        let c = spectrum_search_2d(&f, &SearchConfig::default());
        assert!((c[0].angles.azimuth - truth.azimuth).abs().to_degrees() < 0.1);
        assert!((c[0].angles.elevation - truth.elevation).abs().to_degrees() < 0.1);
    }

    #[test]
    fn finds_two_separated_sources() {
        let panel = Panel::new(8, 8);
        let p1 = Angles::new(0.5, 1.1);
        let p2 = Angles::new(-0.6, 0.6);
        let a1 = steering_vector(panel, LAMBDA / 2.0, LAMBDA, p1);
        let a2 = steering_vector(panel, LAMBDA / 2.0, LAMBDA, p2);
        // Orthonormalize the two steering vectors.
        let n1 = crate::numerics::norm_sqr(&a1).sqrt();
        let u1: Vec<Complex64> = a1.iter().map(|z| z / n1).collect();
        let proj = dot(&u1, &a2);
        let r: Vec<Complex64> = a2.iter().zip(&u1).map(|(a, u)| a - u * proj).collect();
        let nr = crate::numerics::norm_sqr(&r).sqrt();
        let u2: Vec<Complex64> = r.iter().map(|z| z / nr).collect();
        let u = ComplexMatrix::from_columns(&[u1, u2]).unwrap();
        let f = MusicSpectrum::from_signal_basis(&u, panel, LAMBDA / 2.0, LAMBDA);
        let c = spectrum_search_2d(&f, &SearchConfig::default());
        let top: Vec<Angles> = c.iter().take(2).map(|c| c.angles).collect();
        for t in [p1, p2] {
            assert!(top.iter().any(|p| p.distance_sqr(&t).sqrt() < 1e-4), "{t:?} not in {top:?}");
        }
    }

    #[test]
    fn refinement_never_increases_spectrum() {
        let truth = Angles::new(0.21, 1.17);
        let f = single_source(Panel::new(4, 4), truth);
        let cfg = SearchConfig::default();
        for k in 0..20 {
            let seed = Angles::new(-1.4 + 0.14 * k as f64, 0.07 * k as f64 + 0.05);
            let (_, v, _) = newton_refine(&f, seed, &cfg);
            assert!(v <= f.value(seed));
        }
    }
}
