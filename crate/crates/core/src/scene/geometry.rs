//! Array panels, steering vectors and angle conventions.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Azimuth/elevation pair in radians. Elevation is measured from the panel
/// normal, so the direction cosines along the panel axes are
/// `(cos az sin el, sin az sin el)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Angles {
    pub azimuth: f64,
    pub elevation: f64,
}

impl Angles {
    pub fn new(azimuth: f64, elevation: f64) -> Self {
        Self { azimuth, elevation }
    }

    /// Direction of a vector expressed in a panel frame.
    pub fn of_vector(v: [f64; 3]) -> Self {
        let horiz = v[0].hypot(v[1]);
        Self {
            azimuth: v[1].atan2(v[0]),
            elevation: horiz.atan2(v[2]),
        }
    }

    pub fn distance_sqr(&self, other: &Angles) -> f64 {
        (self.azimuth - other.azimuth).powi(2) + (self.elevation - other.elevation).powi(2)
    }
}

/// A `P x Q` uniform planar array.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Panel {
    pub rows: usize,
    pub cols: usize,
}

impl Panel {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self { rows, cols }
    }

    pub fn elements(&self) -> usize {
        self.rows * self.cols
    }
}

/// BS and UE panels plus the shared element spacing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrayGeometry {
    pub bs: Panel,
    pub ue: Panel,
    /// Element spacing `d_a` in meters.
    pub spacing: f64,
}

impl ArrayGeometry {
    /// Half-wavelength spacing.
    pub fn half_wavelength(bs: Panel, ue: Panel, wavelength: f64) -> Self {
        Self {
            bs,
            ue,
            spacing: wavelength / 2.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.bs.elements() == 0 || self.ue.elements() == 0 {
            return Err(Error::Config("array panels need at least one element".into()));
        }
        if !(self.spacing > 0.0) {
            return Err(Error::Config(format!("element spacing must be positive, got {}", self.spacing)));
        }
        Ok(())
    }
}

/// UPA steering vector, flattened p-major: index `p * Q + q`.
pub fn steering_vector(panel: Panel, spacing: f64, wavelength: f64, angles: Angles) -> Vec<Complex64> {
    let k = 2.0 * PI / wavelength * spacing;
    let (sa, ca) = angles.azimuth.sin_cos();
    let se = angles.elevation.sin();
    let row_step = k * ca * se;
    let col_step = k * sa * se;
    let col_phase: Vec<Complex64> = (0..panel.cols)
        .map(|q| Complex64::from_polar(1.0, -col_step * q as f64))
        .collect();
    let mut out = Vec::with_capacity(panel.elements());
    for p in 0..panel.rows {
        let rp = Complex64::from_polar(1.0, -row_step * p as f64);
        out.extend(col_phase.iter().map(|c| rp * c));
    }
    out
}

/// Panel-frame element coordinates in units of spacing, same order as
/// [`steering_vector`].
pub fn element_indices(panel: Panel) -> impl Iterator<Item = (f64, f64)> {
    (0..panel.rows).flat_map(move |p| (0..panel.cols).map(move |q| (p as f64, q as f64)))
}

#[cfg(test)]
mod tests {
    use super::*;

    const LAMBDA: f64 = 0.0107;

    #[test]
    fn broadside_is_all_ones() {
        let a = steering_vector(Panel::new(4, 3), LAMBDA / 2.0, LAMBDA, Angles::new(0.7, 0.0));
        assert!(a.iter().all(|z| (z - Complex64::new(1.0, 0.0)).norm() < 1e-15));
    }

    #[test]
    fn single_element_is_one() {
        let a = steering_vector(Panel::new(1, 1), LAMBDA / 2.0, LAMBDA, Angles::new(0.3, 1.1));
        assert_eq!(a, vec![Complex64::new(1.0, 0.0)]);
    }

    #[test]
    fn endfire_two_element_alternates_sign() {
        let a = steering_vector(Panel::new(2, 1), LAMBDA / 2.0, LAMBDA, Angles::new(0.0, PI / 2.0));
        assert!((a[0] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert!((a[1] - Complex64::new(-1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn flattening_is_row_major_in_p() {
        let panel = Panel::new(2, 3);
        let ang = Angles::new(0.4, 0.9);
        let a = steering_vector(panel, LAMBDA / 2.0, LAMBDA, ang);
        let k = PI;
        for (idx, (p, q)) in element_indices(panel).enumerate() {
            let phase = -k * (p * ang.azimuth.cos() + q * ang.azimuth.sin()) * ang.elevation.sin();
            assert!((a[idx] - Complex64::from_polar(1.0, phase)).norm() < 1e-12);
        }
    }

    #[test]
    fn angles_of_vector_roundtrip() {
        let ang = Angles::of_vector([1.0, 1.0, 2.0_f64.sqrt()]);
        assert!((ang.azimuth - PI / 4.0).abs() < 1e-15);
        assert!((ang.elevation - PI / 4.0).abs() < 1e-15);
    }
}
