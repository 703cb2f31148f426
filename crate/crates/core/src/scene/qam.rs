//! Gray-mapped square QAM with unit average energy.

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    order: usize,
    bits: usize,
    /// Point for each label, label in `0..order`.
    points: Vec<Complex64>,
}

impl Constellation {
    /// Square QAM of `order` points (4, 16, 64, ...).
    pub fn qam(order: usize) -> Result<Self> {
        let side = (order as f64).sqrt().round() as usize;
        if order < 4 || side * side != order || !side.is_power_of_two() {
            return Err(Error::Config(format!("unsupported QAM order {order}")));
        }
        let half_bits = side.trailing_zeros() as usize;
        let levels: Vec<f64> = (0..side).map(|i| 2.0 * i as f64 - (side as f64 - 1.0)).collect();
        // Average energy of a square grid with odd-integer levels.
        let scale = (2.0 * (order as f64 - 1.0) / 3.0).sqrt();
        let points = (0..order)
            .map(|label| {
                let hi = label >> half_bits;
                let lo = label & (side - 1);
                let i = gray_to_index(hi);
                let q = gray_to_index(lo);
                Complex64::new(levels[i], levels[q]) / scale
            })
            .collect();
        Ok(Self { order, bits: 2 * half_bits, points })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.bits
    }

    pub fn point(&self, label: usize) -> Complex64 {
        self.points[label]
    }

    pub fn random_label(&self, rng: &mut impl Rng) -> usize {
        rng.random_range(0..self.order)
    }

    /// Nearest constellation label.
    pub fn decide(&self, z: Complex64) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (label, p) in self.points.iter().enumerate() {
            let d = (z - p).norm_sqr();
            if d < best_d {
                best_d = d;
                best = label;
            }
        }
        best
    }

    pub fn bit_errors(&self, a: usize, b: usize) -> u32 {
        ((a ^ b) as u32).count_ones()
    }
}

fn gray_to_index(g: usize) -> usize {
    let mut b = g;
    let mut shift = g >> 1;
    while shift != 0 {
        b ^= shift;
        shift >>= 1;
    }
    b
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_average_energy() {
        for order in [4, 16, 64] {
            let c = Constellation::qam(order).unwrap();
            let e: f64 = (0..order).map(|l| c.point(l).norm_sqr()).sum::<f64>() / order as f64;
            assert!((e - 1.0).abs() < 1e-12, "{order}: {e}");
        }
    }

    #[test]
    fn neighbours_differ_in_one_bit() {
        let c = Constellation::qam(16).unwrap();
        let dmin = 2.0 / 10f64.sqrt();
        for a in 0..16 {
            for b in 0..16 {
                if ((c.point(a) - c.point(b)).norm() - dmin).abs() < 1e-9 {
                    assert_eq!(c.bit_errors(a, b), 1);
                }
            }
        }
    }

    #[test]
    fn decide_inverts_mapping() {
        let c = Constellation::qam(16).unwrap();
        for l in 0..16 {
            assert_eq!(c.decide(c.point(l) * 1.1), l);
        }
    }

    #[test]
    fn rejects_non_square_orders() {
        assert!(Constellation::qam(8).is_err());
        assert!(Constellation::qam(2).is_err());
    }
}
