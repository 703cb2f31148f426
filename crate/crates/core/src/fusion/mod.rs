//! Data-aided sensing: ZF demodulation with the enhanced CSI, data-based
//! CSI (D-CSI) from decided symbols, joint pilot+data AoA and range
//! estimation, and conversion of (range, AoA) to a position.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jaece::{estimate_aoa, signal_subspace, AoaEstimate, SearchConfig, SignalSubspace};
use crate::numerics::{norm_sqr, ComplexMatrix};
use crate::ranging::{estimate_range, RangeEstimate, RangeSnapshotMatrix};
use crate::scene::{Angles, Constellation, Panel};

/// ZF equalization `h^H y / |h|^2` followed by a nearest-point decision.
/// Returns the equalized sample and the decided label.
pub fn equalize_and_decide(y: &[Complex64], h: &[Complex64], constellation: &Constellation) -> Result<(Complex64, usize)> {
    let z = equalize(y, h)?;
    Ok((z, constellation.decide(z)))
}

pub fn equalize(y: &[Complex64], h: &[Complex64]) -> Result<Complex64> {
    if y.len() != h.len() {
        return Err(Error::contract("equalize", "received vector and CSI differ in length"));
    }
    let hh = norm_sqr(h);
    if !(hh > 0.0) {
        return Err(Error::contract("equalize", "zero CSI vector"));
    }
    Ok(h.iter().zip(y).map(|(a, b)| a.conj() * b).sum::<Complex64>() / hh)
}

/// D-CSI `y / d`.
pub fn dcsi(y: &[Complex64], decided: Complex64) -> Result<Vec<Complex64>> {
    if decided.norm_sqr() == 0.0 {
        return Err(Error::contract("dcsi", "decided symbol is zero"));
    }
    let inv = decided.inv();
    Ok(y.iter().map(|z| z * inv).collect())
}

/// Where a column of the joint matrix came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JointColumn {
    Pilot { n: usize, m: usize },
    Data { n: usize, m: usize, i: usize },
}

/// `[H_u, H^d]`: the enhanced pilot block followed by the D-CSI block with
/// column `i * M_s N_c + m * N_c + n` for data symbol `i`.
#[derive(Debug, Clone)]
pub struct JointCsiMatrix {
    pub matrix: ComplexMatrix,
    pub subcarriers: usize,
    pub packets: usize,
    pub data_symbols: usize,
}

impl JointCsiMatrix {
    fn block(&self) -> usize {
        self.subcarriers * self.packets
    }

    pub fn column_of(&self, col: usize) -> JointColumn {
        let b = self.block();
        let (blk, k) = (col / b, col % b);
        let (n, m) = (k % self.subcarriers, k / self.subcarriers);
        if blk == 0 {
            JointColumn::Pilot { n, m }
        } else {
            JointColumn::Data { n, m, i: blk - 1 }
        }
    }

    pub fn index_of(&self, c: JointColumn) -> usize {
        match c {
            JointColumn::Pilot { n, m } => m * self.subcarriers + n,
            JointColumn::Data { n, m, i } => (i + 1) * self.block() + m * self.subcarriers + n,
        }
    }
}

pub fn joint_stack(
    enhanced: &ComplexMatrix,
    data: &ComplexMatrix,
    subcarriers: usize,
    packets: usize,
    data_symbols: usize,
) -> Result<JointCsiMatrix> {
    let block = subcarriers * packets;
    if enhanced.cols() != block || data.cols() != block * data_symbols || enhanced.rows() != data.rows() {
        return Err(Error::contract(
            "joint_stack",
            format!(
                "pilot block {:?} and data block {:?} for {subcarriers} x {packets} x {data_symbols}",
                enhanced.shape(),
                data.shape()
            ),
        ));
    }
    let matrix = if data_symbols == 0 { enhanced.clone() } else { ComplexMatrix::hstack(&[enhanced, data])? };
    Ok(JointCsiMatrix { matrix, subcarriers, packets, data_symbols })
}

/// MUSIC AoA on the joint correlation `H H^H / ((P_s + 1) M_s N_c)`; the
/// noise subspace is everything past the estimated order.
pub fn joint_aoa(
    joint: &JointCsiMatrix,
    panel: Panel,
    spacing: f64,
    wavelength: f64,
    config: &SearchConfig,
) -> Result<(AoaEstimate, SignalSubspace)> {
    let sub = signal_subspace(&joint.matrix)?;
    let est = estimate_aoa(&sub.spectrum(panel, spacing, wavelength), config)?;
    Ok((est, sub))
}

/// MUSIC range over `[H_R, H_R,1^d, ...]` with every block `N_c x M_s`.
pub fn joint_range(blocks: &[RangeSnapshotMatrix]) -> Result<RangeEstimate> {
    let first = blocks.first().ok_or_else(|| Error::contract("joint_range", "no blocks"))?;
    if blocks.iter().any(|b| b.matrix.shape() != first.matrix.shape()) {
        return Err(Error::contract("joint_range", "blocks differ in shape"));
    }
    if blocks.len() == 1 {
        return estimate_range(first);
    }
    let mats: Vec<&ComplexMatrix> = blocks.iter().map(|b| &b.matrix).collect();
    estimate_range(&RangeSnapshotMatrix {
        matrix: ComplexMatrix::hstack(&mats)?,
        subcarrier_spacing_hz: first.subcarrier_spacing_hz,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scheme {
    PilotOnly,
    Joint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RangeMethod {
    Music,
    Ml,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocationEstimate {
    /// BS panel frame, meters.
    pub position: [f64; 3],
    pub scheme: Scheme,
    pub method: RangeMethod,
}

/// `(r sin el cos az, r sin el sin az, r cos el)`.
pub fn localize(range_m: f64, angles: Angles) -> [f64; 3] {
    let (sa, ca) = angles.azimuth.sin_cos();
    let (se, ce) = angles.elevation.sin_cos();
    [range_m * se * ca, range_m * se * sa, range_m * ce]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jaece::decompose;
    use crate::numerics::{projector_distance, testutil::random_matrix};
    use crate::scene::complex_gaussian;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn equalizer_examples() {
        let h = [c(1.0, 0.0), c(0.0, 0.0)];
        let y = [c(3.0, 1.0), c(0.0, 0.0)];
        let qam = Constellation::qam(4).unwrap();
        assert_eq!(equalize(&y, &h).unwrap(), c(3.0, 1.0));
        assert!(equalize(&y, &[c(0.0, 0.0); 2]).is_err());

        let hv = [c(0.3, -1.0), c(2.0, 0.5), c(-0.1, 0.2)];
        for label in 0..4 {
            let d = qam.point(label);
            let y: Vec<Complex64> = hv.iter().map(|x| x * d).collect();
            assert_eq!(equalize_and_decide(&y, &hv, &qam).unwrap().1, label);
        }
        let z = c(0.9, 0.8) / 2f64.sqrt();
        let (_, label) = equalize_and_decide(&[z], &[c(1.0, 0.0)], &qam).unwrap();
        assert!((qam.point(label) - c(1.0, 1.0) / 2f64.sqrt()).norm() < 1e-12);
    }

    #[test]
    fn dcsi_examples() {
        let h = vec![c(0.4, 0.1), c(-1.0, 0.3)];
        let d = c(1.0, -1.0) / 2f64.sqrt();
        let y: Vec<Complex64> = h.iter().map(|x| x * d).collect();
        let same = dcsi(&y, d).unwrap();
        assert!(same.iter().zip(&h).all(|(a, b)| (a - b).norm() < 1e-15));
        let flipped = dcsi(&y, -d).unwrap();
        assert!(flipped.iter().zip(&h).all(|(a, b)| (a + b).norm() < 1e-15));
        assert!(dcsi(&y, c(0.0, 0.0)).is_err());
    }

    #[test]
    fn dcsi_noise_variance() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let d_hat = c(3.0, 1.0) / 10f64.sqrt();
        let sigma2 = 0.2;
        let draws = 10_000;
        let mut acc = 0.0;
        for _ in 0..draws {
            let n = complex_gaussian(sigma2, &mut rng);
            acc += dcsi(&[n], d_hat).unwrap()[0].norm_sqr();
        }
        let expect = sigma2 / d_hat.norm_sqr();
        assert!((acc / draws as f64 / expect - 1.0).abs() < 0.05);
    }

    #[test]
    fn joint_layout() {
        let pilot = ComplexMatrix::from_fn(2, 1, |i, _| c(i as f64, 0.0));
        let data = ComplexMatrix::from_fn(2, 1, |i, _| c(0.0, i as f64));
        let j = joint_stack(&pilot, &data, 1, 1, 1).unwrap();
        assert_eq!(j.matrix.column(0), pilot.column(0));
        assert_eq!(j.matrix.column(1), data.column(0));
        let only = joint_stack(&pilot, &ComplexMatrix::zeros(2, 0), 1, 1, 0).unwrap();
        assert_eq!(only.matrix, pilot);
        assert!(joint_stack(&pilot, &data, 1, 1, 2).is_err());

        let j = JointCsiMatrix { matrix: ComplexMatrix::zeros(1, 3 * 4 * 3), subcarriers: 3, packets: 4, data_symbols: 2 };
        for col in 0..j.matrix.cols() {
            assert_eq!(j.index_of(j.column_of(col)), col);
        }
        assert_eq!(j.column_of(12 + 2 * 3 + 1), JointColumn::Data { n: 1, m: 2, i: 0 });
    }

    #[test]
    fn error_free_data_keeps_pilot_subspace() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pilot = random_matrix(6, 2, &mut rng).matmul(&random_matrix(2, 10, &mut rng)).unwrap();
        let qam = Constellation::qam(4).unwrap();
        let mut data = ComplexMatrix::zeros(6, 10);
        for col in 0..10 {
            let d = qam.point(col % 4);
            let y: Vec<Complex64> = pilot.column(col).iter().map(|h| h * d).collect();
            data.set_column(col, &dcsi(&y, d).unwrap());
        }
        let joint = joint_stack(&pilot, &data, 5, 2, 1).unwrap();
        // Compare the rank-2 signal blocks directly; the gap rule may pick
        // either order for a random rank-2 matrix.
        let top2 = |h: &ComplexMatrix| {
            crate::numerics::hermitian_evd(&crate::jaece::csi_correlation(h).unwrap())
                .unwrap()
                .vectors
                .columns_range(0, 2)
        };
        assert!(projector_distance(&top2(&joint.matrix), &top2(&pilot)) < 1e-9);
        let (a, b) = (signal_subspace(&joint.matrix).unwrap(), decompose(&pilot).unwrap());
        assert_eq!(a.order, b.order);
    }

    #[test]
    fn localize_examples() {
        let p = localize(100.0, Angles::new(0.0, PI / 2.0));
        assert!((p[0] - 100.0).abs() < 1e-12 && p[1].abs() < 1e-12 && p[2].abs() < 1e-9);
        let q = localize(2.0, Angles::new(PI / 4.0, PI / 3.0));
        assert!((q[0] - 1.2247).abs() < 1e-4 && (q[1] - 1.2247).abs() < 1e-4 && (q[2] - 1.0).abs() < 1e-12);
        let r = localize(37.5, Angles::new(-0.3, 1.1));
        assert!(((r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt() - 37.5).abs() < 1e-12);
    }
}
