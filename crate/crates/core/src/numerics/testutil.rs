//! Independent oracles for the unit tests.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use super::{ComplexMatrix, EigenDecomposition};

pub fn random_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

pub fn random_hermitian(n: usize, rng: &mut impl Rng) -> ComplexMatrix {
    let b = random_matrix(n, n, rng);
    let bh = b.adjoint();
    b.add(&bh).unwrap().scaled(0.5)
}

pub fn reconstruct_evd(e: &EigenDecomposition) -> ComplexMatrix {
    let n = e.values.len();
    ComplexMatrix::from_fn(n, n, |i, j| {
        (0..n)
            .map(|k| e.vectors[(i, k)] * e.vectors[(j, k)].conj() * e.values[k])
            .sum()
    })
}

/// Eigenvalues by cyclic complex Jacobi rotations, sorted descending.
pub fn jacobi_eigenvalues(a: &ComplexMatrix) -> Vec<f64> {
    let n = a.rows();
    let mut m = a.clone();
    for _ in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)].norm_sqr())
            .sum();
        if off < 1e-26 * a.frobenius_norm_sqr().max(1e-300) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                let g = apq.norm();
                if g == 0.0 {
                    continue;
                }
                let ph = apq / g;
                let zeta = (m[(q, q)].re - m[(p, p)].re) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                // m <- J^H m J with J = diag(1, conj(ph)) * [[c, s], [-s, c]].
                let phc = ph.conj();
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = mkp * c - mkq * phc * s;
                    m[(k, q)] = mkp * s + mkq * phc * c;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = mpk * c - mqk * ph * s;
                    m[(q, k)] = mpk * s + mqk * ph * c;
                }
            }
        }
    }
    let mut v: Vec<f64> = (0..n).map(|i| m[(i, i)].re).collect();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}
