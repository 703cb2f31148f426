//! Hermitian eigendecomposition.
//!
//! Householder reduction to a complex tridiagonal form, a diagonal phase
//! similarity that makes the off-diagonal real, then implicit-shift QL on
//! the real symmetric tridiagonal matrix. O(n^3) with a small constant,
//! which matters because every trial decomposes several 64x64 matrices.

use num_complex::Complex64;

use super::matrix::{dot, ComplexMatrix};
use crate::error::{Error, Result};

const HERMITIAN_TOL: f64 = 1e-12;
const MAX_QL_ITERATIONS: usize = 60;

#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    /// Real eigenvalues, descending.
    pub values: Vec<f64>,
    /// Unit-norm eigenvectors as columns, ordered like `values`.
    pub vectors: ComplexMatrix,
}

impl EigenDecomposition {
    pub fn vector(&self, i: usize) -> Vec<Complex64> {
        self.vectors.column(i)
    }
}

pub fn hermitian_evd(a: &ComplexMatrix) -> Result<EigenDecomposition> {
    let (rows, cols) = a.shape();
    if rows != cols {
        return Err(Error::contract("hermitian_evd", format!("{rows}x{cols} is not square")));
    }
    let n = rows;
    if n == 0 {
        return Err(Error::contract("hermitian_evd", "empty matrix"));
    }
    let scale = a.frobenius_norm();
    let defect = a.hermitian_defect();
    if defect > HERMITIAN_TOL * scale.max(f64::MIN_POSITIVE) && defect > 0.0 {
        return Err(Error::contract(
            "hermitian_evd",
            format!("input is not Hermitian (defect {defect:.3e}, norm {scale:.3e})"),
        ));
    }

    // Work on the lower triangle of a fully Hermitian copy.
    let mut w = a.clone();
    let mut reflectors: Vec<(usize, Vec<Complex64>, f64)> = Vec::with_capacity(n.saturating_sub(2));
    let mut sub = vec![Complex64::new(0.0, 0.0); n];

    for k in 0..n.saturating_sub(1) {
        let x: Vec<Complex64> = (k + 1..n).map(|i| w[(i, k)]).collect();
        let alpha = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let tail = x[1..].iter().map(|z| z.norm_sqr()).sum::<f64>();
        if alpha == 0.0 || tail == 0.0 {
            sub[k] = x[0];
            continue;
        }
        let phase = if x[0].norm() > 0.0 { x[0] / x[0].norm() } else { Complex64::new(1.0, 0.0) };
        let beta = -phase * alpha;
        let mut v = x;
        v[0] -= beta;
        let vv: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        let tau = 2.0 / vv;

        // Trailing block update: A <- A - v q^H - q v^H.
        let m = n - k - 1;
        let mut p = vec![Complex64::new(0.0, 0.0); m];
        for (i, pi) in p.iter_mut().enumerate() {
            let row = &w.row(k + 1 + i)[k + 1..];
            *pi = tau * row.iter().zip(&v).map(|(a, b)| a * b).sum::<Complex64>();
        }
        let vp = dot(&v, &p).re;
        let q: Vec<Complex64> = p.iter().zip(&v).map(|(pi, vi)| pi - vi * (0.5 * tau * vp)).collect();
        for i in 0..m {
            let (vi, qi) = (v[i], q[i]);
            let row = &mut w.row_mut(k + 1 + i)[k + 1..];
            for j in 0..m {
                row[j] -= vi * q[j].conj() + qi * v[j].conj();
            }
        }
        sub[k] = beta;
        reflectors.push((k, v, tau));
    }

    let mut diag: Vec<f64> = (0..n).map(|i| w[(i, i)].re).collect();
    // Phases turning the complex sub-diagonal into |e_k|.
    let mut phases = vec![Complex64::new(1.0, 0.0); n];
    let mut off = vec![0.0; n];
    for k in 0..n.saturating_sub(1) {
        let e = sub[k];
        let mag = e.norm();
        off[k] = mag;
        phases[k + 1] = if mag > 0.0 { phases[k] * (e / mag) } else { phases[k] };
    }

    // Row i of `z` is the i-th eigenvector of the real tridiagonal matrix.
    let mut z: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut r = vec![0.0; n];
            r[i] = 1.0;
            r
        })
        .collect();
    tridiagonal_ql(&mut diag, &mut off, &mut z)?;

    // Back-transform: eigenvector = Q D z.
    let mut vectors = ComplexMatrix::zeros(n, n);
    for (col, zc) in z.iter().enumerate() {
        let mut u: Vec<Complex64> = zc.iter().zip(&phases).map(|(zi, ph)| ph * zi).collect();
        for (k, v, tau) in reflectors.iter().rev() {
            let seg = &mut u[k + 1..];
            let s = dot(v, seg) * *tau;
            for (ui, vi) in seg.iter_mut().zip(v) {
                *ui -= vi * s;
            }
        }
        let norm = u.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for (i, ui) in u.iter().enumerate() {
            vectors[(i, col)] = ui / norm;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| diag[j].total_cmp(&diag[i]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| diag[i]).collect();
    let sorted = ComplexMatrix::from_fn(n, n, |i, j| vectors[(i, order[j])]);
    Ok(EigenDecomposition { values, vectors: sorted })
}

/// Implicit QL with Wilkinson-style shifts on a real symmetric tridiagonal
/// matrix. `off[k]` couples `k` and `k + 1`; `z` rows are rotated alongside.
fn tridiagonal_ql(d: &mut [f64], e: &mut [f64], z: &mut [Vec<f64>]) -> Result<()> {
    let n = d.len();
    if n == 1 {
        return Ok(());
    }
    e[n - 1] = 0.0;
    let eps = f64::EPSILON;
    let mut f = 0.0;
    let mut tst1 = 0.0f64;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > MAX_QL_ITERATIONS {
                    return Err(Error::contract("hermitian_evd", "QL iteration did not converge"));
                }
                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    let (lo, hi) = z.split_at_mut(i + 1);
                    let (zi, zi1) = (&mut lo[i], &mut hi[0]);
                    for (a, b) in zi.iter_mut().zip(zi1.iter_mut()) {
                        let t = *b;
                        *b = s * *a + c * t;
                        *a = c * *a - s * t;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}
