//! Thin SVD by one-sided (Hestenes) Jacobi rotations.

use num_complex::Complex64;

use super::matrix::{dot, norm_sqr, ComplexMatrix};
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 60;

/// `A = U diag(singulars) V^H` with `U` m x k, `V` n x k, k = min(m, n).
#[derive(Debug, Clone)]
pub struct SingularDecomposition {
    pub left: ComplexMatrix,
    pub singulars: Vec<f64>,
    pub right: ComplexMatrix,
}

impl SingularDecomposition {
    pub fn reconstruct(&self) -> ComplexMatrix {
        let k = self.singulars.len();
        let us = ComplexMatrix::from_fn(self.left.rows(), k, |i, j| self.left[(i, j)] * self.singulars[j]);
        us.matmul(&self.right.adjoint()).expect("thin factors are conformable")
    }
}

pub fn svd(a: &ComplexMatrix) -> Result<SingularDecomposition> {
    if a.is_empty() {
        return Err(Error::contract("svd", "empty matrix"));
    }
    if a.rows() >= a.cols() {
        tall_svd(a)
    } else {
        let t = tall_svd(&a.adjoint())?;
        Ok(SingularDecomposition {
            left: t.right,
            singulars: t.singulars,
            right: t.left,
        })
    }
}

fn tall_svd(a: &ComplexMatrix) -> Result<SingularDecomposition> {
    let (m, n) = a.shape();
    let mut w: Vec<Vec<Complex64>> = (0..n).map(|j| a.column(j)).collect();
    let mut v: Vec<Vec<Complex64>> = (0..n)
        .map(|j| {
            let mut c = vec![Complex64::new(0.0, 0.0); n];
            c[j] = Complex64::new(1.0, 0.0);
            c
        })
        .collect();

    let tol = f64::EPSILON * (m as f64).sqrt().max(1.0);
    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..n {
            for j in i + 1..n {
                let alpha = norm_sqr(&w[i]);
                let beta = norm_sqr(&w[j]);
                let gamma = dot(&w[i], &w[j]);
                let g = gamma.norm();
                if g == 0.0 || g <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let ph = (gamma / g).conj();
                rotate_pair(&mut w, i, j, c, s, ph);
                rotate_pair(&mut v, i, j, c, s, ph);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::contract("svd", "Jacobi sweeps did not converge"));
    }

    let norms: Vec<f64> = w.iter().map(|c| norm_sqr(c).sqrt()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]).then(i.cmp(&j)));

    let scale = norms.iter().cloned().fold(0.0, f64::max);
    let mut left_cols: Vec<Vec<Complex64>> = Vec::with_capacity(n);
    let mut singulars = Vec::with_capacity(n);
    for &j in &order {
        let s = norms[j];
        if s > scale * 1e-14 && s > 0.0 {
            left_cols.push(w[j].iter().map(|z| z / s).collect());
            singulars.push(s);
        } else {
            left_cols.push(orthonormal_complement(&left_cols, m));
            singulars.push(0.0);
        }
    }
    let right_cols: Vec<Vec<Complex64>> = order.iter().map(|&j| v[j].clone()).collect();
    Ok(SingularDecomposition {
        left: ComplexMatrix::from_columns(&left_cols)?,
        singulars,
        right: ComplexMatrix::from_columns(&right_cols)?,
    })
}

fn rotate_pair(cols: &mut [Vec<Complex64>], i: usize, j: usize, c: f64, s: f64, ph: Complex64) {
    let (lo, hi) = cols.split_at_mut(j);
    for (a, b) in lo[i].iter_mut().zip(hi[0].iter_mut()) {
        let bp = *b * ph;
        let ai = *a;
        *a = ai * c - bp * s;
        *b = ai * s + bp * c;
    }
}

/// A unit vector orthogonal to every column in `basis`.
fn orthonormal_complement(basis: &[Vec<Complex64>], m: usize) -> Vec<Complex64> {
    let mut best: Option<(f64, Vec<Complex64>)> = None;
    for e in 0..m {
        let mut x = vec![Complex64::new(0.0, 0.0); m];
        x[e] = Complex64::new(1.0, 0.0);
        for _ in 0..2 {
            for b in basis {
                let p = dot(b, &x);
                for (xi, bi) in x.iter_mut().zip(b) {
                    *xi -= bi * p;
                }
            }
        }
        let nrm = norm_sqr(&x).sqrt();
        if best.as_ref().map_or(true, |(bn, _)| nrm > *bn) {
            best = Some((nrm, x));
        }
        if nrm > 0.5 {
            break;
        }
    }
    let (nrm, x) = best.expect("m > basis.len()");
    x.into_iter().map(|z| z / nrm).collect()
}

/// Minimum-norm right inverse of a row vector: `x = conj(v) / |v|^2`.
pub fn row_pinv(v: &[Complex64]) -> Result<Vec<Complex64>> {
    let n2 = norm_sqr(v);
    if !(n2 > 0.0) {
        return Err(Error::contract("row_pinv", "zero row vector"));
    }
    Ok(v.iter().map(|z| z.conj() / n2).collect())
}
