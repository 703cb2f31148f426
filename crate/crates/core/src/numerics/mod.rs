//! Dense complex linear algebra used by the estimators.

mod evd;
mod matrix;
mod svd;

#[cfg(test)]
pub(crate) mod testutil;

pub use evd::{hermitian_evd, EigenDecomposition};
pub use matrix::{dot, norm_sqr, ComplexMatrix};
pub use svd::{row_pinv, svd, SingularDecomposition};

/// Orthogonal projector distance `|P_a - P_b|_F` between the column spans of
/// two matrices with orthonormal columns.
pub fn projector_distance(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    let pa = a.matmul(&a.adjoint()).expect("square product");
    let pb = b.matmul(&b.adjoint()).expect("square product");
    pa.sub(&pb).map(|d| d.frobenius_norm()).unwrap_or(f64::INFINITY)
}
