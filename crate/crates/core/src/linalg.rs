//! Small dense complex matrices.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{FinslerError, Result};

pub type CMat = DMatrix<Complex64>;

/// Largest condition number accepted before a point is called degenerate.
pub const CONDITION_LIMIT: f64 = 1e8;

pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()).scale(0.5)
}

/// Eigenvalues of the Hermitian part, ascending.
pub fn eigenvalues(m: &CMat) -> Vec<f64> {
    let mut e: Vec<f64> = hermitian_part(m).symmetric_eigenvalues().iter().copied().collect();
    e.sort_by(f64::total_cmp);
    e
}

pub fn condition_number(m: &CMat) -> f64 {
    let e = eigenvalues(m);
    let hi = e.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let lo = e.iter().fold(f64::INFINITY, |a, x| a.min(x.abs()));
    if lo == 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// Inverse of a Hermitian positive-definite matrix through its Cholesky
/// factor. Fails with the smallest eigenvalue when the matrix is not
/// positive-definite, and with `Degenerate` when it is too ill-conditioned.
pub fn inverse_pd(m: &CMat) -> Result<CMat> {
    let h = hermitian_part(m);
    let e = eigenvalues(&h);
    let lo = e.first().copied().unwrap_or(f64::NAN);
    let hi = e.last().copied().unwrap_or(f64::NAN);
    if !(lo > 0.0) {
        return Err(FinslerError::NotStronglyPseudoconvex {
            min_eigenvalue: lo,
            v: Vec::new(),
        });
    }
    let cond = hi / lo;
    if cond > CONDITION_LIMIT {
        return Err(FinslerError::Degenerate {
            condition: cond,
            limit: CONDITION_LIMIT,
        });
    }
    h.cholesky().map(|ch| ch.inverse()).ok_or(FinslerError::SingularLeviForm)
}

/// General inverse (LU); `SingularLeviForm` when it does not exist.
pub fn inverse(m: &CMat) -> Result<CMat> {
    m.clone().try_inverse().ok_or(FinslerError::SingularLeviForm)
}

pub fn det(m: &CMat) -> Complex64 {
    m.determinant()
}

pub fn from_rows(rows: &[Vec<Complex64>]) -> CMat {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    DMatrix::from_fn(n, m, |i, j| rows[i][j])
}

/// Largest entry modulus.
pub fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0f64, |a, x| a.max(x.norm()))
}
