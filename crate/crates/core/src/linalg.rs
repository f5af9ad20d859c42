//! Small dense complex linear-algebra helpers shared by the closed forms.
//!
//! Every determinant in this crate is of a Hermitian positive-definite
//! matrix (typically `I + PSD`), so log-determinants go through Cholesky.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use num_complex::Complex64;

use crate::error::{Result, SteepError};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Below this magnitude a capacity is treated as round-off and clamped to zero.
pub const CAPACITY_ROUNDOFF: f64 = 1e-9;

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn real_diag(values: &DVector<f64>) -> CMatrix {
    CMatrix::from_diagonal(&values.map(|v| Complex64::new(v, 0.0)))
}

pub fn gram(h: &CMatrix) -> CMatrix {
    h.adjoint() * h
}

pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

pub fn is_hermitian(m: &CMatrix, tol: f64) -> bool {
    m.is_square() && (m - m.adjoint()).iter().all(|z| z.norm() <= tol)
}

pub fn all_finite(m: &CMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Cholesky factor of the Hermitian part of `m`, rejecting matrices that
/// are not numerically positive definite. The complex factorisation in
/// nalgebra happily takes square roots of negative pivots, so every pivot
/// is checked to be real and positive.
pub fn hpd_cholesky(m: &CMatrix, context: &str) -> Result<Cholesky<Complex64, Dyn>> {
    let fail = || SteepError::NotPositiveDefinite(format!("{context} ({}x{})", m.nrows(), m.ncols()));
    if !m.is_square() || !all_finite(m) {
        return Err(fail());
    }
    let chol = hermitian_part(m).cholesky().ok_or_else(fail)?;
    let l = chol.l_dirty();
    for i in 0..m.nrows() {
        let d = l[(i, i)];
        if !(d.re > 0.0 && d.re.is_finite()) || d.im.abs() > 1e-8 * d.re {
            return Err(fail());
        }
    }
    Ok(chol)
}

/// `log2 |M|` for Hermitian positive-definite `M`.
pub fn log2det_hpd(m: &CMatrix) -> Result<f64> {
    let chol = hpd_cholesky(m, "log-det")?;
    let l = chol.l_dirty();
    Ok((0..m.nrows()).map(|i| 2.0 * l[(i, i)].re.log2()).sum())
}

/// Sorted (ascending) eigenvalues and matching eigenvectors of a Hermitian matrix.
pub fn hermitian_eigen(m: &CMatrix) -> (DVector<f64>, CMatrix) {
    let eig = hermitian_part(m).symmetric_eigen();
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = CMatrix::zeros(m.nrows(), n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

pub fn min_eigenvalue(m: &CMatrix) -> f64 {
    hermitian_eigen(m).0.min()
}

/// A factor `F` with `X = F F^H` for Hermitian PSD `X`; tiny negative
/// eigenvalues from round-off are clamped to zero.
pub fn psd_factor(x: &CMatrix) -> CMatrix {
    let (values, mut vectors) = hermitian_eigen(x);
    for (j, v) in values.iter().enumerate() {
        vectors.column_mut(j).scale_mut(v.max(0.0).sqrt());
    }
    vectors
}

/// `log2 |I + G X|` for Hermitian PSD `G` and `X`, evaluated as the
/// Hermitian `log2 |I + F^H G F|` with `X = F F^H`.
pub fn log2det_i_plus_gx(g: &CMatrix, x: &CMatrix) -> Result<f64> {
    let f = psd_factor(x);
    let n = f.ncols();
    log2det_hpd(&(identity(n) + f.adjoint() * g * &f))
}

/// Solves `M Z = B` for Hermitian positive-definite `M`.
pub fn solve_hpd(m: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    let chol = hpd_cholesky(m, "solve")?;
    Ok(chol.solve(b))
}

pub fn inverse_hpd(m: &CMatrix) -> Result<CMatrix> {
    solve_hpd(m, &identity(m.nrows()))
}

/// `v^H M^{-1} v` for Hermitian positive-definite `M`.
pub fn inverse_quadratic_form(m: &CMatrix, v: &CVector) -> Result<f64> {
    let chol = hpd_cholesky(m, "quadratic form")?;
    let z = chol.solve(v);
    Ok(v.dotc(&z).re)
}

/// Clamps a capacity that should be nonnegative; fails if the value is
/// negative beyond round-off.
pub fn clamp_capacity(value: f64, context: &'static str) -> Result<f64> {
    if value >= 0.0 {
        Ok(value)
    } else if value > -CAPACITY_ROUNDOFF {
        Ok(0.0)
    } else {
        Err(SteepError::NegativeCapacity { context, value })
    }
}

pub fn positive_part(x: f64) -> f64 {
    x.max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn log2det_matches_closed_form_2x2() {
        let m = CMatrix::from_row_slice(2, 2, &[c(3.0, 0.0), c(1.0, 1.0), c(1.0, -1.0), c(2.0, 0.0)]);
        // det = 6 - |1+i|^2 = 4
        assert!((log2det_hpd(&m).unwrap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn log2det_rejects_indefinite() {
        let m = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(2.0, 0.0), c(2.0, 0.0), c(1.0, 0.0)]);
        assert!(matches!(log2det_hpd(&m), Err(SteepError::NotPositiveDefinite(_))));
    }

    #[test]
    fn psd_factor_reconstructs() {
        let a = CMatrix::from_row_slice(2, 3, &[c(1.0, 0.5), c(0.0, -1.0), c(2.0, 0.0), c(0.3, 0.0), c(1.0, 1.0), c(-0.5, 0.2)]);
        let x = a.adjoint() * &a;
        let f = psd_factor(&x);
        assert!((&f * f.adjoint() - &x).norm() < 1e-12);
    }

    #[test]
    fn sylvester_shuffle_agrees_with_lu() {
        let g = CMatrix::from_row_slice(2, 2, &[c(2.0, 0.0), c(0.5, 0.5), c(0.5, -0.5), c(1.0, 0.0)]);
        let x = CMatrix::from_row_slice(2, 2, &[c(0.7, 0.0), c(0.1, -0.2), c(0.1, 0.2), c(0.4, 0.0)]);
        let lu = (identity(2) + &g * &x).determinant();
        assert!(lu.im.abs() < 1e-12);
        assert!((log2det_i_plus_gx(&g, &x).unwrap() - lu.re.log2()).abs() < 1e-12);
    }

    #[test]
    fn clamp_capacity_behaviour() {
        assert_eq!(clamp_capacity(-1e-12, "t").unwrap(), 0.0);
        assert_eq!(clamp_capacity(0.25, "t").unwrap(), 0.25);
        assert!(clamp_capacity(-1e-6, "t").is_err());
    }
}
