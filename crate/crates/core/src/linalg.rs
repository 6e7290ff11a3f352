//! Small dense linear-algebra helpers shared by the models and metrics.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use crate::data::{Dataset, Samples};
use crate::error::{Error, Result};

/// Eigenvalues below `-PSD_TOL` are treated as a genuine PSD violation;
/// anything in `[-PSD_TOL, 0)` is rounding noise and clamped to zero.
pub const PSD_TOL: f64 = 1e-10;

/// Condition-number estimate above which solves get a diagonal jitter.
pub const MAX_CONDITION: f64 = 1e12;
pub const JITTER: f64 = 1e-8;

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

pub fn is_symmetric(m: &DMatrix<f64>, tol: f64) -> bool {
    if !m.is_square() {
        return false;
    }
    let n = m.nrows();
    (0..n).all(|i| (0..i).all(|j| (m[(i, j)] - m[(j, i)]).abs() <= tol))
}

/// Eigendecomposition of a symmetric PSD matrix with small negative
/// eigenvalues clamped to zero. Fails if any eigenvalue is below `-PSD_TOL`.
pub fn psd_eigen(m: &DMatrix<f64>, what: &'static str) -> Result<SymmetricEigen<f64, Dyn>> {
    if !m.is_square() {
        return Err(Error::input(what, "matrix is not square"));
    }
    let mut eig = SymmetricEigen::new(symmetrize(m));
    for v in eig.eigenvalues.iter_mut() {
        if *v < -PSD_TOL {
            return Err(Error::input(
                what,
                format!("matrix is not positive semi-definite (eigenvalue {v:e})"),
            ));
        }
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    Ok(eig)
}

/// Principal square root of a symmetric PSD matrix.
pub fn psd_sqrt(m: &DMatrix<f64>, what: &'static str) -> Result<DMatrix<f64>> {
    let eig = psd_eigen(m, what)?;
    let roots = eig.eigenvalues.map(f64::sqrt);
    Ok(&eig.eigenvectors * DMatrix::from_diagonal(&roots) * eig.eigenvectors.transpose())
}

pub fn trace_sqrt_psd(m: &DMatrix<f64>, what: &'static str) -> Result<f64> {
    Ok(psd_eigen(m, what)?.eigenvalues.iter().map(|v| v.sqrt()).sum())
}

/// Cholesky factorization of an SPD system matrix. When the factorization
/// fails or the diagonal of the factor indicates a condition number above
/// [`MAX_CONDITION`], a jitter of `JITTER * mean(diag)` is added and a
/// warning logged.
pub fn robust_cholesky(m: &DMatrix<f64>, context: &str) -> Result<Cholesky<f64, Dyn>> {
    if let Some(chol) = Cholesky::new(m.clone()) {
        if cholesky_condition(&chol) <= MAX_CONDITION {
            return Ok(chol);
        }
    }
    let scale = (m.trace() / m.nrows().max(1) as f64).abs().max(1.0);
    log::warn!("{context}: ill-conditioned system, adding jitter {:e}", JITTER * scale);
    let mut jittered = m.clone();
    for i in 0..m.nrows() {
        jittered[(i, i)] += JITTER * scale;
    }
    Cholesky::new(jittered)
        .ok_or_else(|| Error::Numerical(format!("{context}: system not positive definite after jitter")))
}

/// Lower-bound estimate of the 2-norm condition number from the Cholesky diagonal.
fn cholesky_condition(chol: &Cholesky<f64, Dyn>) -> f64 {
    let l = chol.l_dirty();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for i in 0..l.nrows() {
        let d = l[(i, i)].abs();
        lo = lo.min(d);
        hi = hi.max(d);
    }
    if lo == 0.0 {
        f64::INFINITY
    } else {
        (hi / lo).powi(2)
    }
}

/// Empirical mean and covariance (divisor `K - 1`) of a set of vectors.
/// A single member yields a zero covariance.
pub fn mean_and_cov(members: &[DVector<f64>]) -> (DVector<f64>, DMatrix<f64>) {
    assert!(!members.is_empty(), "mean_and_cov needs at least one member");
    let d = members[0].len();
    let k = members.len();
    // Shifted by the first member so identical members give an exact mean.
    let origin = &members[0];
    let mut shift = DVector::zeros(d);
    for m in members {
        shift += m - origin;
    }
    let mean = origin + shift / k as f64;
    let mut cov = DMatrix::zeros(d, d);
    if k > 1 {
        let mut centered = DMatrix::zeros(d, k);
        for (j, m) in members.iter().enumerate() {
            centered.set_column(j, &(m - &mean));
        }
        cov = &centered * centered.transpose() / (k - 1) as f64;
        cov = symmetrize(&cov);
    }
    (mean, cov)
}

/// Up to `count` orthonormal directions orthogonal to the span of the centered rows of `data`.
pub fn null_directions(data: &Samples, count: usize) -> Vec<DVector<f64>> {
    let d = data.dim();
    let n = data.len();
    let mut mean = DVector::zeros(d);
    for row in data.rows() {
        for (m, &x) in mean.iter_mut().zip(row) {
            *m += x;
        }
    }
    if n > 0 {
        mean /= n as f64;
    }
    let scale = data.as_slice().iter().fold(1.0f64, |a, x| a.max(x.abs()));
    // Orthonormal basis of the data span, then its complement, both by
    // twice-applied Gram-Schmidt.
    let mut basis: Vec<DVector<f64>> = Vec::new();
    for row in data.rows() {
        let v = DVector::from_column_slice(row) - &mean;
        if let Some(u) = orthonormalize(v, &basis, 1e-9 * scale) {
            basis.push(u);
        }
    }
    let span = basis.len();
    for i in 0..d {
        if basis.len() - span >= count {
            break;
        }
        let e = DVector::from_fn(d, |r, _| if r == i { 1.0 } else { 0.0 });
        if let Some(u) = orthonormalize(e, &basis, 1e-6) {
            basis.push(u);
        }
    }
    basis.split_off(span)
}

fn orthonormalize(mut v: DVector<f64>, basis: &[DVector<f64>], tol: f64) -> Option<DVector<f64>> {
    let norm0 = v.norm();
    for _ in 0..2 {
        for b in basis {
            let c = b.dot(&v);
            v.axpy(-c, b, 1.0);
        }
    }
    let norm = v.norm();
    (norm > tol && norm > 1e-8 * norm0).then(|| v / norm)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrt_of_diagonal() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 9.0]));
        let r = psd_sqrt(&m, "m").unwrap();
        assert!((r[(0, 0)] - 2.0).abs() < 1e-12);
        assert!((r[(1, 1)] - 3.0).abs() < 1e-12);
        assert!(r[(0, 1)].abs() < 1e-12);
    }

    #[test]
    fn sqrt_squares_back() {
        let a = DMatrix::from_row_slice(3, 3, &[2.0, 0.5, 0.1, 0.5, 1.0, 0.2, 0.1, 0.2, 0.7]);
        let r = psd_sqrt(&a, "a").unwrap();
        assert!((&r * &r - &a).abs().max() < 1e-12);
    }

    #[test]
    fn negative_definite_rejected() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -1e-3]));
        assert!(psd_eigen(&m, "m").is_err());
        let tiny = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -1e-12]));
        assert_eq!(psd_eigen(&tiny, "m").unwrap().eigenvalues.min(), 0.0);
    }

    #[test]
    fn singular_system_gets_jitter() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(robust_cholesky(&m, "test").is_ok());
    }

    #[test]
    fn single_member_has_zero_cov() {
        let (mean, cov) = mean_and_cov(&[DVector::from_vec(vec![1.0, 2.0])]);
        assert_eq!(mean[1], 2.0);
        assert_eq!(cov.abs().max(), 0.0);
    }

    #[test]
    fn null_directions_are_orthogonal_to_data() {
        let data = Samples::from_rows(4, &[[1.0, 0.0, 2.0, 0.0], [0.0, 1.0, 2.0, 0.0], [1.0, 1.0, 2.0, 0.0]]);
        let dirs = null_directions(&data, 10);
        assert_eq!(dirs.len(), 2);
        for v in &dirs {
            assert!((v.norm() - 1.0).abs() < 1e-12);
            let diff = DVector::from_column_slice(data.row(0)) - DVector::from_column_slice(data.row(1));
            assert!(v.dot(&diff).abs() < 1e-12);
        }
    }
}
