//! Small dense linear-algebra helpers shared by the estimators.
//!
//! Data matrices are stored with one row per time period.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Relative tolerance used to declare a regressor matrix rank deficient.
const RANK_TOL: f64 = 1e-10;

/// `a' b / n` for row-per-observation matrices.
pub(crate) fn moment(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows() as f64;
    a.transpose() * b / n
}

/// Least-squares fit of every column of `y` on the columns of `x`.
///
/// Returns `(coefficients, residuals)` with coefficients shaped `ncols(x) × ncols(y)`.
/// An `x` with no columns leaves `y` untouched.
pub(crate) fn ols(y: &DMatrix<f64>, x: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if x.ncols() == 0 {
        return Ok((DMatrix::zeros(0, y.ncols()), y.clone()));
    }
    if x.nrows() < x.ncols() {
        return Err(Error::NumericalRank(format!(
            "{} regressors but only {} observations",
            x.ncols(),
            x.nrows()
        )));
    }
    let qr = x.clone().qr();
    let r = qr.r();
    let scale = x.column_iter().map(|c| c.norm()).fold(0.0_f64, f64::max).max(1e-300);
    for i in 0..r.nrows().min(r.ncols()) {
        if r[(i, i)].abs() <= RANK_TOL * scale {
            return Err(Error::NumericalRank(format!(
                "regressor cross-product is singular (column {i} is collinear with earlier columns)"
            )));
        }
    }
    let qty = qr.q().transpose() * y;
    let coef = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| Error::NumericalRank("triangular solve failed".into()))?;
    let resid = y - x * &coef;
    Ok((coef, resid))
}

/// Solves `a v = λ b v` for symmetric `a` and symmetric positive definite `b`.
///
/// Eigenvalues are returned in descending order and eigenvectors (columns) are
/// normalised so that `v' b v = I`.
pub(crate) fn generalized_symmetric_eigen(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let chol = b
        .clone()
        .cholesky()
        .ok_or_else(|| Error::NumericalRank("moment matrix is not positive definite".into()))?;
    let l = chol.l();
    let linv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::NumericalRank("Cholesky factor is singular".into()))?;
    let mut m = &linv * a * linv.transpose();
    m = (&m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = DMatrix::from_columns(
        &order
            .iter()
            .map(|&i| eig.eigenvectors.column(i).into_owned())
            .collect::<Vec<_>>(),
    );
    Ok((values, linv.transpose() * vecs))
}

/// Log-determinant of a symmetric positive definite matrix.
pub(crate) fn log_det_spd(m: &DMatrix<f64>) -> Result<f64> {
    let chol = m
        .clone()
        .cholesky()
        .ok_or_else(|| Error::NumericalRank("covariance matrix is not positive definite".into()))?;
    let l = chol.l();
    let scale = m.diagonal().max();
    let pivot = l.diagonal().iter().fold(f64::INFINITY, |a, d| a.min(d * d));
    if !(pivot > RANK_TOL * scale) {
        return Err(Error::NumericalRank(format!(
            "covariance matrix is numerically singular (pivot {pivot:e})"
        )));
    }
    Ok(2.0 * l.diagonal().iter().map(|d| d.ln()).sum::<f64>())
}

/// Inverse of a symmetric positive definite matrix.
pub(crate) fn inverse_spd(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    m.clone()
        .cholesky()
        .map(|c| c.inverse())
        .ok_or_else(|| Error::NumericalRank("matrix is not positive definite".into()))
}

/// Column means.
pub(crate) fn column_means(m: &DMatrix<f64>) -> DVector<f64> {
    let n = m.nrows() as f64;
    DVector::from_iterator(m.ncols(), m.column_iter().map(|c| c.sum() / n))
}
