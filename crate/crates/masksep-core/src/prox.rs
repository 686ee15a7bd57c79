//! Proximal operators of the two regularizers in the separation program.

use crate::error::{invalid, Result};
use crate::math;
use crate::matrix::Matrix;
use crate::svd::{reduced_svd, SvdFactors, DEFAULT_RANK_TOL};
use alloc::vec::Vec;

/// Entrywise shrinkage `sign(a) * max(|a| - tau, 0)`:
/// the proximal operator of `tau * ||.||_1`.
pub fn soft_threshold(a: &Matrix, tau: f64) -> Result<Matrix> {
    if tau < 0.0 || tau.is_nan() {
        return Err(invalid("soft_threshold requires tau >= 0"));
    }
    Ok(a.map(|v| math::sign(v) * (math::abs(v) - tau).max(0.0)))
}

/// Singular value thresholding `U max(Sigma - tau, 0) V^T`:
/// the proximal operator of `tau * ||.||_*`.
pub fn singular_value_threshold(a: &Matrix, tau: f64) -> Result<Matrix> {
    Ok(svt_with_factors(a, tau)?.0)
}

/// SVT that also returns the surviving factors and thresholded values,
/// so the solver gets the nuclear norm of the result for free.
pub(crate) fn svt_with_factors(a: &Matrix, tau: f64) -> Result<(Matrix, SvdFactors)> {
    if tau < 0.0 || tau.is_nan() {
        return Err(invalid("singular_value_threshold requires tau >= 0"));
    }
    let factors = reduced_svd(a, DEFAULT_RANK_TOL)?;
    let kept: Vec<f64> = factors
        .singular_values
        .iter()
        .map(|&s| s - tau)
        .take_while(|&s| s > 0.0)
        .collect();
    let k = kept.len();
    let mut u = Matrix::zeros(a.rows(), k);
    let mut v = Matrix::zeros(a.cols(), k);
    for j in 0..k {
        for i in 0..a.rows() {
            u[(i, j)] = factors.u[(i, j)];
        }
        for i in 0..a.cols() {
            v[(i, j)] = factors.v[(i, j)];
        }
    }
    let out = SvdFactors {
        u,
        singular_values: kept,
        v,
    };
    Ok((out.reconstruct(), out))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn soft_threshold_scalar_cases() {
        let a = Matrix::from_rows(&[&[5.0, -1.0]]).unwrap();
        let out = soft_threshold(&a, 2.0).unwrap();
        assert_eq!(out.row(0), &[3.0, 0.0]);
    }

    #[test]
    fn soft_threshold_tau_zero_is_identity() {
        let a = Matrix::from_rows(&[&[1.5, -2.5], &[0.0, 3.0]]).unwrap();
        assert_eq!(soft_threshold(&a, 0.0).unwrap(), a);
    }

    #[test]
    fn negative_tau_rejected() {
        let a = Matrix::zeros(1, 1);
        assert!(soft_threshold(&a, -1.0).is_err());
        assert!(singular_value_threshold(&a, -0.5).is_err());
    }

    #[test]
    fn svt_on_diagonal() {
        let a = Matrix::diag(&[3.0, 1.0]);
        let out = singular_value_threshold(&a, 2.0).unwrap();
        assert!(out.sub(&Matrix::diag(&[1.0, 0.0])).max_abs() < 1e-12);
    }

    #[test]
    fn svt_tau_zero_reproduces_input() {
        let a = Matrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0], &[5.0, 6.0]]).unwrap();
        let out = singular_value_threshold(&a, 0.0).unwrap();
        assert!(out.sub(&a).max_abs() < 1e-10);
    }
}
