//! Reduced singular value decomposition by one-sided Jacobi rotations.
//!
//! One-sided Jacobi orthogonalizes the columns of the working matrix with
//! Givens rotations accumulated into V; column norms of the converged
//! working matrix are the singular values. It is slower than bidiagonal QR
//! but converges to high relative accuracy, which the certificate and
//! projection machinery rely on.

use crate::error::{invalid, Error, Result};
use crate::math;
use crate::matrix::Matrix;
use alloc::vec;
use alloc::vec::Vec;

/// Relative cutoff under which singular values are treated as rank noise.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

const ROTATION_TOL: f64 = 1e-15;
const MAX_SWEEPS: usize = 64;
// squared-norm ratio under which a working column is flushed to zero
const COLUMN_FLOOR_RATIO: f64 = 1e-280;

/// Reduced SVD `A = U diag(sigma) V^T` with `k` retained singular triplets.
#[derive(Debug, Clone)]
pub struct SvdFactors {
    /// m x k, orthonormal columns.
    pub u: Matrix,
    /// Nonincreasing, strictly above the rank cutoff used at construction.
    pub singular_values: Vec<f64>,
    /// n x k, orthonormal columns.
    pub v: Matrix,
}

impl SvdFactors {
    /// Rank-0 factors for an m x n matrix.
    pub fn empty(m: usize, n: usize) -> Self {
        Self {
            u: Matrix::zeros(m, 0),
            singular_values: Vec::new(),
            v: Matrix::zeros(n, 0),
        }
    }

    pub fn rank(&self) -> usize {
        self.singular_values.len()
    }

    /// U diag(sigma) V^T.
    pub fn reconstruct(&self) -> Matrix {
        let mut us = self.u.clone();
        for j in 0..self.rank() {
            let s = self.singular_values[j];
            for i in 0..us.rows() {
                us[(i, j)] *= s;
            }
        }
        us.a_mul_bt(&self.v)
    }

    /// max deviation of U^T U and V^T V from the identity.
    pub fn orthonormality_defect(&self) -> f64 {
        let k = self.rank();
        let eye = Matrix::identity(k);
        let du = self.u.at_mul_b(&self.u).sub(&eye).max_abs();
        let dv = self.v.at_mul_b(&self.v).sub(&eye).max_abs();
        du.max(dv)
    }
}

/// Column-major working buffer for the rotation sweeps.
struct Cols {
    m: usize,
    n: usize,
    data: Vec<f64>,
}

impl Cols {
    fn from_matrix(a: &Matrix) -> Self {
        let (m, n) = a.shape();
        let mut data = vec![0.0; m * n];
        for i in 0..m {
            for j in 0..n {
                data[j * m + i] = a[(i, j)];
            }
        }
        Self { m, n, data }
    }

    fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for j in 0..n {
            data[j * n + j] = 1.0;
        }
        Self { m: n, n, data }
    }

    #[inline]
    fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.m..(j + 1) * self.m]
    }

    #[inline]
    fn zero_col(&mut self, j: usize) {
        for v in self.data[j * self.m..(j + 1) * self.m].iter_mut() {
            *v = 0.0;
        }
    }

    /// Apply the rotation [c -s; s c] to columns (i, j).
    #[inline]
    fn rotate(&mut self, i: usize, j: usize, c: f64, s: f64) {
        let (lo, hi) = if i < j { (i, j) } else { (j, i) };
        let (head, tail) = self.data.split_at_mut(hi * self.m);
        let ci = &mut head[lo * self.m..(lo + 1) * self.m];
        let cj = &mut tail[..self.m];
        if lo == i {
            for (a, b) in ci.iter_mut().zip(cj.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = c * x - s * y;
                *b = s * x + c * y;
            }
        } else {
            for (b, a) in ci.iter_mut().zip(cj.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = c * x - s * y;
                *b = s * x + c * y;
            }
        }
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b.iter()).map(|(&x, &y)| x * y).sum()
}

/// Orthogonalize the columns of `work`, mirroring rotations into `v`.
fn jacobi_sweeps(work: &mut Cols, mut v: Option<&mut Cols>) -> Result<()> {
    let n = work.n;
    let scale = (0..n)
        .map(|j| dot(work.col(j), work.col(j)))
        .fold(0.0f64, f64::max);
    // A column of an exactly rank-deficient matrix decays quadratically per
    // sweep and bottoms out as denormal noise that never passes the
    // orthogonality test; flush such columns to exact zero.
    let floor = scale * COLUMN_FLOOR_RATIO;
    for _sweep in 0..MAX_SWEEPS {
        for j in 0..n {
            if dot(work.col(j), work.col(j)) <= floor {
                work.zero_col(j);
            }
        }
        let mut rotated = false;
        for i in 0..n.saturating_sub(1) {
            for j in (i + 1)..n {
                let alpha = dot(work.col(i), work.col(i));
                let beta = dot(work.col(j), work.col(j));
                let gamma = dot(work.col(i), work.col(j));
                if math::abs(gamma) <= ROTATION_TOL * math::sqrt(alpha * beta) {
                    continue;
                }
                let zeta = (beta - alpha) / (2.0 * gamma);
                let sign_z = if zeta >= 0.0 { 1.0 } else { -1.0 };
                let t = sign_z / (math::abs(zeta) + math::sqrt(1.0 + zeta * zeta));
                let c = 1.0 / math::sqrt(1.0 + t * t);
                let s = c * t;
                work.rotate(i, j, c, s);
                if let Some(vm) = v.as_deref_mut() {
                    vm.rotate(i, j, c, s);
                }
                rotated = true;
            }
        }
        if !rotated {
            return Ok(());
        }
    }
    Err(Error::SvdNoConvergence { sweeps: MAX_SWEEPS })
}

struct RawSvd {
    /// Orthogonal columns scaled by the singular values (m x n).
    scaled: Cols,
    /// Accumulated right factor (n x n), None when values-only.
    v: Option<Cols>,
    /// Column norms, sorted nonincreasing.
    values: Vec<f64>,
    /// Column permutation applied by the sort.
    order: Vec<usize>,
}

fn jacobi_svd(a: &Matrix, want_v: bool) -> Result<RawSvd> {
    let mut work = Cols::from_matrix(a);
    let mut v = want_v.then(|| Cols::identity(a.cols()));
    jacobi_sweeps(&mut work, v.as_mut())?;

    let mut order: Vec<usize> = (0..a.cols()).collect();
    let norms: Vec<f64> = (0..a.cols())
        .map(|j| math::sqrt(dot(work.col(j), work.col(j))))
        .collect();
    order.sort_by(|&x, &y| {
        norms[y]
            .partial_cmp(&norms[x])
            .unwrap_or(core::cmp::Ordering::Equal)
    });
    let values = order.iter().map(|&j| norms[j]).collect();
    Ok(RawSvd {
        scaled: work,
        v,
        values,
        order,
    })
}

/// Reduced SVD of `A`; singular values below `rank_tol * sigma_max` are
/// dropped together with their vectors.
pub fn reduced_svd(a: &Matrix, rank_tol: f64) -> Result<SvdFactors> {
    a.check_finite()?;
    if rank_tol < 0.0 {
        return Err(invalid("rank_tol must be nonnegative"));
    }
    if a.rows() == 0 || a.cols() == 0 {
        return Ok(SvdFactors::empty(a.rows(), a.cols()));
    }
    // One-sided Jacobi wants at least as many rows as columns.
    if a.rows() < a.cols() {
        let flipped = reduced_svd(&a.transpose(), rank_tol)?;
        return Ok(SvdFactors {
            u: flipped.v,
            singular_values: flipped.singular_values,
            v: flipped.u,
        });
    }

    let raw = jacobi_svd(a, true)?;
    let sigma_max = raw.values.first().copied().unwrap_or(0.0);
    let cutoff = rank_tol * sigma_max;
    let k = raw
        .values
        .iter()
        .take_while(|&&s| s > cutoff && s > 0.0)
        .count();

    let mut u = Matrix::zeros(a.rows(), k);
    let mut vm = Matrix::zeros(a.cols(), k);
    let v = raw.v.as_ref().expect("v accumulated");
    for (out_j, &src_j) in raw.order.iter().take(k).enumerate() {
        let s = raw.values[out_j];
        for (i, &w) in raw.scaled.col(src_j).iter().enumerate() {
            u[(i, out_j)] = w / s;
        }
        for (i, &w) in v.col(src_j).iter().enumerate() {
            vm[(i, out_j)] = w;
        }
    }
    Ok(SvdFactors {
        u,
        singular_values: raw.values[..k].to_vec(),
        v: vm,
    })
}

/// All singular values of `A`, nonincreasing, without accumulating factors.
pub fn singular_values(a: &Matrix) -> Result<Vec<f64>> {
    a.check_finite()?;
    if a.rows() == 0 || a.cols() == 0 {
        return Ok(Vec::new());
    }
    if a.rows() < a.cols() {
        return singular_values(&a.transpose());
    }
    Ok(jacobi_svd(a, false)?.values)
}

/// Largest singular value; 0 for empty matrices.
pub fn spectral_norm(a: &Matrix) -> Result<f64> {
    Ok(singular_values(a)?.first().copied().unwrap_or(0.0))
}

/// Moore-Penrose pseudoinverse through the reduced SVD.
pub fn pseudoinverse(h: &Matrix, rank_tol: f64) -> Result<Matrix> {
    let factors = reduced_svd(h, rank_tol)?;
    // H^+ = V diag(1/sigma) U^T
    let mut v_scaled = factors.v.clone();
    for j in 0..factors.rank() {
        let inv = 1.0 / factors.singular_values[j];
        for i in 0..v_scaled.rows() {
            v_scaled[(i, j)] *= inv;
        }
    }
    Ok(v_scaled.a_mul_bt(&factors.u))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> Matrix {
        let mut rng = SeededRng::new(seed);
        let mut a = Matrix::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                a[(i, j)] = rng.normal();
            }
        }
        a
    }

    #[test]
    fn diagonal_with_zero_drops_rank() {
        let a = Matrix::diag(&[3.0, 0.0]);
        let f = reduced_svd(&a, 1e-12).unwrap();
        assert_eq!(f.rank(), 1);
        assert!((f.singular_values[0] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn identity_has_unit_values() {
        let f = reduced_svd(&Matrix::identity(3), DEFAULT_RANK_TOL).unwrap();
        assert_eq!(f.rank(), 3);
        for s in &f.singular_values {
            assert!((s - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn reconstruction_matches_input() {
        let a = random_matrix(5, 4, 11);
        let f = reduced_svd(&a, DEFAULT_RANK_TOL).unwrap();
        let err = f.reconstruct().sub(&a).max_abs();
        assert!(err <= 1e-8, "reconstruction error {err}");
        assert!(f.orthonormality_defect() < 1e-10);
    }

    #[test]
    fn wide_matrix_via_transpose() {
        let a = random_matrix(4, 7, 3);
        let f = reduced_svd(&a, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(f.u.shape(), (4, 4));
        assert_eq!(f.v.shape(), (7, 4));
        assert!(f.reconstruct().sub(&a).max_abs() < 1e-9);
    }

    #[test]
    fn zero_matrix_has_empty_factors() {
        let f = reduced_svd(&Matrix::zeros(3, 2), DEFAULT_RANK_TOL).unwrap();
        assert_eq!(f.rank(), 0);
        assert_eq!(f.u.shape(), (3, 0));
        assert_eq!(f.v.shape(), (2, 0));
    }

    #[test]
    fn values_sorted_nonincreasing() {
        let a = random_matrix(8, 6, 5);
        let vals = singular_values(&a).unwrap();
        for w in vals.windows(2) {
            assert!(w[0] >= w[1] - 1e-12);
        }
    }

    #[test]
    fn rejects_non_finite() {
        let a = Matrix::from_vec(1, 2, alloc::vec![f64::INFINITY, 0.0]).unwrap();
        assert!(reduced_svd(&a, DEFAULT_RANK_TOL).is_err());
    }

    #[test]
    fn pinv_of_identity_and_singular_diag() {
        let id = pseudoinverse(&Matrix::identity(3), DEFAULT_RANK_TOL).unwrap();
        assert!(id.sub(&Matrix::identity(3)).max_abs() < 1e-12);

        let p = pseudoinverse(&Matrix::diag(&[2.0, 0.0]), DEFAULT_RANK_TOL).unwrap();
        assert!(p.sub(&Matrix::diag(&[0.5, 0.0])).max_abs() < 1e-12);
    }

    #[test]
    fn pinv_satisfies_penrose_identities() {
        let h = random_matrix(6, 4, 21);
        let p = pseudoinverse(&h, DEFAULT_RANK_TOL).unwrap();
        let hph = h.matmul(&p).matmul(&h);
        let php = p.matmul(&h).matmul(&p);
        let scale = h.max_abs();
        assert!(hph.sub(&h).max_abs() <= 1e-8 * scale);
        assert!(php.sub(&p).max_abs() <= 1e-8 * scale);
    }
}

#[cfg(test)]
mod stress {
    use super::*;
    use crate::matrix::Matrix;
    use crate::rng::SeededRng;

    // exhaustive sign matrices are adversarial for one-sided Jacobi:
    // many exact rank deficiencies and equal column norms
    #[test]
    fn all_4x4_sign_patterns_converge() {
        let k = 4usize;
        for pattern in 0..(1u64 << (k * k)) {
            let mut a = Matrix::zeros(k, k);
            for bit in 0..k * k {
                let sign = if pattern >> bit & 1 == 1 { -1.0 } else { 1.0 };
                a[(bit / k, bit % k)] = sign;
            }
            let values = singular_values(&a).unwrap();
            let fro_sq: f64 = values.iter().map(|s| s * s).sum();
            assert!((fro_sq - (k * k) as f64).abs() < 1e-9, "pattern {pattern}");
        }
    }

    #[test]
    fn rank_deficient_products_converge() {
        let mut rng = SeededRng::new(42);
        for trial in 0..50 {
            let r = 1 + (trial % 3);
            let mut a = Matrix::zeros(7, r);
            let mut b = Matrix::zeros(r, 6);
            for i in 0..7 {
                for j in 0..r {
                    a[(i, j)] = rng.normal();
                }
            }
            for i in 0..r {
                for j in 0..6 {
                    b[(i, j)] = rng.normal();
                }
            }
            let product = a.matmul(&b);
            let f = reduced_svd(&product, DEFAULT_RANK_TOL).unwrap();
            assert_eq!(f.rank(), r, "trial {trial}");
            assert!(f.reconstruct().sub(&product).max_abs() < 1e-9 * product.max_abs());
        }
    }
}
