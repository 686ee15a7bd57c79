//! Support sets and the two subspace projections of the analysis:
//! onto matrices supported within a given pattern, and onto the tangent
//! space of the bounded-rank variety at a given low-rank point.

use crate::error::{invalid, shape_err, Result};
use crate::math;
use crate::matrix::Matrix;
use crate::svd::SvdFactors;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

/// Boolean entry pattern describing where a sparse matrix may be nonzero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupportSet {
    rows: usize,
    cols: usize,
    mask: Vec<bool>,
}

impl SupportSet {
    pub fn empty(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            mask: vec![false; rows * cols],
        }
    }

    pub fn full(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            mask: vec![true; rows * cols],
        }
    }

    /// Support of `s`, treating entries of magnitude <= `zero_tol` as zero.
    pub fn from_matrix(s: &Matrix, zero_tol: f64) -> Self {
        let mask = s.data().iter().map(|&v| math::abs(v) > zero_tol).collect();
        Self {
            rows: s.rows(),
            cols: s.cols(),
            mask,
        }
    }

    pub fn from_indices(rows: usize, cols: usize, indices: &[(usize, usize)]) -> Self {
        let mut out = Self::empty(rows, cols);
        for &(i, j) in indices {
            out.mask[i * cols + j] = true;
        }
        out
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.mask[i * self.cols + j]
    }

    pub fn cardinality(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    /// Member entries in row-major order.
    pub fn indices(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.cardinality());
        for i in 0..self.rows {
            for j in 0..self.cols {
                if self.contains(i, j) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// (d_r, d_c, d) of the pattern itself.
    pub fn degrees(&self) -> (usize, usize, usize) {
        let mut col_counts = vec![0usize; self.cols];
        let mut d_r = 0;
        for i in 0..self.rows {
            let row = &self.mask[i * self.cols..(i + 1) * self.cols];
            let mut count = 0;
            for (counter, &member) in col_counts.iter_mut().zip(row.iter()) {
                if member {
                    count += 1;
                    *counter += 1;
                }
            }
            d_r = d_r.max(count);
        }
        let d_c = col_counts.into_iter().max().unwrap_or(0);
        (d_r, d_c, d_r.max(d_c))
    }
}

/// Zero out the entries outside `omega` (inside, when `complement`).
pub fn support_project(x: &Matrix, omega: &SupportSet, complement: bool) -> Result<Matrix> {
    if x.shape() != (omega.rows(), omega.cols()) {
        return Err(shape_err(
            format!("{}x{}", omega.rows(), omega.cols()),
            format!("{}x{}", x.rows(), x.cols()),
        ));
    }
    let mut out = x.clone();
    for (value, &member) in out.data_mut().iter_mut().zip(omega.mask.iter()) {
        if member == complement {
            *value = 0.0;
        }
    }
    Ok(out)
}

/// Projection onto the tangent space T(L) at `L = U diag(sigma) V^T`:
/// `P_T(X) = U U^T X + X V V^T - U U^T X V V^T`, or its complement
/// `(I - U U^T) X (I - V V^T)`.
pub fn tangent_project(factors: &SvdFactors, x: &Matrix, complement: bool) -> Result<Matrix> {
    let (m, n) = x.shape();
    if factors.u.rows() != m || factors.v.rows() != n {
        return Err(shape_err(
            format!("{}x{} (from factors)", factors.u.rows(), factors.v.rows()),
            format!("{m}x{n}"),
        ));
    }
    if factors.rank() == 0 {
        return Ok(if complement {
            x.clone()
        } else {
            Matrix::zeros(m, n)
        });
    }
    let ut_x = factors.u.at_mul_b(x); // k x n
    let uu_x = factors.u.matmul(&ut_x); // U U^T X
    let x_v = x.matmul(&factors.v); // m x k
    let xvv = x_v.a_mul_bt(&factors.v); // X V V^T
    let ut_x_v = ut_x.matmul(&factors.v); // k x k
    let uuxvv = factors.u.matmul(&ut_x_v.a_mul_bt(&factors.v));
    let tangent = uu_x.add(&xvv).sub(&uuxvv);
    Ok(if complement { x.sub(&tangent) } else { tangent })
}

/// Orthonormal basis of T(L), returned as a list of m x n matrices.
///
/// The basis pairs every left singular vector with every coordinate row
/// (`U e_a e_j^T`) and every vector of an orthonormal completion `W` of U
/// with every right singular vector (`W e_c (V e_b)^T`); the two families
/// are mutually orthonormal and together span T(L), of dimension
/// `r (m + n - r)`.
pub fn tangent_basis(factors: &SvdFactors, m: usize, n: usize) -> Result<Vec<Matrix>> {
    let r = factors.rank();
    if r == 0 {
        return Ok(Vec::new());
    }
    if factors.u.rows() != m || factors.v.rows() != n {
        return Err(shape_err(
            format!("factors for {m}x{n}"),
            format!("{}x{}", factors.u.rows(), factors.v.rows()),
        ));
    }
    let expected = r * (m + n - r);
    let mut basis = Vec::with_capacity(expected);
    for a in 0..r {
        for j in 0..n {
            let mut b = Matrix::zeros(m, n);
            for i in 0..m {
                b[(i, j)] = factors.u[(i, a)];
            }
            basis.push(b);
        }
    }
    let w = orthogonal_complement(&factors.u)?;
    for c in 0..w.cols() {
        for b_idx in 0..r {
            let mut b = Matrix::zeros(m, n);
            for i in 0..m {
                for j in 0..n {
                    b[(i, j)] = w[(i, c)] * factors.v[(j, b_idx)];
                }
            }
            basis.push(b);
        }
    }
    assert_eq!(basis.len(), expected, "tangent basis dimension");
    Ok(basis)
}

/// Orthonormal basis of the orthogonal complement of the column space of
/// `u` (itself assumed orthonormal), via the SVD of `I - U U^T`.
pub fn orthogonal_complement(u: &Matrix) -> Result<Matrix> {
    let m = u.rows();
    let k = u.cols();
    if k > m {
        return Err(invalid("more columns than rows in orthonormal factor"));
    }
    let proj = Matrix::identity(m).sub(&u.a_mul_bt(u));
    // Projection onto the complement: singular values are 1 (kept) or ~0.
    let f = crate::svd::reduced_svd(&proj, 0.5)?;
    if f.rank() != m - k {
        return Err(invalid(format!(
            "complement rank {} != {}; factor not orthonormal?",
            f.rank(),
            m - k
        )));
    }
    Ok(f.u)
}
