//! Dense row-major matrix of `f64`, the universal value type of the crate.

use crate::error::{invalid, shape_err, Error, Result};
use crate::math;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

/// Dense real matrix, row-major storage.
///
/// Zero-dimensional matrices (`rows == 0` or `cols == 0`) are legal values;
/// they show up as the factors of a rank-0 SVD.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl core::fmt::Debug for Matrix {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows.min(8) {
            write!(f, "  ")?;
            for j in 0..self.cols.min(8) {
                write!(f, "{:>12.5} ", self[(i, j)])?;
            }
            writeln!(f, "{}", if self.cols > 8 { "..." } else { "" })?;
        }
        if self.rows > 8 {
            writeln!(f, "  ...")?;
        }
        write!(f, "]")
    }
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut out = Self::zeros(n, n);
        for i in 0..n {
            out[(i, i)] = 1.0;
        }
        out
    }

    /// Build from a row-major entry vector; the length must match.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(shape_err(
                format!("{rows}x{cols} = {} entries", rows * cols),
                format!("{} entries", data.len()),
            ));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut data = Vec::with_capacity(r * c);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != c {
                return Err(shape_err(
                    format!("{c} columns"),
                    format!("{} columns in row {i}", row.len()),
                ));
            }
            data.extend_from_slice(row);
        }
        Self::from_vec(r, c, data)
    }

    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        let mut out = Self::zeros(n, n);
        for (i, &v) in values.iter().enumerate() {
            out[(i, i)] = v;
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
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Err with the first offending position if any entry is NaN/Inf.
    pub fn check_finite(&self) -> Result<()> {
        for i in 0..self.rows {
            for j in 0..self.cols {
                if !self[(i, j)].is_finite() {
                    return Err(Error::NonFinite { row: i, col: j });
                }
            }
        }
        Ok(())
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scale(&self, factor: f64) -> Matrix {
        self.map(|v| v * factor)
    }

    /// Entrywise sign matrix, sign(0) = 0.
    pub fn sign(&self) -> Matrix {
        self.map(math::sign)
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        self.zip(other, |a, b| a - b)
    }

    fn zip(&self, other: &Matrix, f: impl Fn(f64, f64) -> f64) -> Matrix {
        assert_eq!(self.shape(), other.shape(), "entrywise op shape mismatch");
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(other.data.iter())
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    /// Frobenius inner product <A, B> = Tr(A^T B).
    pub fn dot(&self, other: &Matrix) -> f64 {
        assert_eq!(self.shape(), other.shape(), "dot shape mismatch");
        self.data
            .iter()
            .zip(other.data.iter())
            .map(|(&a, &b)| a * b)
            .sum()
    }

    /// A * B.
    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(
            self.cols, other.rows,
            "matmul: {}x{} * {}x{}",
            self.rows, self.cols, other.rows, other.cols
        );
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let a_row = self.row(i);
            let out_row = out.row_mut(i);
            for (k, &a_ik) in a_row.iter().enumerate() {
                if a_ik == 0.0 {
                    continue;
                }
                let b_row = other.row(k);
                for (o, &b) in out_row.iter_mut().zip(b_row.iter()) {
                    *o += a_ik * b;
                }
            }
        }
        out
    }

    /// A^T * B without materializing the transpose.
    pub fn at_mul_b(&self, other: &Matrix) -> Matrix {
        assert_eq!(
            self.rows, other.rows,
            "at_mul_b: {}x{} vs {}x{}",
            self.rows, self.cols, other.rows, other.cols
        );
        let mut out = Matrix::zeros(self.cols, other.cols);
        for k in 0..self.rows {
            let a_row = self.row(k);
            let b_row = other.row(k);
            for (i, &a_ki) in a_row.iter().enumerate() {
                if a_ki == 0.0 {
                    continue;
                }
                let out_row = out.row_mut(i);
                for (o, &b) in out_row.iter_mut().zip(b_row.iter()) {
                    *o += a_ki * b;
                }
            }
        }
        out
    }

    /// A * B^T without materializing the transpose.
    pub fn a_mul_bt(&self, other: &Matrix) -> Matrix {
        assert_eq!(
            self.cols, other.cols,
            "a_mul_bt: {}x{} vs {}x{}",
            self.rows, self.cols, other.rows, other.cols
        );
        let mut out = Matrix::zeros(self.rows, other.rows);
        for i in 0..self.rows {
            let a_row = self.row(i);
            let out_row = out.row_mut(i);
            for (j, o) in out_row.iter_mut().enumerate() {
                let b_row = other.row(j);
                *o = a_row.iter().zip(b_row.iter()).map(|(&a, &b)| a * b).sum();
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |acc, &v| acc.max(math::abs(v)))
    }

    pub fn frobenius_norm(&self) -> f64 {
        math::sqrt(self.data.iter().map(|&v| v * v).sum())
    }
}

impl core::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl core::ops::IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

/// Matrix norms used throughout the separation analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum NormKind {
    /// Sum of singular values.
    Nuclear,
    /// Largest singular value.
    Spectral,
    /// Largest entry magnitude.
    InfEntry,
    /// Sum of entry magnitudes.
    OneEntry,
    /// Operator norm induced by the vector infinity norm:
    /// the maximum absolute row sum.
    Mi,
    Frobenius,
}

/// Evaluate a matrix norm. Nuclear and spectral norms go through the SVD.
pub fn norm(a: &Matrix, kind: NormKind) -> Result<f64> {
    a.check_finite()?;
    Ok(match kind {
        NormKind::Nuclear => crate::svd::singular_values(a)?.iter().sum(),
        NormKind::Spectral => crate::svd::singular_values(a)?
            .first()
            .copied()
            .unwrap_or(0.0),
        NormKind::InfEntry => a.max_abs(),
        NormKind::OneEntry => a.data().iter().map(|&v| math::abs(v)).sum(),
        NormKind::Mi => (0..a.rows())
            .map(|i| a.row(i).iter().map(|&v| math::abs(v)).sum::<f64>())
            .fold(0.0, f64::max),
        NormKind::Frobenius => a.frobenius_norm(),
    })
}

/// Maximum nonzero count per row (`d_r`), per column (`d_c`), and their max,
/// with entries of magnitude <= `zero_tol` treated as zero.
pub fn degree_stats(s: &Matrix, zero_tol: f64) -> Result<(usize, usize, usize)> {
    if zero_tol < 0.0 {
        return Err(invalid("zero_tol must be nonnegative"));
    }
    let mut col_counts = vec![0usize; s.cols()];
    let mut d_r = 0usize;
    for i in 0..s.rows() {
        let mut row_count = 0usize;
        for (j, &v) in s.row(i).iter().enumerate() {
            if math::abs(v) > zero_tol {
                row_count += 1;
                col_counts[j] += 1;
            }
        }
        d_r = d_r.max(row_count);
    }
    let d_c = col_counts.iter().copied().max().unwrap_or(0);
    Ok((d_r, d_c, d_r.max(d_c)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mi_norm_is_max_abs_row_sum() {
        let a = Matrix::from_rows(&[&[1.0, -2.0], &[3.0, 4.0]]).unwrap();
        assert_eq!(norm(&a, NormKind::Mi).unwrap(), 7.0);
    }

    #[test]
    fn nuclear_norm_of_diagonal() {
        let a = Matrix::diag(&[3.0, 4.0]);
        assert!((norm(&a, NormKind::Nuclear).unwrap() - 7.0).abs() < 1e-12);
    }

    #[test]
    fn entry_norms() {
        let a = Matrix::from_rows(&[&[1.0, -2.0], &[3.0, 4.0]]).unwrap();
        assert_eq!(norm(&a, NormKind::InfEntry).unwrap(), 4.0);
        assert_eq!(norm(&a, NormKind::OneEntry).unwrap(), 10.0);
        assert!((norm(&a, NormKind::Frobenius).unwrap() - 30.0f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn norm_rejects_non_finite() {
        let a = Matrix::from_vec(1, 2, vec![1.0, f64::NAN]).unwrap();
        assert!(matches!(
            norm(&a, NormKind::Frobenius),
            Err(Error::NonFinite { row: 0, col: 1 })
        ));
    }

    #[test]
    fn matmul_agrees_with_hand_product() {
        let a = Matrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]).unwrap();
        let b = Matrix::from_rows(&[&[5.0, 6.0], &[7.0, 8.0]]).unwrap();
        let c = a.matmul(&b);
        assert_eq!(c.row(0), &[19.0, 22.0]);
        assert_eq!(c.row(1), &[43.0, 50.0]);
        // transpose-variant products match the explicit transpose
        assert_eq!(a.at_mul_b(&b), a.transpose().matmul(&b));
        assert_eq!(a.a_mul_bt(&b), a.matmul(&b.transpose()));
    }

    #[test]
    fn degree_stats_cases() {
        let z = Matrix::zeros(3, 4);
        assert_eq!(degree_stats(&z, 0.0).unwrap(), (0, 0, 0));

        let id = Matrix::identity(5);
        assert_eq!(degree_stats(&id, 0.0).unwrap(), (1, 1, 1));

        let mut a = Matrix::zeros(3, 3);
        for j in 0..3 {
            a[(1, j)] = 2.0;
        }
        assert_eq!(degree_stats(&a, 0.0).unwrap(), (3, 1, 3));
    }

    #[test]
    fn degree_stats_honors_zero_tol() {
        let a = Matrix::from_rows(&[&[0.5, 0.0], &[2.0, 0.5]]).unwrap();
        assert_eq!(degree_stats(&a, 1.0).unwrap(), (1, 1, 1));
    }

    #[test]
    fn from_rows_rejects_ragged() {
        assert!(Matrix::from_rows(&[&[1.0, 2.0], &[3.0][..]]).is_err());
    }
}
