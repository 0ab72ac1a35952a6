//! Dense row-major matrices and the few linear-algebra kernels the solvers need.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use crate::error::{domain, Result};

/// Dense row-major `rows x cols` matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from row-major data.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(domain("row-major data length does not match the shape"));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from a list of equal-length rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(domain("ragged rows"));
            }
            data.extend_from_slice(r);
        }
        Ok(Self { rows: rows.len(), cols, data })
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 })
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
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&x| f(x)).collect() }
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.rows).map(|i| self.row(i).iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for i in 0..self.rows {
            for (o, &x) in out.iter_mut().zip(self.row(i)) {
                *o += x;
            }
        }
        out
    }

    /// Frobenius inner product.
    pub fn frobenius_dot(&self, other: &Matrix) -> f64 {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        dot(&self.data, &other.data)
    }

    /// `self * x`.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// `self^T * x`.
    pub fn tr_mul_vec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (i, &xi) in x.iter().enumerate() {
            axpy(xi, self.row(i), &mut out);
        }
        out
    }

    /// Bilinear form `a^T self b`.
    pub fn bilinear(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter().enumerate().map(|(i, &ai)| if ai == 0.0 { 0.0 } else { ai * dot(self.row(i), b) }).sum()
    }

    /// Matrix product through `matrixmultiply`.
    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Matrix::zeros(self.rows, other.cols);
        let (a, b) = (View::row_major(&self.data, self.cols), View::row_major(&other.data, other.cols));
        gemm(self.rows, self.cols, other.cols, a, b, &mut out.data, other.cols, 1);
        out
    }

    pub fn max_abs_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols.min(self.rows) {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Dot product with four independent accumulators so the loop pipelines.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for k in 0..chunks {
        let o = 4 * k;
        acc[0] += a[o] * b[o];
        acc[1] += a[o + 1] * b[o + 1];
        acc[2] += a[o + 2] * b[o + 2];
        acc[3] += a[o + 3] * b[o + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for k in 4 * chunks..a.len() {
        s += a[k] * b[k];
    }
    s
}

/// `y += alpha * x`
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    if alpha == 0.0 {
        return;
    }
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn norm2(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

/// Strided view of a dense `f64` matrix for [`gemm`].
#[derive(Clone, Copy)]
pub(crate) struct View<'a> {
    pub data: &'a [f64],
    pub row_stride: usize,
    pub col_stride: usize,
}

impl<'a> View<'a> {
    pub fn row_major(data: &'a [f64], cols: usize) -> Self {
        Self { data, row_stride: cols, col_stride: 1 }
    }

    pub fn col_major(data: &'a [f64], rows: usize) -> Self {
        Self { data, row_stride: 1, col_stride: rows }
    }

    fn covers(&self, rows: usize, cols: usize) -> bool {
        rows == 0 || cols == 0 || (rows - 1) * self.row_stride + (cols - 1) * self.col_stride < self.data.len()
    }
}

/// `out = a * b` for an `m x k` view `a` and a `k x n` view `b`; `out` is
/// written with strides `(out_rs, out_cs)`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn gemm(m: usize, k: usize, n: usize, a: View<'_>, b: View<'_>, out: &mut [f64], out_rs: usize, out_cs: usize) {
    if m == 0 || n == 0 {
        return;
    }
    assert!(a.covers(m, k) && b.covers(k, n), "gemm operand out of bounds");
    assert!((m - 1) * out_rs + (n - 1) * out_cs < out.len(), "gemm output out of bounds");
    // SAFETY: the assertions above keep every strided access of the three
    // operands inside their slices.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.data.as_ptr(),
            a.row_stride as isize,
            a.col_stride as isize,
            b.data.as_ptr(),
            b.row_stride as isize,
            b.col_stride as isize,
            0.0,
            out.as_mut_ptr(),
            out_rs as isize,
            out_cs as isize,
        );
    }
}

fn to_nalgebra(m: &Matrix) -> nalgebra::DMatrix<f64> {
    nalgebra::DMatrix::from_row_slice(m.rows, m.cols, &m.data)
}

/// Eigen-decomposition of a symmetric matrix: eigenvalues ascending, with the
/// matching eigenvectors stored as the columns of the returned matrix.
pub fn symmetric_eigen(m: &Matrix) -> (Vec<f64>, Matrix) {
    assert!(m.is_square());
    let n = m.rows;
    let eig = nalgebra::SymmetricEigen::new(to_nalgebra(m));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = Matrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    (values, vectors)
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(m: &Matrix) -> f64 {
    if m.rows == 0 {
        return 0.0;
    }
    let eig = nalgebra::SymmetricEigen::new(to_nalgebra(m));
    eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Cholesky factorization with diagonal pivoting of a positive semidefinite
/// matrix, `P A P^T = L L^T`.
///
/// Elimination stops once the largest remaining pivot drops below
/// `tol * max(diag)`, so rank-deficient Gram matrices factor cleanly.
#[derive(Debug, Clone)]
pub struct PivotedCholesky {
    /// `n x rank` lower-trapezoidal factor in pivoted order.
    pub factor: Matrix,
    /// `perm[k]` is the original index placed at pivot position `k`.
    pub perm: Vec<usize>,
    pub rank: usize,
}

impl PivotedCholesky {
    pub fn new(a: &Matrix, tol: f64) -> Result<Self> {
        if !a.is_square() {
            return Err(domain("Cholesky factorization needs a square matrix"));
        }
        let n = a.rows;
        let mut work = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let max_diag = (0..n).map(|i| a[(i, i)]).fold(0.0f64, f64::max);
        let threshold = tol * max_diag.max(f64::MIN_POSITIVE);
        let mut l = Matrix::zeros(n, n);
        let mut rank = 0;
        for k in 0..n {
            // remaining diagonal of the Schur complement
            let (mut best, mut best_val) = (k, f64::NEG_INFINITY);
            for i in k..n {
                let v = work[(i, i)];
                if v > best_val {
                    best = i;
                    best_val = v;
                }
            }
            if best_val <= threshold {
                break;
            }
            if best != k {
                swap_sym(&mut work, k, best);
                perm.swap(k, best);
                for c in 0..k {
                    let tmp = l[(k, c)];
                    l[(k, c)] = l[(best, c)];
                    l[(best, c)] = tmp;
                }
            }
            let pivot = libm::sqrt(work[(k, k)]);
            l[(k, k)] = pivot;
            for i in (k + 1)..n {
                l[(i, k)] = work[(i, k)] / pivot;
            }
            for i in (k + 1)..n {
                let lik = l[(i, k)];
                for j in (k + 1)..=i {
                    let v = work[(i, j)] - lik * l[(j, k)];
                    work[(i, j)] = v;
                    work[(j, i)] = v;
                }
            }
            rank += 1;
        }
        let factor = Matrix::from_fn(n, rank, |i, j| l[(i, j)]);
        Ok(Self { factor, perm, rank })
    }

    /// `F x` where `F = L^T P` satisfies `A = F^T F`; the returned vector has
    /// length `rank`.
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rank];
        for (k, &orig) in self.perm.iter().enumerate() {
            axpy(x[orig], self.factor.row(k), &mut out);
        }
        out
    }

    /// Reassembles `P^T L L^T P` in the original ordering.
    pub fn reconstruct(&self) -> Matrix {
        let n = self.perm.len();
        let mut out = Matrix::zeros(n, n);
        for a in 0..n {
            for b in 0..n {
                out[(self.perm[a], self.perm[b])] = dot(self.factor.row(a), self.factor.row(b));
            }
        }
        out
    }
}

fn swap_sym(m: &mut Matrix, a: usize, b: usize) {
    let n = m.rows;
    for j in 0..n {
        let tmp = m[(a, j)];
        m[(a, j)] = m[(b, j)];
        m[(b, j)] = tmp;
    }
    for i in 0..n {
        let tmp = m[(i, a)];
        m[(i, a)] = m[(i, b)];
        m[(i, b)] = tmp;
    }
}

/// Median with the mean-of-central-pair convention for even counts.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

/// Empirical quantile with linear interpolation between order statistics
/// (position `q * (n - 1)` in the sorted sample).
pub fn quantile(values: &[f64], q: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Some(quantile_sorted(&v, q))
}

pub(crate) fn quantile_sorted(v: &[f64], q: f64) -> f64 {
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = libm::floor(pos) as usize;
    let hi = (lo + 1).min(v.len() - 1);
    let frac = pos - lo as f64;
    v[lo] + frac * (v[hi] - v[lo])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matvec_and_transpose_agree() {
        let m = Matrix::from_rows(&[[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]]).unwrap();
        assert_eq!(m.mul_vec(&[1.0, 0.0, -1.0]), vec![-2.0, -2.0]);
        assert_eq!(m.tr_mul_vec(&[1.0, 1.0]), vec![5.0, 7.0, 9.0]);
        assert_eq!(m.transpose().mul_vec(&[1.0, 1.0]), vec![5.0, 7.0, 9.0]);
    }

    #[test]
    fn gemm_matches_naive_product() {
        let a = Matrix::from_fn(5, 7, |i, j| (i * 7 + j) as f64 * 0.1 - 1.0);
        let b = Matrix::from_fn(7, 3, |i, j| ((i + 2 * j) % 5) as f64);
        let c = a.matmul(&b);
        for i in 0..5 {
            for j in 0..3 {
                let naive: f64 = (0..7).map(|k| a[(i, k)] * b[(k, j)]).sum();
                assert!((c[(i, j)] - naive).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn median_conventions() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(median(&[]), None);
    }

    #[test]
    fn quantile_linear_interpolation() {
        let v: Vec<f64> = (1..=100).map(f64::from).collect();
        assert!((quantile(&v, 0.1).unwrap() - 10.9).abs() < 1e-12);
        assert!((quantile(&v, 0.5).unwrap() - 50.5).abs() < 1e-12);
    }

    #[test]
    fn pivoted_cholesky_handles_rank_deficiency() {
        // Gram matrix of 4 points on a line: rank 1.
        let pts = [0.0, 1.0, 2.5, -1.0];
        let g = Matrix::from_fn(4, 4, |i, j| pts[i] * pts[j]);
        let ch = PivotedCholesky::new(&g, 1e-14).unwrap();
        assert_eq!(ch.rank, 1);
        let back = ch.reconstruct();
        for i in 0..4 {
            for j in 0..4 {
                assert!((back[(i, j)] - g[(i, j)]).abs() < 1e-12);
            }
        }
        let x = [0.1, 0.2, 0.3, 0.4];
        let y = [0.4, 0.3, 0.2, 0.1];
        let fx = ch.project(&x);
        let fy = ch.project(&y);
        assert!((dot(&fx, &fy) - g.bilinear(&x, &y)).abs() < 1e-12);
    }

    #[test]
    fn symmetric_eigen_sorted() {
        let m = Matrix::from_rows(&[[2.0, 1.0], [1.0, 2.0]]).unwrap();
        let (vals, vecs) = symmetric_eigen(&m);
        assert!((vals[0] - 1.0).abs() < 1e-12 && (vals[1] - 3.0).abs() < 1e-12);
        assert!((vecs[(0, 1)].abs() - core::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert!((min_eigenvalue(&m) - 1.0).abs() < 1e-12);
    }
}
