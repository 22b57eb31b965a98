//! Small dense linear algebra: a column-major matrix, a GEMM-backed
//! transpose product, Gram-Schmidt thin QR and one-sided Jacobi SVD.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

/// Dense real matrix stored column-major.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Matrix({}x{})", self.rows, self.cols)
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
            out.set(i, i, 1.0);
        }
        out
    }

    /// Wraps column-major storage. Panics if `data.len() != rows * cols`.
    pub fn from_col_major(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "column-major buffer has wrong length");
        Self { rows, cols, data }
    }

    /// Builds a matrix from row-major entries (the on-disk text layout).
    pub fn from_row_major(rows: usize, cols: usize, entries: &[f64]) -> Self {
        assert_eq!(entries.len(), rows * cols, "row-major buffer has wrong length");
        let mut out = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                out.set(i, j, entries[i * cols + j]);
            }
        }
        out
    }

    pub fn from_columns(rows: usize, columns: &[&[f64]]) -> Self {
        let mut data = Vec::with_capacity(rows * columns.len());
        for c in columns {
            assert_eq!(c.len(), rows);
            data.extend_from_slice(c);
        }
        Self {
            rows,
            cols: columns.len(),
            data,
        }
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
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i + j * self.rows]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i + j * self.rows] = v;
    }

    #[inline]
    pub fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    #[inline]
    pub fn col_mut(&mut self, j: usize) -> &mut [f64] {
        let r = self.rows;
        &mut self.data[j * r..(j + 1) * r]
    }

    /// Contiguous storage of columns `start..start + count`.
    #[inline]
    pub fn col_range(&self, start: usize, count: usize) -> &[f64] {
        &self.data[start * self.rows..(start + count) * self.rows]
    }

    pub fn as_col_major(&self) -> &[f64] {
        &self.data
    }

    pub fn into_col_major(self) -> Vec<f64> {
        self.data
    }

    pub fn to_row_major(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.data.len());
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.push(self.get(i, j));
            }
        }
        out
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for j in 0..self.cols {
            for i in 0..self.rows {
                out.set(j, i, self.get(i, j));
            }
        }
        out
    }

    pub fn select_columns(&self, idx: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(self.rows * idx.len());
        for &j in idx {
            data.extend_from_slice(self.col(j));
        }
        Matrix {
            rows: self.rows,
            cols: idx.len(),
            data,
        }
    }

    /// `self * v`.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.cols);
        let mut out = vec![0.0; self.rows];
        for (j, &vj) in v.iter().enumerate() {
            if vj != 0.0 {
                axpy(vj, self.col(j), &mut out);
            }
        }
        out
    }

    /// `selfᵀ * v`.
    pub fn tr_mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.rows);
        (0..self.cols).map(|j| dot(self.col(j), v)).collect()
    }

    /// `self * other`.
    pub fn mul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows);
        let mut out = Matrix::zeros(self.rows, other.cols);
        if self.rows == 0 || other.cols == 0 || self.cols == 0 {
            return out;
        }
        // SAFETY: dimensions and strides describe the column-major buffers exactly.
        unsafe {
            matrixmultiply::dgemm(
                self.rows,
                self.cols,
                other.cols,
                1.0,
                self.data.as_ptr(),
                1,
                self.rows as isize,
                other.data.as_ptr(),
                1,
                other.rows as isize,
                0.0,
                out.data.as_mut_ptr(),
                1,
                self.rows as isize,
            );
        }
        out
    }

    /// `selfᵀ * other`.
    pub fn tr_mul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.rows, other.rows);
        tr_mul_cols(self.rows, &self.data, self.cols, &other.data, other.cols)
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm2(&self.data)
    }
}

/// `Aᵀ B` for two column-major panels sharing `rows`, given as raw column slices.
pub fn tr_mul_cols(rows: usize, a: &[f64], a_cols: usize, b: &[f64], b_cols: usize) -> Matrix {
    debug_assert_eq!(a.len(), rows * a_cols);
    debug_assert_eq!(b.len(), rows * b_cols);
    let mut out = Matrix::zeros(a_cols, b_cols);
    if rows == 0 || a_cols == 0 || b_cols == 0 {
        return out;
    }
    // SAFETY: Aᵀ is a_cols×rows with row stride `rows`; B is rows×b_cols column-major.
    unsafe {
        matrixmultiply::dgemm(
            a_cols,
            rows,
            b_cols,
            1.0,
            a.as_ptr(),
            rows as isize,
            1,
            b.as_ptr(),
            1,
            rows as isize,
            0.0,
            out.data.as_mut_ptr(),
            1,
            a_cols as isize,
        );
    }
    out
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (x, y) in ra.iter().zip(rb) {
        s += x * y;
    }
    s
}

#[inline]
pub fn norm2(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

/// `y += alpha * x`.
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Removes from `v` its components along the orthonormal columns `basis`
/// (classical Gram-Schmidt, applied twice). Returns the accumulated coefficients.
pub fn orthogonalize_against(basis: &[Vec<f64>], v: &mut [f64]) -> Vec<f64> {
    let mut coeffs = vec![0.0; basis.len()];
    for _ in 0..2 {
        for (c, q) in coeffs.iter_mut().zip(basis) {
            let h = dot(q, v);
            axpy(-h, q, v);
            *c += h;
        }
    }
    coeffs
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RankDeficient {
    /// Index of the first column found numerically dependent on its predecessors.
    pub column: usize,
}

/// Thin QR factorization `A = Q R` with `Q` m×p orthonormal and `R` p×p upper triangular.
#[derive(Debug, Clone)]
pub struct ThinQr {
    pub q: Matrix,
    pub r: Matrix,
}

/// Relative tolerance below which a Gram-Schmidt remainder counts as zero.
pub const RANK_TOL: f64 = 1e-10;

/// Thin QR by reorthogonalized Gram-Schmidt; fails on numerically dependent columns.
pub fn thin_qr(a: &Matrix) -> Result<ThinQr, RankDeficient> {
    let (m, p) = (a.rows(), a.cols());
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(p);
    let mut r = Matrix::zeros(p, p);
    for j in 0..p {
        let mut v = a.col(j).to_vec();
        let orig = norm2(&v);
        let coeffs = orthogonalize_against(&basis, &mut v);
        let nv = norm2(&v);
        if nv <= RANK_TOL * orig.max(f64::MIN_POSITIVE) || nv == 0.0 {
            return Err(RankDeficient { column: j });
        }
        for (i, c) in coeffs.into_iter().enumerate() {
            r.set(i, j, c);
        }
        r.set(j, j, nv);
        v.iter_mut().for_each(|x| *x /= nv);
        basis.push(v);
    }
    let cols: Vec<&[f64]> = basis.iter().map(|c| c.as_slice()).collect();
    let q = if p == 0 {
        Matrix::zeros(m, 0)
    } else {
        Matrix::from_columns(m, &cols)
    };
    Ok(ThinQr { q, r })
}

/// Solves `R x = b` for upper-triangular `R`.
pub fn solve_upper(r: &Matrix, b: &[f64]) -> Vec<f64> {
    let n = r.cols();
    let mut x = b.to_vec();
    for i in (0..n).rev() {
        let mut s = x[i];
        for j in i + 1..n {
            s -= r.get(i, j) * x[j];
        }
        x[i] = s / r.get(i, i);
    }
    x
}

/// Singular value decomposition `A = U diag(s) Vᵀ` (thin, `U` m×p).
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: Matrix,
    pub s: Vec<f64>,
    pub v: Matrix,
}

/// One-sided Jacobi SVD. Suited to the small and tall matrices used here.
pub fn svd(a: &Matrix) -> Svd {
    let (m, p) = (a.rows(), a.cols());
    let mut u = a.clone();
    let mut v = Matrix::identity(p);
    for _sweep in 0..60 {
        let mut rotated = false;
        for i in 0..p {
            for j in i + 1..p {
                let alpha = dot(u.col(i), u.col(i));
                let beta = dot(u.col(j), u.col(j));
                let gamma = dot(u.col(i), u.col(j));
                if gamma == 0.0 || libm::fabs(gamma) <= 1e-15 * libm::sqrt(alpha * beta) {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = libm::copysign(1.0, zeta) / (libm::fabs(zeta) + libm::sqrt(1.0 + zeta * zeta));
                let c = 1.0 / libm::sqrt(1.0 + t * t);
                let s = c * t;
                rotate_cols(&mut u, i, j, c, s);
                rotate_cols(&mut v, i, j, c, s);
            }
        }
        if !rotated {
            break;
        }
    }
    let mut s = vec![0.0; p];
    for (j, sj) in s.iter_mut().enumerate() {
        let nrm = norm2(u.col(j));
        *sj = nrm;
        if nrm > 0.0 {
            u.col_mut(j).iter_mut().for_each(|x| *x /= nrm);
        }
    }
    // sort descending
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| s[b].partial_cmp(&s[a]).unwrap_or(core::cmp::Ordering::Equal));
    let u_sorted = u.select_columns(&order);
    let v_sorted = v.select_columns(&order);
    let s_sorted = order.iter().map(|&j| s[j]).collect();
    let _ = m;
    Svd {
        u: u_sorted,
        s: s_sorted,
        v: v_sorted,
    }
}

fn rotate_cols(a: &mut Matrix, i: usize, j: usize, c: f64, s: f64) {
    let rows = a.rows();
    for r in 0..rows {
        let x = a.get(r, i);
        let y = a.get(r, j);
        a.set(r, i, c * x - s * y);
        a.set(r, j, s * x + c * y);
    }
}

/// Largest singular value.
pub fn spectral_norm(a: &Matrix) -> f64 {
    if a.rows() == 0 || a.cols() == 0 {
        return 0.0;
    }
    if a.cols() == 1 {
        return norm2(a.col(0));
    }
    // Jacobi on the narrower side keeps the rotation count small.
    if a.rows() < a.cols() {
        return spectral_norm(&a.transpose());
    }
    svd(a).s[0]
}

/// Minimum-norm least-squares solution of `A x ≈ b` via the SVD,
/// discarding singular values below `rcond * s_max`.
pub fn lstsq_min_norm(a: &Matrix, b: &[f64], rcond: f64) -> Vec<f64> {
    let dec = svd(a);
    let p = a.cols();
    let smax = dec.s.first().copied().unwrap_or(0.0);
    let mut x = vec![0.0; p];
    for (k, &sk) in dec.s.iter().enumerate() {
        if sk <= rcond * smax || sk == 0.0 {
            continue;
        }
        let coef = dot(dec.u.col(k), b) / sk;
        axpy(coef, dec.v.col(k), &mut x);
    }
    x
}
