//! Small dense linear-algebra kernel: row-major matrices, Cholesky and a
//! symmetric eigensolver (Householder tridiagonalisation followed by implicit
//! QL), all generic over [`Scalar`].

use std::ops::{Index, IndexMut};

use crate::error::{CdemError, Result};
use crate::scalar::Scalar;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_diag(diag: &[T]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    /// Builds a matrix from a row-major buffer.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(CdemError::Internal(format!(
                "buffer of {} values cannot form a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(CdemError::Internal("ragged rows".into()));
        }
        let data = rows.iter().flat_map(|r| r.iter().copied()).collect();
        Ok(Matrix {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
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
    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        let c = self.cols;
        &mut self.data[i * c..(i + 1) * c]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_column(&mut self, j: usize, values: &[T]) {
        for (i, &v) in values.iter().enumerate() {
            self[(i, j)] = v;
        }
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, rhs: &Matrix<T>) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(CdemError::Internal(format!(
                "matmul shape mismatch: {:?} x {:?}",
                self.shape(),
                rhs.shape()
            )));
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a == T::zero() {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(rhs.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `selfᵀ · rhs` without materialising the transpose.
    pub fn t_matmul(&self, rhs: &Matrix<T>) -> Result<Self> {
        if self.rows != rhs.rows {
            return Err(CdemError::Internal(format!(
                "t_matmul shape mismatch: {:?}ᵀ x {:?}",
                self.shape(),
                rhs.shape()
            )));
        }
        let mut out = Self::zeros(self.cols, rhs.cols);
        for k in 0..self.rows {
            let b_row = rhs.row(k);
            for (i, &a) in self.row(k).iter().enumerate() {
                if a == T::zero() {
                    continue;
                }
                let out_row = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `selfᵀ · mid · self`, the congruence used for every `XΩXᵀ` product
    /// (samples are stored as rows, so the column-sample `X` is `selfᵀ`).
    pub fn congruence(&self, mid: &Matrix<T>) -> Result<Self> {
        let right = mid.matmul(self)?;
        let mut out = self.t_matmul(&right)?;
        out.symmetrize();
        Ok(out)
    }

    pub fn scaled(&self, alpha: T) -> Self {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| v * alpha).collect(),
        }
    }

    /// `self += alpha * other`.
    pub fn add_scaled(&mut self, alpha: T, other: &Matrix<T>) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(CdemError::Internal(format!(
                "add shape mismatch: {:?} + {:?}",
                self.shape(),
                other.shape()
            )));
        }
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += alpha * b;
        }
        Ok(())
    }

    /// Adds `alpha · v vᵀ`.
    pub fn add_outer(&mut self, alpha: T, v: &[T]) {
        debug_assert!(self.rows == v.len() && self.cols == v.len());
        for (i, &vi) in v.iter().enumerate() {
            if vi == T::zero() {
                continue;
            }
            let s = alpha * vi;
            for (a, &vj) in self.row_mut(i).iter_mut().zip(v) {
                *a += s * vj;
            }
        }
    }

    pub fn add_diag(&mut self, alpha: T) {
        let n = self.rows.min(self.cols);
        for i in 0..n {
            self[(i, i)] += alpha;
        }
    }

    pub fn trace(&self) -> T {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|&v| v * v).sum::<T>().sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, &v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &Matrix<T>) -> T {
        assert_eq!(self.shape(), other.shape(), "max_abs_diff shape mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs()))
    }

    /// Largest `|A_ij − A_ji|`.
    pub fn asymmetry(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    pub fn symmetrize(&mut self) {
        let half = T::lit(0.5);
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                let v = (self[(i, j)] + self[(j, i)]) * half;
                self[(i, j)] = v;
                self[(j, i)] = v;
            }
        }
    }

    pub fn row_sums(&self) -> Vec<T> {
        (0..self.rows).map(|i| self.row(i).iter().copied().sum()).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Stacks `self` on top of `below` (same column count).
    pub fn vstack(&self, below: &Matrix<T>) -> Result<Self> {
        if self.cols != below.cols {
            return Err(CdemError::Internal(format!(
                "vstack column mismatch: {} vs {}",
                self.cols, below.cols
            )));
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&below.data);
        Ok(Matrix {
            rows: self.rows + below.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Matrix {
            rows: idx.len(),
            cols: self.cols,
            data,
        }
    }

    pub fn slice_rows(&self, start: usize, end: usize) -> Self {
        Matrix {
            rows: end - start,
            cols: self.cols,
            data: self.data[start * self.cols..end * self.cols].to_vec(),
        }
    }

    pub fn first_columns(&self, k: usize) -> Self {
        Self::from_fn(self.rows, k, |i, j| self[(i, j)])
    }

    pub fn cast<U: Scalar>(&self) -> Matrix<U> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .map(|&v| U::lit(v.to_f64_lossy()))
                .collect(),
        }
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

pub fn squared_distance<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = x - y;
            d * d
        })
        .sum()
}

/// Flips the sign of each column so that its largest-magnitude entry is
/// positive (first such entry on ties).
pub fn fix_column_signs<T: Scalar>(m: &mut Matrix<T>) {
    for j in 0..m.cols() {
        let mut best = T::zero();
        for i in 0..m.rows() {
            let v = m[(i, j)];
            if v.abs() > best.abs() {
                best = v;
            }
        }
        if best < T::zero() {
            for i in 0..m.rows() {
                m[(i, j)] = -m[(i, j)];
            }
        }
    }
}

/// Lower-triangular Cholesky factor `L` with `A = L Lᵀ`.
#[derive(Debug, Clone)]
pub struct Cholesky<T> {
    l: Matrix<T>,
}

/// Failure of a Cholesky factorisation: the first non-positive pivot.
#[derive(Debug, Clone, Copy)]
pub struct NotPositiveDefinite {
    pub index: usize,
    pub pivot: f64,
}

impl<T: Scalar> Cholesky<T> {
    pub fn factor(a: &Matrix<T>) -> std::result::Result<Self, NotPositiveDefinite> {
        let n = a.rows();
        assert_eq!(n, a.cols(), "cholesky of non-square matrix");
        let mut l = Matrix::zeros(n, n);
        for j in 0..n {
            let mut diag = a[(j, j)];
            for k in 0..j {
                diag -= l[(j, k)] * l[(j, k)];
            }
            if !(diag > T::zero()) || !diag.is_finite() {
                return Err(NotPositiveDefinite {
                    index: j,
                    pivot: diag.to_f64_lossy(),
                });
            }
            let ljj = diag.sqrt();
            l[(j, j)] = ljj;
            for i in (j + 1)..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / ljj;
            }
        }
        Ok(Cholesky { l })
    }

    pub fn l(&self) -> &Matrix<T> {
        &self.l
    }

    /// Solves `L Y = B` column-wise.
    pub fn solve_lower(&self, b: &Matrix<T>) -> Matrix<T> {
        let n = self.l.rows();
        let mut y = b.clone();
        for c in 0..b.cols() {
            for i in 0..n {
                let mut s = y[(i, c)];
                for k in 0..i {
                    s -= self.l[(i, k)] * y[(k, c)];
                }
                y[(i, c)] = s / self.l[(i, i)];
            }
        }
        y
    }

    /// Solves `Lᵀ Y = B` column-wise.
    pub fn solve_upper(&self, b: &Matrix<T>) -> Matrix<T> {
        let n = self.l.rows();
        let mut y = b.clone();
        for c in 0..b.cols() {
            for i in (0..n).rev() {
                let mut s = y[(i, c)];
                for k in (i + 1)..n {
                    s -= self.l[(k, i)] * y[(k, c)];
                }
                y[(i, c)] = s / self.l[(i, i)];
            }
        }
        y
    }
}

/// Eigen-decomposition of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymmetricEigen<T> {
    /// Eigenvalues in ascending order.
    pub values: Vec<T>,
    /// Eigenvectors stored as columns, matching `values`.
    pub vectors: Matrix<T>,
}

impl<T: Scalar> SymmetricEigen<T> {
    /// Full spectrum of the symmetric matrix `a` (only the lower triangle is
    /// read after symmetrisation). Ties keep the order produced by the QL
    /// iteration.
    pub fn new(a: &Matrix<T>) -> Result<Self> {
        let n = a.rows();
        if n != a.cols() {
            return Err(CdemError::Internal("eigen of non-square matrix".into()));
        }
        if n == 0 {
            return Ok(SymmetricEigen {
                values: Vec::new(),
                vectors: Matrix::zeros(0, 0),
            });
        }
        if !a.is_finite() {
            return Err(CdemError::Numeric("non-finite entry in eigen input".into()));
        }
        let mut v = a.clone();
        v.symmetrize();
        let mut d = vec![T::zero(); n];
        let mut e = vec![T::zero(); n];
        tridiagonalize(&mut v, &mut d, &mut e);
        ql_implicit(&mut v, &mut d, &mut e)?;

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| d[i].partial_cmp(&d[j]).expect("finite eigenvalues"));
        let values = order.iter().map(|&i| d[i]).collect();
        let vectors = Matrix::from_fn(n, n, |r, c| v[(r, order[c])]);
        Ok(SymmetricEigen { values, vectors })
    }
}

// Householder reduction to tridiagonal form (Martin, Reinsch & Wilkinson
// tred2). On exit `v` holds the accumulated orthogonal transform, `d` the
// diagonal and `e[1..]` the sub-diagonal.
fn tridiagonalize<T: Scalar>(v: &mut Matrix<T>, d: &mut [T], e: &mut [T]) {
    let n = d.len();
    let zero = T::zero();
    for j in 0..n {
        d[j] = v[(n - 1, j)];
    }
    for i in (1..n).rev() {
        let mut scale = zero;
        let mut h = zero;
        for &dk in d.iter().take(i) {
            scale += dk.abs();
        }
        if scale == zero {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[(i - 1, j)];
                v[(i, j)] = zero;
                v[(j, i)] = zero;
            }
        } else {
            for dk in d.iter_mut().take(i) {
                *dk /= scale;
                h += *dk * *dk;
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > zero {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = zero;
            }
            for j in 0..i {
                f = d[j];
                v[(j, i)] = f;
                g = e[j] + v[(j, j)] * f;
                for k in (j + 1)..i {
                    g += v[(k, j)] * d[k];
                    e[k] += v[(k, j)] * f;
                }
                e[j] = g;
            }
            f = zero;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[(k, j)] -= f * e[k] + g * d[k];
                }
                d[j] = v[(i - 1, j)];
                v[(i, j)] = zero;
            }
        }
        d[i] = h;
    }

    for i in 0..n.saturating_sub(1) {
        v[(n - 1, i)] = v[(i, i)];
        v[(i, i)] = T::one();
        let h = d[i + 1];
        if h != zero {
            for k in 0..=i {
                d[k] = v[(k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = zero;
                for k in 0..=i {
                    g += v[(k, i + 1)] * v[(k, j)];
                }
                for k in 0..=i {
                    v[(k, j)] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[(k, i + 1)] = zero;
        }
    }
    for j in 0..n {
        d[j] = v[(n - 1, j)];
        v[(n - 1, j)] = zero;
    }
    v[(n - 1, n - 1)] = T::one();
    e[0] = zero;
}

// Implicit QL iteration on the symmetric tridiagonal matrix (tql2).
fn ql_implicit<T: Scalar>(v: &mut Matrix<T>, d: &mut [T], e: &mut [T]) -> Result<()> {
    let n = d.len();
    let zero = T::zero();
    let one = T::one();
    let two = T::lit(2.0);
    let eps = T::epsilon();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = zero;

    let mut f = zero;
    let mut tst1 = zero;
    let max_sweeps = 60 * n.max(1);
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut sweeps = 0usize;
            loop {
                sweeps += 1;
                if sweeps > max_sweeps {
                    return Err(CdemError::Numeric(format!(
                        "symmetric eigensolver failed to converge at index {l}"
                    )));
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (two * e[l]);
                let mut r = p.hypot(one);
                if p < zero {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = one;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = zero;
                let mut s2 = zero;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for k in 0..n {
                        h = v[(k, i + 1)];
                        v[(k, i + 1)] = s * v[(k, i)] + c * h;
                        v[(k, i)] = c * v[(k, i)] - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = zero;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matmul_and_transpose_agree() {
        let a = Matrix::<f64>::from_rows(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]).unwrap();
        let b = a.transpose();
        let ab = a.matmul(&b).unwrap();
        assert_eq!(ab.as_slice(), &[14.0, 32.0, 32.0, 77.0]);
        let atb = a.t_matmul(&a).unwrap();
        assert_eq!(atb, b.matmul(&a).unwrap());
    }

    #[test]
    fn cholesky_reconstructs() {
        let a = Matrix::<f64>::from_rows(&[
            vec![4.0, 2.0, 0.4],
            vec![2.0, 5.0, 1.0],
            vec![0.4, 1.0, 3.0],
        ])
        .unwrap();
        let ch = Cholesky::factor(&a).unwrap();
        let llt = ch.l().matmul(&ch.l().transpose()).unwrap();
        assert!(llt.max_abs_diff(&a) < 1e-14);
        let x = ch.solve_upper(&ch.solve_lower(&Matrix::identity(3)));
        let should_be_i = a.matmul(&x).unwrap();
        assert!(should_be_i.max_abs_diff(&Matrix::identity(3)) < 1e-14);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = Matrix::<f64>::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        let err = Cholesky::factor(&a).unwrap_err();
        assert_eq!(err.index, 1);
        assert!(err.pivot < 0.0);
    }

    #[test]
    fn eigen_of_diagonal_is_sorted() {
        let a = Matrix::<f64>::from_diag(&[3.0, 1.0, 2.0]);
        let eig = SymmetricEigen::new(&a).unwrap();
        assert_eq!(eig.values, vec![1.0, 2.0, 3.0]);
        assert!((eig.vectors[(1, 0)].abs() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn eigen_one_by_one() {
        let a = Matrix::<f64>::from_diag(&[-2.5]);
        let eig = SymmetricEigen::new(&a).unwrap();
        assert_eq!(eig.values, vec![-2.5]);
        assert_eq!(eig.vectors[(0, 0)].abs(), 1.0);
    }

    #[test]
    fn eigen_reconstructs_in_f32() {
        let a = Matrix::<f32>::from_rows(&[
            vec![2.0, -1.0, 0.0],
            vec![-1.0, 2.0, -1.0],
            vec![0.0, -1.0, 2.0],
        ])
        .unwrap();
        let eig = SymmetricEigen::new(&a).unwrap();
        let v = &eig.vectors;
        let rec = v
            .matmul(&Matrix::from_diag(&eig.values))
            .unwrap()
            .matmul(&v.transpose())
            .unwrap();
        assert!(rec.max_abs_diff(&a) < 1e-5);
    }

    #[test]
    fn sign_convention_makes_largest_entry_positive() {
        let mut m = Matrix::<f64>::from_rows(&[vec![0.1, -0.2], vec![-0.9, 0.3]]).unwrap();
        fix_column_signs(&mut m);
        assert_eq!(m.column(0), vec![-0.1, 0.9]);
        assert_eq!(m.column(1), vec![-0.2, 0.3]);
    }
}
