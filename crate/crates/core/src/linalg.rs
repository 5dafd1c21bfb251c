//! Dense vectors and matrices, Cholesky factorisation and the Moore-Penrose
//! pseudo-inverse.
//!
//! Vectors are plain `Vec<f64>` / `&[f64]`; [`DenseMatrix`] is row-major.

use crate::error::{check_len, Error, Result};

/// A dense vector. Constructors in this crate reject NaN and infinities.
pub type DenseVector = Vec<f64>;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows * cols != data.len() {
            return Err(Error::DimensionMismatch(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("matrix"));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::diag(&vec![1.0; n])
    }

    pub fn diag(d: &[f64]) -> Self {
        let n = d.len();
        let mut m = Self::zeros(n, n);
        for (i, &x) in d.iter().enumerate() {
            m.data[i * n + i] = x;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        Self::new(r, c, rows.concat())
    }

    /// Single-row matrix.
    pub fn row_vector(v: &[f64]) -> Self {
        Self {
            rows: 1,
            cols: v.len(),
            data: v.to_vec(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, x: f64) {
        self.data[i * self.cols + j] = x;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).collect()
    }

    pub fn trace(&self) -> f64 {
        self.diagonal().iter().sum()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.get(i, j);
            }
        }
        t
    }

    /// True when `max |M - Mᵀ| <= 1e-12`.
    pub fn is_symmetric(&self) -> bool {
        if !self.is_square() {
            return false;
        }
        (0..self.rows).all(|i| (0..i).all(|j| (self.get(i, j) - self.get(j, i)).abs() <= 1e-12))
    }

    /// `M v`
    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    /// `Mᵀ v`
    pub fn tr_matvec(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (i, &vi) in v.iter().enumerate() {
            if vi != 0.0 {
                axpy(vi, self.row(i), &mut out);
            }
        }
        out
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                axpy(a, other.row(k), dst);
            }
        }
        Ok(out)
    }

    /// `Mᵀ M`
    pub fn gram(&self) -> DenseMatrix {
        let p = self.cols;
        let mut g = Self::zeros(p, p);
        for r in 0..self.rows {
            let row = self.row(r);
            for i in 0..p {
                let a = row[i];
                if a == 0.0 {
                    continue;
                }
                for j in i..p {
                    g.data[i * p + j] += a * row[j];
                }
            }
        }
        for i in 0..p {
            for j in 0..i {
                g.data[i * p + j] = g.data[j * p + i];
            }
        }
        g
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| a * x).collect(),
        }
    }

    pub fn add(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch("matrix sum".into()));
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        })
    }

    /// `M + a I`
    pub fn add_diag(&self, a: f64) -> Self {
        let mut m = self.clone();
        for i in 0..self.rows.min(self.cols) {
            m.data[i * self.cols + i] += a;
        }
        m
    }

    /// `vᵀ M v`
    pub fn quad_form(&self, v: &[f64]) -> f64 {
        dot(v, &self.matvec(v))
    }

    pub fn max_abs_diff(&self, other: &DenseMatrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Stack matrices with equal column counts on top of each other.
    pub fn vstack(blocks: &[&DenseMatrix]) -> Result<DenseMatrix> {
        let cols = blocks.first().map_or(0, |b| b.cols);
        if blocks.iter().any(|b| b.cols != cols) {
            return Err(Error::DimensionMismatch("vstack column counts".into()));
        }
        let data: Vec<f64> = blocks.iter().flat_map(|b| b.data.iter().copied()).collect();
        let rows = blocks.iter().map(|b| b.rows).sum();
        Ok(Self { rows, cols, data })
    }

    fn to_nalgebra(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    fn from_nalgebra(m: &nalgebra::DMatrix<f64>) -> Self {
        let (rows, cols) = m.shape();
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(m[(i, j)]);
            }
        }
        Self { rows, cols, data }
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `y += a x`
#[inline]
pub fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

pub fn norm2(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

pub fn norm1(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

pub fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn scale(a: f64, v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| a * x).collect()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

pub fn all_finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

pub(crate) fn require_finite(what: &'static str, v: &[f64]) -> Result<()> {
    if all_finite(v) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

/// Lower Cholesky factor `L` with `L Lᵀ = M`, kept for repeated solves.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: DenseMatrix,
}

impl Cholesky {
    pub fn new(m: &DenseMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch("Cholesky needs a square matrix".into()));
        }
        let n = m.rows();
        let max_diag = m.diagonal().iter().fold(0.0_f64, |a, &b| a.max(b.abs()));
        let floor = 1e-14 * max_diag.max(f64::MIN_POSITIVE);
        let mut l = DenseMatrix::zeros(n, n);
        for j in 0..n {
            let lj = &l.data[j * n..j * n + j];
            let d = m.get(j, j) - dot(lj, lj);
            if !(d > floor) {
                return Err(Error::NotPositiveDefinite { row: j, pivot: d });
            }
            let djj = d.sqrt();
            l.data[j * n + j] = djj;
            for i in j + 1..n {
                let s = m.get(i, j) - dot(&l.data[i * n..i * n + j], &l.data[j * n..j * n + j]);
                l.data[i * n + j] = s / djj;
            }
        }
        Ok(Self { l })
    }

    pub fn lower(&self) -> &DenseMatrix {
        &self.l
    }

    pub fn dim(&self) -> usize {
        self.l.rows()
    }

    /// Solve `L y = b`.
    pub fn forward(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut y = b.to_vec();
        for i in 0..n {
            let s = dot(&self.l.data[i * n..i * n + i], &y[..i]);
            y[i] = (y[i] - s) / self.l.data[i * n + i];
        }
        y
    }

    /// Solve `Lᵀ x = y`.
    pub fn backward(&self, y: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut x = y.to_vec();
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..n {
                s -= self.l.data[k * n + i] * x[k];
            }
            x[i] = s / self.l.data[i * n + i];
        }
        x
    }

    /// Solve `M x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        self.backward(&self.forward(b))
    }
}

pub fn cholesky_lower(m: &DenseMatrix) -> Result<DenseMatrix> {
    if !m.is_symmetric() {
        return Err(Error::InvalidInput("Cholesky input is not symmetric".into()));
    }
    Ok(Cholesky::new(m)?.l)
}

pub fn solve_spd(m: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    check_len("rhs", b.len(), m.rows())?;
    Ok(Cholesky::new(m)?.solve(b))
}

/// Moore-Penrose pseudo-inverse via the SVD, singular values below
/// `max(m, n) * eps * s_max` treated as zero.
pub fn pseudo_inverse(a: &DenseMatrix) -> DenseMatrix {
    if a.rows() == 0 || a.cols() == 0 {
        return DenseMatrix::zeros(a.cols(), a.rows());
    }
    let svd = a.to_nalgebra().svd(true, true);
    let smax = svd.singular_values.iter().fold(0.0_f64, |m, &s| m.max(s));
    let eps = (a.rows().max(a.cols()) as f64) * f64::EPSILON * smax;
    match svd.pseudo_inverse(eps.max(f64::MIN_POSITIVE)) {
        Ok(p) => DenseMatrix::from_nalgebra(&p),
        Err(_) => DenseMatrix::zeros(a.cols(), a.rows()),
    }
}

/// Eigen-decomposition `M = U diag(d) Uᵀ` of a symmetric matrix; returns
/// `(d, U)` with eigenvectors in the columns of `U`.
pub fn symmetric_eigen(m: &DenseMatrix) -> (Vec<f64>, DenseMatrix) {
    let e = m.to_nalgebra().symmetric_eigen();
    (
        e.eigenvalues.iter().copied().collect(),
        DenseMatrix::from_nalgebra(&e.eigenvectors),
    )
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(m: &DenseMatrix) -> f64 {
    let e = m.to_nalgebra().symmetric_eigen();
    e.eigenvalues.iter().fold(f64::INFINITY, |a, &b| a.min(b))
}
