//! Dense row-major vectors and matrices, plus the Cholesky and symmetric
//! eigenvalue decompositions.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Deref, DerefMut, Index, IndexMut};

use num_complex::Complex64;

use crate::error::{Error, Result};

const SYMMETRY_TOL: f64 = 1e-12;
const CHOLESKY_PIVOT_MIN: f64 = 1e-14;
const JACOBI_MAX_SWEEPS: usize = 100;

#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct Vector(Vec<f64>);

impl Vector {
    pub fn new(entries: Vec<f64>) -> Self {
        Vector(entries)
    }

    pub fn zeros(d: usize) -> Self {
        Vector(vec![0.0; d])
    }

    pub fn filled(d: usize, value: f64) -> Self {
        Vector(vec![value; d])
    }

    /// The `i`-th standard basis vector of dimension `d`.
    pub fn basis(d: usize, i: usize) -> Self {
        let mut v = Self::zeros(d);
        v.0[i] = 1.0;
        v
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn dot(&self, other: &Vector) -> f64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        libm::sqrt(self.norm_sq())
    }

    pub fn scaled(&self, s: f64) -> Vector {
        Vector(self.0.iter().map(|a| a * s).collect())
    }

    pub fn add(&self, other: &Vector) -> Vector {
        Vector(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &Vector) -> Vector {
        Vector(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    /// `self + s * other`
    pub fn axpy(&self, s: f64, other: &Vector) -> Vector {
        Vector(self.0.iter().zip(&other.0).map(|(a, b)| a + s * b).collect())
    }

    pub fn add_assign_scaled(&mut self, s: f64, other: &Vector) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += s * b;
        }
    }

    pub fn neg(&self) -> Vector {
        self.scaled(-1.0)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|a| a.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, a| m.max(a.abs()))
    }
}

impl From<Vec<f64>> for Vector {
    fn from(v: Vec<f64>) -> Self {
        Vector(v)
    }
}

impl From<&[f64]> for Vector {
    fn from(v: &[f64]) -> Self {
        Vector(v.to_vec())
    }
}

impl<const N: usize> From<[f64; N]> for Vector {
    fn from(v: [f64; N]) -> Self {
        Vector(v.to_vec())
    }
}

impl Deref for Vector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for Vector {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

/// Inner product. 2n−1 flops.
pub fn inner(u: &Vector, v: &Vector) -> Result<f64> {
    check_dim(u.dim(), v.dim())?;
    Ok(u.dot(v))
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        check_dim(rows * cols, data.len())?;
        Ok(Matrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(d: usize) -> Self {
        let mut m = Self::zeros(d, d);
        for i in 0..d {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let d = diag.len();
        let mut m = Self::zeros(d, d);
        for (i, &v) in diag.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    /// Builds a matrix from equally long rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.as_ref().len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            check_dim(c, row.as_ref().len())?;
            data.extend_from_slice(row.as_ref());
        }
        Ok(Matrix { rows: r, cols: c, data })
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(cols: &[Vector]) -> Result<Self> {
        let c = cols.len();
        let r = cols.first().map_or(0, |v| v.dim());
        let mut m = Self::zeros(r, c);
        for (j, col) in cols.iter().enumerate() {
            check_dim(r, col.dim())?;
            for i in 0..r {
                m[(i, j)] = col[i];
            }
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vector {
        (0..self.rows).map(|i| self[(i, j)]).collect::<Vec<_>>().into()
    }

    pub fn diagonal(&self) -> Vector {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect::<Vec<_>>().into()
    }

    pub fn trace(&self) -> f64 {
        self.diagonal().iter().sum()
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn frobenius_norm(&self) -> f64 {
        libm::sqrt(self.data.iter().map(|a| a * a).sum())
    }

    pub fn scaled(&self, s: f64) -> Matrix {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|a| a * s).collect() }
    }

    pub fn add(&self, other: &Matrix) -> Result<Matrix> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(&self, other: &Matrix, f: impl Fn(f64, f64) -> f64) -> Result<Matrix> {
        check_dim(self.rows, other.rows)?;
        check_dim(self.cols, other.cols)?;
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect();
        Ok(Matrix { rows: self.rows, cols: self.cols, data })
    }

    /// ½(A + Aᵀ)
    pub fn symmetrized(&self) -> Matrix {
        let mut s = self.clone();
        for i in 0..self.rows {
            for j in 0..self.cols {
                s[(i, j)] = 0.5 * (self[(i, j)] + self[(j, i)]);
            }
        }
        s
    }

    /// Largest |aᵢⱼ − aⱼᵢ|; infinite for non-square input.
    pub fn asymmetry(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    /// Symmetric up to 1e−12, measured relative to the largest entry when that exceeds one.
    pub fn is_symmetric(&self) -> bool {
        let scale = self.data.iter().fold(1.0f64, |m, a| m.max(a.abs()));
        self.asymmetry() <= SYMMETRY_TOL * scale
    }

    pub fn matvec(&self, x: &Vector) -> Result<Vector> {
        check_dim(self.cols, x.dim())?;
        Ok(self.mul_vec(x))
    }

    pub(crate) fn mul_vec(&self, x: &Vector) -> Vector {
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x.iter()).map(|(a, b)| a * b).sum())
            .collect::<Vec<f64>>()
            .into()
    }

    /// `xᵀ A y`
    pub fn bilinear(&self, x: &Vector, y: &Vector) -> f64 {
        x.dot(&self.mul_vec(y))
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        matmul(self, other)
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Standard product; an m×n by n×k product costs mk(2n−1) flops.
pub fn matmul(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    check_dim(a.cols, b.rows)?;
    let mut c = Matrix::zeros(a.rows, b.cols);
    for i in 0..a.rows {
        for p in 0..a.cols {
            let aip = a[(i, p)];
            if aip == 0.0 {
                continue;
            }
            for j in 0..b.cols {
                c[(i, j)] += aip * b[(p, j)];
            }
        }
    }
    Ok(c)
}

fn require_symmetric(a: &Matrix) -> Result<()> {
    if a.is_symmetric() {
        Ok(())
    } else {
        Err(Error::NonSymmetric)
    }
}

/// Upper triangular `r` with positive diagonal and `rᵀr = A`.
#[derive(Debug, Clone, PartialEq)]
pub struct CholeskyFactor {
    r: Matrix,
}

impl CholeskyFactor {
    pub fn r(&self) -> &Matrix {
        &self.r
    }

    pub fn dim(&self) -> usize {
        self.r.rows
    }

    /// Solves `Rᵀy = b`.
    pub fn solve_lower(&self, b: &Vector) -> Vector {
        let n = self.dim();
        let mut y = b.clone();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= self.r[(k, i)] * y[k];
            }
            y[i] = s / self.r[(i, i)];
        }
        y
    }

    /// Solves `Rx = y`.
    pub fn solve_upper(&self, y: &Vector) -> Vector {
        let n = self.dim();
        let mut x = y.clone();
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in (i + 1)..n {
                s -= self.r[(i, k)] * x[k];
            }
            x[i] = s / self.r[(i, i)];
        }
        x
    }

    /// Solves `Ax = b` with two triangular solves.
    pub fn solve(&self, b: &Vector) -> Result<Vector> {
        check_dim(self.dim(), b.dim())?;
        Ok(self.solve_upper(&self.solve_lower(b)))
    }

    pub fn reconstruct(&self) -> Matrix {
        // square of an upper factor is symmetric
        matmul(&self.r.transpose(), &self.r).expect("square factor")
    }
}

pub fn cholesky(a: &Matrix) -> Result<CholeskyFactor> {
    require_symmetric(a)?;
    let n = a.rows;
    let mut r = Matrix::zeros(n, n);
    for j in 0..n {
        let mut diag = a[(j, j)];
        for k in 0..j {
            diag -= r[(k, j)] * r[(k, j)];
        }
        if !(diag > CHOLESKY_PIVOT_MIN) {
            return Err(Error::NotPositiveDefinite);
        }
        let rjj = libm::sqrt(diag);
        r[(j, j)] = rjj;
        for i in (j + 1)..n {
            let mut s = a[(j, i)];
            for k in 0..j {
                s -= r[(k, j)] * r[(k, i)];
            }
            r[(j, i)] = s / rjj;
        }
    }
    Ok(CholeskyFactor { r })
}

/// Orthonormal eigenvectors as the columns of `q`, eigenvalues in descending order.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    pub q: Matrix,
    pub lambda: Vector,
}

impl SpectralDecomposition {
    pub fn reconstruct(&self) -> Matrix {
        self.with_eigenvalues(|l| l)
    }

    /// `Q f(Λ) Qᵀ`
    pub fn with_eigenvalues(&self, f: impl Fn(f64) -> f64) -> Matrix {
        let n = self.lambda.dim();
        let mut out = Matrix::zeros(n, n);
        for k in 0..n {
            let fk = f(self.lambda[k]);
            if fk == 0.0 {
                continue;
            }
            for i in 0..n {
                let qik = self.q[(i, k)] * fk;
                for j in 0..n {
                    out[(i, j)] += qik * self.q[(j, k)];
                }
            }
        }
        out
    }

    /// Number of eigenvalues with magnitude above `tol`.
    pub fn rank(&self, tol: f64) -> usize {
        self.lambda.iter().filter(|l| l.abs() > tol).count()
    }

    pub fn eigenvector(&self, k: usize) -> Vector {
        self.q.column(k)
    }

    pub fn max_abs_eigenvalue(&self) -> f64 {
        self.lambda.max_abs()
    }
}

/// Cyclic Jacobi rotations until the off-diagonal mass is below 1e−12·‖A‖_F.
pub fn spectral(a: &Matrix) -> Result<SpectralDecomposition> {
    require_symmetric(a)?;
    let n = a.rows;
    let mut m = a.symmetrized();
    let mut v = Matrix::identity(n);
    let target = 1e-12 * a.frobenius_norm();

    let off = |m: &Matrix| {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += m[(i, j)] * m[(i, j)];
                }
            }
        }
        libm::sqrt(s)
    };

    let mut sweeps = 0;
    while off(&m) > target {
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::NoConvergence);
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + libm::sqrt(theta * theta + 1.0))
                };
                let c = 1.0 / libm::sqrt(t * t + 1.0);
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(j, j)].total_cmp(&m[(i, i)]));

    let mut q = Matrix::zeros(n, n);
    let mut lambda = Vector::zeros(n);
    for (col, &src) in order.iter().enumerate() {
        lambda[col] = m[(src, src)];
        let mut big = 0.0f64;
        let mut sign = 1.0;
        for i in 0..n {
            let x = v[(i, src)];
            if x.abs() > big {
                big = x.abs();
                sign = if x < 0.0 { -1.0 } else { 1.0 };
            }
        }
        for i in 0..n {
            q[(i, col)] = sign * v[(i, src)];
        }
    }
    Ok(SpectralDecomposition { q, lambda })
}

/// Eigenvalues of a 2×2 matrix by the quadratic formula.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eigenpair2x2 {
    pub alpha: Complex64,
    pub beta: Complex64,
}

impl Eigenpair2x2 {
    pub fn spectral_radius(&self) -> f64 {
        self.alpha.norm().max(self.beta.norm())
    }
}

pub fn eig2x2(b: &Matrix) -> Result<Eigenpair2x2> {
    check_dim(2, b.rows)?;
    check_dim(2, b.cols)?;
    let tr = b[(0, 0)] + b[(1, 1)];
    let det = b[(0, 0)] * b[(1, 1)] - b[(0, 1)] * b[(1, 0)];
    let half = 0.5 * tr;
    let disc = Complex64::new(half * half - det, 0.0).sqrt();
    let h = Complex64::new(half, 0.0);
    // pick the root that avoids cancellation, recover the other from the product
    let big = if half >= 0.0 { h + disc } else { h - disc };
    let small = if big.norm() == 0.0 { Complex64::new(0.0, 0.0) } else { Complex64::new(det, 0.0) / big };
    Ok(Eigenpair2x2 { alpha: big, beta: small })
}

/// λ_max / λ_min of a symmetric positive definite matrix.
pub fn condition_number(a: &Matrix) -> Result<f64> {
    let s = spectral(a)?;
    let n = s.lambda.dim();
    if n == 0 {
        return Err(Error::Singular);
    }
    let hi = s.lambda[0];
    let lo = s.lambda[n - 1];
    if lo <= 1e-12 * hi || hi <= 0.0 {
        return Err(Error::Singular);
    }
    Ok(hi / lo)
}

/// `√(eᵀAe)`
pub fn energy_norm(e: &Vector, a: &Matrix) -> Result<f64> {
    check_dim(a.cols, e.dim())?;
    let q = a.bilinear(e, e);
    if q < -1e-12 {
        return Err(Error::NegativeQuadraticForm);
    }
    Ok(libm::sqrt(q.max(0.0)))
}

/// `QΛᵐQᵀ`
pub fn matrix_power(a: &Matrix, m: u32) -> Result<Matrix> {
    let s = spectral(a)?;
    if m == 0 {
        return Ok(Matrix::identity(a.rows));
    }
    Ok(s.with_eigenvalues(|l| libm::pow(l, m as f64)))
}

/// Gaussian elimination with partial pivoting; `Singular` when a pivot falls
/// below 1e−14 of the largest entry.
pub fn lu_solve(a: &Matrix, b: &Vector) -> Result<Vector> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch { expected: a.rows, found: a.cols });
    }
    check_dim(a.rows, b.dim())?;
    let n = a.rows;
    let mut m = a.clone();
    let mut x = b.clone();
    let scale = a.data.iter().fold(0.0f64, |s, v| s.max(v.abs()));
    if scale == 0.0 {
        return Err(Error::Singular);
    }
    for k in 0..n {
        let mut piv = k;
        for i in (k + 1)..n {
            if m[(i, k)].abs() > m[(piv, k)].abs() {
                piv = i;
            }
        }
        if m[(piv, k)].abs() <= 1e-14 * scale {
            return Err(Error::Singular);
        }
        if piv != k {
            for j in 0..n {
                let tmp = m[(k, j)];
                m[(k, j)] = m[(piv, j)];
                m[(piv, j)] = tmp;
            }
            x.swap(k, piv);
        }
        for i in (k + 1)..n {
            let f = m[(i, k)] / m[(k, k)];
            if f == 0.0 {
                continue;
            }
            for j in k..n {
                m[(i, j)] -= f * m[(k, j)];
            }
            x[i] -= f * x[k];
        }
    }
    for i in (0..n).rev() {
        let mut s = x[i];
        for j in (i + 1)..n {
            s -= m[(i, j)] * x[j];
        }
        x[i] = s / m[(i, i)];
    }
    Ok(x)
}

/// Inverse by column-wise elimination; only for small transforms.
pub fn inverse(a: &Matrix) -> Result<Matrix> {
    let n = a.rows;
    let cols = (0..n)
        .map(|j| lu_solve(a, &Vector::basis(n, j)))
        .collect::<Result<Vec<_>>>()?;
    Matrix::from_columns(&cols)
}

/// Solves a symmetric system through Cholesky, falling back to pivoted
/// elimination when the matrix is not positive definite.
pub fn solve_symmetric(a: &Matrix, b: &Vector) -> Result<Vector> {
    match cholesky(a) {
        Ok(f) => f.solve(b),
        Err(Error::NotPositiveDefinite) => lu_solve(a, b),
        Err(e) => Err(e),
    }
}
