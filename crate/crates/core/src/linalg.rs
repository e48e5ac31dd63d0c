//! Small dense real linear algebra: row-major matrices, Cholesky solves and a
//! cyclic Jacobi eigensolver for symmetric matrices. Problem sizes here are a
//! few hundred unknowns at most.

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::scalar::{Real, C};

#[derive(Clone, Debug, PartialEq)]
pub struct RealMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> RealMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
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

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Real form `[[Re A, −Im A], [Im A, Re A]]` of a complex matrix given by
    /// its entries, acting on `(Re x, Im x)` stacked coordinates.
    pub fn from_complex(rows: usize, cols: usize, f: impl Fn(usize, usize) -> C<T>) -> Self {
        let mut m = Self::zeros(2 * rows, 2 * cols);
        for i in 0..rows {
            for j in 0..cols {
                let v = f(i, j);
                m[(i, j)] = v.re;
                m[(i, cols + j)] = -v.im;
                m[(rows + i, j)] = v.im;
                m[(rows + i, cols + j)] = v.re;
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        debug_assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// `Aᵀ y`.
    pub fn tr_mul_vec(&self, y: &[T]) -> Vec<T> {
        debug_assert_eq!(y.len(), self.rows);
        let mut out = vec![T::zero(); self.cols];
        for (i, yi) in y.iter().enumerate() {
            if *yi == T::zero() {
                continue;
            }
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o = *o + *a * *yi;
            }
        }
        out
    }

    /// `AᵀA`.
    pub fn gram(&self) -> Self {
        let n = self.cols;
        let mut g = Self::zeros(n, n);
        for i in 0..self.rows {
            let r = self.row(i);
            for a in 0..n {
                if r[a] == T::zero() {
                    continue;
                }
                for b in a..n {
                    g.data[a * n + b] = g.data[a * n + b] + r[a] * r[b];
                }
            }
        }
        for a in 0..n {
            for b in 0..a {
                g.data[a * n + b] = g.data[b * n + a];
            }
        }
        g
    }

    pub fn add_diagonal(&mut self, v: T) {
        for i in 0..self.rows.min(self.cols) {
            self[(i, i)] = self[(i, i)] + v;
        }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows);
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] = out.data[i * other.cols + j] + a * other[(k, j)];
                }
            }
        }
        out
    }

    /// Frobenius inner product `⟨A, B⟩ = tr(AᵀB)`.
    pub fn frobenius_dot(&self, other: &Self) -> T {
        dot(&self.data, &other.data)
    }

    pub fn frobenius_norm(&self) -> T {
        self.frobenius_dot(self).sqrt()
    }

    pub fn trace(&self) -> T {
        (0..self.rows.min(self.cols)).fold(T::zero(), |acc, i| acc + self[(i, i)])
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| f(*v)).collect(),
        }
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(T, T) -> T) -> Self {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| f(*a, *b)).collect(),
        }
    }

    /// `(A + Aᵀ)/2`.
    pub fn symmetrized(&self) -> Self {
        let half = T::lit(0.5);
        Self::from_fn(self.rows, self.cols, |i, j| half * (self[(i, j)] + self[(j, i)]))
    }

    /// Outer product `v wᵀ`.
    pub fn outer(v: &[T], w: &[T]) -> Self {
        Self::from_fn(v.len(), w.len(), |i, j| v[i] * w[j])
    }

    /// `vᵀ A v`.
    pub fn quadratic_form(&self, v: &[T]) -> T {
        dot(v, &self.mul_vec(v))
    }
}

impl<T> Index<(usize, usize)> for RealMatrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for RealMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (x, y)| acc + *x * *y)
}

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
#[derive(Clone, Debug)]
pub struct Cholesky<T> {
    l: RealMatrix<T>,
}

impl<T: Real> Cholesky<T> {
    pub fn new(a: &RealMatrix<T>) -> Result<Self> {
        let n = a.rows();
        if n != a.cols() {
            return Err(Error::LengthMismatch {
                expected: n,
                got: a.cols(),
            });
        }
        let mut l = RealMatrix::zeros(n, n);
        for j in 0..n {
            let mut d = a[(j, j)];
            for k in 0..j {
                d = d - l[(j, k)] * l[(j, k)];
            }
            if !(d > T::zero()) || !d.is_finite() {
                return Err(Error::Singular);
            }
            let d = d.sqrt();
            l[(j, j)] = d;
            for i in j + 1..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s = s - l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / d;
            }
        }
        Ok(Self { l })
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.l.rows();
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s = s - self.l[(i, k)] * y[k];
            }
            y[i] = s / self.l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s = s - self.l[(k, i)] * y[k];
            }
            y[i] = s / self.l[(i, i)];
        }
        y
    }
}

/// Eigen-decomposition of a symmetric matrix, eigenvalues sorted descending.
/// `vectors` holds the eigenvectors as columns.
#[derive(Clone, Debug)]
pub struct SymmetricEigen<T> {
    pub values: Vec<T>,
    pub vectors: RealMatrix<T>,
}

impl<T: Real> SymmetricEigen<T> {
    pub fn new(a: &RealMatrix<T>) -> Self {
        let n = a.rows();
        let mut m = a.symmetrized();
        let mut v = RealMatrix::identity(n);
        let scale = m.frobenius_norm();
        if scale > T::zero() {
            for _sweep in 0..100 {
                let mut off = T::zero();
                for i in 0..n {
                    for j in i + 1..n {
                        off = off + m[(i, j)] * m[(i, j)];
                    }
                }
                if off.sqrt() <= T::epsilon() * scale * T::lit(1e-2) {
                    break;
                }
                for p in 0..n {
                    for q in p + 1..n {
                        let apq = m[(p, q)];
                        if apq.abs() <= T::min_positive_value() {
                            continue;
                        }
                        let theta = (m[(q, q)] - m[(p, p)]) / (T::lit(2.0) * apq);
                        let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                        let cs = T::one() / (t * t + T::one()).sqrt();
                        let sn = t * cs;
                        for k in 0..n {
                            let mkp = m[(k, p)];
                            let mkq = m[(k, q)];
                            m[(k, p)] = cs * mkp - sn * mkq;
                            m[(k, q)] = sn * mkp + cs * mkq;
                        }
                        for k in 0..n {
                            let mpk = m[(p, k)];
                            let mqk = m[(q, k)];
                            m[(p, k)] = cs * mpk - sn * mqk;
                            m[(q, k)] = sn * mpk + cs * mqk;
                        }
                        for k in 0..n {
                            let vkp = v[(k, p)];
                            let vkq = v[(k, q)];
                            v[(k, p)] = cs * vkp - sn * vkq;
                            v[(k, q)] = sn * vkp + cs * vkq;
                        }
                    }
                }
            }
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| m[(j, j)].partial_cmp(&m[(i, i)]).unwrap_or(std::cmp::Ordering::Equal));
        let values = order.iter().map(|&i| m[(i, i)]).collect();
        let vectors = RealMatrix::from_fn(n, n, |r, col| v[(r, order[col])]);
        Self { values, vectors }
    }

    pub fn vector(&self, k: usize) -> Vec<T> {
        (0..self.vectors.rows()).map(|r| self.vectors[(r, k)]).collect()
    }

    /// `Σ f(λ_k) v_k v_kᵀ`.
    pub fn reconstruct(&self, f: impl Fn(T) -> T) -> RealMatrix<T> {
        let n = self.vectors.rows();
        let mut out = RealMatrix::zeros(n, n);
        for (k, lam) in self.values.iter().enumerate() {
            let w = f(*lam);
            if w == T::zero() {
                continue;
            }
            for i in 0..n {
                let vi = self.vectors[(i, k)] * w;
                for j in 0..n {
                    out[(i, j)] = out[(i, j)] + vi * self.vectors[(j, k)];
                }
            }
        }
        out
    }
}

/// Largest eigenvalue of a symmetric positive semidefinite matrix by power
/// iteration.
pub fn largest_eigenvalue_psd<T: Real>(a: &RealMatrix<T>) -> T {
    let n = a.rows();
    if n == 0 {
        return T::zero();
    }
    let mut v: Vec<T> = (0..n)
        .map(|i| T::one() + T::lit(0.01) * T::from_usize_lossy(i % 7))
        .collect();
    let mut lam = T::zero();
    for _ in 0..500 {
        let w = a.mul_vec(&v);
        let nw = crate::scalar::real_norm2(&w);
        if nw == T::zero() {
            return T::zero();
        }
        let next = nw / crate::scalar::real_norm2(&v);
        v = w.iter().map(|x| *x / nw).collect();
        if (next - lam).abs() <= T::lit(1e-12) * next {
            lam = next;
            break;
        }
        lam = next;
    }
    lam
}
