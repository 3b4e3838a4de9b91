//! Small dense linear algebra shared by the exact and floating backends.
//!
//! Matrices here are tiny (a few dozen rows at most), so everything is a plain
//! row-major `Vec`. Rank decisions are delegated to a [`RankOracle`]: exact
//! row reduction over the rationals, or an SVD cutoff in floating point.

mod exact;
mod float;

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub use exact::ExactOracle;
pub use float::{eigenvalues, lstsq, singular_values, FloatOracle};

/// Scalar types the generic routines run over.
pub trait Scalar:
    Clone
    + Debug
    + PartialEq
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Send
    + Sync
    + 'static
{
    fn to_c64(&self) -> Complex64;

    fn from_i64(k: i64) -> Self;

    fn magnitude(&self) -> f64 {
        self.to_c64().norm()
    }
}

impl Scalar for Complex64 {
    fn to_c64(&self) -> Complex64 {
        *self
    }

    fn from_i64(k: i64) -> Self {
        Complex64::new(k as f64, 0.0)
    }
}

impl Scalar for BigRational {
    fn to_c64(&self) -> Complex64 {
        Complex64::new(rational_to_f64(self), 0.0)
    }

    fn from_i64(k: i64) -> Self {
        BigRational::from_integer(k.into())
    }

    fn magnitude(&self) -> f64 {
        rational_to_f64(&self.abs())
    }
}

pub(crate) fn rational_to_f64(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

pub type CMatrix = Mat<Complex64>;
pub type QMatrix = Mat<BigRational>;

impl<S: Scalar> Mat<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![S::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { S::one() } else { S::zero() })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> S) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix whose rows are the given vectors.
    pub fn from_rows(rows: &[Vec<S>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged rows");
        Self {
            rows: rows.len(),
            cols,
            data: rows.iter().flat_map(|r| r.iter().cloned()).collect(),
        }
    }

    /// Builds a matrix whose columns are the given vectors.
    pub fn from_columns(cols: &[Vec<S>], nrows: usize) -> Self {
        Self::from_fn(nrows, cols.len(), |i, j| cols[j][i].clone())
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &S {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: S) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[S] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn rows_vec(&self) -> Vec<Vec<S>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn column(&self, j: usize) -> Vec<S> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i).clone())
    }

    /// Principal submatrix on the index range `lo..hi` (rows and columns).
    pub fn principal(&self, lo: usize, hi: usize) -> Self {
        Self::from_fn(hi - lo, hi - lo, |i, j| self.get(lo + i, lo + j).clone())
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "dimension mismatch in matmul");
        Self::from_fn(self.rows, other.cols, |i, j| {
            let mut acc = S::zero();
            for k in 0..self.cols {
                acc = acc + self.get(i, k).clone() * other.get(k, j).clone();
            }
            acc
        })
    }

    /// `self - lambda * I`.
    pub fn shifted(&self, lambda: &S) -> Self {
        assert!(self.is_square());
        let mut out = self.clone();
        for i in 0..self.rows {
            let v = out.get(i, i).clone() - lambda.clone();
            out.set(i, i, v);
        }
        out
    }

    pub fn pow(&self, k: usize) -> Self {
        assert!(self.is_square());
        let mut acc = Self::identity(self.rows);
        for _ in 0..k {
            acc = acc.matmul(self);
        }
        acc
    }

    /// Column vector product `A x`.
    pub fn mul_vec(&self, x: &[S]) -> Vec<S> {
        assert_eq!(self.cols, x.len());
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(x)
                    .fold(S::zero(), |acc, (a, b)| acc + a.clone() * b.clone())
            })
            .collect()
    }

    /// Row vector product `x A`.
    pub fn vec_mul(&self, x: &[S]) -> Vec<S> {
        assert_eq!(self.rows, x.len());
        (0..self.cols)
            .map(|j| {
                (0..self.rows).fold(S::zero(), |acc, i| {
                    acc + x[i].clone() * self.get(i, j).clone()
                })
            })
            .collect()
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> Mat<T> {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn to_complex(&self) -> CMatrix {
        self.map(Scalar::to_c64)
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(Scalar::magnitude).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

impl CMatrix {
    pub fn to_nalgebra(&self) -> nalgebra::DMatrix<Complex64> {
        nalgebra::DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    pub fn from_nalgebra(m: &nalgebra::DMatrix<Complex64>) -> Self {
        Self::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
    }

    pub fn try_inverse(&self) -> Option<Self> {
        self.to_nalgebra()
            .try_inverse()
            .map(|m| Self::from_nalgebra(&m))
    }
}

/// Rank-revealing operations, exact or tolerance based.
pub trait RankOracle<S: Scalar> {
    /// Basis of `{x : A x = 0}`.
    fn nullspace(&self, a: &Mat<S>) -> Vec<Vec<S>>;

    fn rank(&self, a: &Mat<S>) -> usize {
        a.ncols() - self.nullspace(a).len()
    }

    /// Some `x` with `A x = b`, or `None` when `b` is outside the range of `A`.
    fn solve(&self, a: &Mat<S>, b: &[S]) -> Option<Vec<S>>;

    /// Whether the vector is zero (exactly, or relative to `scale`).
    fn is_zero_vec(&self, v: &[S], scale: f64) -> bool;

    /// Scalar `s` such that `s * v` has unit max-norm and a real positive first
    /// nonzero entry. `None` for the zero vector.
    fn normalizer(&self, v: &[S]) -> Option<S>;
}

pub(crate) fn max_abs<S: Scalar>(v: &[S]) -> f64 {
    v.iter().map(Scalar::magnitude).fold(0.0, f64::max)
}

/// `d^k` for any integer `k`; negative powers go through `1/d`.
pub fn powi<S: Scalar>(d: &S, k: i64) -> S {
    let base = if k < 0 { S::one() / d.clone() } else { d.clone() };
    let mut e = k.unsigned_abs();
    let mut acc = S::one();
    let mut sq = base;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * sq.clone();
        }
        e >>= 1;
        if e > 0 {
            sq = sq.clone() * sq;
        }
    }
    acc
}

/// Determinant by Gaussian elimination with largest-magnitude pivots.
pub fn det<S: Scalar>(a: &Mat<S>) -> S {
    assert!(a.is_square());
    let n = a.nrows();
    let mut m = a.clone();
    let mut acc = S::one();
    for c in 0..n {
        let p = (c..n)
            .filter(|&i| !m.get(i, c).is_zero())
            .max_by(|&i, &j| m.get(i, c).magnitude().total_cmp(&m.get(j, c).magnitude()));
        let Some(p) = p else { return S::zero() };
        if p != c {
            for j in 0..n {
                let tmp = m.get(p, j).clone();
                m.set(p, j, m.get(c, j).clone());
                m.set(c, j, tmp);
            }
            acc = -acc;
        }
        let piv = m.get(c, c).clone();
        acc = acc * piv.clone();
        for i in c + 1..n {
            let f = m.get(i, c).clone() / piv.clone();
            if f.is_zero() {
                continue;
            }
            for j in c..n {
                let v = m.get(i, j).clone() - f.clone() * m.get(c, j).clone();
                m.set(i, j, v);
            }
        }
    }
    acc
}

/// Characteristic polynomial `det(xI - A)`, coefficients low to high, by the
/// Faddeev–LeVerrier recurrence.
pub fn charpoly<S: Scalar>(a: &Mat<S>, from_usize: impl Fn(usize) -> S) -> Vec<S> {
    assert!(a.is_square());
    let n = a.nrows();
    let mut coeffs = vec![S::zero(); n + 1];
    coeffs[n] = S::one();
    let mut m = Mat::<S>::zeros(n, n);
    for k in 1..=n {
        // M_k = A M_{k-1} + c_{n-k+1} I
        let mut next = a.matmul(&m);
        for i in 0..n {
            let v = next.get(i, i).clone() + coeffs[n - k + 1].clone();
            next.set(i, i, v);
        }
        let am = a.matmul(&next);
        let trace = (0..n).fold(S::zero(), |acc, i| acc + am.get(i, i).clone());
        coeffs[n - k] = -(trace / from_usize(k));
        m = next;
    }
    coeffs
}
