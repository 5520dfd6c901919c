use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::poly::Poly;
use super::ExactLaError;

/// Ring elements the dense matrices and polynomials are generic over.
pub trait Scalar:
    Clone
    + PartialEq
    + fmt::Debug
    + fmt::Display
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
{
}

impl<T> Scalar for T where
    T: Clone
        + PartialEq
        + fmt::Debug
        + fmt::Display
        + Zero
        + One
        + Add<Output = T>
        + Sub<Output = T>
        + Mul<Output = T>
        + Neg<Output = T>
{
}

/// Dense row-major matrix with exact entries.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

pub type IntegerMatrix = Matrix<BigInt>;
pub type RationalMatrix = Matrix<BigRational>;

impl<T: Scalar> Matrix<T> {
    pub fn new(rows: usize, cols: usize, data: Vec<T>) -> Result<Self, ExactLaError> {
        if data.len() != rows * cols {
            return Err(ExactLaError::BadLength {
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { T::one() } else { T::zero() })
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

    /// Builds a matrix from its rows; all rows must have equal length.
    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self, ExactLaError> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(nrows * ncols);
        for row in rows {
            if row.len() != ncols {
                return Err(ExactLaError::BadLength {
                    expected: ncols,
                    found: row.len(),
                });
            }
            data.extend(row);
        }
        Ok(Matrix {
            rows: nrows,
            cols: ncols,
            data,
        })
    }

    pub fn diagonal(entries: Vec<T>) -> Self {
        let n = entries.len();
        let mut m = Self::zeros(n, n);
        for (i, e) in entries.into_iter().enumerate() {
            m.data[i * n + i] = e;
        }
        m
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

    pub fn entries(&self) -> &[T] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> &T {
        assert!(i < self.rows && j < self.cols, "index ({i},{j}) out of range");
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: T) {
        assert!(i < self.rows && j < self.cols, "index ({i},{j}) out of range");
        self.data[i * self.cols + j] = value;
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn from_columns(columns: &[Vec<T>]) -> Result<Self, ExactLaError> {
        let cols = columns.len();
        let rows = columns.first().map_or(0, Vec::len);
        if let Some(bad) = columns.iter().find(|c| c.len() != rows) {
            return Err(ExactLaError::BadLength {
                expected: rows,
                found: bad.len(),
            });
        }
        Ok(Self::from_fn(rows, cols, |i, j| columns[j][i].clone()))
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i).clone())
    }

    pub fn map<U: Scalar>(&self, mut f: impl FnMut(&T) -> U) -> Matrix<U> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(&mut f).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    pub fn is_identity(&self) -> bool {
        self.is_square()
            && (0..self.rows).all(|i| {
                (0..self.cols).all(|j| {
                    let e = self.get(i, j);
                    if i == j {
                        e.is_one()
                    } else {
                        e.is_zero()
                    }
                })
            })
    }

    pub fn checked_mul(&self, rhs: &Self) -> Result<Self, ExactLaError> {
        if self.cols != rhs.rows {
            return Err(ExactLaError::DimensionMismatch {
                left: (self.rows, self.cols),
                right: (rhs.rows, rhs.cols),
            });
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    let b = rhs.get(k, j);
                    if b.is_zero() {
                        continue;
                    }
                    let idx = i * out.cols + j;
                    out.data[idx] = out.data[idx].clone() + a.clone() * b.clone();
                }
            }
        }
        Ok(out)
    }

    pub fn checked_add(&self, rhs: &Self) -> Result<Self, ExactLaError> {
        self.zip_with(rhs, |a, b| a.clone() + b.clone())
    }

    pub fn checked_sub(&self, rhs: &Self) -> Result<Self, ExactLaError> {
        self.zip_with(rhs, |a, b| a.clone() - b.clone())
    }

    fn zip_with(&self, rhs: &Self, f: impl Fn(&T, &T) -> T) -> Result<Self, ExactLaError> {
        if self.rows != rhs.rows || self.cols != rhs.cols {
            return Err(ExactLaError::DimensionMismatch {
                left: (self.rows, self.cols),
                right: (rhs.rows, rhs.cols),
            });
        }
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| f(a, b))
                .collect(),
        })
    }

    pub fn scale(&self, c: &T) -> Self {
        self.map(|e| e.clone() * c.clone())
    }

    pub fn mul_vec(&self, v: &[T]) -> Result<Vec<T>, ExactLaError> {
        if v.len() != self.cols {
            return Err(ExactLaError::BadLength {
                expected: self.cols,
                found: v.len(),
            });
        }
        Ok((0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .fold(T::zero(), |acc, (a, b)| acc + a.clone() * b.clone())
            })
            .collect())
    }

    /// `I - self`, the matrix whose determinant the fixed-point formulas evaluate.
    pub fn identity_minus(&self) -> Result<Self, ExactLaError> {
        self.require_square()?;
        Self::identity(self.rows).checked_sub(self)
    }

    pub fn pow(&self, e: u32) -> Result<Self, ExactLaError> {
        self.require_square()?;
        let mut result = Self::identity(self.rows);
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                result = &result * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        Ok(result)
    }

    pub fn kronecker(&self, rhs: &Self) -> Self {
        Self::from_fn(self.rows * rhs.rows, self.cols * rhs.cols, |i, j| {
            self.get(i / rhs.rows, j / rhs.cols).clone() * rhs.get(i % rhs.rows, j % rhs.cols).clone()
        })
    }

    pub fn submatrix(&self, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> Self {
        let (r0, c0) = (rows.start, cols.start);
        Self::from_fn(rows.len(), cols.len(), |i, j| self.get(r0 + i, c0 + j).clone())
    }

    pub fn block_diagonal(blocks: &[Self]) -> Self {
        let n: usize = blocks.iter().map(|b| b.rows).sum();
        let m: usize = blocks.iter().map(|b| b.cols).sum();
        let mut out = Self::zeros(n, m);
        let (mut r, mut c) = (0, 0);
        for b in blocks {
            for i in 0..b.rows {
                for j in 0..b.cols {
                    out.set(r + i, c + j, b.get(i, j).clone());
                }
            }
            r += b.rows;
            c += b.cols;
        }
        out
    }

    pub fn commutes_with(&self, other: &Self) -> bool {
        self.is_square() && self.rows == other.rows && other.is_square() && (self * other) == (other * self)
    }

    pub(crate) fn require_square(&self) -> Result<(), ExactLaError> {
        if self.is_square() {
            Ok(())
        } else {
            Err(ExactLaError::NotSquare {
                rows: self.rows,
                cols: self.cols,
            })
        }
    }

    pub(crate) fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    pub(crate) fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for i in 0..self.rows {
            self.data.swap(i * self.cols + a, i * self.cols + b);
        }
    }

    /// row[target] += factor * row[source]
    pub(crate) fn add_row_multiple(&mut self, target: usize, source: usize, factor: &T) {
        if factor.is_zero() {
            return;
        }
        for j in 0..self.cols {
            let s = self.data[source * self.cols + j].clone();
            let idx = target * self.cols + j;
            self.data[idx] = self.data[idx].clone() + factor.clone() * s;
        }
    }

    /// col[target] += factor * col[source]
    pub(crate) fn add_col_multiple(&mut self, target: usize, source: usize, factor: &T) {
        if factor.is_zero() {
            return;
        }
        for i in 0..self.rows {
            let s = self.data[i * self.cols + source].clone();
            let idx = i * self.cols + target;
            self.data[idx] = self.data[idx].clone() + factor.clone() * s;
        }
    }

    pub(crate) fn negate_row(&mut self, i: usize) {
        for j in 0..self.cols {
            let idx = i * self.cols + j;
            self.data[idx] = -self.data[idx].clone();
        }
    }

    pub(crate) fn negate_col(&mut self, j: usize) {
        for i in 0..self.rows {
            let idx = i * self.cols + j;
            self.data[idx] = -self.data[idx].clone();
        }
    }

    /// Characteristic polynomial `det(xI - M)` by Berkowitz's division-free algorithm.
    pub fn char_poly(&self) -> Result<Poly<T>, ExactLaError> {
        self.require_square()?;
        let n = self.rows;
        // descending coefficients of the char poly of the leading r x r block
        let mut coeffs: Vec<T> = vec![T::one()];
        for r in 0..n {
            let a = self.get(r, r).clone();
            let lead = self.submatrix(0..r, 0..r);
            let col: Vec<T> = (0..r).map(|i| self.get(i, r).clone()).collect();
            let row: Vec<T> = (0..r).map(|j| self.get(r, j).clone()).collect();
            // t = [1, -a, -R C, -R A C, ..., -R A^{r-1} C]
            let mut t = Vec::with_capacity(r + 2);
            t.push(T::one());
            t.push(-a);
            let mut v = col;
            for _ in 0..r {
                let rc = row
                    .iter()
                    .zip(&v)
                    .fold(T::zero(), |acc, (x, y)| acc + x.clone() * y.clone());
                t.push(-rc);
                v = lead.mul_vec(&v)?;
            }
            let mut next = Vec::with_capacity(r + 2);
            for i in 0..r + 2 {
                let mut acc = T::zero();
                for (j, c) in coeffs.iter().enumerate() {
                    if i >= j {
                        acc = acc + t[i - j].clone() * c.clone();
                    }
                }
                next.push(acc);
            }
            coeffs = next;
        }
        coeffs.reverse();
        Ok(Poly::new(coeffs))
    }
}

impl<'a, T: Scalar> Mul<&'a Matrix<T>> for &'a Matrix<T> {
    type Output = Matrix<T>;

    fn mul(self, rhs: &'a Matrix<T>) -> Matrix<T> {
        self.checked_mul(rhs).expect("matrix product shape mismatch")
    }
}

impl<'a, T: Scalar> Add<&'a Matrix<T>> for &'a Matrix<T> {
    type Output = Matrix<T>;

    fn add(self, rhs: &'a Matrix<T>) -> Matrix<T> {
        self.checked_add(rhs).expect("matrix sum shape mismatch")
    }
}

impl<'a, T: Scalar> Sub<&'a Matrix<T>> for &'a Matrix<T> {
    type Output = Matrix<T>;

    fn sub(self, rhs: &'a Matrix<T>) -> Matrix<T> {
        self.checked_sub(rhs).expect("matrix difference shape mismatch")
    }
}

impl<T: Scalar> fmt::Display for Matrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in 0..self.rows {
            if i > 0 {
                write!(f, "; ")?;
            }
            for j in 0..self.cols {
                if j > 0 {
                    write!(f, " ")?;
                }
                write!(f, "{}", self.get(i, j))?;
            }
        }
        write!(f, "]")
    }
}

impl IntegerMatrix {
    pub fn from_i64_rows(rows: &[&[i64]]) -> Self {
        Self::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&e| BigInt::from(e)).collect())
                .collect(),
        )
        .expect("ragged rows")
    }

    /// Determinant by Bareiss fraction-free elimination.
    pub fn det(&self) -> Result<BigInt, ExactLaError> {
        self.require_square()?;
        let n = self.rows;
        if n == 0 {
            return Ok(BigInt::one());
        }
        let mut m = self.clone();
        let mut negate = false;
        let mut prev = BigInt::one();
        for k in 0..n - 1 {
            if m.get(k, k).is_zero() {
                match (k + 1..n).find(|&i| !m.get(i, k).is_zero()) {
                    Some(i) => {
                        m.swap_rows(i, k);
                        negate = !negate;
                    }
                    None => return Ok(BigInt::zero()),
                }
            }
            let pivot = m.get(k, k).clone();
            for i in k + 1..n {
                for j in k + 1..n {
                    let val = (m.get(i, j) * &pivot - m.get(i, k) * m.get(k, j)) / &prev;
                    m.set(i, j, val);
                }
                m.set(i, k, BigInt::zero());
            }
            prev = pivot;
        }
        let d = m.get(n - 1, n - 1).clone();
        Ok(if negate { -d } else { d })
    }

    pub fn to_rational(&self) -> RationalMatrix {
        self.map(|e| BigRational::from_integer(e.clone()))
    }

    pub fn is_unimodular(&self) -> bool {
        self.det().map(|d| d.abs().is_one()).unwrap_or(false)
    }

    /// Exact inverse of a matrix with determinant ±1.
    pub fn inverse_unimodular(&self) -> Result<IntegerMatrix, ExactLaError> {
        self.require_square()?;
        if !self.is_unimodular() {
            return Err(ExactLaError::NotUnimodular);
        }
        let inv = self.to_rational().inverse()?;
        Ok(inv.to_integer().expect("unimodular inverse is integral"))
    }

    /// Integer powers, negative exponents through the unimodular inverse.
    pub fn pow_signed(&self, e: i64) -> Result<IntegerMatrix, ExactLaError> {
        let e32 = u32::try_from(e.unsigned_abs()).map_err(|_| ExactLaError::ExponentTooLarge)?;
        if e >= 0 {
            self.pow(e32)
        } else {
            self.inverse_unimodular()?.pow(e32)
        }
    }
}

impl RationalMatrix {
    pub fn from_integer_rows(rows: &[&[i64]]) -> Self {
        IntegerMatrix::from_i64_rows(rows).to_rational()
    }

    /// Determinant by Gaussian elimination over the rationals.
    pub fn det(&self) -> Result<BigRational, ExactLaError> {
        self.require_square()?;
        let n = self.rows;
        let mut m = self.clone();
        let mut det = BigRational::one();
        for k in 0..n {
            let Some(p) = (k..n).find(|&i| !m.get(i, k).is_zero()) else {
                return Ok(BigRational::zero());
            };
            if p != k {
                m.swap_rows(p, k);
                det = -det;
            }
            let pivot = m.get(k, k).clone();
            det *= &pivot;
            for i in k + 1..n {
                let factor = m.get(i, k) / &pivot;
                if !factor.is_zero() {
                    m.add_row_multiple(i, k, &-factor);
                }
            }
        }
        Ok(det)
    }

    /// Returns the reduced row echelon form and its pivot columns.
    pub fn rref(&self) -> (RationalMatrix, Vec<usize>) {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..m.cols {
            if r == m.rows {
                break;
            }
            let Some(p) = (r..m.rows).find(|&i| !m.get(i, c).is_zero()) else {
                continue;
            };
            m.swap_rows(p, r);
            let inv = m.get(r, c).recip();
            for j in 0..m.cols {
                let v = m.get(r, j) * &inv;
                m.set(r, j, v);
            }
            for i in 0..m.rows {
                if i != r && !m.get(i, c).is_zero() {
                    let factor = -m.get(i, c).clone();
                    m.add_row_multiple(i, r, &factor);
                }
            }
            pivots.push(c);
            r += 1;
        }
        (m, pivots)
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    pub fn inverse(&self) -> Result<RationalMatrix, ExactLaError> {
        self.require_square()?;
        let n = self.rows;
        let aug = Self::from_fn(n, 2 * n, |i, j| {
            if j < n {
                self.get(i, j).clone()
            } else if j - n == i {
                BigRational::one()
            } else {
                BigRational::zero()
            }
        });
        let (r, pivots) = aug.rref();
        if pivots.len() < n || pivots[n - 1] >= n {
            return Err(ExactLaError::Singular);
        }
        Ok(r.submatrix(0..n, n..2 * n))
    }

    /// A particular solution of `self * x = b`, free variables set to zero.
    pub fn solve(&self, b: &[BigRational]) -> Result<Option<Vec<BigRational>>, ExactLaError> {
        if b.len() != self.rows {
            return Err(ExactLaError::BadLength {
                expected: self.rows,
                found: b.len(),
            });
        }
        let aug = Self::from_fn(self.rows, self.cols + 1, |i, j| {
            if j < self.cols {
                self.get(i, j).clone()
            } else {
                b[i].clone()
            }
        });
        let (r, pivots) = aug.rref();
        if pivots.last() == Some(&self.cols) {
            return Ok(None);
        }
        let mut x = vec![BigRational::zero(); self.cols];
        for (row, &c) in pivots.iter().enumerate() {
            x[c] = r.get(row, self.cols).clone();
        }
        Ok(Some(x))
    }

    /// Basis of the right kernel.
    pub fn nullspace(&self) -> Vec<Vec<BigRational>> {
        let (r, pivots) = self.rref();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        free.iter()
            .map(|&f| {
                let mut v = vec![BigRational::zero(); self.cols];
                v[f] = BigRational::one();
                for (row, &p) in pivots.iter().enumerate() {
                    v[p] = -r.get(row, f).clone();
                }
                v
            })
            .collect()
    }

    pub fn is_integral(&self) -> bool {
        self.entries().iter().all(|e| e.is_integer())
    }

    pub fn to_integer(&self) -> Option<IntegerMatrix> {
        if !self.is_integral() {
            return None;
        }
        Some(self.map(|e| e.to_integer()))
    }
}
