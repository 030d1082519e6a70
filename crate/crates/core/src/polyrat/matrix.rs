use alloc::vec::Vec;
use core::fmt;
use core::ops::Neg;

use num_traits::{One, Zero};

use super::{PolyError, RatFun, Rational};

/// Exact field arithmetic needed by [`Matrix`] elimination.
pub trait Field: Clone + PartialEq + fmt::Display {
    fn f_zero() -> Self;
    fn f_one() -> Self;
    fn f_is_zero(&self) -> bool;
    fn f_add(&self, rhs: &Self) -> Self;
    fn f_sub(&self, rhs: &Self) -> Self;
    fn f_mul(&self, rhs: &Self) -> Self;
    fn f_inv(&self) -> Option<Self>;
}

impl Field for Rational {
    fn f_zero() -> Self {
        Rational::zero()
    }
    fn f_one() -> Self {
        Rational::one()
    }
    fn f_is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn f_add(&self, rhs: &Self) -> Self {
        self + rhs
    }
    fn f_sub(&self, rhs: &Self) -> Self {
        self - rhs
    }
    fn f_mul(&self, rhs: &Self) -> Self {
        self * rhs
    }
    fn f_inv(&self) -> Option<Self> {
        if Zero::is_zero(self) {
            None
        } else {
            Some(self.recip())
        }
    }
}

impl Field for RatFun {
    fn f_zero() -> Self {
        RatFun::zero()
    }
    fn f_one() -> Self {
        RatFun::one()
    }
    fn f_is_zero(&self) -> bool {
        RatFun::is_zero(self)
    }
    fn f_add(&self, rhs: &Self) -> Self {
        self + rhs
    }
    fn f_sub(&self, rhs: &Self) -> Self {
        self - rhs
    }
    fn f_mul(&self, rhs: &Self) -> Self {
        self * rhs
    }
    fn f_inv(&self) -> Option<Self> {
        self.inv().ok()
    }
}

/// Dense row-major matrix over an exact field.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    entries: Vec<T>,
}

/// Matrix over the rational-function field ℝ(s) (with rational coefficients).
pub type RatMat = Matrix<RatFun>;
/// Constant matrix with exact rational entries.
pub type QMatrix = Matrix<Rational>;

impl<T: Field> Matrix<T> {
    pub fn from_vec(rows: usize, cols: usize, entries: Vec<T>) -> Result<Self, PolyError> {
        if entries.len() != rows * cols {
            return Err(PolyError::Shape {
                expected: (rows, cols),
                found: entries.len(),
            });
        }
        Ok(Self {
            rows,
            cols,
            entries,
        })
    }

    /// Builds from nested rows; all rows must have equal length.
    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self, PolyError> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut entries = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(PolyError::RaggedRows);
            }
            entries.extend(row);
        }
        Ok(Self {
            rows: r,
            cols: c,
            entries,
        })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: (0..rows * cols).map(|_| T::f_zero()).collect(),
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.entries[i * n + i] = T::f_one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut entries = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                entries.push(f(i, j));
            }
        }
        Self {
            rows,
            cols,
            entries,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn entries(&self) -> &[T] {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> &T {
        &self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.entries[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(T::f_is_zero)
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i).clone())
    }

    pub fn map<U: Field>(&self, f: impl Fn(&T) -> U) -> Matrix<U> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(f).collect(),
        }
    }

    /// Keeps the listed columns in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> Self {
        Self::from_fn(self.rows, cols.len(), |i, j| self.get(i, cols[j]).clone())
    }

    /// Keeps the listed rows in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        Self::from_fn(rows.len(), self.cols, |i, j| self.get(rows[i], j).clone())
    }

    pub fn submatrix(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |i, j| self.get(r0 + i, c0 + j).clone())
    }

    /// Assembles a block matrix; blocks in a block row share the row count,
    /// blocks in a block column share the column count.
    pub fn from_blocks(blocks: &[&[&Self]]) -> Result<Self, PolyError> {
        let heights: Vec<usize> = blocks
            .iter()
            .map(|br| br.first().map_or(0, |b| b.rows))
            .collect();
        let widths: Vec<usize> = blocks
            .first()
            .map_or(Vec::new(), |br| br.iter().map(|b| b.cols).collect());
        for (bi, br) in blocks.iter().enumerate() {
            if br.len() != widths.len() {
                return Err(PolyError::RaggedRows);
            }
            for (bj, b) in br.iter().enumerate() {
                if b.rows != heights[bi] || b.cols != widths[bj] {
                    return Err(PolyError::Shape {
                        expected: (heights[bi], widths[bj]),
                        found: b.rows * b.cols,
                    });
                }
            }
        }
        let rows: usize = heights.iter().sum();
        let cols: usize = widths.iter().sum();
        let mut out = Self::zeros(rows, cols);
        let mut r0 = 0;
        for (bi, br) in blocks.iter().enumerate() {
            let mut c0 = 0;
            for (bj, b) in br.iter().enumerate() {
                for i in 0..b.rows {
                    for j in 0..b.cols {
                        out.set(r0 + i, c0 + j, b.get(i, j).clone());
                    }
                }
                c0 += widths[bj];
            }
            r0 += heights[bi];
        }
        Ok(out)
    }

    pub fn checked_mul(&self, rhs: &Self) -> Result<Self, PolyError> {
        if self.cols != rhs.rows {
            return Err(PolyError::Shape {
                expected: (self.cols, rhs.cols),
                found: rhs.rows * rhs.cols,
            });
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.f_is_zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    let b = rhs.get(k, j);
                    if b.f_is_zero() {
                        continue;
                    }
                    let idx = i * rhs.cols + j;
                    out.entries[idx] = out.entries[idx].f_add(&a.f_mul(b));
                }
            }
        }
        Ok(out)
    }

    pub fn checked_add(&self, rhs: &Self) -> Result<Self, PolyError> {
        self.zip(rhs, |a, b| a.f_add(b))
    }

    pub fn checked_sub(&self, rhs: &Self) -> Result<Self, PolyError> {
        self.zip(rhs, |a, b| a.f_sub(b))
    }

    fn zip(&self, rhs: &Self, f: impl Fn(&T, &T) -> T) -> Result<Self, PolyError> {
        if self.shape() != rhs.shape() {
            return Err(PolyError::Shape {
                expected: self.shape(),
                found: rhs.rows * rhs.cols,
            });
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            entries: self
                .entries
                .iter()
                .zip(&rhs.entries)
                .map(|(a, b)| f(a, b))
                .collect(),
        })
    }

    pub fn scale(&self, c: &T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|a| a.f_mul(c)).collect(),
        }
    }

    pub fn neg(&self) -> Self {
        let minus_one = T::f_zero().f_sub(&T::f_one());
        self.scale(&minus_one)
    }

    /// Row echelon form by Gaussian elimination; returns the pivot columns.
    fn echelon(&self) -> (Self, Vec<usize>) {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut row = 0;
        for col in 0..m.cols {
            if row == m.rows {
                break;
            }
            let Some(p) = (row..m.rows).find(|&i| !m.get(i, col).f_is_zero()) else {
                continue;
            };
            m.swap_rows(row, p);
            // nonzero pivot, inverse exists
            let inv = m.get(row, col).f_inv().unwrap_or_else(T::f_one);
            for i in row + 1..m.rows {
                let f = m.get(i, col).clone();
                if f.f_is_zero() {
                    continue;
                }
                let factor = f.f_mul(&inv);
                for j in col..m.cols {
                    let v = m.get(i, j).f_sub(&factor.f_mul(m.get(row, j)));
                    m.set(i, j, v);
                }
            }
            pivots.push(col);
            row += 1;
        }
        (m, pivots)
    }

    /// Rank by Gaussian elimination over the field.
    pub fn field_rank(&self) -> usize {
        self.echelon().1.len()
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.entries.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    /// Gauss–Jordan inverse.
    pub fn inverse(&self) -> Result<Self, PolyError> {
        if !self.is_square() {
            return Err(PolyError::NotSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = Self::identity(n);
        for col in 0..n {
            let p = (col..n)
                .find(|&i| !a.get(i, col).f_is_zero())
                .ok_or(PolyError::Singular)?;
            a.swap_rows(col, p);
            inv.swap_rows(col, p);
            let piv_inv = a.get(col, col).f_inv().ok_or(PolyError::Singular)?;
            for j in 0..n {
                let v = a.get(col, j).f_mul(&piv_inv);
                a.set(col, j, v);
                let w = inv.get(col, j).f_mul(&piv_inv);
                inv.set(col, j, w);
            }
            for i in 0..n {
                if i == col {
                    continue;
                }
                let f = a.get(i, col).clone();
                if f.f_is_zero() {
                    continue;
                }
                for j in 0..n {
                    let v = a.get(i, j).f_sub(&f.f_mul(a.get(col, j)));
                    a.set(i, j, v);
                    let w = inv.get(i, j).f_sub(&f.f_mul(inv.get(col, j)));
                    inv.set(i, j, w);
                }
            }
        }
        Ok(inv)
    }

    /// The canonical left inverse `(MᵀM)⁻¹Mᵀ`; for square matrices this is `M⁻¹`.
    pub fn left_inverse(&self) -> Result<Self, PolyError> {
        if self.is_square() {
            return self.inverse().map_err(|_| PolyError::NoLeftInverse);
        }
        if self.rows < self.cols {
            return Err(PolyError::NoLeftInverse);
        }
        let mt = self.transpose();
        let gram = mt.checked_mul(self)?;
        let gram_inv = gram.inverse().map_err(|_| PolyError::NoLeftInverse)?;
        gram_inv.checked_mul(&mt)
    }

    /// Permutation matrix `P` with `(P x)_i = x_{perm[i]}`.
    pub fn permutation(perm: &[usize]) -> Self {
        let n = perm.len();
        Self::from_fn(n, n, |i, j| {
            if perm[i] == j {
                T::f_one()
            } else {
                T::f_zero()
            }
        })
    }
}

impl QMatrix {
    pub fn from_i64_rows(rows: &[&[i64]]) -> Result<Self, PolyError> {
        Self::from_rows(
            rows.iter()
                .map(|r| {
                    r.iter()
                        .map(|&v| Rational::from_integer(v.into()))
                        .collect()
                })
                .collect(),
        )
    }

    pub fn rank(&self) -> usize {
        self.field_rank()
    }

    /// Lifts a constant matrix into ℝ(s).
    pub fn to_ratmat(&self) -> RatMat {
        self.map(|c| RatFun::constant(c.clone()))
    }

    pub fn to_f64_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .map(super::poly::rational_to_f64)
                    .collect()
            })
            .collect()
    }
}

impl<T: Field> fmt::Debug for Matrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl<T: Field> fmt::Display for Matrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for i in 0..self.rows {
            if i > 0 {
                f.write_str("; ")?;
            }
            for j in 0..self.cols {
                if j > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{}", self.get(i, j))?;
            }
        }
        f.write_str("]")
    }
}

impl<T: Field> Neg for &Matrix<T> {
    type Output = Matrix<T>;
    fn neg(self) -> Matrix<T> {
        Matrix::neg(self)
    }
}
