//! Small dense `f64` linear algebra for the simulation side.
//!
//! Matrices are row-major slices with explicit dimensions; all sizes here
//! are tiny (the number of algebraic outputs or operator states).

use alloc::vec;
use alloc::vec::Vec;

/// Dense row-major matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Panics if `rows` is ragged; intended for literals.
    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        assert!(
            rows.iter().all(|row| row.len() == c),
            "ragged matrix literal"
        );
        Self {
            rows: r,
            cols: c,
            data: rows.iter().flat_map(|row| row.iter().copied()).collect(),
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Option<Self> {
        (data.len() == rows * cols).then_some(Self { rows, cols, data })
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| dot(&self.data[i * self.cols..(i + 1) * self.cols], x))
            .collect()
    }

    /// `y += self · x`.
    pub fn mul_vec_add(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi += dot(&self.data[i * self.cols..(i + 1) * self.cols], x);
        }
    }

    pub fn mul(&self, rhs: &Mat) -> Mat {
        debug_assert_eq!(self.cols, rhs.rows);
        let mut out = Mat::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a != 0.0 {
                    for j in 0..rhs.cols {
                        out.data[i * rhs.cols + j] += a * rhs.get(k, j);
                    }
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> Mat {
        let mut out = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j));
            }
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0.0)
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.rows)
            .map(|i| {
                self.data[i * self.cols..(i + 1) * self.cols]
                    .iter()
                    .map(|x| x.abs())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    /// Largest singular value, by power iteration on `MᵀM`.
    pub fn norm2(&self) -> f64 {
        if self.data.is_empty() || self.is_zero() {
            return 0.0;
        }
        let gram = self.transpose().mul(self);
        let mut v = vec![1.0; self.cols];
        let mut lambda = 0.0;
        for _ in 0..200 {
            let w = gram.mul_vec(&v);
            let nw = norm(&w);
            if nw == 0.0 {
                return 0.0;
            }
            let next = nw / norm(&v);
            v = w.iter().map(|x| x / nw).collect();
            if (next - lambda).abs() <= 1e-14 * next {
                lambda = next;
                break;
            }
            lambda = next;
        }
        libm::sqrt(lambda)
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Solves `A x = b` by LU with partial pivoting; `None` if `A` is singular to
/// working precision.
pub fn solve(a: &Mat, b: &[f64]) -> Option<Vec<f64>> {
    let n = a.rows;
    if a.cols != n || b.len() != n {
        return None;
    }
    let mut m = a.data.clone();
    let mut x = b.to_vec();
    let scale = a.data.iter().fold(0.0f64, |s, v| s.max(v.abs()));
    if scale == 0.0 {
        return if n == 0 { Some(x) } else { None };
    }
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| m[i * n + k].abs().total_cmp(&m[j * n + k].abs()))?;
        if m[p * n + k].abs() <= 1e-14 * scale {
            return None;
        }
        if p != k {
            for j in 0..n {
                m.swap(p * n + j, k * n + j);
            }
            x.swap(p, k);
        }
        for i in k + 1..n {
            let f = m[i * n + k] / m[k * n + k];
            if f != 0.0 {
                for j in k..n {
                    m[i * n + j] -= f * m[k * n + j];
                }
                x[i] -= f * x[k];
            }
        }
    }
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| m[k * n + j] * x[j]).sum();
        x[k] = (x[k] - s) / m[k * n + k];
    }
    Some(x)
}

/// Characteristic polynomial `det(λI − A)` in ascending coefficients, by
/// Faddeev–LeVerrier.
pub fn char_poly(a: &Mat) -> Vec<f64> {
    let n = a.rows;
    let mut c = vec![0.0; n + 1];
    c[n] = 1.0;
    let mut mk = Mat::zeros(n, n);
    for k in 1..=n {
        // M_k = A M_{k−1} + c_{n−k+1} I
        let mut next = a.mul(&mk);
        for i in 0..n {
            next.data[i * n + i] += c[n - k + 1];
        }
        let am = a.mul(&next);
        let trace: f64 = (0..n).map(|i| am.get(i, i)).sum();
        c[n - k] = -trace / k as f64;
        mk = next;
    }
    c
}

/// Routh–Hurwitz test: every root of the real polynomial has negative real part.
pub fn is_hurwitz_poly(coeffs: &[f64]) -> bool {
    let mut c: Vec<f64> = coeffs.to_vec();
    while c.last() == Some(&0.0) {
        c.pop();
    }
    let Some(&lead) = c.last() else { return false };
    let desc: Vec<f64> = c.iter().rev().map(|x| x / lead).collect();
    if desc.iter().any(|&x| x <= 0.0) {
        return false;
    }
    let deg = desc.len() - 1;
    let width = deg / 2 + 1;
    let row = |start: usize| -> Vec<f64> {
        (0..width)
            .map(|j| desc.get(start + 2 * j).copied().unwrap_or(0.0))
            .collect()
    };
    let (mut r0, mut r1) = (row(0), row(1));
    // first-column entries of rows 1..=deg must all be positive
    for _ in 0..deg {
        if r1[0] <= 0.0 {
            return false;
        }
        let next: Vec<f64> = (0..width)
            .map(|j| {
                let a = r0.get(j + 1).copied().unwrap_or(0.0);
                let b = r1.get(j + 1).copied().unwrap_or(0.0);
                a - r0[0] * b / r1[0]
            })
            .collect();
        r0 = core::mem::replace(&mut r1, next);
    }
    true
}

/// Cholesky test of `(A + Aᵀ)/2 > 0`.
pub fn symmetric_part_positive_definite(a: &Mat) -> bool {
    let n = a.rows;
    if a.cols != n {
        return false;
    }
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let sym = 0.5 * (a.get(i, j) + a.get(j, i));
            let s: f64 = (0..j).map(|k| l[i * n + k] * l[j * n + k]).sum();
            if i == j {
                let d = sym - s;
                if !(d > 0.0) {
                    return false;
                }
                l[i * n + i] = libm::sqrt(d);
            } else {
                l[i * n + j] = (sym - s) / l[j * n + j];
            }
        }
    }
    true
}

pub fn is_hurwitz(a: &Mat) -> bool {
    a.rows == 0 || is_hurwitz_poly(&char_poly(a))
}
