//! Exact arithmetic in `ℚ[s]`, `ℚ(s)` and matrices over `ℚ(s)`.
//!
//! Every value is immutable once built and every operation is pure, so all
//! types here are `Send + Sync` and can be shared freely.

mod bareiss;
mod matrix;
mod poly;
mod ratfun;

use core::fmt;

pub use matrix::{Field, Matrix, QMatrix, RatMat};
pub use poly::{rational_to_f64, Poly};
pub use ratfun::{degree_of_quotient, RatFun};

/// Arbitrary-precision rational coefficient.
pub type Rational = num_rational::BigRational;

/// Degree of a polynomial or rational function. The zero element has degree
/// `NegInfinity`, which compares below every finite degree.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Degree {
    NegInfinity,
    Finite(i64),
}

impl Degree {
    pub fn finite(self) -> Option<i64> {
        match self {
            Degree::NegInfinity => None,
            Degree::Finite(d) => Some(d),
        }
    }
}

impl fmt::Display for Degree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Degree::NegInfinity => f.write_str("-inf"),
            Degree::Finite(d) => write!(f, "{d}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum PolyError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("zero denominator")]
    ZeroDenominator,
    #[error("polynomial division is not exact")]
    InexactDivision,
    #[error("expected {} x {} entries, found {found}", expected.0, expected.1)]
    Shape {
        expected: (usize, usize),
        found: usize,
    },
    #[error("rows have different lengths")]
    RaggedRows,
    #[error("matrix is {rows} x {cols}, not square")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is singular")]
    Singular,
    #[error("no left inverse: matrix lacks full column rank")]
    NoLeftInverse,
    #[error("empty vector")]
    EmptyVector,
}

/// `deg r = deg num − deg den`.
pub fn ratfun_degree(r: &RatFun) -> Degree {
    r.degree()
}

/// Column degree: the largest entry degree.
pub fn ratvec_degree(v: &[RatFun]) -> Result<Degree, PolyError> {
    v.iter()
        .map(RatFun::degree)
        .max()
        .ok_or(PolyError::EmptyVector)
}

/// Rank over `ℚ(s)` by fraction-free elimination.
pub fn ratmat_rank(m: &RatMat) -> usize {
    bareiss::rank(m)
}

/// `(MᵀM)⁻¹Mᵀ`, or `M⁻¹` when `M` is square.
pub fn ratmat_left_inverse(m: &RatMat) -> Result<RatMat, PolyError> {
    m.left_inverse()
}

pub fn ratmat_inverse(m: &RatMat) -> Result<RatMat, PolyError> {
    m.inverse()
}

/// `lim_{λ→∞} r(λ) λ^shift`, `None` when it diverges.
pub fn limit_at_infinity(r: &RatFun, shift: i64) -> Option<Rational> {
    r.limit_at_infinity(shift)
}

/// Exact determinant over `ℚ(s)`; a polynomial whenever `m` is.
pub fn poly_determinant(m: &RatMat) -> Result<RatFun, PolyError> {
    bareiss::determinant(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use alloc::vec::Vec;

    fn rf(n: &[i64], d: &[i64]) -> RatFun {
        RatFun::from_i64_parts(n, d).unwrap()
    }

    fn p(c: &[i64]) -> RatFun {
        rf(c, &[1])
    }

    fn mat(rows: Vec<Vec<RatFun>>) -> RatMat {
        RatMat::from_rows(rows).unwrap()
    }

    #[test]
    fn vector_degrees() {
        assert_eq!(
            ratvec_degree(&[p(&[-1, 1]), p(&[-1, 1])]),
            Ok(Degree::Finite(1))
        );
        assert_eq!(
            ratvec_degree(&[RatFun::zero(), RatFun::zero()]),
            Ok(Degree::NegInfinity)
        );
        assert_eq!(
            ratvec_degree(&[rf(&[1], &[0, 1]), p(&[0, 0, 1])]),
            Ok(Degree::Finite(2))
        );
        assert_eq!(ratvec_degree(&[]), Err(PolyError::EmptyVector));
    }

    #[test]
    fn ranks() {
        let h = mat(vec![
            vec![p(&[-1, 1]), p(&[1, 1])],
            vec![p(&[-1, 1]), p(&[-2, 1])],
        ]);
        assert_eq!(ratmat_rank(&h), 2);
        assert_eq!(ratmat_rank(&RatMat::zeros(2, 2)), 0);
        assert_eq!(ratmat_rank(&mat(vec![vec![p(&[1])], vec![p(&[0, 1])]])), 1);
        let dependent = mat(vec![
            vec![rf(&[1], &[0, 1]), p(&[1])],
            vec![p(&[1]), p(&[0, 1])],
        ]);
        assert_eq!(ratmat_rank(&dependent), 1);
    }

    #[test]
    fn determinants() {
        let m = mat(vec![vec![p(&[0, 1]), p(&[-1])], vec![p(&[0]), p(&[0, 1])]]);
        assert_eq!(poly_determinant(&m), Ok(p(&[0, 0, 1])));
        // sE − A with E = [[0,1],[0,0]], A = I
        let m = mat(vec![vec![p(&[-1]), p(&[0, 1])], vec![p(&[0]), p(&[-1])]]);
        assert_eq!(poly_determinant(&m), Ok(p(&[1])));
        let m = mat(vec![
            vec![p(&[0, 1]), p(&[0, 1])],
            vec![p(&[0, 1]), p(&[0, 1])],
        ]);
        assert_eq!(poly_determinant(&m), Ok(RatFun::zero()));
        assert_eq!(
            poly_determinant(&RatMat::zeros(1, 2)),
            Err(PolyError::NotSquare { rows: 1, cols: 2 })
        );
    }

    #[test]
    fn determinant_with_denominators_and_swaps() {
        // [[0, 1/s], [s+1, 2]] has det −(s+1)/s
        let m = mat(vec![
            vec![RatFun::zero(), rf(&[1], &[0, 1])],
            vec![p(&[1, 1]), p(&[2])],
        ]);
        assert_eq!(poly_determinant(&m), Ok(rf(&[-1, -1], &[0, 1])));
    }

    #[test]
    fn inverses() {
        let d = mat(vec![
            vec![p(&[0, 1]), RatFun::zero()],
            vec![RatFun::zero(), p(&[1])],
        ]);
        let di = mat(vec![
            vec![rf(&[1], &[0, 1]), RatFun::zero()],
            vec![RatFun::zero(), p(&[1])],
        ]);
        assert_eq!(ratmat_inverse(&d), Ok(di));
        let s = mat(vec![vec![p(&[0, 1]), p(&[0, 1])], vec![p(&[1]), p(&[1])]]);
        assert_eq!(ratmat_inverse(&s), Err(PolyError::Singular));
    }

    #[test]
    fn left_inverse_of_column() {
        let m = mat(vec![vec![p(&[1])], vec![p(&[0, 1])]]);
        let l = ratmat_left_inverse(&m).unwrap();
        assert_eq!(
            l,
            mat(vec![vec![rf(&[1], &[1, 0, 1]), rf(&[0, 1], &[1, 0, 1])]])
        );
        assert_eq!(l.checked_mul(&m).unwrap(), RatMat::identity(1));
        let deficient = mat(vec![
            vec![p(&[1]), RatFun::zero()],
            vec![RatFun::zero(), RatFun::zero()],
        ]);
        assert_eq!(
            ratmat_left_inverse(&deficient),
            Err(PolyError::NoLeftInverse)
        );
        assert_eq!(
            ratmat_left_inverse(&RatMat::identity(2)),
            Ok(RatMat::identity(2))
        );
    }
}
