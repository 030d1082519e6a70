//! Fraction-free elimination over `ℚ[s]`.
//!
//! Rows of a rational matrix are first multiplied by the lcm of their
//! denominators, which changes neither the rank nor (up to a known constant
//! polynomial factor) the determinant. Bareiss' update
//! `a_ij ← (a_kk a_ij − a_ik a_kj) / p_prev` then keeps every entry a polynomial.

use alloc::vec::Vec;

use super::{Poly, PolyError, RatFun, RatMat};

struct Cleared {
    rows: usize,
    cols: usize,
    a: Vec<Poly>,
    /// product of the per-row denominator multipliers
    scale: Poly,
}

fn clear_denominators(m: &RatMat) -> Cleared {
    let (rows, cols) = m.shape();
    let mut a = Vec::with_capacity(rows * cols);
    let mut scale = Poly::one();
    for i in 0..rows {
        let mut lcm = Poly::one();
        for f in m.row(i) {
            let g = lcm.gcd(f.den());
            // den is nonzero and g divides it
            lcm = &lcm * &f.den().exact_div(&g).unwrap_or_default();
        }
        for f in m.row(i) {
            let factor = lcm.exact_div(f.den()).unwrap_or_default();
            a.push(f.num() * &factor);
        }
        scale = &scale * &lcm;
    }
    Cleared {
        rows,
        cols,
        a,
        scale,
    }
}

/// Result of full-pivoting fraction-free elimination.
struct Eliminated {
    rank: usize,
    /// last nonzero pivot, equal to ± det of the leading rank×rank minor after permutation
    last_pivot: Poly,
    swaps: usize,
}

fn eliminate(c: &mut Cleared) -> Result<Eliminated, PolyError> {
    let (rows, cols) = (c.rows, c.cols);
    let idx = |i: usize, j: usize| i * cols + j;
    let mut prev = Poly::one();
    let mut swaps = 0;
    let mut rank = 0;
    for k in 0..rows.min(cols) {
        // first nonzero entry in the trailing block, scanning columns left to right
        let mut pivot = None;
        'search: for j in k..cols {
            for i in k..rows {
                if !c.a[idx(i, j)].is_zero() {
                    pivot = Some((i, j));
                    break 'search;
                }
            }
        }
        let Some((pi, pj)) = pivot else { break };
        if pi != k {
            for j in 0..cols {
                c.a.swap(idx(pi, j), idx(k, j));
            }
            swaps += 1;
        }
        if pj != k {
            for i in 0..rows {
                c.a.swap(idx(i, pj), idx(i, k));
            }
            swaps += 1;
        }
        let akk = c.a[idx(k, k)].clone();
        for i in k + 1..rows {
            let aik = c.a[idx(i, k)].clone();
            for j in k + 1..cols {
                let num = &(&akk * &c.a[idx(i, j)]) - &(&aik * &c.a[idx(k, j)]);
                c.a[idx(i, j)] = num.exact_div(&prev)?;
            }
            c.a[idx(i, k)] = Poly::zero();
        }
        prev = akk;
        rank += 1;
    }
    Ok(Eliminated {
        rank,
        last_pivot: prev,
        swaps,
    })
}

pub(super) fn rank(m: &RatMat) -> usize {
    let mut c = clear_denominators(m);
    // exact divisions by previous pivots cannot fail in an integral domain
    eliminate(&mut c).map(|e| e.rank).unwrap_or(0)
}

pub(super) fn determinant(m: &RatMat) -> Result<RatFun, PolyError> {
    if !m.is_square() {
        return Err(PolyError::NotSquare {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    let n = m.rows();
    if n == 0 {
        return Ok(RatFun::one());
    }
    let mut c = clear_denominators(m);
    let scale = c.scale.clone();
    let e = eliminate(&mut c)?;
    if e.rank < n {
        return Ok(RatFun::zero());
    }
    let det = if e.swaps % 2 == 1 {
        -e.last_pivot
    } else {
        e.last_pivot
    };
    RatFun::new(det, scale)
}
