//! Structural analysis of linear DAE systems `d/dt Ex = Ax + Bu, y = Cx`.
//!
//! Everything in this module is exact: matrices carry rational entries and
//! every rank, degree and limit is decided over `ℚ(s)` or `ℚ`. The only
//! floating-point step is locating invariant zeros.

mod zeros;

use alloc::string::String;
use alloc::vec::Vec;

use num_traits::Zero;

use crate::polyrat::{
    limit_at_infinity, poly_determinant, ratmat_left_inverse, ratmat_rank, ratvec_degree, Degree,
    Poly, PolyError, QMatrix, RatFun, RatMat, Rational,
};
pub use zeros::{certified_roots, CertifiedRoot};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error("{matrix} is {found:?}, expected {expected:?}")]
    Dimension {
        matrix: &'static str,
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("all of l, n, m, p must be at least 1")]
    EmptyDimension,
    #[error("system is not regular")]
    NotRegular,
    #[error("zero dynamics are not autonomous")]
    NotAutonomous,
    #[error("system is not right-invertible")]
    NotRightInvertible,
    #[error("matrix has rank {rank}, expected {expected}")]
    RankDeficient { rank: usize, expected: usize },
    #[error("not a permutation of 0..{0}")]
    InvalidPermutation(usize),
}

/// The quadruple `[E, A, B, C]` with `E, A ∈ ℚ^{l×n}`, `B ∈ ℚ^{l×m}`, `C ∈ ℚ^{p×n}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearDae {
    e: QMatrix,
    a: QMatrix,
    b: QMatrix,
    c: QMatrix,
}

fn expect_shape(
    matrix: &'static str,
    m: &QMatrix,
    expected: (usize, usize),
) -> Result<(), AnalysisError> {
    if m.shape() == expected {
        Ok(())
    } else {
        Err(AnalysisError::Dimension {
            matrix,
            expected,
            found: m.shape(),
        })
    }
}

impl LinearDae {
    pub fn new(e: QMatrix, a: QMatrix, b: QMatrix, c: QMatrix) -> Result<Self, AnalysisError> {
        let (l, n) = e.shape();
        let m = b.cols();
        let p = c.rows();
        if l == 0 || n == 0 || m == 0 || p == 0 {
            return Err(AnalysisError::EmptyDimension);
        }
        expect_shape("A", &a, (l, n))?;
        expect_shape("B", &b, (l, m))?;
        expect_shape("C", &c, (p, n))?;
        Ok(Self { e, a, b, c })
    }

    pub fn from_i64(
        e: &[&[i64]],
        a: &[&[i64]],
        b: &[&[i64]],
        c: &[&[i64]],
    ) -> Result<Self, AnalysisError> {
        Self::new(
            QMatrix::from_i64_rows(e)?,
            QMatrix::from_i64_rows(a)?,
            QMatrix::from_i64_rows(b)?,
            QMatrix::from_i64_rows(c)?,
        )
    }

    pub fn e(&self) -> &QMatrix {
        &self.e
    }
    pub fn a(&self) -> &QMatrix {
        &self.a
    }
    pub fn b(&self) -> &QMatrix {
        &self.b
    }
    pub fn c(&self) -> &QMatrix {
        &self.c
    }

    /// `(l, n, m, p)`.
    pub fn dims(&self) -> (usize, usize, usize, usize) {
        (self.e.rows(), self.e.cols(), self.b.cols(), self.c.rows())
    }

    /// `sE − A` over `ℚ(s)`.
    pub fn s_e_minus_a(&self) -> RatMat {
        let (l, n) = self.e.shape();
        RatMat::from_fn(l, n, |i, j| {
            RatFun::from_poly(Poly::from_coeffs(alloc::vec![
                -self.a.get(i, j).clone(),
                self.e.get(i, j).clone()
            ]))
        })
    }
}

/// Three-valued verdict for asymptotic stability of the zero dynamics.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Stability {
    Stable,
    Unstable,
    Unknown,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ZerosReport {
    /// Determinant of the system pencil, when it is square.
    pub determinant: Option<Poly>,
    pub zeros: Vec<CertifiedRoot>,
    pub margin: f64,
    pub verdict: Stability,
    pub diagnostic: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnalysisReport {
    pub regular: bool,
    pub zd_autonomous: bool,
    /// Full row rank of the system pencil. Equivalent to right-invertibility
    /// for regular systems; only a surrogate otherwise.
    pub right_invertible: bool,
    pub zd_asymptotically_stable: Stability,
    pub invariant_zeros: ZerosReport,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TvrdReport {
    pub exists: bool,
    pub r: Vec<usize>,
    pub q: usize,
    pub gamma_hat: QMatrix,
    pub gamma_hat_q: QMatrix,
    pub rank_gamma_hat_q: usize,
    pub h: RatMat,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VrdReport {
    pub exists: bool,
    /// `None` for an identically zero row of `G`, which admits no relative degree.
    pub r: Vec<Option<i64>>,
    pub gamma: QMatrix,
    pub rank_gamma: usize,
    /// Common value when the vector relative degree exists with all entries equal.
    pub strict: Option<i64>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GammaDecomposition {
    /// `Γ ∈ ℚ^{m×m}` with `Γ P Γ̂_q = [I_q; 0]`.
    pub gamma: QMatrix,
    /// Row reordering: row `i` of the reordered `Γ̂_q` is row `reordering[i]` of the original.
    pub reordering: Vec<usize>,
}

/// `[−sE + A, B; C, 0]`.
pub fn system_pencil(sys: &LinearDae) -> RatMat {
    let (_, _, m, p) = sys.dims();
    let top_left = sys.s_e_minus_a().neg();
    let b = sys.b.to_ratmat();
    let c = sys.c.to_ratmat();
    let zero = RatMat::zeros(p, m);
    // block shapes agree by construction of LinearDae
    RatMat::from_blocks(&[&[&top_left, &b], &[&c, &zero]]).unwrap_or_else(|_| RatMat::zeros(0, 0))
}

pub fn is_regular(sys: &LinearDae) -> bool {
    let (l, n, _, _) = sys.dims();
    l == n && poly_determinant(&sys.s_e_minus_a()).is_ok_and(|d| !d.is_zero())
}

/// The pencil has full column rank `n + m`.
pub fn zero_dynamics_autonomous(sys: &LinearDae) -> bool {
    let (_, n, m, _) = sys.dims();
    ratmat_rank(&system_pencil(sys)) == n + m
}

/// The pencil has full row rank `l + p`.
pub fn is_right_invertible(sys: &LinearDae) -> bool {
    let (l, _, _, p) = sys.dims();
    ratmat_rank(&system_pencil(sys)) == l + p
}

/// `G(s) = C (sE − A)⁻¹ B`.
pub fn transfer_function(sys: &LinearDae) -> Result<RatMat, AnalysisError> {
    if !is_regular(sys) {
        return Err(AnalysisError::NotRegular);
    }
    let resolvent = sys.s_e_minus_a().inverse()?;
    Ok(sys
        .c
        .to_ratmat()
        .checked_mul(&resolvent)?
        .checked_mul(&sys.b.to_ratmat())?)
}

/// `H(s) = [0 I_m] L(s) [0; I_p]` for a left inverse `L` of the system pencil.
pub fn compute_h(sys: &LinearDae) -> Result<RatMat, AnalysisError> {
    let (_, n, m, p) = sys.dims();
    let l = sys.e.rows();
    let pencil = system_pencil(sys);
    if ratmat_rank(&pencil) != n + m {
        return Err(AnalysisError::NotAutonomous);
    }
    let left = ratmat_left_inverse(&pencil)?;
    Ok(left.submatrix(n, l, m, p))
}

/// Column degrees of `H` clipped at zero, the limit matrix `Γ̂` and the rank test on `Γ̂_q`.
pub fn truncated_vrd(sys: &LinearDae) -> Result<TvrdReport, AnalysisError> {
    if !zero_dynamics_autonomous(sys) {
        return Err(AnalysisError::NotAutonomous);
    }
    if !is_right_invertible(sys) {
        return Err(AnalysisError::NotRightInvertible);
    }
    let h = compute_h(sys)?;
    Ok(tvrd_from_h(h))
}

pub(crate) fn tvrd_from_h(h: RatMat) -> TvrdReport {
    let (m, p) = h.shape();
    let r: Vec<usize> = (0..p)
        .map(|i| match ratvec_degree(&h.column(i)) {
            Ok(Degree::Finite(d)) if d > 0 => d as usize,
            _ => 0,
        })
        .collect();
    let gamma_hat = QMatrix::from_fn(m, p, |row, col| {
        // deg h_col ≤ r_col, so the scaled limit is finite
        limit_at_infinity(h.get(row, col), -(r[col] as i64)).unwrap_or_else(Rational::zero)
    });
    let kept: Vec<usize> = (0..p).filter(|&i| r[i] > 0).collect();
    let q = kept.len();
    let gamma_hat_q = gamma_hat.select_columns(&kept);
    let rank_gamma_hat_q = gamma_hat_q.rank();
    TvrdReport {
        exists: rank_gamma_hat_q == q,
        r,
        q,
        gamma_hat,
        gamma_hat_q,
        rank_gamma_hat_q,
        h,
    }
}

/// Row degrees of `G` give the candidate `r_i = −deg g_i`; `Γ = lim diag(λ^{r_i}) G(λ)`.
pub fn vector_rd(sys: &LinearDae) -> Result<VrdReport, AnalysisError> {
    let g = transfer_function(sys)?;
    let (p, m) = g.shape();
    let r: Vec<Option<i64>> = (0..p)
        .map(|i| {
            ratvec_degree(g.row(i))
                .ok()
                .and_then(Degree::finite)
                .map(|d| -d)
        })
        .collect();
    let gamma = QMatrix::from_fn(p, m, |i, j| match r[i] {
        Some(ri) => limit_at_infinity(g.get(i, j), ri).unwrap_or_else(Rational::zero),
        None => Rational::zero(),
    });
    let rank_gamma = gamma.rank();
    let exists = r.iter().all(Option::is_some) && rank_gamma == p;
    let strict = match r.first() {
        Some(Some(r0)) if exists && r.iter().all(|ri| *ri == Some(*r0)) => Some(*r0),
        _ => None,
    };
    Ok(VrdReport {
        exists,
        r,
        gamma,
        rank_gamma,
        strict,
    })
}

/// `[E, A + BKC, B, C]`.
pub fn apply_output_feedback(sys: &LinearDae, k: &QMatrix) -> Result<LinearDae, AnalysisError> {
    let (_, _, m, p) = sys.dims();
    expect_shape("K", k, (m, p))?;
    let bkc = sys.b.checked_mul(k)?.checked_mul(&sys.c)?;
    LinearDae::new(
        sys.e.clone(),
        sys.a.checked_add(&bkc)?,
        sys.b.clone(),
        sys.c.clone(),
    )
}

/// New output `i` is old output `sigma[i]`.
pub fn permute_outputs(sys: &LinearDae, sigma: &[usize]) -> Result<LinearDae, AnalysisError> {
    let p = sys.c.rows();
    check_permutation(sigma, p)?;
    let c = QMatrix::permutation(sigma).checked_mul(&sys.c)?;
    LinearDae::new(sys.e.clone(), sys.a.clone(), sys.b.clone(), c)
}

fn check_permutation(sigma: &[usize], n: usize) -> Result<(), AnalysisError> {
    let mut seen = alloc::vec![false; n];
    if sigma.len() != n {
        return Err(AnalysisError::InvalidPermutation(n));
    }
    for &s in sigma {
        if s >= n || core::mem::replace(&mut seen[s], true) {
            return Err(AnalysisError::InvalidPermutation(n));
        }
    }
    Ok(())
}

/// Reorders inputs so the top `q×q` block of `Γ̂_q` is invertible and builds
/// `Γ = [[Γ̂₁₁⁻¹, 0], [−Γ̂₂₁Γ̂₁₁⁻¹, I]]`. The selected rows are the
/// lexicographically first independent subset.
pub fn gamma_decomposition(
    gamma_hat: &QMatrix,
    r: &[usize],
) -> Result<GammaDecomposition, AnalysisError> {
    let (m, p) = gamma_hat.shape();
    if r.len() != p {
        return Err(AnalysisError::Dimension {
            matrix: "r",
            expected: (p, 1),
            found: (r.len(), 1),
        });
    }
    let kept: Vec<usize> = (0..p).filter(|&i| r[i] > 0).collect();
    let ghq = gamma_hat.select_columns(&kept);
    let q = kept.len();
    let mut chosen: Vec<usize> = Vec::with_capacity(q);
    for i in 0..m {
        if chosen.len() == q {
            break;
        }
        let mut trial = chosen.clone();
        trial.push(i);
        if ghq.select_rows(&trial).rank() == trial.len() {
            chosen = trial;
        }
    }
    if chosen.len() < q {
        return Err(AnalysisError::RankDeficient {
            rank: chosen.len(),
            expected: q,
        });
    }
    let mut reordering = chosen.clone();
    reordering.extend((0..m).filter(|i| !chosen.contains(i)));
    let reordered = ghq.select_rows(&reordering);
    let g11_inv = reordered.submatrix(0, 0, q, q).inverse()?;
    let g21 = reordered.submatrix(q, 0, m - q, q);
    let lower_left = g21.checked_mul(&g11_inv)?.neg();
    let gamma = QMatrix::from_blocks(&[
        &[&g11_inv, &QMatrix::zeros(q, m - q)],
        &[&lower_left, &QMatrix::identity(m - q)],
    ])?;
    Ok(GammaDecomposition { gamma, reordering })
}

/// Default relative margin around the imaginary axis for the stability verdict.
pub const ZERO_MARGIN: f64 = 1e-9;

/// Roots of `det` of the square system pencil with inclusion radii.
pub fn invariant_zeros(sys: &LinearDae) -> ZerosReport {
    invariant_zeros_with_margin(sys, ZERO_MARGIN)
}

/// The margin is scaled by `1 + max|z|` over the computed zeros, so that it is
/// relative to the magnitude of the roots and hence of the coefficients.
pub fn invariant_zeros_with_margin(sys: &LinearDae, margin: f64) -> ZerosReport {
    let pencil = system_pencil(sys);
    let unknown = |determinant, diagnostic: &str| ZerosReport {
        determinant,
        zeros: Vec::new(),
        margin,
        verdict: Stability::Unknown,
        diagnostic: Some(String::from(diagnostic)),
    };
    if !pencil.is_square() {
        return unknown(None, "system pencil is not square");
    }
    let det = match poly_determinant(&pencil) {
        Ok(d) if d.is_zero() => {
            return unknown(
                Some(Poly::zero()),
                "pencil determinant vanishes identically",
            )
        }
        Ok(d) => d.num().clone(),
        Err(_) => return unknown(None, "pencil determinant failed"),
    };
    let zeros = certified_roots(&det);
    let scale = 1.0 + zeros.iter().fold(0.0f64, |acc, z| acc.max(z.value.norm()));
    let eps = margin * scale;
    let verdict = if zeros.iter().any(|z| z.value.re - z.radius > eps) {
        Stability::Unstable
    } else if zeros.iter().all(|z| z.value.re + z.radius < -eps) {
        Stability::Stable
    } else {
        Stability::Unknown
    };
    ZerosReport {
        determinant: Some(det),
        zeros,
        margin: eps,
        verdict,
        diagnostic: None,
    }
}

pub fn zero_dynamics_stable(sys: &LinearDae) -> Stability {
    invariant_zeros(sys).verdict
}

pub fn analyze(sys: &LinearDae) -> AnalysisReport {
    let zd_autonomous = zero_dynamics_autonomous(sys);
    let invariant_zeros = invariant_zeros(sys);
    let zd_asymptotically_stable = if zd_autonomous {
        invariant_zeros.verdict
    } else {
        Stability::Unknown
    };
    AnalysisReport {
        regular: is_regular(sys),
        zd_autonomous,
        right_invertible: is_right_invertible(sys),
        zd_asymptotically_stable,
        invariant_zeros,
    }
}

/// Largest real part over roots, for quick diagnostics.
pub fn spectral_abscissa(zeros: &[CertifiedRoot]) -> Option<f64> {
    zeros.iter().map(|z| z.value.re).reduce(f64::max)
}

/// Evaluates `H` at a real point, for numerical cross-checks.
pub fn eval_ratmat(m: &RatMat, x: &Rational) -> Option<QMatrix> {
    let mut out = QMatrix::zeros(m.rows(), m.cols());
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            out.set(i, j, m.get(i, j).eval(x)?);
        }
    }
    Some(out)
}
