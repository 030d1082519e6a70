//! JSON views of the structural analysis.

use funnel_dae_core::dae_analysis::{
    analyze, gamma_decomposition, truncated_vrd, vector_rd, AnalysisReport, GammaDecomposition,
    LinearDae, Stability, TvrdReport, VrdReport, ZerosReport,
};
use funnel_dae_core::polyrat::{rational_to_f64, QMatrix, RatMat};
use serde::{Deserialize, Serialize};

use crate::format::{poly_to_strings, qmatrix_to_strings, RatFunJson};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StabilityJson {
    Stable,
    Unstable,
    Unknown,
}

impl From<Stability> for StabilityJson {
    fn from(s: Stability) -> Self {
        match s {
            Stability::Stable => StabilityJson::Stable,
            Stability::Unstable => StabilityJson::Unstable,
            Stability::Unknown => StabilityJson::Unknown,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZeroJson {
    pub re: f64,
    pub im: f64,
    pub radius: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZerosJson {
    /// Ascending coefficients of the pencil determinant.
    pub determinant: Option<Vec<String>>,
    pub zeros: Vec<ZeroJson>,
    pub margin: f64,
    pub verdict: StabilityJson,
    pub diagnostic: Option<String>,
}

impl From<&ZerosReport> for ZerosJson {
    fn from(z: &ZerosReport) -> Self {
        Self {
            determinant: z.determinant.as_ref().map(poly_to_strings),
            zeros: z
                .zeros
                .iter()
                .map(|c| ZeroJson {
                    re: c.value.re,
                    im: c.value.im,
                    radius: c.radius,
                })
                .collect(),
            margin: z.margin,
            verdict: z.verdict.into(),
            diagnostic: z.diagnostic.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisJson {
    pub regular: bool,
    pub zd_autonomous: bool,
    /// Full row rank of the system pencil; equals right-invertibility for
    /// regular systems only.
    pub right_invertible_rank_surrogate: bool,
    pub zd_asymptotically_stable: StabilityJson,
    pub invariant_zeros: ZerosJson,
}

impl From<&AnalysisReport> for AnalysisJson {
    fn from(a: &AnalysisReport) -> Self {
        Self {
            regular: a.regular,
            zd_autonomous: a.zd_autonomous,
            right_invertible_rank_surrogate: a.right_invertible,
            zd_asymptotically_stable: a.zd_asymptotically_stable.into(),
            invariant_zeros: (&a.invariant_zeros).into(),
        }
    }
}

fn floats(m: &QMatrix) -> Vec<Vec<f64>> {
    m.to_rows()
        .iter()
        .map(|r| r.iter().map(rational_to_f64).collect())
        .collect()
}

fn ratmat_json(m: &RatMat) -> Vec<Vec<RatFunJson>> {
    m.to_rows()
        .iter()
        .map(|r| r.iter().map(RatFunJson::from).collect())
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TvrdJson {
    pub exists: bool,
    pub r: Vec<usize>,
    pub q: usize,
    pub gamma_hat: Vec<Vec<String>>,
    pub gamma_hat_f64: Vec<Vec<f64>>,
    pub gamma_hat_q: Vec<Vec<String>>,
    pub rank_gamma_hat_q: usize,
    #[serde(rename = "H")]
    pub h: Vec<Vec<RatFunJson>>,
}

impl From<&TvrdReport> for TvrdJson {
    fn from(t: &TvrdReport) -> Self {
        Self {
            exists: t.exists,
            r: t.r.clone(),
            q: t.q,
            gamma_hat: qmatrix_to_strings(&t.gamma_hat),
            gamma_hat_f64: floats(&t.gamma_hat),
            gamma_hat_q: qmatrix_to_strings(&t.gamma_hat_q),
            rank_gamma_hat_q: t.rank_gamma_hat_q,
            h: ratmat_json(&t.h),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VrdJson {
    pub exists: bool,
    /// `null` for an identically zero row of `G`.
    pub r: Vec<Option<i64>>,
    pub gamma: Vec<Vec<String>>,
    pub gamma_f64: Vec<Vec<f64>>,
    pub rank_gamma: usize,
    pub strict: Option<i64>,
}

impl From<&VrdReport> for VrdJson {
    fn from(v: &VrdReport) -> Self {
        Self {
            exists: v.exists,
            r: v.r.clone(),
            gamma: qmatrix_to_strings(&v.gamma),
            gamma_f64: floats(&v.gamma),
            rank_gamma: v.rank_gamma,
            strict: v.strict,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaJson {
    pub gamma: Vec<Vec<String>>,
    pub reordering: Vec<usize>,
}

impl From<&GammaDecomposition> for GammaJson {
    fn from(g: &GammaDecomposition) -> Self {
        Self {
            gamma: qmatrix_to_strings(&g.gamma),
            reordering: g.reordering.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dims {
    pub l: usize,
    pub n: usize,
    pub m: usize,
    pub p: usize,
}

/// Everything `analyze` prints. Parts whose preconditions fail are `null`
/// and the reason is listed in `failures`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalyzeOutput {
    pub system: String,
    pub dims: Dims,
    pub analysis: AnalysisJson,
    pub tvrd: Option<TvrdJson>,
    pub vrd: Option<VrdJson>,
    pub gamma_decomposition: Option<GammaJson>,
    pub failures: Vec<String>,
}

pub fn analyze_system(label: &str, sys: &LinearDae) -> AnalyzeOutput {
    let (l, n, m, p) = sys.dims();
    let mut failures = Vec::new();
    let tvrd = truncated_vrd(sys)
        .map_err(|e| failures.push(format!("tvrd: {e}")))
        .ok();
    let vrd = vector_rd(sys)
        .map_err(|e| failures.push(format!("vrd: {e}")))
        .ok();
    let gamma = tvrd.as_ref().filter(|t| t.exists).and_then(|t| {
        gamma_decomposition(&t.gamma_hat, &t.r)
            .map_err(|e| failures.push(format!("gamma decomposition: {e}")))
            .ok()
    });
    AnalyzeOutput {
        system: label.to_string(),
        dims: Dims { l, n, m, p },
        analysis: (&analyze(sys)).into(),
        tvrd: tvrd.as_ref().map(TvrdJson::from),
        vrd: vrd.as_ref().map(VrdJson::from),
        gamma_decomposition: gamma.as_ref().map(GammaJson::from),
        failures,
    }
}
