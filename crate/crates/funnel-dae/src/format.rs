//! JSON file formats: linear systems with exact entries, closed-loop
//! configurations built from registry entries or templates.

use std::str::FromStr;
use std::sync::Arc;

use funnel_dae_core::closed_loop::{
    Controller, History, LinearNormalForm, Method, SimulationConfig,
};
use funnel_dae_core::dae_analysis::LinearDae;
use funnel_dae_core::funnel::{default_phi, FamilyPhi, FunnelFunction, Signal};
use funnel_dae_core::linalg::Mat;
use funnel_dae_core::polyrat::{Poly, QMatrix, RatFun, Rational};
use funnel_dae_core::registry::{self, ClosedLoopExample};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// `"p/q"` with `q > 0` in lowest terms; integers also get the `/1`.
pub fn rational_to_string(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Accepts `"p/q"`, `"p"` and the Unicode minus sign.
pub fn parse_rational(s: &str) -> Result<Rational, String> {
    let cleaned: String = s.trim().replace('−', "-");
    let r = Rational::from_str(&cleaned).map_err(|_| format!("not a rational number: {s:?}"))?;
    Ok(r)
}

pub fn qmatrix_to_strings(m: &QMatrix) -> Vec<Vec<String>> {
    m.to_rows()
        .iter()
        .map(|row| row.iter().map(rational_to_string).collect())
        .collect()
}

pub fn poly_to_strings(p: &Poly) -> Vec<String> {
    p.coeffs().iter().map(rational_to_string).collect()
}

/// A rational function as ascending numerator and denominator coefficients.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatFunJson {
    pub num: Vec<String>,
    pub den: Vec<String>,
}

impl From<&RatFun> for RatFunJson {
    fn from(r: &RatFun) -> Self {
        Self {
            num: poly_to_strings(r.num()),
            den: poly_to_strings(r.den()),
        }
    }
}

impl RatFunJson {
    pub fn to_ratfun(&self) -> Result<RatFun, String> {
        let poly = |c: &[String]| -> Result<Poly, String> {
            Ok(Poly::from_coeffs(
                c.iter()
                    .map(|s| parse_rational(s))
                    .collect::<Result<_, _>>()?,
            ))
        };
        RatFun::new(poly(&self.num)?, poly(&self.den)?).map_err(|e| e.to_string())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SystemFile {
    Linear(LinearFile),
    Nonlinear(NonlinearFile),
}

impl SystemFile {
    /// Reads `kind` first and then the body directly, so diagnostics keep
    /// their line and column.
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        #[derive(Deserialize)]
        struct Kind {
            kind: String,
        }
        let parse = |e: serde_json::Error| CliError::Parse(e.to_string());
        let kind: Kind = serde_json::from_str(text).map_err(parse)?;
        match kind.kind.as_str() {
            "linear" => Ok(SystemFile::Linear(
                serde_json::from_str(text).map_err(parse)?,
            )),
            "nonlinear" => Ok(SystemFile::Nonlinear(
                serde_json::from_str(text).map_err(parse)?,
            )),
            other => Err(CliError::Parse(format!(
                "kind: expected \"linear\" or \"nonlinear\", found {other:?}"
            ))),
        }
    }
}

/// `E d/dt x = A x + B u`, `y = C x` with entries as rational strings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearFile {
    #[serde(rename = "E")]
    pub e: Vec<Vec<String>>,
    #[serde(rename = "A")]
    pub a: Vec<Vec<String>>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<String>>,
    #[serde(rename = "C")]
    pub c: Vec<Vec<String>>,
}

fn parse_qmatrix(field: &str, rows: &[Vec<String>]) -> Result<QMatrix, CliError> {
    let parsed = rows
        .iter()
        .enumerate()
        .map(|(i, row)| {
            row.iter()
                .enumerate()
                .map(|(j, s)| {
                    parse_rational(s)
                        .map_err(|e| CliError::Parse(format!("{field}[{i}][{j}]: {e}")))
                })
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    QMatrix::from_rows(parsed).map_err(|e| CliError::Parse(format!("{field}: {e}")))
}

impl LinearFile {
    pub fn from_system(sys: &LinearDae) -> Self {
        Self {
            e: qmatrix_to_strings(sys.e()),
            a: qmatrix_to_strings(sys.a()),
            b: qmatrix_to_strings(sys.b()),
            c: qmatrix_to_strings(sys.c()),
        }
    }

    pub fn to_system(&self) -> Result<LinearDae, CliError> {
        LinearDae::new(
            parse_qmatrix("E", &self.e)?,
            parse_qmatrix("A", &self.a)?,
            parse_qmatrix("B", &self.b)?,
            parse_qmatrix("C", &self.c)?,
        )
        .map_err(|e| CliError::Parse(e.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalSpec {
    Const(f64),
    Sin {
        amp: f64,
        freq: f64,
        #[serde(default)]
        phase: f64,
    },
    Cos {
        amp: f64,
        freq: f64,
        #[serde(default)]
        phase: f64,
    },
    Polynomial(Vec<f64>),
    Sum(Vec<SignalSpec>),
}

impl SignalSpec {
    pub fn to_signal(&self) -> Signal {
        match self {
            SignalSpec::Const(c) => Signal::Const(*c),
            SignalSpec::Sin { amp, freq, phase } => Signal::Sin {
                amp: *amp,
                freq: *freq,
                phase: *phase,
            },
            SignalSpec::Cos { amp, freq, phase } => Signal::Cos {
                amp: *amp,
                freq: *freq,
                phase: *phase,
            },
            SignalSpec::Polynomial(c) => Signal::Polynomial(c.clone()),
            SignalSpec::Sum(parts) => Signal::Sum(parts.iter().map(Self::to_signal).collect()),
        }
    }
}

/// `φ(t) = p(t) e^{−μt} + β arctan(γt) + δ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilySpec {
    pub poly: Vec<f64>,
    pub mu: f64,
    pub beta: f64,
    pub gamma: f64,
    #[serde(default)]
    pub delta: f64,
}

/// A named funnel function or a member of the parameter family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PhiSpec {
    Named(String),
    Family(FamilySpec),
}

impl PhiSpec {
    pub fn to_phi(&self) -> Result<Arc<dyn FunnelFunction>, CliError> {
        match self {
            PhiSpec::Named(n) if n == "paper-sec5" || n == "default" => Ok(Arc::new(default_phi())),
            PhiSpec::Named(n) => Err(CliError::Parse(format!(
                "phi: unknown funnel function {n:?}"
            ))),
            PhiSpec::Family(f) => Ok(Arc::new(FamilyPhi {
                poly: f.poly.clone(),
                mu: f.mu,
                beta: f.beta,
                gamma: f.gamma,
                delta: f.delta,
            })),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HistorySpec {
    Constant(f64),
    Derivatives(Vec<f64>),
    Polynomial(Vec<f64>),
}

impl HistorySpec {
    fn to_history(&self) -> History {
        match self {
            HistorySpec::Constant(c) => History::Constant(*c),
            HistorySpec::Derivatives(d) => History::Derivatives(d.clone()),
            HistorySpec::Polynomial(c) => History::Polynomial(c.clone()),
        }
    }
}

/// The linear normal form with real blocks. `f1_poly[i]` optionally replaces
/// the identity in the `i`-th differential equation by the polynomial with these
/// ascending coefficients in the `i`-th component of `T₁`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalFormSpec {
    pub m: usize,
    pub r: Vec<usize>,
    #[serde(rename = "Q")]
    pub q: Vec<Vec<f64>>,
    #[serde(rename = "A12")]
    pub a12: Vec<Vec<f64>>,
    pub eta0: Vec<f64>,
    #[serde(rename = "R1")]
    pub r1: Vec<Vec<f64>>,
    #[serde(rename = "S1")]
    pub s1: Vec<Vec<f64>>,
    #[serde(rename = "P1")]
    pub p1: Vec<Vec<f64>>,
    #[serde(rename = "Gamma11")]
    pub gamma11: Vec<Vec<f64>>,
    #[serde(rename = "R2")]
    pub r2: Vec<Vec<f64>>,
    #[serde(rename = "S2")]
    pub s2: Vec<Vec<f64>>,
    #[serde(rename = "P2")]
    pub p2: Vec<Vec<f64>>,
    #[serde(rename = "Gamma21")]
    pub gamma21: Vec<Vec<f64>>,
    #[serde(default)]
    pub f1_poly: Option<Vec<Vec<f64>>>,
    pub history: Vec<HistorySpec>,
}

/// Rows of a real matrix; an empty list becomes `0 × cols`.
fn real_matrix(field: &str, rows: &[Vec<f64>], cols: usize) -> Result<Mat, CliError> {
    if rows.is_empty() {
        return Ok(Mat::zeros(0, cols));
    }
    let width = rows[0].len();
    if let Some(i) = rows.iter().position(|r| r.len() != width) {
        return Err(CliError::Parse(format!(
            "{field}: row {i} has {} entries, row 0 has {width}",
            rows[i].len()
        )));
    }
    let data = rows.iter().flatten().copied().collect();
    Mat::from_vec(rows.len(), width, data)
        .ok_or_else(|| CliError::Parse(format!("{field}: bad shape")))
}

impl NormalFormSpec {
    pub fn to_plant(
        &self,
    ) -> Result<funnel_dae_core::closed_loop::NonlinearFunctionalDae, CliError> {
        let q = self.r.len();
        let rb: usize = self.r.iter().sum();
        let n1 = self.eta0.len();
        let n_ii = self.m.saturating_sub(q);
        let nf = LinearNormalForm {
            m: self.m,
            r: self.r.clone(),
            q_mat: real_matrix("Q", &self.q, n1)?,
            a12: real_matrix("A12", &self.a12, self.m)?,
            eta0: self.eta0.clone(),
            r1: real_matrix("R1", &self.r1, rb)?,
            s1: real_matrix("S1", &self.s1, n_ii)?,
            p1: real_matrix("P1", &self.p1, n1)?,
            gamma11: real_matrix("Gamma11", &self.gamma11, q)?,
            r2: real_matrix("R2", &self.r2, rb)?,
            s2: real_matrix("S2", &self.s2, n_ii)?,
            p2: real_matrix("P2", &self.p2, n1)?,
            gamma21: real_matrix("Gamma21", &self.gamma21, q)?,
        };
        let history = self.history.iter().map(HistorySpec::to_history).collect();
        let (mut plant, _) = nf
            .into_plant(history)
            .map_err(|e| CliError::Parse(format!("plant: {e}")))?;
        if let Some(polys) = &self.f1_poly {
            if polys.len() != q {
                return Err(CliError::Parse(format!(
                    "f1_poly: expected {q} polynomials, found {}",
                    polys.len()
                )));
            }
            let polys = polys.clone();
            plant.f1 = Arc::new(move |_, eta| {
                polys
                    .iter()
                    .zip(eta)
                    .map(|(c, x)| c.iter().rev().fold(0.0, |acc, a| acc * x + a))
                    .collect()
            });
        }
        Ok(plant)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "template", rename_all = "kebab-case")]
pub enum PlantSpec {
    Registry {
        name: String,
    },
    /// The §5 plant with a chosen `T(0)` and `(y₁(0), ẏ₁(0), y₂(0))`.
    PaperSec5 {
        #[serde(default)]
        eta0: f64,
        #[serde(default)]
        initial: [f64; 3],
    },
    NormalForm(Box<NormalFormSpec>),
}

/// Overrides of the controller attached to the plant; required fields for
/// the normal-form template are `k_hat` and `y_ref`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ControllerSpec {
    #[serde(default)]
    pub k_hat: Option<f64>,
    #[serde(default)]
    pub y_ref: Option<Vec<SignalSpec>>,
    #[serde(default)]
    pub phi: Option<PhiSpec>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum MethodSpec {
    Bs23,
    Dp54,
}

impl From<MethodSpec> for Method {
    fn from(m: MethodSpec) -> Self {
        match m {
            MethodSpec::Bs23 => Method::BogackiShampine,
            MethodSpec::Dp54 => Method::DormandPrince,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SimulationSpec {
    #[serde(default)]
    pub t_end: Option<f64>,
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub h_max: Option<f64>,
    #[serde(default)]
    pub stride: Option<usize>,
    #[serde(default)]
    pub method: Option<MethodSpec>,
    #[serde(default)]
    pub output_times: Vec<f64>,
}

impl SimulationSpec {
    pub fn to_config(&self) -> SimulationConfig {
        let mut cfg = SimulationConfig::default();
        if let Some(t) = self.t_end {
            cfg.t_end = t;
        }
        if let Some(t) = self.tol {
            cfg.tol = t;
        }
        if let Some(h) = self.h_max {
            cfg.h_max = h;
        }
        if let Some(s) = self.stride {
            cfg.stride = s;
        }
        if let Some(m) = self.method {
            cfg.method = m.into();
        }
        cfg.output_times = self.output_times.clone();
        cfg
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonlinearFile {
    pub plant: PlantSpec,
    #[serde(default)]
    pub controller: ControllerSpec,
    #[serde(default)]
    pub simulation: SimulationSpec,
}

/// A registry plant, rebuilt when `k̂` changes the consistent initial value.
pub fn registry_example(name: &str, k_hat: Option<f64>) -> Option<ClosedLoopExample> {
    let mut ex = match (name, k_hat) {
        ("paper-sec5", Some(k)) => registry::paper_sec5(k, 0.0, [0.0; 3]),
        ("linear-normalform-demo", Some(k)) => registry::linear_normalform_plant(k),
        _ => registry::nonlinear(name)?,
    };
    if let Some(k) = k_hat {
        ex.controller.k_hat = k;
    }
    Some(ex)
}

impl NonlinearFile {
    /// Plant and controller; `k_hat` from the command line wins over the file.
    pub fn build(&self, k_hat: Option<f64>) -> Result<ClosedLoopExample, CliError> {
        let k_hat = k_hat.or(self.controller.k_hat);
        let mut ex = match &self.plant {
            PlantSpec::Registry { name } => registry_example(name, k_hat).ok_or_else(|| {
                CliError::Parse(format!("plant: unknown registry entry {name:?}"))
            })?,
            PlantSpec::PaperSec5 { eta0, initial } => {
                registry::paper_sec5(k_hat.unwrap_or(2.0), *eta0, *initial)
            }
            PlantSpec::NormalForm(nf) => {
                let plant = nf.to_plant()?;
                let k =
                    k_hat.ok_or_else(|| CliError::Parse("controller.k_hat is required".into()))?;
                let y_ref = self
                    .controller
                    .y_ref
                    .as_ref()
                    .ok_or_else(|| CliError::Parse("controller.y_ref is required".into()))?;
                let r = plant.r.clone();
                let controller = Controller::uniform(
                    k,
                    y_ref.iter().map(SignalSpec::to_signal).collect(),
                    Arc::new(default_phi()),
                    &r,
                );
                ClosedLoopExample { plant, controller }
            }
        };
        if let Some(y_ref) = &self.controller.y_ref {
            ex.controller.y_ref = y_ref.iter().map(SignalSpec::to_signal).collect();
        }
        if let Some(phi) = &self.controller.phi {
            let r = ex.plant.r.clone();
            ex.controller = Controller::uniform(
                ex.controller.k_hat,
                ex.controller.y_ref.clone(),
                phi.to_phi()?,
                &r,
            );
        }
        Ok(ex)
    }
}
