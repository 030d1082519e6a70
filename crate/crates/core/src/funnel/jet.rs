use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Mul, Neg, Sub};

use super::FunnelError;

/// Truncated Taylor expansion `Σ c_j τ^j` of a function around a fixed time:
/// `c_j = f^{(j)}(t₀) / j!`. The order is `coeffs.len() − 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet {
    c: Vec<f64>,
}

impl Jet {
    pub fn from_coeffs(c: Vec<f64>) -> Self {
        assert!(!c.is_empty(), "a jet has at least one coefficient");
        Self { c }
    }

    /// From derivative values `f, f', f'', …`.
    pub fn from_derivatives(d: &[f64]) -> Self {
        let mut fact = 1.0;
        let c = d
            .iter()
            .enumerate()
            .map(|(j, v)| {
                if j > 0 {
                    fact *= j as f64;
                }
                v / fact
            })
            .collect();
        Self::from_coeffs(c)
    }

    pub fn constant(v: f64, order: usize) -> Self {
        let mut c = vec![0.0; order + 1];
        c[0] = v;
        Self { c }
    }

    /// The identity function `t` expanded at `t0`.
    pub fn variable(t0: f64, order: usize) -> Self {
        let mut c = vec![0.0; order + 1];
        c[0] = t0;
        if order > 0 {
            c[1] = 1.0;
        }
        Self { c }
    }

    pub fn order(&self) -> usize {
        self.c.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.c
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// `f^{(j)}(t₀)`.
    pub fn derivative(&self, j: usize) -> f64 {
        let fact: f64 = (1..=j).map(|k| k as f64).product();
        self.c.get(j).map_or(0.0, |c| c * fact)
    }

    pub fn truncate(&self, order: usize) -> Self {
        let mut c = self.c.clone();
        c.resize(order + 1, 0.0);
        Self { c }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            c: self.c.iter().map(|x| x * s).collect(),
        }
    }

    pub fn add_scalar(&self, s: f64) -> Self {
        let mut c = self.c.clone();
        c[0] += s;
        Self { c }
    }

    /// Jet of `f'`, one order lower.
    pub fn differentiate(&self) -> Self {
        if self.c.len() == 1 {
            return Self::constant(0.0, 0);
        }
        Self {
            c: (1..self.c.len()).map(|k| k as f64 * self.c[k]).collect(),
        }
    }

    /// Jet of an antiderivative with the given value, one order higher.
    pub fn integrate(&self, value: f64) -> Self {
        let mut c = Vec::with_capacity(self.c.len() + 1);
        c.push(value);
        c.extend(self.c.iter().enumerate().map(|(k, x)| x / (k + 1) as f64));
        Self { c }
    }

    pub fn recip(&self) -> Result<Self, FunnelError> {
        let a0 = self.c[0];
        if a0 == 0.0 || !a0.is_finite() {
            return Err(FunnelError::SingularJet);
        }
        let n = self.c.len();
        let mut r = vec![0.0; n];
        r[0] = 1.0 / a0;
        for k in 1..n {
            let s: f64 = (1..=k).map(|j| self.c[j] * r[k - j]).sum();
            r[k] = -s / a0;
        }
        Ok(Self { c: r })
    }

    pub fn exp(&self) -> Self {
        let n = self.c.len();
        let mut e = vec![0.0; n];
        e[0] = libm::exp(self.c[0]);
        for k in 1..n {
            let s: f64 = (1..=k).map(|j| j as f64 * self.c[j] * e[k - j]).sum();
            e[k] = s / k as f64;
        }
        Self { c: e }
    }

    /// `(sin f, cos f)`.
    pub fn sin_cos(&self) -> (Self, Self) {
        let n = self.c.len();
        let mut s = vec![0.0; n];
        let mut c = vec![0.0; n];
        s[0] = libm::sin(self.c[0]);
        c[0] = libm::cos(self.c[0]);
        for k in 1..n {
            let ds: f64 = (1..=k).map(|j| j as f64 * self.c[j] * c[k - j]).sum();
            let dc: f64 = (1..=k).map(|j| j as f64 * self.c[j] * s[k - j]).sum();
            s[k] = ds / k as f64;
            c[k] = -dc / k as f64;
        }
        (Self { c: s }, Self { c })
    }

    /// `atan f`, from `(atan f)' = f' / (1 + f²)`.
    pub fn atan(&self) -> Self {
        let order = self.order();
        if order == 0 {
            return Self::constant(libm::atan(self.c[0]), 0);
        }
        let low = self.truncate(order - 1);
        // 1 + f² ≥ 1, so the reciprocal exists
        let denom = (&low * &low)
            .add_scalar(1.0)
            .recip()
            .unwrap_or_else(|_| Self::constant(0.0, order - 1));
        (&self.differentiate() * &denom).integrate(libm::atan(self.c[0]))
    }
}

impl Add for &Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        let n = self.c.len().min(rhs.c.len());
        Jet {
            c: (0..n).map(|k| self.c[k] + rhs.c[k]).collect(),
        }
    }
}

impl Sub for &Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        let n = self.c.len().min(rhs.c.len());
        Jet {
            c: (0..n).map(|k| self.c[k] - rhs.c[k]).collect(),
        }
    }
}

/// Cauchy product, truncated at the lower of the two orders.
impl Mul for &Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        let n = self.c.len().min(rhs.c.len());
        Jet {
            c: (0..n)
                .map(|k| (0..=k).map(|j| self.c[j] * rhs.c[k - j]).sum())
                .collect(),
        }
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}
