use core::fmt;
use core::ops::{Add, Mul, Neg, Sub};

use num_traits::{One, Zero};

use super::poly::rational_to_f64;
use super::{Degree, Poly, PolyError, Rational};

/// A real rational function `num(s) / den(s)` in canonical form: the
/// denominator is monic and coprime to the numerator. Zero is `0 / 1`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RatFun {
    num: Poly,
    den: Poly,
}

impl RatFun {
    /// Builds and canonicalizes `num / den`.
    pub fn new(num: Poly, den: Poly) -> Result<Self, PolyError> {
        if den.is_zero() {
            return Err(PolyError::ZeroDenominator);
        }
        Ok(Self::canonical(num, den))
    }

    fn canonical(num: Poly, den: Poly) -> Self {
        if num.is_zero() {
            return Self::zero();
        }
        let g = num.gcd(&den);
        // g is monic and nonzero here
        let mut num = num.exact_div(&g).unwrap_or_default();
        let mut den = den.exact_div(&g).unwrap_or_default();
        let lc = den.leading_coeff();
        if !lc.is_one() {
            let inv = lc.recip();
            num = num.scale(&inv);
            den = den.scale(&inv);
        }
        Self { num, den }
    }

    pub fn zero() -> Self {
        Self {
            num: Poly::zero(),
            den: Poly::one(),
        }
    }

    pub fn one() -> Self {
        Self {
            num: Poly::one(),
            den: Poly::one(),
        }
    }

    pub fn s() -> Self {
        Self::from_poly(Poly::s())
    }

    pub fn from_poly(p: Poly) -> Self {
        Self {
            num: p,
            den: Poly::one(),
        }
    }

    pub fn constant(c: Rational) -> Self {
        Self::from_poly(Poly::constant(c))
    }

    pub fn from_i64(c: i64) -> Self {
        Self::from_poly(Poly::from_i64(c))
    }

    /// Convenience for tests and fixtures: ascending integer coefficients.
    pub fn from_i64_parts(num: &[i64], den: &[i64]) -> Result<Self, PolyError> {
        Self::new(Poly::from_i64_coeffs(num), Poly::from_i64_coeffs(den))
    }

    pub fn num(&self) -> &Poly {
        &self.num
    }

    pub fn den(&self) -> &Poly {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_polynomial(&self) -> bool {
        self.den.is_constant()
    }

    /// `Some(c)` if this is the constant `c`.
    pub fn as_constant(&self) -> Option<Rational> {
        if self.num.is_constant() && self.den.is_constant() {
            Some(self.num.coeff(0))
        } else {
            None
        }
    }

    /// `deg num - deg den`; negative infinity for zero.
    pub fn degree(&self) -> Degree {
        degree_of_quotient(&self.num, &self.den)
    }

    pub fn inv(&self) -> Result<Self, PolyError> {
        if self.is_zero() {
            return Err(PolyError::DivisionByZero);
        }
        Ok(Self::canonical(self.den.clone(), self.num.clone()))
    }

    pub fn checked_div(&self, rhs: &RatFun) -> Result<Self, PolyError> {
        Ok(self * &rhs.inv()?)
    }

    pub fn scale(&self, c: &Rational) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        Self {
            num: self.num.scale(c),
            den: self.den.clone(),
        }
    }

    /// `lim_{λ→∞} r(λ) λ^shift`: zero when the shifted degree is negative, the
    /// leading-coefficient ratio when it is zero, `None` when it diverges.
    pub fn limit_at_infinity(&self, shift: i64) -> Option<Rational> {
        match self.degree() {
            Degree::NegInfinity => Some(Rational::zero()),
            Degree::Finite(d) => match (d + shift).cmp(&0) {
                core::cmp::Ordering::Less => Some(Rational::zero()),
                core::cmp::Ordering::Equal => {
                    Some(self.num.leading_coeff() / self.den.leading_coeff())
                }
                core::cmp::Ordering::Greater => None,
            },
        }
    }

    pub fn eval(&self, x: &Rational) -> Option<Rational> {
        let d = self.den.eval(x);
        if d.is_zero() {
            None
        } else {
            Some(self.num.eval(x) / d)
        }
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        self.num.eval_f64(x) / self.den.eval_f64(x)
    }

    pub fn to_f64_constant(&self) -> Option<f64> {
        self.as_constant().map(|c| rational_to_f64(&c))
    }
}

/// Degree of `num / den` without requiring the pair to be coprime.
pub fn degree_of_quotient(num: &Poly, den: &Poly) -> Degree {
    match (num.degree(), den.degree()) {
        (Degree::NegInfinity, _) | (_, Degree::NegInfinity) => Degree::NegInfinity,
        (Degree::Finite(a), Degree::Finite(b)) => Degree::Finite(a - b),
    }
}

impl Default for RatFun {
    fn default() -> Self {
        Self::zero()
    }
}

impl Zero for RatFun {
    fn zero() -> Self {
        RatFun::zero()
    }
    fn is_zero(&self) -> bool {
        RatFun::is_zero(self)
    }
}

impl One for RatFun {
    fn one() -> Self {
        RatFun::one()
    }
}

impl fmt::Debug for RatFun {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for RatFun {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.is_one_poly() {
            return write!(f, "{}", self.num);
        }
        let wrap = |p: &Poly| p.coeffs().iter().filter(|c| !c.is_zero()).count() > 1;
        match (wrap(&self.num), wrap(&self.den)) {
            (true, true) => write!(f, "({})/({})", self.num, self.den),
            (true, false) => write!(f, "({})/{}", self.num, self.den),
            (false, true) => write!(f, "{}/({})", self.num, self.den),
            (false, false) => write!(f, "{}/{}", self.num, self.den),
        }
    }
}

impl Poly {
    fn is_one_poly(&self) -> bool {
        self.coeffs().len() == 1 && self.coeffs()[0].is_one()
    }
}

impl<'a> Add<&'a RatFun> for &'a RatFun {
    type Output = RatFun;
    fn add(self, rhs: &RatFun) -> RatFun {
        if self.is_zero() {
            return rhs.clone();
        }
        if rhs.is_zero() {
            return self.clone();
        }
        if self.den == rhs.den {
            return RatFun::canonical(&self.num + &rhs.num, self.den.clone());
        }
        RatFun::canonical(
            &(&self.num * &rhs.den) + &(&rhs.num * &self.den),
            &self.den * &rhs.den,
        )
    }
}

impl<'a> Sub<&'a RatFun> for &'a RatFun {
    type Output = RatFun;
    fn sub(self, rhs: &RatFun) -> RatFun {
        self + &(-rhs)
    }
}

impl<'a> Mul<&'a RatFun> for &'a RatFun {
    type Output = RatFun;
    fn mul(self, rhs: &RatFun) -> RatFun {
        if self.is_zero() || rhs.is_zero() {
            return RatFun::zero();
        }
        if self.is_polynomial() && rhs.is_polynomial() {
            // monic constant denominators are exactly one
            return RatFun {
                num: &self.num * &rhs.num,
                den: Poly::one(),
            };
        }
        RatFun::canonical(&self.num * &rhs.num, &self.den * &rhs.den)
    }
}

impl Neg for &RatFun {
    type Output = RatFun;
    fn neg(self) -> RatFun {
        RatFun {
            num: -&self.num,
            den: self.den.clone(),
        }
    }
}

impl Neg for RatFun {
    type Output = RatFun;
    fn neg(self) -> RatFun {
        -&self
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr<RatFun> for RatFun {
            type Output = RatFun;
            fn $m(self, rhs: RatFun) -> RatFun {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);
