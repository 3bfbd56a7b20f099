//! Rational functions in the base variables, used as the coefficient field
//! of differential polynomials.
//!
//! Values are kept reduced: numerator and denominator share no factor, the
//! denominator has coprime integer coefficients and a positive leading
//! coefficient. No further scaling is applied, so poles survive arithmetic
//! unchanged and evaluation can report them faithfully.

use std::collections::BTreeMap;

use num_traits::Signed;

use super::subres::mv_gcd;
use super::{Field, Poly, Rat, Var};

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct RatFn {
    num: Poly<Var, Rat>,
    den: Poly<Var, Rat>,
}

impl RatFn {
    pub fn new(num: Poly<Var, Rat>, den: Poly<Var, Rat>) -> Self {
        assert!(!den.is_zero(), "zero denominator");
        RatFn { num, den }.reduced()
    }

    pub fn from_poly(p: Poly<Var, Rat>) -> Self {
        RatFn {
            num: p,
            den: Poly::one(),
        }
    }

    pub fn var(v: Var) -> Self {
        RatFn::from_poly(Poly::var(v))
    }

    pub fn from_rat(r: Rat) -> Self {
        RatFn::from_poly(Poly::constant(r))
    }

    pub fn num(&self) -> &Poly<Var, Rat> {
        &self.num
    }

    pub fn den(&self) -> &Poly<Var, Rat> {
        &self.den
    }

    pub fn is_polynomial(&self) -> bool {
        self.den.is_constant()
    }

    /// The constant value, if both parts are constants.
    pub fn as_rat(&self) -> Option<Rat> {
        let n = self.num.as_constant()?;
        let d = self.den.as_constant()?;
        Some(n / d)
    }

    fn reduced(self) -> Self {
        if self.num.is_zero() {
            return RatFn {
                num: Poly::zero(),
                den: Poly::one(),
            };
        }
        let g = mv_gcd(&self.num, &self.den);
        let mut num = self.num.try_exact_div(&g).expect("gcd divides numerator");
        let mut den = self.den.try_exact_div(&g).expect("gcd divides denominator");
        let mut c = den.content();
        if den
            .leading_term()
            .map(|(_, k)| k.is_negative())
            .unwrap_or(false)
        {
            c = -c;
        }
        let inv = c.recip();
        num = num.map_coeffs(|k| k * &inv);
        den = den.map_coeffs(|k| k * &inv);
        RatFn { num, den }
    }

    pub fn recip(&self) -> Self {
        assert!(!self.num.is_zero(), "reciprocal of zero");
        RatFn {
            num: self.den.clone(),
            den: self.num.clone(),
        }
        .reduced()
    }

    /// Partial derivative with respect to a base variable.
    pub fn derivative(&self, v: &Var) -> Self {
        let n = self.num.derivative(v).mul(&self.den).sub(&self.num.mul(&self.den.derivative(v)));
        let d = self.den.mul(&self.den);
        RatFn { num: n, den: d }.reduced()
    }

    /// Evaluates at a point; `None` when the denominator vanishes there.
    pub fn eval(&self, point: &BTreeMap<Var, Rat>) -> Option<Rat> {
        let d = self.den.eval(point);
        if num_traits::Zero::is_zero(&d) {
            return None;
        }
        Some(self.num.eval(point) / d)
    }
}

impl Field for RatFn {
    fn zero() -> Self {
        RatFn::from_poly(Poly::zero())
    }
    fn one() -> Self {
        RatFn::from_poly(Poly::one())
    }
    fn is_zero(&self) -> bool {
        self.num.is_zero()
    }
    fn add(&self, other: &Self) -> Self {
        let num = self.num.mul(&other.den).add(&other.num.mul(&self.den));
        let den = self.den.mul(&other.den);
        RatFn { num, den }.reduced()
    }
    fn sub(&self, other: &Self) -> Self {
        let num = self.num.mul(&other.den).sub(&other.num.mul(&self.den));
        let den = self.den.mul(&other.den);
        RatFn { num, den }.reduced()
    }
    fn mul(&self, other: &Self) -> Self {
        let num = self.num.mul(&other.num);
        let den = self.den.mul(&other.den);
        RatFn { num, den }.reduced()
    }
    fn neg(&self) -> Self {
        RatFn {
            num: self.num.neg(),
            den: self.den.clone(),
        }
    }
    fn div(&self, other: &Self) -> Self {
        Field::mul(self, &other.recip())
    }
    fn from_int(n: i64) -> Self {
        RatFn::from_poly(Poly::int(n))
    }
}
