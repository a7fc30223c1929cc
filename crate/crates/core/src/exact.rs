//! Exact arithmetic in `Q(√2)[√-1]`.
//!
//! The unitary coframe carries a `1/√2` normalization, so every constant
//! that shows up in the connection and curvature forms is of the form
//! `(a + b√2) + (c + d√2)√-1` with rational `a, b, c, d`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_rational::Ratio;

pub type Rational = Ratio<i64>;

/// `rational + root * √2`
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RootTwo {
    pub rational: Rational,
    pub root: Rational,
}

impl RootTwo {
    pub const fn new(rational: Rational, root: Rational) -> Self {
        Self { rational, root }
    }

    pub fn zero() -> Self {
        Self::from_ratio(0, 1)
    }

    pub fn from_ratio(num: i64, den: i64) -> Self {
        Self::new(Rational::new(num, den), Rational::new(0, 1))
    }

    /// `num/den * √2`
    pub fn sqrt2_times(num: i64, den: i64) -> Self {
        Self::new(Rational::new(0, 1), Rational::new(num, den))
    }

    pub fn is_zero(&self) -> bool {
        *self.rational.numer() == 0 && *self.root.numer() == 0
    }

    pub fn to_f64(self) -> f64 {
        let r = *self.rational.numer() as f64 / *self.rational.denom() as f64;
        let s = *self.root.numer() as f64 / *self.root.denom() as f64;
        r + s * std::f64::consts::SQRT_2
    }
}

impl Add for RootTwo {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.rational + o.rational, self.root + o.root)
    }
}

impl Sub for RootTwo {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.rational - o.rational, self.root - o.root)
    }
}

impl Neg for RootTwo {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.rational, -self.root)
    }
}

impl Mul for RootTwo {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let two = Rational::from_integer(2);
        Self::new(
            self.rational * o.rational + two * self.root * o.root,
            self.rational * o.root + self.root * o.rational,
        )
    }
}

impl fmt::Display for RootTwo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let r0 = *self.rational.numer() != 0;
        let r1 = *self.root.numer() != 0;
        match (r0, r1) {
            (false, false) => write!(f, "0"),
            (true, false) => write!(f, "{}", self.rational),
            (false, true) => write!(f, "{}*sqrt2", self.root),
            (true, true) => write!(f, "{} + {}*sqrt2", self.rational, self.root),
        }
    }
}

/// `re + im * √-1` with components in `Q(√2)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ExactComplex {
    pub re: RootTwo,
    pub im: RootTwo,
}

impl ExactComplex {
    pub const fn new(re: RootTwo, im: RootTwo) -> Self {
        Self { re, im }
    }

    pub fn zero() -> Self {
        Self::new(RootTwo::zero(), RootTwo::zero())
    }

    pub fn one() -> Self {
        Self::real(RootTwo::from_ratio(1, 1))
    }

    pub fn i() -> Self {
        Self::new(RootTwo::zero(), RootTwo::from_ratio(1, 1))
    }

    pub fn real(re: RootTwo) -> Self {
        Self::new(re, RootTwo::zero())
    }

    pub fn rational(num: i64, den: i64) -> Self {
        Self::real(RootTwo::from_ratio(num, den))
    }

    /// `1/√2 = √2/2`
    pub fn inv_sqrt2() -> Self {
        Self::real(RootTwo::sqrt2_times(1, 2))
    }

    pub fn conj(self) -> Self {
        Self::new(self.re, -self.im)
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }
}

impl Add for ExactComplex {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.re + o.re, self.im + o.im)
    }
}

impl Sub for ExactComplex {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.re - o.re, self.im - o.im)
    }
}

impl Neg for ExactComplex {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.re, -self.im)
    }
}

impl Mul for ExactComplex {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Self::new(
            self.re * o.re - self.im * o.im,
            self.re * o.im + self.im * o.re,
        )
    }
}

impl fmt::Display for ExactComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.re.is_zero(), self.im.is_zero()) {
            (true, true) => write!(f, "0"),
            (false, true) => write!(f, "{}", self.re),
            (true, false) => write!(f, "({})*i", self.im),
            (false, false) => write!(f, "({}) + ({})*i", self.re, self.im),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sqrt2_squares_to_two() {
        let s = RootTwo::sqrt2_times(1, 1);
        assert_eq!(s * s, RootTwo::from_ratio(2, 1));
        let h = ExactComplex::inv_sqrt2();
        assert_eq!(h * h, ExactComplex::rational(1, 2));
    }

    #[test]
    fn i_squares_to_minus_one() {
        assert_eq!(ExactComplex::i() * ExactComplex::i(), -ExactComplex::one());
    }

    #[test]
    fn display() {
        assert_eq!(ExactComplex::zero().to_string(), "0");
        assert_eq!(ExactComplex::rational(-1, 8).to_string(), "-1/8");
        let c = ExactComplex::i() * ExactComplex::inv_sqrt2() * ExactComplex::rational(-1, 2);
        assert_eq!(c.to_string(), "(-1/4*sqrt2)*i");
    }

    fn small() -> impl Strategy<Value = ExactComplex> {
        (-9i64..9, 1i64..9, -9i64..9, 1i64..9, -9i64..9, -9i64..9).prop_map(|(a, b, c, d, e, g)| {
            ExactComplex::new(
                RootTwo::new(Rational::new(a, b), Rational::new(c, d)),
                RootTwo::new(Rational::new(e, b), Rational::new(g, d)),
            )
        })
    }

    proptest! {
        #[test]
        fn field_axioms(a in small(), b in small(), c in small()) {
            prop_assert_eq!(a * (b + c), a * b + a * c);
            prop_assert_eq!((a * b).conj(), a.conj() * b.conj());
            prop_assert_eq!(a * b, b * a);
            prop_assert_eq!(a - a, ExactComplex::zero());
        }

        #[test]
        fn float_image_is_a_homomorphism(a in small(), b in small()) {
            let p = a * b;
            let re = a.re.to_f64() * b.re.to_f64() - a.im.to_f64() * b.im.to_f64();
            prop_assert!((p.re.to_f64() - re).abs() < 1e-9);
        }
    }
}
