//! Real quadratic fields Q(sqrt m) and exact arithmetic in their maximal
//! orders, with elements stored as (a + b*sqrt(D))/2 against the field
//! discriminant D.

use crate::arith;
use crate::error::{Error, Result};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::Serialize;
use std::cmp::Ordering;
use std::fmt;

/// How a rational prime behaves in the field.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Splitting {
    Split,
    Inert,
    Ramified,
}

/// The real quadratic field Q(sqrt m), m squarefree >= 2, with fundamental
/// discriminant d = m (m = 1 mod 4) or 4m.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct QuadraticField {
    pub m: u64,
    pub d: u64,
}

impl QuadraticField {
    pub fn new(m: u64) -> Result<Self> {
        if m < 2 {
            return Err(Error::MTooSmall);
        }
        if !arith::is_squarefree(m) {
            return Err(Error::NotSquarefree(m));
        }
        let d = if m % 4 == 1 { m } else { 4 * m };
        Ok(QuadraticField { m, d })
    }

    pub fn from_discriminant(d: u64) -> Result<Self> {
        if !is_fundamental_discriminant(d) {
            return Err(Error::NotFundamental(d));
        }
        let m = if d % 4 == 0 { d / 4 } else { d };
        Ok(QuadraticField { m, d })
    }

    /// floor(sqrt(d)), cached by callers that walk ideals.
    pub fn sqrt_d(&self) -> u64 {
        arith::isqrt(self.d)
    }

    pub fn splitting(&self, p: u64) -> Splitting {
        match arith::kronecker(self.d as i64, p as i64) {
            1 => Splitting::Split,
            -1 => Splitting::Inert,
            _ => Splitting::Ramified,
        }
    }

    /// The integer 1 as an element of the maximal order.
    pub fn one(&self) -> QuadInt {
        QuadInt::new(self.d, BigInt::from(2), BigInt::zero())
    }

    pub fn from_int(&self, n: i64) -> QuadInt {
        QuadInt::new(self.d, BigInt::from(2 * n), BigInt::zero())
    }

    /// sqrt(m) as an element of the maximal order.
    pub fn sqrt_m(&self) -> QuadInt {
        if self.d % 4 == 0 {
            // sqrt(m) = sqrt(D)/2
            QuadInt::new(self.d, BigInt::zero(), BigInt::one())
        } else {
            QuadInt::new(self.d, BigInt::zero(), BigInt::from(2))
        }
    }
}

/// Fundamental-discriminant test via the 2-adic congruence classes.
pub fn is_fundamental_discriminant(d: u64) -> bool {
    if d < 5 {
        return false;
    }
    let e = d.trailing_zeros();
    let m = d >> e;
    if arith::core(m) != m {
        return false;
    }
    if e == 1 || e > 3 {
        return false;
    }
    if e == 0 && m % 4 != 1 {
        return false;
    }
    if e == 2 && m % 4 == 1 {
        return false;
    }
    true
}

/// All fundamental discriminants of real quadratic fields in [lo, hi].
pub fn fundamental_discriminants(lo: u64, hi: u64) -> Vec<u64> {
    (lo..=hi).filter(|&d| is_fundamental_discriminant(d)).collect()
}

/// An element (a + b*sqrt(D))/2 of the maximal order, a = b*D (mod 2).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct QuadInt {
    pub d: u64,
    pub a: BigInt,
    pub b: BigInt,
}

impl QuadInt {
    pub fn new(d: u64, a: BigInt, b: BigInt) -> Self {
        debug_assert!(
            ((&a - &b * BigInt::from(d)) % 2u8).is_zero(),
            "parity violated: a={a} b={b} d={d}"
        );
        QuadInt { d, a, b }
    }

    /// Build from coordinates over sqrt(m): x + y*sqrt(m), den in {1,2}.
    pub fn from_sqrt_m_coords(field: &QuadraticField, x: BigInt, y: BigInt, den: u8) -> Result<Self> {
        let (a, b) = if field.d % 4 == 0 {
            // x + y sqrt(m) = (2x + y sqrt(D)) / 2
            if den != 1 {
                return Err(Error::InvalidArgument("half coordinates need d = 1 mod 4".into()));
            }
            (2 * x, y)
        } else {
            match den {
                1 => (2 * x, 2 * y),
                2 => (x, y),
                _ => return Err(Error::InvalidArgument("denominator must be 1 or 2".into())),
            }
        };
        if ((&a - &b * BigInt::from(field.d)) % 2u8).is_zero() {
            Ok(QuadInt::new(field.d, a, b))
        } else {
            Err(Error::InvalidArgument("coordinates are not an algebraic integer".into()))
        }
    }

    /// Coordinates (x, y, den) with self = (x + y*sqrt(m))/den, den minimal.
    pub fn sqrt_m_coords(&self) -> (BigInt, BigInt, u8) {
        if self.d % 4 == 0 {
            ((&self.a).div_floor(&BigInt::from(2)), self.b.clone(), 1)
        } else if self.a.is_even() && self.b.is_even() {
            ((&self.a) / 2, (&self.b) / 2, 1)
        } else {
            (self.a.clone(), self.b.clone(), 2)
        }
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.b.is_zero() && self.a == BigInt::from(2)
    }

    pub fn is_rational(&self) -> bool {
        self.b.is_zero()
    }

    pub fn conj(&self) -> Self {
        QuadInt::new(self.d, self.a.clone(), -self.b.clone())
    }

    pub fn neg(&self) -> Self {
        QuadInt::new(self.d, -self.a.clone(), -self.b.clone())
    }

    pub fn norm(&self) -> BigInt {
        (&self.a * &self.a - &self.b * &self.b * BigInt::from(self.d)) / 4
    }

    pub fn trace(&self) -> BigInt {
        self.a.clone()
    }

    pub fn is_unit(&self) -> bool {
        let n = self.norm();
        n == BigInt::one() || n == BigInt::from(-1)
    }

    pub fn add(&self, rhs: &Self) -> Self {
        debug_assert_eq!(self.d, rhs.d);
        QuadInt::new(self.d, &self.a + &rhs.a, &self.b + &rhs.b)
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        debug_assert_eq!(self.d, rhs.d);
        QuadInt::new(self.d, &self.a - &rhs.a, &self.b - &rhs.b)
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        debug_assert_eq!(self.d, rhs.d);
        let d = BigInt::from(self.d);
        let a = (&self.a * &rhs.a + &self.b * &rhs.b * &d) / 2;
        let b = (&self.a * &rhs.b + &self.b * &rhs.a) / 2;
        QuadInt::new(self.d, a, b)
    }

    pub fn mul_int(&self, n: &BigInt) -> Self {
        QuadInt::new(self.d, &self.a * n, &self.b * n)
    }

    /// Exact division by a rational integer, if the quotient stays integral.
    pub fn div_int_exact(&self, n: &BigInt) -> Option<Self> {
        if n.is_zero() {
            return None;
        }
        let (qa, ra) = self.a.div_rem(n);
        let (qb, rb) = self.b.div_rem(n);
        if !ra.is_zero() || !rb.is_zero() {
            return None;
        }
        if ((&qa - &qb * BigInt::from(self.d)) % 2u8).is_zero() {
            Some(QuadInt::new(self.d, qa, qb))
        } else {
            None
        }
    }

    /// Exact division self / rhs within the maximal order.
    pub fn exact_div(&self, rhs: &Self) -> Option<Self> {
        debug_assert_eq!(self.d, rhs.d);
        let n = rhs.norm();
        if n.is_zero() {
            return None;
        }
        self.mul(&rhs.conj()).div_int_exact(&n)
    }

    pub fn pow(&self, mut e: u64) -> Self {
        let mut base = self.clone();
        let mut acc = QuadInt::new(self.d, BigInt::from(2), BigInt::zero());
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            e >>= 1;
        }
        acc
    }

    /// Largest rational integer dividing self (content of the element).
    pub fn content(&self) -> BigInt {
        if self.is_zero() {
            return BigInt::zero();
        }
        let mut g = self.a.gcd(&self.b);
        while g.is_even() && self.div_int_exact(&g).is_none() {
            g /= 2;
        }
        g
    }

    /// Sign of the embedding sending sqrt(D) to +sqrt(D): -1, 0 or +1.
    pub fn sign_plus(&self) -> i32 {
        let sa = self.a.sign();
        let sb = self.b.sign();
        use num_bigint::Sign::*;
        match (sa, sb) {
            (NoSign, NoSign) => 0,
            (Plus | NoSign, Plus | NoSign) => 1,
            (Minus | NoSign, Minus | NoSign) => -1,
            _ => {
                // mixed signs: compare a^2 with D b^2
                let lhs = &self.a * &self.a;
                let rhs = &self.b * &self.b * BigInt::from(self.d);
                match lhs.cmp(&rhs) {
                    Ordering::Greater => {
                        if sa == Plus {
                            1
                        } else {
                            -1
                        }
                    }
                    Ordering::Less => {
                        if sb == Plus {
                            1
                        } else {
                            -1
                        }
                    }
                    Ordering::Equal => 0,
                }
            }
        }
    }

    /// Compare embedded values at the +sqrt(D) embedding.
    pub fn cmp_plus(&self, rhs: &Self) -> Ordering {
        match self.sub(rhs).sign_plus() {
            1 => Ordering::Greater,
            -1 => Ordering::Less,
            _ => Ordering::Equal,
        }
    }

    /// ln |value| at the +sqrt(D) embedding; element must be nonzero.
    pub fn abs_log_plus(&self) -> f64 {
        assert!(!self.is_zero());
        let same_sign = self.a.sign() == self.b.sign();
        if self.a.is_zero() || self.b.is_zero() || same_sign {
            // no cancellation: |a| + |b| sqrt(D) over 2
            self.mag_log() - std::f64::consts::LN_2
        } else {
            // |x| = |N(x)| / |conj(x)|, and conj has matching signs
            let n = self.norm().abs();
            arith::ln_big(&n) - (self.mag_log() - std::f64::consts::LN_2)
        }
    }

    /// ln(|a| + |b| sqrt(D)), summed in log space so coordinates far past
    /// f64 range keep a finite, accurate logarithm.
    fn mag_log(&self) -> f64 {
        let la = if self.a.is_zero() {
            f64::NEG_INFINITY
        } else {
            arith::ln_big(&self.a.abs())
        };
        let lb = if self.b.is_zero() {
            f64::NEG_INFINITY
        } else {
            arith::ln_big(&self.b.abs()) + 0.5 * (self.d as f64).ln()
        };
        let (hi, lo) = if la >= lb { (la, lb) } else { (lb, la) };
        hi + (lo - hi).exp().ln_1p()
    }
}

impl fmt::Display for QuadInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m = if self.d % 4 == 0 { self.d / 4 } else { self.d };
        let (x, y, den) = self.sqrt_m_coords();
        if den == 1 {
            if y.is_zero() {
                write!(f, "{x}")
            } else {
                write!(f, "{x} + {y}*sqrt({m})")
            }
        } else {
            write!(f, "({x} + {y}*sqrt({m}))/2")
        }
    }
}
