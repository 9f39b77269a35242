//! Continued-fraction walks on quadratic irrationals (P + sqrt(D))/Q.
//!
//! A state (P, Q) stands for the Z-module Z*(Q/2) + Z*(P + sqrt(D))/2 with
//! Q | D - P^2. One step sends (P, Q) to (P', Q') with a = floor((P+sqrt D)/Q),
//! P' = aQ - P, Q' = (D - P'^2)/Q, and multiplies the module by
//! mu = (P' + sqrt D)/Q. The walker tracks the product of the mu factors
//! exactly, which is what turns reduction walks into generator recovery.

use crate::field::QuadInt;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

/// State of a continued-fraction walk.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CfState {
    pub p: BigInt,
    pub q: BigInt,
}

impl CfState {
    pub fn new(p: BigInt, q: BigInt) -> Self {
        CfState { p, q }
    }

    /// Seed state of the maximal order itself: (0, 2) or (1, 2) by parity of d.
    pub fn unit_seed(d: u64) -> Self {
        CfState::new(BigInt::from(d % 2), BigInt::from(2))
    }

    /// Reduced means the irrational xi = (P + sqrt D)/Q satisfies xi > 1 and
    /// -1 < conj(xi) < 0, i.e. 0 < P < sqrt(D) and sqrt(D)-P < Q < sqrt(D)+P.
    pub fn is_reduced(&self, sqrt_d: u64) -> bool {
        if !self.p.is_positive() || !self.q.is_positive() {
            return false;
        }
        let s = BigInt::from(sqrt_d);
        // sqrt(D) irrational: floor(sqrt D) = s, and P < sqrt(D) iff P <= s
        self.p <= s && &s - &self.p < self.q && self.q <= &s + &self.p
    }

    /// Compact key for hashing reduced states.
    pub fn key(&self) -> (i64, i64) {
        use num_traits::ToPrimitive;
        (self.p.to_i64().expect("state fits i64"), self.q.to_i64().expect("state fits i64"))
    }
}

/// floor((p + sqrt(d)) / q) for q != 0, d not a perfect square.
pub fn floor_div_sqrt(p: &BigInt, q: &BigInt, sqrt_d: u64) -> BigInt {
    let mut num = p + BigInt::from(sqrt_d);
    if q.is_negative() {
        num += 1;
    }
    num.div_floor(q)
}

/// A continued-fraction walk with exact tracking of the relating element:
/// after any number of steps, module(state) = (g_num / g_den) * module(start).
#[derive(Debug, Clone)]
pub struct Walker {
    pub d: u64,
    pub sqrt_d: u64,
    pub st: CfState,
    pub g_num: QuadInt,
    pub g_den: BigInt,
    pub steps: usize,
}

impl Walker {
    pub fn new(d: u64, sqrt_d: u64, st: CfState) -> Self {
        Walker {
            d,
            sqrt_d,
            st,
            g_num: QuadInt::new(d, BigInt::from(2), BigInt::zero()),
            g_den: BigInt::one(),
            steps: 0,
        }
    }

    /// Advance one step; returns the partial quotient a.
    pub fn step(&mut self) -> BigInt {
        let a = floor_div_sqrt(&self.st.p, &self.st.q, self.sqrt_d);
        let p_next = &a * &self.st.q - &self.st.p;
        let num = BigInt::from(self.d) - &p_next * &p_next;
        let (q_next, rem) = num.div_rem(&self.st.q);
        debug_assert!(rem.is_zero(), "invariant Q | D - P^2 violated");
        // mu = (P' + sqrt D) / Q
        let mu = QuadInt::new(self.d, 2 * &p_next, BigInt::from(2));
        self.g_num = self.g_num.mul(&mu);
        self.g_den *= &self.st.q;
        self.reduce_g();
        self.st = CfState::new(p_next, q_next);
        self.steps += 1;
        a
    }

    fn reduce_g(&mut self) {
        if self.g_den.is_negative() {
            self.g_den = -self.g_den.clone();
            self.g_num = self.g_num.neg();
        }
        if self.g_den.is_one() {
            return;
        }
        let mut g = self.g_num.a.gcd(&self.g_num.b).gcd(&self.g_den);
        while g.is_even() && self.g_num.div_int_exact(&g).is_none() {
            g /= 2;
        }
        if !g.is_one() {
            self.g_num = self.g_num.div_int_exact(&g).expect("content divides");
            self.g_den /= g;
        }
    }

    /// Step until the state is reduced; returns the number of steps taken.
    pub fn reduce(&mut self) -> usize {
        let start = self.steps;
        let limit = 8 * (self.st.q.bits() as usize + self.st.p.bits() as usize) + 64;
        while !self.st.is_reduced(self.sqrt_d) {
            self.step();
            assert!(self.steps - start <= limit, "reduction did not terminate");
        }
        self.steps - start
    }

    /// The accumulated relating element as an exact fraction (num, den).
    pub fn g(&self) -> (QuadInt, BigInt) {
        (self.g_num.clone(), self.g_den.clone())
    }
}

/// One step of the walk on a compact (p, q) key, without element tracking.
/// States of reduced ideals fit comfortably in i64 (p, q <= 2 sqrt(d)).
pub fn step_key(d: u64, sqrt_d: u64, p: i64, q: i64) -> (i64, i64) {
    let p = p as i128;
    let q = q as i128;
    let s = sqrt_d as i128;
    let num = p + s + if q < 0 { 1 } else { 0 };
    let a = num.div_euclid(q);
    let p_next = a * q - p;
    let q_next = (d as i128 - p_next * p_next) / q;
    (p_next as i64, q_next as i64)
}

/// Reduce a state without tracking the relating element.
pub fn reduce_state_untracked(d: u64, sqrt_d: u64, mut st: CfState) -> CfState {
    let limit = 8 * (st.q.bits() as usize + st.p.bits() as usize) + 64;
    let mut n = 0;
    while !st.is_reduced(sqrt_d) {
        let a = floor_div_sqrt(&st.p, &st.q, sqrt_d);
        let p_next = &a * &st.q - &st.p;
        let q_next = (BigInt::from(d) - &p_next * &p_next) / &st.q;
        st = CfState::new(p_next, q_next);
        n += 1;
        assert!(n <= limit, "reduction did not terminate");
    }
    st
}

/// Continued-fraction expansion of the canonical generator of the maximal
/// order: sqrt(m) when d = 4m, (1 + sqrt d)/2 when d = 1 mod 4.
#[derive(Debug, Clone)]
pub struct CfExpansion {
    pub d: u64,
    /// Partial quotients before the periodic part.
    pub preperiod: Vec<BigInt>,
    /// Partial quotients of one period.
    pub period: Vec<BigInt>,
    /// Norm of the fundamental unit, read off the period parity.
    pub norm_parity: i8,
}

/// Expand the canonical generator until the (P, Q) state cycles.
pub fn cf_expand(d: u64) -> CfExpansion {
    let sqrt_d = crate::arith::isqrt(d);
    let mut w = Walker::new(d, sqrt_d, CfState::unit_seed(d));
    let mut seen: std::collections::HashMap<(i64, i64), usize> = std::collections::HashMap::new();
    let mut quotients = Vec::new();
    loop {
        let k = w.st.key();
        if let Some(&at) = seen.get(&k) {
            let period: Vec<BigInt> = quotients.split_off(at);
            let parity = if period.len() % 2 == 0 { 1 } else { -1 };
            return CfExpansion { d, preperiod: quotients, period, norm_parity: parity };
        }
        seen.insert(k, quotients.len());
        quotients.push(w.step());
    }
}
