//! Ideals of the maximal order and the (wide) class group, computed from the
//! cycles of reduced ideals under the continued-fraction step.

use crate::arith;
use crate::cf::{self, CfState, Walker};
use crate::error::{Error, Result};
use crate::field::{QuadInt, QuadraticField};
use crate::units::PrincipalCycle;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use std::collections::HashMap;

/// An integral ideal content * [a, (b + sqrt D)/2] in standard form:
/// a >= 1, 0 <= b < 2a, b = D (mod 2), a | (b^2 - D)/4. Norm = content^2 * a.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Ideal {
    pub d: u64,
    pub content: BigInt,
    pub a: BigInt,
    pub b: BigInt,
}

impl Ideal {
    pub fn new(d: u64, content: BigInt, a: BigInt, b: BigInt) -> Self {
        assert!(content.is_positive() && a.is_positive());
        let b = b.mod_floor(&(2 * &a));
        let i = Ideal { d, content, a, b };
        debug_assert!(i.is_valid(), "not an ideal in standard form: {i:?}");
        i
    }

    fn is_valid(&self) -> bool {
        let d = BigInt::from(self.d);
        if (&self.b - &d).is_odd() {
            return false;
        }
        let num = &self.b * &self.b - &d;
        (num.mod_floor(&(4 * &self.a))).is_zero()
    }

    pub fn one(d: u64) -> Self {
        Ideal::new(d, BigInt::one(), BigInt::one(), BigInt::from(d % 2))
    }

    pub fn norm(&self) -> BigInt {
        &self.content * &self.content * &self.a
    }

    pub fn conj(&self) -> Self {
        Ideal::new(self.d, self.content.clone(), self.a.clone(), -self.b.clone())
    }

    pub fn is_one(&self) -> bool {
        self.content.is_one() && self.a.is_one()
    }

    /// Walk state (P, Q) = (b, 2a) of the primitive part.
    pub fn to_state(&self) -> CfState {
        CfState::new(self.b.clone(), 2 * &self.a)
    }

    pub fn from_state_key(d: u64, key: (i64, i64)) -> Self {
        let (p, q) = key;
        assert!(q > 0 && q % 2 == 0);
        Ideal::new(d, BigInt::one(), BigInt::from(q / 2), BigInt::from(p))
    }

    /// The principal ideal (gamma).
    pub fn principal(gamma: &QuadInt) -> Self {
        assert!(!gamma.is_zero());
        let d = gamma.d;
        // generators gamma * 1 and gamma * omega, omega = (P0 + sqrt D)/2
        let omega = QuadInt::new(d, BigInt::from(d % 2), BigInt::one());
        let rows = vec![coords(gamma), coords(&gamma.mul(&omega))];
        Ideal::from_lattice(d, rows)
    }

    /// Build from generating elements (x_i + y_i sqrt D)/2 via 2-column HNF.
    fn from_lattice(d: u64, rows: Vec<(BigInt, BigInt)>) -> Self {
        let (big_a, xs, g) = hnf2(&rows);
        assert!(!g.is_zero() && !big_a.is_zero(), "lattice is degenerate");
        let (a2, rem) = big_a.div_rem(&(2 * &g));
        assert!(rem.is_zero(), "rational part not divisible by content");
        let b = (&xs / &g).mod_floor(&(2 * &a2));
        Ideal::new(d, g, a2, b)
    }

    pub fn mul(&self, rhs: &Ideal) -> Ideal {
        assert_eq!(self.d, rhs.d);
        let d = self.d;
        let w1 = QuadInt::new(d, self.b.clone(), BigInt::one()); // (b1 + sqrt D)/2
        let w2 = QuadInt::new(d, rhs.b.clone(), BigInt::one());
        let rows = vec![
            (2 * &self.a * &rhs.a, BigInt::zero()),
            (&self.a * &w2.a, &self.a * &w2.b),
            (&rhs.a * &w1.a, &rhs.a * &w1.b),
            coords(&w1.mul(&w2)),
        ];
        let mut out = Ideal::from_lattice(d, rows);
        out.content *= &self.content * &rhs.content;
        debug_assert_eq!(out.norm(), self.norm() * rhs.norm());
        out
    }

    pub fn pow(&self, mut e: u64) -> Ideal {
        let mut base = self.clone();
        let mut acc = Ideal::one(self.d);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            e >>= 1;
        }
        acc
    }

    /// The prime ideal above q, for q split or ramified.
    pub fn prime_above(field: &QuadraticField, q: u64) -> Result<Ideal> {
        let d = field.d;
        if q == 2 {
            let b = match d % 8 {
                1 => 1i64,
                0 => {
                    if (d / 4) % 4 == 2 {
                        0
                    } else {
                        2
                    }
                }
                4 => 2, // d = 4m, m = 3 mod 4 gives d = 12 mod 16; d%8 = 4
                _ => return Err(Error::NotSplit(2)),
            };
            return Ok(Ideal::new(d, BigInt::one(), BigInt::from(2), BigInt::from(b)));
        }
        if d % q == 0 {
            // ramified: b in {0, q} with b = d (mod 2); q is odd here
            let b = if d % 2 == 0 { 0 } else { q };
            return Ok(Ideal::new(d, BigInt::one(), BigInt::from(q), BigInt::from(b)));
        }
        match arith::sqrt_mod_prime(d % q, q) {
            Some(r) => {
                let b = if (r as i64 - (d % 2) as i64) % 2 == 0 { r } else { r + q };
                Ok(Ideal::new(d, BigInt::one(), BigInt::from(q), BigInt::from(b)))
            }
            None => Err(Error::NotSplit(q)),
        }
    }
}

fn coords(x: &QuadInt) -> (BigInt, BigInt) {
    (x.a.clone(), x.b.clone())
}

/// Row-style HNF of the lattice spanned by (x_i, y_i): returns (A, xs, g) with
/// lattice = Z*(A, 0) + Z*(xs, g), A > 0, g > 0.
fn hnf2(rows: &[(BigInt, BigInt)]) -> (BigInt, BigInt, BigInt) {
    let mut g = BigInt::zero();
    let mut xs = BigInt::zero();
    for (x, y) in rows {
        if y.is_zero() {
            continue;
        }
        let e = g.extended_gcd(y);
        xs = &e.x * &xs + &e.y * x;
        g = e.gcd;
    }
    let mut a = BigInt::zero();
    for (x, y) in rows {
        let res = if g.is_zero() { x.clone() } else { x - (y / &g) * &xs };
        a = a.gcd(&res);
    }
    if g.is_negative() {
        g = -g;
        xs = -xs;
    }
    if !a.is_zero() {
        xs = xs.mod_floor(&a);
    }
    (a, xs, g)
}

/// The wide class group, as the set of cycles of reduced ideals.
#[derive(Debug, Clone)]
pub struct ClassGroup {
    pub field: QuadraticField,
    pub sqrt_d: u64,
    pub h: u64,
    pub pc: PrincipalCycle,
    state_to_class: HashMap<(i64, i64), u32>,
    pub reps: Vec<Ideal>,
    orders: Vec<u64>,
    /// Invariant factors of the group, descending; empty when h = 1.
    pub structure: Vec<u64>,
}

impl ClassGroup {
    pub fn compute(field: &QuadraticField) -> Self {
        let d = field.d;
        let sqrt_d = field.sqrt_d();
        let pc = PrincipalCycle::compute(field);
        // enumerate all reduced ideal states: 0 < p <= s, s - p < q <= s + p,
        // q even, 2q | d - p^2
        let s = sqrt_d as i64;
        let mut all: Vec<(i64, i64)> = Vec::new();
        for p in 1..=s {
            let k = d as i128 - (p as i128) * (p as i128);
            let lo = (s - p + 1).max(1);
            let hi = s + p;
            let mut q = if lo % 2 == 0 { lo } else { lo + 1 };
            while q <= hi {
                if k % (2 * q as i128) == 0 {
                    all.push((p, q));
                }
                q += 2;
            }
        }
        let mut state_to_class: HashMap<(i64, i64), u32> = HashMap::with_capacity(all.len());
        let mut cycles: Vec<Vec<(i64, i64)>> = Vec::new();
        for &st in &all {
            if state_to_class.contains_key(&st) {
                continue;
            }
            let id = cycles.len() as u32;
            let mut cyc = Vec::new();
            let mut cur = st;
            loop {
                state_to_class.insert(cur, id);
                cyc.push(cur);
                cur = cf::step_key(d, sqrt_d, cur.0, cur.1);
                if cur == st {
                    break;
                }
                assert!(
                    !state_to_class.contains_key(&cur),
                    "walk entered a previously assigned cycle"
                );
            }
            cycles.push(cyc);
        }
        // relabel so that the principal cycle is class 0
        let p0 = state_to_class[&pc.states[0]];
        if p0 != 0 {
            for v in state_to_class.values_mut() {
                if *v == 0 {
                    *v = p0;
                } else if *v == p0 {
                    *v = 0;
                }
            }
            cycles.swap(0, p0 as usize);
        }
        let h = cycles.len() as u64;
        let reps: Vec<Ideal> =
            cycles.iter().map(|c| Ideal::from_state_key(d, c[0])).collect();
        let mut cg = ClassGroup {
            field: *field,
            sqrt_d,
            h,
            pc,
            state_to_class,
            reps,
            orders: Vec::new(),
            structure: Vec::new(),
        };
        cg.orders = (0..h as u32).map(|c| cg.order_of_class(c)).collect();
        cg.structure = cg.compute_structure();
        cg
    }

    /// Class of an arbitrary ideal (content ignored: rational ideals are
    /// principal).
    pub fn class_of(&self, ideal: &Ideal) -> u32 {
        let st = cf::reduce_state_untracked(self.field.d, self.sqrt_d, ideal.to_state());
        self.state_to_class[&st.key()]
    }

    pub fn class_of_state(&self, key: (i64, i64)) -> u32 {
        self.state_to_class[&key]
    }

    pub fn is_wide_principal(&self, ideal: &Ideal) -> bool {
        self.class_of(ideal) == 0
    }

    pub fn mul_classes(&self, c1: u32, c2: u32) -> u32 {
        self.class_of(&self.reps[c1 as usize].mul(&self.reps[c2 as usize]))
    }

    pub fn pow_class(&self, c: u32, mut e: u64) -> u32 {
        let mut base = c;
        let mut acc = 0u32;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul_classes(acc, base);
            }
            base = self.mul_classes(base, base);
            e >>= 1;
        }
        acc
    }

    pub fn inverse_class(&self, c: u32) -> u32 {
        self.class_of(&self.reps[c as usize].conj())
    }

    fn order_of_class(&self, c: u32) -> u64 {
        let mut divs: Vec<u64> = divisors(self.h);
        divs.sort_unstable();
        for k in divs {
            if self.pow_class(c, k) == 0 {
                return k;
            }
        }
        unreachable!("class order divides h")
    }

    pub fn order_of(&self, c: u32) -> u64 {
        self.orders[c as usize]
    }

    /// Order of the class of an ideal.
    pub fn ideal_order(&self, ideal: &Ideal) -> u64 {
        self.orders[self.class_of(ideal) as usize]
    }

    /// Invariant factors (d1 >= d2 >= ..., each dividing the previous) via
    /// q-part solution counting.
    fn compute_structure(&self) -> Vec<u64> {
        if self.h == 1 {
            return Vec::new();
        }
        // for each prime q | h: n_j = #{x : x^(q^j) = e} is q^(sum of
        // min(e_i, j) over cyclic q-factors q^(e_i)), so the diffs
        // log_q n_j - log_q n_(j-1) count factors with exponent >= j
        let mut prime_factors: Vec<(u64, Vec<u32>)> = Vec::new();
        for (q, amax) in arith::factor(self.h) {
            let mut logs = vec![0u32];
            for j in 1..=amax {
                let e = q.pow(j);
                let n = (0..self.h as u32).filter(|&c| self.pow_class(c, e) == 0).count() as u64;
                let mut l = 0;
                let mut n2 = n;
                while n2 % q == 0 {
                    n2 /= q;
                    l += 1;
                }
                assert_eq!(n2, 1, "solution count must be a power of q");
                logs.push(l);
            }
            let rank = (logs[1] - logs[0]) as usize;
            let mut factors: Vec<u32> = vec![0; rank];
            for j in 1..logs.len() {
                let ge_j = (logs[j] - logs[j - 1]) as usize;
                for f in factors.iter_mut().take(ge_j) {
                    *f = j as u32;
                }
            }
            factors.sort_unstable_by(|a, b| b.cmp(a));
            prime_factors.push((q, factors));
        }
        let rank = prime_factors.iter().map(|(_, f)| f.len()).max().unwrap_or(0);
        let mut inv = vec![1u64; rank];
        for (q, factors) in &prime_factors {
            for (i, &e) in factors.iter().enumerate() {
                inv[i] *= q.pow(e);
            }
        }
        let total: u64 = inv.iter().product();
        assert_eq!(total, self.h, "invariant factors multiply to h");
        inv
    }

    /// p-part of h as an exponent: v_p(h).
    pub fn vp_h(&self, p: u64) -> u32 {
        arith::valuation(self.h, p)
    }

    /// Total number of reduced ideal states across all cycles.
    pub fn reduced_state_count(&self) -> usize {
        self.state_to_class.len()
    }
}

pub fn divisors(n: u64) -> Vec<u64> {
    let f = arith::factor(n);
    let mut out = vec![1u64];
    for (p, e) in f {
        let mut next = Vec::with_capacity(out.len() * (e as usize + 1));
        let mut pk = 1u64;
        for _ in 0..=e {
            for &d in &out {
                next.push(d * pk);
            }
            pk *= p;
        }
        out = next;
    }
    out.sort_unstable();
    out
}

/// Recover gamma with ideal = (gamma), or None when the ideal is not
/// principal. The result is validated: |N(gamma)| = N(ideal) and the
/// recomposed principal ideal equals the input.
pub fn recover_generator(pc: &PrincipalCycle, ideal: &Ideal) -> Result<Option<QuadInt>> {
    let d = pc.field.d;
    let mut w = Walker::new(d, pc.sqrt_d, ideal.to_state());
    w.reduce();
    let first = w.st.key();
    loop {
        if pc.contains_state(w.st.key()) {
            let (num, den) = w.g();
            let gamma_prim = pc
                .generator_from(w.st.key(), &num, &den)
                .ok_or_else(|| Error::GeneratorSearchFailed("relating element not integral".into()))?;
            let gamma = gamma_prim.mul_int(&ideal.content);
            if gamma.norm().abs() != ideal.norm() {
                return Err(Error::GeneratorSearchFailed("norm mismatch".into()));
            }
            if &Ideal::principal(&gamma) != ideal {
                return Err(Error::GeneratorSearchFailed("recomposition mismatch".into()));
            }
            return Ok(Some(gamma));
        }
        w.step();
        if w.st.key() == first {
            return Ok(None);
        }
    }
}
