//! Fundamental units, the principal reduced cycle, canonical associates and
//! unit embeddings mod p^t.

use crate::arith;
use crate::cf::{CfState, Walker};
use crate::error::{Error, Result};
use crate::field::{QuadInt, QuadraticField};
use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::cmp::Ordering;
use std::collections::HashMap;

/// The unit group of the maximal order: fundamental unit eps > 1, the sign of
/// its norm, and the smallest power eps^s generating the norm-one units
/// together with -1 (s = 2 when N(eps) = -1, else 1).
#[derive(Debug, Clone)]
pub struct UnitGroup {
    pub eps: QuadInt,
    pub norm_eps: i8,
    pub regulator: f64,
    pub s: u32,
    pub eps_s: QuadInt,
    pub log_eps_s: f64,
}

/// The cycle of reduced ideals in the principal class, with the relating
/// element from the maximal order to each state. This is the infrastructure
/// used for principality tests and generator recovery.
#[derive(Debug, Clone)]
pub struct PrincipalCycle {
    pub field: QuadraticField,
    pub sqrt_d: u64,
    pub states: Vec<(i64, i64)>,
    gens: HashMap<(i64, i64), (QuadInt, BigInt)>,
    pub unit_group: UnitGroup,
}

impl PrincipalCycle {
    pub fn compute(field: &QuadraticField) -> Self {
        let d = field.d;
        let sqrt_d = field.sqrt_d();
        let mut w = Walker::new(d, sqrt_d, CfState::unit_seed(d));
        w.reduce();
        let first = w.st.key();
        let (n0, d0) = w.g();
        let mut states = Vec::new();
        let mut gens = HashMap::new();
        loop {
            let k = w.st.key();
            states.push(k);
            gens.insert(k, w.g());
            w.step();
            if w.st.key() == first {
                break;
            }
        }
        let (n1, d1) = w.g();
        // closed walk: the relating element is the fundamental unit
        let u = n1
            .mul_int(&d0)
            .exact_div(&n0.mul_int(&d1))
            .expect("closed principal walk yields an integral unit");
        let norm = u.norm();
        assert!(norm.clone().abs().is_one(), "closed walk element is a unit");
        let eps = pick_greater_than_one(&u);
        let norm_eps = norm.to_i8().unwrap();
        let regulator = eps.abs_log_plus();
        let s = if norm_eps == -1 { 2 } else { 1 };
        let eps_s = if s == 2 { eps.mul(&eps) } else { eps.clone() };
        let log_eps_s = s as f64 * regulator;
        let period = states.len();
        assert_eq!(norm_eps, if period % 2 == 0 { 1 } else { -1 }, "norm sign matches period parity");
        PrincipalCycle {
            field: *field,
            sqrt_d,
            states,
            gens,
            unit_group: UnitGroup { eps, norm_eps, regulator, s, eps_s, log_eps_s },
        }
    }

    pub fn contains_state(&self, key: (i64, i64)) -> bool {
        self.gens.contains_key(&key)
    }

    /// Relating element from the maximal order to the given cycle state.
    pub fn gen_at(&self, key: (i64, i64)) -> Option<&(QuadInt, BigInt)> {
        self.gens.get(&key)
    }

    /// Given a walk that carried some ideal I to a principal-cycle state with
    /// accumulated element (num, den) (so that state-ideal = (num/den) * I),
    /// return gamma with I = (gamma).
    pub fn generator_from(&self, key: (i64, i64), num: &QuadInt, den: &BigInt) -> Option<QuadInt> {
        let (n_o, d_o) = self.gens.get(&key)?;
        n_o.mul_int(den).exact_div(&num.mul_int(d_o))
    }
}

fn pick_greater_than_one(u: &QuadInt) -> QuadInt {
    let one = QuadInt::new(u.d, BigInt::from(2), BigInt::zero());
    for cand in [u.clone(), u.neg(), u.conj(), u.conj().neg()] {
        if cand.sign_plus() > 0 && cand.cmp_plus(&one) == Ordering::Greater {
            return cand;
        }
    }
    panic!("no associate of the unit exceeds 1");
}

/// Fundamental unit eps > 1 of the maximal order of the field.
pub fn fundamental_unit(field: &QuadraticField) -> UnitGroup {
    PrincipalCycle::compute(field).unit_group
}

impl UnitGroup {
    /// Canonical associate of x modulo the norm-one units <-1, eps^s>: the
    /// representative y with positive embeddings sign and 1 <= y < eps^s at
    /// the +sqrt(D) embedding. Returns (y, j) with y = +-x * eps^(-s*j).
    pub fn canonicalize(&self, x: &QuadInt) -> (QuadInt, i64) {
        assert!(!x.is_zero());
        let lx = x.abs_log_plus();
        let mut j = (lx / self.log_eps_s).floor() as i64;
        let mut rep = self.scale(x, -j);
        if rep.sign_plus() < 0 {
            rep = rep.neg();
        }
        let one = QuadInt::new(x.d, BigInt::from(2), BigInt::zero());
        let mut guard = 0;
        while rep.cmp_plus(&one) == Ordering::Less {
            rep = rep.mul(&self.eps_s);
            j -= 1;
            guard += 1;
            assert!(guard < 8, "canonical window adjustment diverged");
        }
        while rep.cmp_plus(&self.eps_s) != Ordering::Less {
            rep = rep.exact_div(&self.eps_s).expect("division by a unit is exact");
            j += 1;
            guard += 1;
            assert!(guard < 8, "canonical window adjustment diverged");
        }
        (rep, j)
    }

    /// x * eps^(s*j), exact for either sign of j.
    pub fn scale(&self, x: &QuadInt, j: i64) -> QuadInt {
        if j == 0 {
            return x.clone();
        }
        let pw = self.eps_s.pow(j.unsigned_abs());
        if j > 0 {
            x.mul(&pw)
        } else {
            x.exact_div(&pw).expect("division by a unit is exact")
        }
    }
}

/// Embeddings of the fundamental unit in Z/p^t at a split odd prime, computed
/// by walking the principal cycle with valuation-split tracking, without any
/// big-integer arithmetic. Returns (phi1(eps), phi2(eps)) mod p^t, where phi1
/// sends sqrt(D) to the lift of the smaller square root of D mod p.
pub fn unit_embeddings_mod(field: &QuadraticField, p: u64, t: u32) -> Result<[u64; 2]> {
    let d = field.d;
    // buffer covers the largest possible valuation of a single factor
    let mut buf = 1u32;
    let mut pw = p;
    while pw < 4 * d {
        pw *= p;
        buf += 1;
    }
    let tt = t + buf;
    let p_tt = match BigInt::from(p).pow(tt).to_u64() {
        Some(v) => v,
        None => return Err(Error::PrecisionExhausted(tt)),
    };
    let p_t = p.pow(t);
    let r = arith::sqrt_mod_prime_power(d, p, tt)
        .ok_or(Error::NotSplit(p))?
        .to_u64()
        .unwrap();
    let roots = [r, p_tt - r];

    let sqrt_d = field.sqrt_d();
    let mut st = CfState::unit_seed(d);
    let mut units = [1u64; 2];
    let mut vals = [0i64; 2];
    let mut started = false;
    let mut first: (i64, i64) = (0, 0);
    let step = |st: &CfState| -> (CfState, i64, i64) {
        let p_cur = st.p.to_i64().unwrap() as i128;
        let q_cur = st.q.to_i64().unwrap() as i128;
        let s = sqrt_d as i128;
        let num = p_cur + s + if q_cur < 0 { 1 } else { 0 };
        let a = num.div_euclid(q_cur);
        let p_next = a * q_cur - p_cur;
        let q_next = (d as i128 - p_next * p_next) / q_cur;
        (
            CfState::new(BigInt::from(p_next), BigInt::from(q_next)),
            p_next as i64,
            q_cur as i64,
        )
    };
    loop {
        if st.is_reduced(sqrt_d) {
            let k = st.key();
            if !started {
                started = true;
                first = k;
            } else if k == first {
                break;
            }
        }
        let (next, p_next, q_cur) = step(&st);
        if started {
            // multiply both embeddings by mu = (P' + sqrt D)/Q
            for i in 0..2 {
                let w = ((p_next as i128 + roots[i] as i128).rem_euclid(p_tt as i128)) as u64;
                if w == 0 {
                    return Err(Error::PrecisionExhausted(tt));
                }
                let v = arith::valuation(w, p);
                if v > buf {
                    return Err(Error::PrecisionExhausted(tt));
                }
                units[i] = arith::mulmod(units[i], (w / p.pow(v)) % p_t, p_t);
                vals[i] += v as i64;
                let qa = q_cur.unsigned_abs();
                let vq = arith::valuation(qa, p);
                vals[i] -= vq as i64;
                let q_unit = (qa / p.pow(vq)) % p_t;
                let inv = arith::inv_mod_u64(q_unit, p_t).expect("unit mod p^t");
                units[i] = arith::mulmod(units[i], inv, p_t);
                if q_cur < 0 {
                    units[i] = p_t - units[i];
                }
            }
        }
        st = next;
    }
    if vals != [0, 0] {
        return Err(Error::PrecisionExhausted(tt));
    }
    Ok(units)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_integer::Integer;

    fn unit_of(m: u64) -> UnitGroup {
        fundamental_unit(&QuadraticField::new(m).unwrap())
    }

    #[test]
    fn classic_units() {
        let u = unit_of(2);
        assert_eq!(u.eps.sqrt_m_coords(), (BigInt::one(), BigInt::one(), 1));
        assert_eq!(u.norm_eps, -1);
        let u = unit_of(5);
        assert_eq!(u.eps.sqrt_m_coords(), (BigInt::one(), BigInt::one(), 2));
        assert_eq!(u.norm_eps, -1);
        let u = unit_of(3);
        assert_eq!(u.eps.sqrt_m_coords(), (BigInt::from(2), BigInt::one(), 1));
        assert_eq!(u.norm_eps, 1);
        // eps(67) = 48842 + 5967 sqrt(67), norm +1
        let u = unit_of(67);
        assert_eq!(u.eps.sqrt_m_coords(), (BigInt::from(48842), BigInt::from(5967), 1));
        assert_eq!(u.norm_eps, 1);
        // eps(61) = (39 + 5 sqrt 61)/2, norm -1
        let u = unit_of(61);
        assert_eq!(u.eps.sqrt_m_coords(), (BigInt::from(39), BigInt::from(5), 2));
        assert_eq!(u.norm_eps, -1);
        // eps(94) = 2143295 + 221064 sqrt(94)
        let u = unit_of(94);
        assert_eq!(u.eps.sqrt_m_coords(), (BigInt::from(2143295), BigInt::from(221064), 1));
        assert_eq!(u.norm_eps, 1);
    }

    #[test]
    fn unit_is_actually_fundamental_for_tiny_fields() {
        // brute force, smallest y first: for m = 1 mod 4 the first square among
        // m y^2 -+ 4 gives eps = (x + y sqrt m)/2, otherwise m y^2 -+ 1 gives
        // eps = x + y sqrt m
        for m in [2u64, 3, 5, 6, 7, 10, 11, 13, 14, 17, 19, 21, 29, 33, 37, 41, 53, 61] {
            let k = QuadraticField::new(m).unwrap();
            let u = unit_of(m);
            let offsets: [i128; 2] = if m % 4 == 1 { [-4, 4] } else { [-1, 1] };
            let mut expected = None;
            'outer: for y in 1u64..5_000_000 {
                let base = m as i128 * y as i128 * y as i128;
                for off in offsets {
                    let target = base + off;
                    if target < 0 {
                        continue;
                    }
                    let r = num_integer::Roots::sqrt(&(target as u128)) as i128;
                    if r * r == target {
                        let den = if m % 4 == 1 { 2 } else { 1 };
                        expected = Some(
                            QuadInt::from_sqrt_m_coords(&k, BigInt::from(r), BigInt::from(y), den)
                                .unwrap(),
                        );
                        break 'outer;
                    }
                }
            }
            assert_eq!(u.eps, expected.expect("Pell solution exists"), "m={m}");
        }
    }

    #[test]
    fn canonicalize_is_stable_under_unit_shift() {
        for m in [2u64, 3, 5, 67, 79] {
            let k = QuadraticField::new(m).unwrap();
            let u = fundamental_unit(&k);
            let x = QuadInt::new(k.d, BigInt::from(2 * 7), BigInt::zero()); // the integer 7
            let (rep, _) = u.canonicalize(&x);
            for j in -3i64..=3 {
                let shifted = u.scale(&x, j);
                let (rep2, _) = u.canonicalize(&shifted);
                assert_eq!(rep, rep2, "m={m} j={j}");
                let (rep3, _) = u.canonicalize(&shifted.neg());
                assert_eq!(rep, rep3, "m={m} j={j} negated");
            }
            // window invariants
            let one = k.one();
            assert_ne!(rep.cmp_plus(&one), Ordering::Less);
            assert_eq!(rep.cmp_plus(&u.eps_s), Ordering::Less);
            assert_eq!(rep.sign_plus(), 1);
        }
    }

    #[test]
    fn canonicalize_preserves_norm_and_class() {
        let k = QuadraticField::new(67).unwrap();
        let u = fundamental_unit(&k);
        let x = QuadInt::new(k.d, BigInt::from(16), BigInt::from(1)); // 8 + sqrt 67, norm -3
        let (rep, j) = u.canonicalize(&x);
        assert_eq!(rep.norm(), x.norm());
        // rep really is an associate: x * eps^(-s j) = +- rep
        let back = u.scale(&rep, j);
        assert!(back == x || back == x.neg());
    }

    #[test]
    fn unit_embeddings_match_exact_computation() {
        for (m, p, t) in [(67u64, 3u64, 6u32), (67, 11, 4), (7249, 3, 8), (79, 3, 5), (10942, 3, 8)] {
            let k = QuadraticField::new(m).unwrap();
            if k.splitting(p) != crate::field::Splitting::Split {
                continue;
            }
            let u = fundamental_unit(&k);
            let got = unit_embeddings_mod(&k, p, t).unwrap();
            // exact: phi(eps) = (a + b r) / 2 mod p^t
            let pt = BigInt::from(p.pow(t));
            let r = arith::sqrt_mod_prime_power(k.d, p, t).unwrap();
            let inv2 = arith::inv_mod_big(&BigInt::from(2), &pt).unwrap();
            for (i, root) in [r.clone(), &pt - &r].iter().enumerate() {
                let want = ((&u.eps.a + &u.eps.b * root) * &inv2).mod_floor(&pt);
                assert_eq!(BigInt::from(got[i]), want, "m={m} p={p} t={t} root#{i}");
            }
        }
    }
}
