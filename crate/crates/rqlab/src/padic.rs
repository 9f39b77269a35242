//! Completions of the field at the two primes above a split odd prime:
//! embeddings into residues mod p^t and the Fermat-quotient valuation
//! delta_p(x) = v_p(x^(p-1) - 1) - 1 evaluated through them.

use crate::arith;
use crate::error::{Error, Result};
use crate::field::{QuadInt, QuadraticField, Splitting};
use crate::norms::PUnitRecord;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive};

/// The two embeddings of the field into Z/p^t at a split odd prime, fixed by
/// the two square roots of D: r1 is the Hensel lift of the root with smaller
/// positive residue mod p, r2 = p^t - r1.
#[derive(Debug, Clone)]
pub struct PadicEmbeddingPair {
    pub d: u64,
    pub p: u64,
    pub t: u32,
    pub pt: u64,
    pub r1: u64,
    pub r2: u64,
    inv2: u64,
}

pub fn split_embeddings(field: &QuadraticField, p: u64, t: u32) -> Result<PadicEmbeddingPair> {
    if p == 2 || !arith::is_prime(p) {
        return Err(Error::InvalidArgument(format!("{p} is not an odd prime")));
    }
    if t < 2 {
        return Err(Error::InvalidArgument("precision must be at least 2".into()));
    }
    if field.splitting(p) != Splitting::Split {
        return Err(Error::NotSplit(p));
    }
    let pt = BigInt::from(p)
        .pow(t)
        .to_u64()
        .ok_or(Error::PrecisionExhausted(t))?;
    let r1 = arith::sqrt_mod_prime_power(field.d % pt, p, t)
        .expect("split primes have square roots")
        .to_u64()
        .unwrap();
    Ok(PadicEmbeddingPair {
        d: field.d,
        p,
        t,
        pt,
        r1,
        r2: pt - r1,
        inv2: arith::inv_mod_u64(2, pt).unwrap(),
    })
}

impl PadicEmbeddingPair {
    /// phi_i(x) = (a + b r_i) / 2 mod p^t for x = (a + b sqrt(D))/2.
    pub fn embed(&self, x: &QuadInt) -> Result<[u64; 2]> {
        if x.d != self.d {
            return Err(Error::FieldMismatch);
        }
        let m = BigInt::from(self.pt);
        let a = x.a.mod_floor(&m).to_u64().unwrap();
        let b = x.b.mod_floor(&m).to_u64().unwrap();
        let phi = |r: u64| {
            let s = (a as u128 + arith::mulmod(b, r, self.pt) as u128) % self.pt as u128;
            arith::mulmod(s as u64, self.inv2, self.pt)
        };
        Ok([phi(self.r1), phi(self.r2)])
    }

    /// Valuation profile of phi^(p-1) - 1, one entry per embedding; None
    /// marks a valuation beyond the working precision.
    fn quotient_valuations(&self, x: &QuadInt) -> Result<[Option<u32>; 2]> {
        let emb = self.embed(x)?;
        let mut out = [None, None];
        for (i, &y) in emb.iter().enumerate() {
            if y % self.p == 0 {
                return Err(Error::NotCoprime(self.p));
            }
            let u = arith::powmod(y, self.p - 1, self.pt);
            if u != 1 {
                let v = arith::valuation(u - 1, self.p);
                assert!(v >= 1, "Fermat: y^(p-1) = 1 mod p");
                out[i] = Some(v - 1);
            }
        }
        Ok(out)
    }
}

/// delta_p(x) with an explicit saturation marker: when saturated, the true
/// value is >= delta and the working precision was too small to resolve it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FermatQuotient {
    pub delta: u32,
    pub saturated: bool,
    pub at_precision: u32,
}

impl FermatQuotient {
    fn exact(delta: u32, t: u32) -> Self {
        FermatQuotient { delta, saturated: false, at_precision: t }
    }

    fn saturated(t: u32) -> Self {
        FermatQuotient { delta: t - 1, saturated: true, at_precision: t }
    }
}

/// delta_p(x) = min over the two embeddings of v_p(phi(x)^(p-1) - 1) - 1,
/// for x coprime to p.
pub fn fermat_quotient(pair: &PadicEmbeddingPair, x: &QuadInt) -> Result<FermatQuotient> {
    let vals = pair.quotient_valuations(x)?;
    // when |norm(x)| = +-1 mod p^t the two embeddings are forced to agree
    let nrm = x.norm().abs().mod_floor(&BigInt::from(pair.pt));
    if nrm == BigInt::from(1u32) || nrm == BigInt::from(pair.pt - 1) {
        assert_eq!(vals[0], vals[1], "unit-norm elements have balanced quotients");
    }
    Ok(match (vals[0], vals[1]) {
        (Some(v1), Some(v2)) => FermatQuotient::exact(v1.min(v2), pair.t),
        (Some(v), None) | (None, Some(v)) if v < pair.t - 1 => FermatQuotient::exact(v, pair.t),
        _ => FermatQuotient::saturated(pair.t),
    })
}

/// delta of the p-unit at the embedding where it is a unit (the side away
/// from its prime); saturation reported, escalation left to the caller.
pub fn fermat_quotient_counit(pair: &PadicEmbeddingPair, pu: &PUnitRecord) -> Result<FermatQuotient> {
    let emb = pair.embed(&pu.eta)?;
    let vanishing: Vec<usize> = (0..2).filter(|&i| emb[i] % pair.p == 0).collect();
    assert_eq!(vanishing.len(), 1, "a p-unit vanishes at exactly one side");
    let y = emb[1 - vanishing[0]];
    let u = arith::powmod(y, pair.p - 1, pair.pt);
    Ok(if u == 1 {
        FermatQuotient::saturated(pair.t)
    } else {
        FermatQuotient::exact(arith::valuation(u - 1, pair.p) - 1, pair.t)
    })
}

fn default_precision(p: u64) -> u32 {
    if p == 3 {
        9
    } else {
        ((9.0 * 3f64.ln() / (p as f64).ln()).ceil() as u32).max(4)
    }
}

fn max_precision(p: u64) -> u32 {
    let mut t = 0u32;
    let mut v = 1u128;
    while v <= u64::MAX as u128 / p as u128 {
        v *= p as u128;
        t += 1;
    }
    t.min(64)
}

/// delta_p(x) at automatically escalated precision: doubles t while the
/// result is saturated, until the modulus no longer fits the word size.
pub fn fermat_quotient_auto(field: &QuadraticField, p: u64, x: &QuadInt) -> Result<FermatQuotient> {
    let mut t = default_precision(p);
    let cap = max_precision(p);
    loop {
        let pair = split_embeddings(field, p, t)?;
        let fq = fermat_quotient(&pair, x)?;
        if !fq.saturated {
            return Ok(fq);
        }
        if t >= cap {
            return Err(Error::PrecisionExhausted(t));
        }
        t = (t * 2).min(cap);
    }
}

/// Counit delta with the same escalation policy as [`fermat_quotient_auto`].
pub fn fermat_quotient_counit_auto(
    field: &QuadraticField,
    p: u64,
    pu: &PUnitRecord,
) -> Result<FermatQuotient> {
    let mut t = default_precision(p);
    let cap = max_precision(p);
    loop {
        let pair = split_embeddings(field, p, t)?;
        let fq = fermat_quotient_counit(&pair, pu)?;
        if !fq.saturated {
            return Ok(fq);
        }
        if t >= cap {
            return Err(Error::PrecisionExhausted(t));
        }
        t = (t * 2).min(cap);
    }
}

/// delta_p of a rational integer coprime to p (both embeddings coincide).
pub fn fermat_quotient_int(p: u64, t: u32, n: &BigInt) -> Result<FermatQuotient> {
    let pt = BigInt::from(p)
        .pow(t)
        .to_u64()
        .ok_or(Error::PrecisionExhausted(t))?;
    let y = n.mod_floor(&BigInt::from(pt)).to_u64().unwrap();
    if y % p == 0 {
        return Err(Error::NotCoprime(p));
    }
    let u = arith::powmod(y, p - 1, pt);
    Ok(if u == 1 {
        FermatQuotient::saturated(t)
    } else {
        FermatQuotient::exact(arith::valuation(u - 1, p) - 1, t)
    })
}
