//! Statistical surveys over split primes: ideal class orders of the primes
//! above ell, Fermat quotients of ell-units, and Fermat quotients of random
//! principal products drawn from a fixed prime pool.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::classgroup::{ClassGroup, Ideal};
use crate::error::{Error, Result};
use crate::field::{QuadInt, QuadraticField, Splitting};
use crate::{arith, norms, padic};

/// Exact delta buckets 0..4 for ell-unit surveys; the last bucket is >= 5.
const DELTA_BUCKETS: u32 = 5;
/// Exact delta buckets 0..1 for relation surveys; the last bucket is >= 2.
const RELATION_BUCKETS: u32 = 2;

/// SplitMix64. Deterministic, splittable by reseeding, and stable across
/// platforms; every randomized artifact records its seed.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    /// Uniform draw from [0, bound) by rejection.
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0);
        let threshold = bound.wrapping_neg() % bound;
        loop {
            let r = self.next_u64();
            if r >= threshold {
                return r % bound;
            }
        }
    }
}

/// Enumeration window for the primes ell = +-1 (mod p^(n+1)) that split in k.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ScanSpec {
    pub p: u64,
    pub n: u32,
    #[serde(rename = "BL")]
    pub bl: u64,
}

impl ScanSpec {
    pub fn new(p: u64, n: u32, bl: u64) -> Result<Self> {
        let spec = ScanSpec { p, n, bl };
        spec.modulus()?;
        Ok(spec)
    }

    /// p^(n+1), the congruence modulus of the two residue passes. The bound
    /// must cover at least one full period 2 p^(n+1).
    pub fn modulus(&self) -> Result<u64> {
        if self.p == 2 || !arith::is_prime(self.p) {
            return Err(Error::InvalidArgument(format!(
                "{} is not an odd prime",
                self.p
            )));
        }
        self.p
            .checked_pow(self.n + 1)
            .filter(|md| md.checked_mul(2).is_some_and(|s| s <= self.bl))
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "bound {} does not cover a full period of 2*{}^{}",
                    self.bl,
                    self.p,
                    self.n + 1
                ))
            })
    }
}

/// Primes ell <= BL with ell = +-1 (mod p^(n+1)) and ell split in k, the
/// -1 residue pass first, ascending within each pass.
pub fn split_prime_stream(field: &QuadraticField, spec: &ScanSpec) -> Result<Vec<u64>> {
    let step = 2 * spec.modulus()?;
    let mut out = Vec::new();
    for first in [step - 1, step + 1] {
        let candidates: Vec<u64> = (first..=spec.bl).step_by(step as usize).collect();
        let mut pass: Vec<u64> = candidates
            .par_iter()
            .copied()
            .filter(|&l| arith::is_prime(l) && field.splitting(l) == Splitting::Split)
            .collect();
        out.append(&mut pass);
    }
    Ok(out)
}

/// Bucketed counts from one survey, with the sampling window and seed baked
/// in so the artifact alone reproduces the run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurveyHistogram {
    pub kind: String,
    pub m: u64,
    #[serde(rename = "D")]
    pub d: u64,
    pub p: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<u32>,
    #[serde(rename = "BL", skip_serializing_if = "Option::is_none")]
    pub bl: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pool: Option<Vec<u64>>,
    pub labels: Vec<String>,
    pub counts: Vec<u64>,
    pub proportions: Vec<f64>,
    /// Model densities per bucket; empty when no model applies.
    pub expected: Vec<f64>,
    pub sample_size: u64,
    /// Sampled products admitting no integral element of that norm at all.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub non_principal: Option<u64>,
    /// Samples whose delta reaches delta(eps), where a different choice of
    /// representative modulo units could change the reading.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub representative_sensitive: Option<u64>,
}

impl SurveyHistogram {
    fn proportions_of(counts: &[u64], total: u64) -> Vec<f64> {
        counts
            .iter()
            .map(|&c| if total == 0 { 0.0 } else { c as f64 / total as f64 })
            .collect()
    }

    pub fn json_line(&self) -> String {
        serde_json::to_string(self).expect("histogram serializes")
    }

    pub fn csv(&self) -> String {
        let mut s = String::from("label,count,proportion,expected\n");
        for (i, label) in self.labels.iter().enumerate() {
            let expected = self
                .expected
                .get(i)
                .map(|x| x.to_string())
                .unwrap_or_default();
            s.push_str(&format!(
                "{label},{},{},{expected}\n",
                self.counts[i], self.proportions[i]
            ));
        }
        s
    }
}

/// P(p-part of the class order = p^j) for a class group whose p-part is
/// cyclic of order p^a: phi(p^j) / p^a for j = 0..=a.
pub fn expected_order_distribution(p: u64, a: u32) -> Vec<f64> {
    let pa = (p as f64).powi(a as i32);
    (0..=a)
        .map(|j| {
            if j == 0 {
                1.0 / pa
            } else {
                (p - 1) as f64 * (p as f64).powi(j as i32 - 1) / pa
            }
        })
        .collect()
}

/// P(delta = j) = (p-1)/p^(j+1) for j < cap, closed by the exact tail
/// P(delta >= cap) = p^-cap, so the densities sum to 1.
pub fn expected_delta_distribution(p: u64, cap: u32) -> Vec<f64> {
    let pf = p as f64;
    let mut v: Vec<f64> = (0..cap).map(|j| (pf - 1.0) / pf.powi(j as i32 + 1)).collect();
    v.push(pf.powi(-(cap as i32)));
    v
}

fn delta_labels(cap: u32) -> Vec<String> {
    let mut labels: Vec<String> = (0..cap).map(|j| format!("d={j}")).collect();
    labels.push(format!("d>={cap}"));
    labels
}

/// Distribution of the p-part of the order of [l] in Cl(k) over the stream,
/// where l is the split prime above ell. The expected column applies only
/// when the p-part of the class group is cyclic and is omitted otherwise.
pub fn order_survey(field: &QuadraticField, spec: &ScanSpec) -> Result<SurveyHistogram> {
    let md = spec.modulus()?;
    let ells = split_prime_stream(field, spec)?;
    let cg = ClassGroup::compute(field);
    let exponent = cg.structure.first().copied().unwrap_or(1);
    let a = arith::valuation(exponent, spec.p);
    let cyclic = cg.structure.iter().filter(|&&f| f % spec.p == 0).count() <= 1;
    let buckets: Vec<usize> = ells
        .par_iter()
        .map(|&ell| {
            debug_assert!(ell % md == 1 || ell % md == md - 1);
            let side = Ideal::prime_above(field, ell).expect("stream primes are split");
            arith::valuation(cg.ideal_order(&side), spec.p) as usize
        })
        .collect();
    let mut counts = vec![0u64; a as usize + 1];
    for j in buckets {
        counts[j] += 1;
    }
    let sample_size = ells.len() as u64;
    Ok(SurveyHistogram {
        kind: "orders".into(),
        m: field.m,
        d: field.d,
        p: spec.p,
        n: Some(spec.n),
        bl: Some(spec.bl),
        r: None,
        trials: None,
        seed: None,
        pool: None,
        labels: (0..=a).map(|j| format!("r={}", spec.p.pow(j))).collect(),
        proportions: SurveyHistogram::proportions_of(&counts, sample_size),
        expected: if cyclic {
            expected_order_distribution(spec.p, a)
        } else {
            Vec::new()
        },
        counts,
        sample_size,
        non_principal: None,
        representative_sensitive: None,
    })
}

/// Generator of l^r, aligned so that the first embedding side (the root of D
/// with smaller positive residue mod ell) is the one dividing it. Requires r
/// to be the order of [l]; one of +-ell^r is then a primitive norm.
fn ell_unit(cg: &ClassGroup, ell: u64, r: u32) -> Result<QuadInt> {
    let field = &cg.field;
    let np = BigInt::from(ell).pow(r);
    for sign in [-1, 1] {
        let target = BigInt::from(sign) * &np;
        let sols = norms::norm_solutions_factored(cg, &target, &[(ell, r)], true)?;
        if sols.solutions.is_empty() {
            continue;
        }
        let r1 = BigInt::from(norms::first_root_mod_p(field, ell));
        let lb = BigInt::from(ell);
        return sols
            .solutions
            .iter()
            .find(|x| (&x.a + &x.b * &r1).mod_floor(&lb).is_zero())
            .cloned()
            .ok_or_else(|| {
                Error::GeneratorSearchFailed(format!(
                    "no generator of norm {target} on the first embedding side"
                ))
            });
    }
    Err(Error::GeneratorSearchFailed(format!(
        "no primitive element of norm +-{ell}^{r}"
    )))
}

/// For each stream prime whose class has order exactly r, recover the
/// ell-unit eta_ell with (eta_ell) = l^r and tally delta_p(eta_ell) into
/// buckets 0..4 and >= 5.
pub fn ell_unit_delta_survey(
    field: &QuadraticField,
    spec: &ScanSpec,
    r: u64,
) -> Result<SurveyHistogram> {
    let md = spec.modulus()?;
    let re = u32::try_from(r)
        .ok()
        .filter(|&re| re > 0)
        .ok_or_else(|| Error::InvalidArgument(format!("unusable class order {r}")))?;
    let ells = split_prime_stream(field, spec)?;
    let cg = ClassGroup::compute(field);
    let exponent = cg.structure.first().copied().unwrap_or(1);
    if exponent % r != 0 {
        return Err(Error::InvalidArgument(format!(
            "no ideal class has order {r} (group exponent {exponent})"
        )));
    }
    let delta_eps = padic::fermat_quotient_auto(field, spec.p, &cg.pc.unit_group.eps)?.delta;
    // fixed precision making both the bucket cap and the comparison against
    // delta(eps) exact: saturation at t implies delta >= t-1 > both
    let t = (DELTA_BUCKETS + 2).max(delta_eps + 2);
    let pair = padic::split_embeddings(field, spec.p, t)?;
    let samples = ells
        .par_iter()
        .map(|&ell| -> Result<Option<(u32, bool)>> {
            let side = Ideal::prime_above(field, ell).expect("stream primes are split");
            if cg.ideal_order(&side) != r {
                return Ok(None);
            }
            let eta = ell_unit(&cg, ell, re)?;
            debug_assert!(ell % md == 1 || ell % md == md - 1);
            debug_assert_eq!(eta.norm().abs(), BigInt::from(ell).pow(re));
            let fq = padic::fermat_quotient(&pair, &eta)?;
            Ok(Some((fq.delta.min(DELTA_BUCKETS), fq.delta >= delta_eps)))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut counts = vec![0u64; DELTA_BUCKETS as usize + 1];
    let mut sensitive = 0u64;
    for (bucket, hits_eps) in samples.into_iter().flatten() {
        counts[bucket as usize] += 1;
        if hits_eps {
            sensitive += 1;
        }
    }
    let sample_size: u64 = counts.iter().sum();
    Ok(SurveyHistogram {
        kind: "delta".into(),
        m: field.m,
        d: field.d,
        p: spec.p,
        n: Some(spec.n),
        bl: Some(spec.bl),
        r: Some(r),
        trials: None,
        seed: None,
        pool: None,
        labels: delta_labels(DELTA_BUCKETS),
        proportions: SurveyHistogram::proportions_of(&counts, sample_size),
        expected: expected_delta_distribution(spec.p, DELTA_BUCKETS),
        counts,
        sample_size,
        non_principal: None,
        representative_sensitive: Some(sensitive),
    })
}

/// Pool of split primes = 1 (mod 2 p^2) near `bound` for the relation
/// survey; the construction prepends each hit, so the list descends.
pub fn relation_pool(field: &QuadraticField, p: u64, bound: u64) -> Result<Vec<u64>> {
    if p == 2 || !arith::is_prime(p) {
        return Err(Error::InvalidArgument(format!("{p} is not an odd prime")));
    }
    let step = 2 * p * p;
    let mut out = Vec::new();
    let mut l = 1u64;
    while l < bound {
        l += step;
        if arith::is_prime(l) && field.splitting(l) == Splitting::Split {
            out.push(l);
        }
    }
    out.reverse();
    Ok(out)
}

/// Draw `trials` products over the pool with exponents uniform in {0, 1, 2},
/// solve each as a norm, and tally delta_p over the primitive solutions
/// (one per associate class). Products with no integral solution count as
/// non-principal; the empty product is skipped as a bare unit. Sequential by
/// design: equal seeds reproduce the histogram bit for bit.
pub fn relation_survey(
    field: &QuadraticField,
    p: u64,
    pool: &[u64],
    trials: u64,
    seed: u64,
) -> Result<SurveyHistogram> {
    if pool.is_empty() {
        return Err(Error::EmptyPool);
    }
    if p == 2 || !arith::is_prime(p) {
        return Err(Error::InvalidArgument(format!("{p} is not an odd prime")));
    }
    let p2 = p * p;
    for &ell in pool {
        if !arith::is_prime(ell) || ell % p2 != 1 || field.splitting(ell) != Splitting::Split {
            return Err(Error::InvalidArgument(format!(
                "pool prime {ell} is not a split prime = 1 mod {p2}"
            )));
        }
    }
    let cg = ClassGroup::compute(field);
    let delta_eps = padic::fermat_quotient_auto(field, p, &cg.pc.unit_group.eps)?.delta;
    let t = (RELATION_BUCKETS + 2).max(delta_eps + 2);
    let pair = padic::split_embeddings(field, p, t)?;
    let mut rng = SplitMix64::new(seed);
    let mut counts = vec![0u64; RELATION_BUCKETS as usize + 1];
    let mut sensitive = 0u64;
    let mut npx = 0u64;
    for _ in 0..trials {
        let exps: Vec<u32> = pool.iter().map(|_| rng.below(3) as u32).collect();
        let mut n = BigInt::one();
        let mut facs: Vec<(u64, u32)> = Vec::new();
        for (&ell, &e) in pool.iter().zip(&exps) {
            if e > 0 {
                n *= BigInt::from(ell).pow(e);
                facs.push((ell, e));
            }
        }
        if facs.is_empty() {
            continue;
        }
        let sols = norms::norm_solutions_factored(&cg, &n, &facs, false)?;
        if sols.solutions.is_empty() {
            npx += 1;
            continue;
        }
        for x in &sols.solutions {
            if !x.content().is_one() {
                continue;
            }
            let fq = padic::fermat_quotient(&pair, x)?;
            counts[fq.delta.min(RELATION_BUCKETS) as usize] += 1;
            if fq.delta >= delta_eps {
                sensitive += 1;
            }
        }
    }
    let sample_size: u64 = counts.iter().sum();
    Ok(SurveyHistogram {
        kind: "relations".into(),
        m: field.m,
        d: field.d,
        p,
        n: None,
        bl: None,
        r: None,
        trials: Some(trials),
        seed: Some(seed),
        pool: Some(pool.to_vec()),
        labels: delta_labels(RELATION_BUCKETS),
        proportions: SurveyHistogram::proportions_of(&counts, sample_size),
        expected: expected_delta_distribution(p, RELATION_BUCKETS),
        counts,
        sample_size,
        non_principal: Some(npx),
        representative_sensitive: Some(sensitive),
    })
}
