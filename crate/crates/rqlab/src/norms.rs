//! Complete solver for norm equations N(x) = n over the integers of a real
//! quadratic field, one canonical representative per associate class.

use crate::arith;
use crate::classgroup::{recover_generator, ClassGroup, Ideal};
use crate::error::{Error, Result};
use crate::field::{QuadInt, QuadraticField, Splitting};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};
use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

#[derive(Debug, Clone)]
pub struct NormSolutionSet {
    pub n: BigInt,
    pub primitive_only: bool,
    /// One representative per associate class, real embedding in [1, eps_s),
    /// sorted by coordinates.
    pub solutions: Vec<QuadInt>,
}

fn factor_cache() -> &'static Mutex<HashMap<u64, Vec<(u64, u32)>>> {
    static CACHE: OnceLock<Mutex<HashMap<u64, Vec<(u64, u32)>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

fn factor_memo(n: u64) -> Vec<(u64, u32)> {
    if let Some(f) = factor_cache().lock().unwrap().get(&n) {
        return f.clone();
    }
    let f = arith::factor(n);
    factor_cache().lock().unwrap().insert(n, f.clone());
    f
}

/// Factor |n|, stripping small primes first; larger leftovers are handed to
/// the 64-bit machinery or rejected.
pub fn factor_abs(n: &BigInt) -> Result<Vec<(u64, u32)>> {
    let mut rest = n.abs();
    let mut out: HashMap<u64, u32> = HashMap::new();
    for q in 2u64..10_000 {
        let qb = BigInt::from(q);
        if &qb * &qb > rest {
            break;
        }
        while (&rest % &qb).is_zero() {
            *out.entry(q).or_insert(0) += 1;
            rest /= &qb;
        }
    }
    if let Some(r) = rest.to_u64() {
        if r > 1 {
            for (q, e) in factor_memo(r) {
                *out.entry(q).or_insert(0) += e;
            }
        }
    } else {
        return Err(Error::CannotFactor(n.to_string()));
    }
    let mut v: Vec<(u64, u32)> = out.into_iter().collect();
    v.sort_unstable();
    Ok(v)
}

/// All integral ideals of norm |n| given the factorization of |n|, as
/// exponent configurations over the primes above each rational prime.
fn ideals_of_norm(
    field: &QuadraticField,
    factors: &[(u64, u32)],
    primitive_only: bool,
) -> Result<Vec<Ideal>> {
    let mut combos = vec![Ideal::one(field.d)];
    for &(q, e) in factors {
        let mut next: Vec<Ideal> = Vec::new();
        match field.splitting(q) {
            Splitting::Inert => {
                if e % 2 != 0 || primitive_only {
                    return Ok(Vec::new());
                }
                let scale = BigInt::from(q).pow(e / 2);
                for c in &combos {
                    let mut i = c.clone();
                    i.content *= &scale;
                    next.push(i);
                }
            }
            Splitting::Ramified => {
                if primitive_only && e >= 2 {
                    return Ok(Vec::new());
                }
                let p = Ideal::prime_above(field, q)?;
                let pe = p.pow(e as u64);
                for c in &combos {
                    next.push(c.mul(&pe));
                }
            }
            Splitting::Split => {
                let p = Ideal::prime_above(field, q)?;
                let pb = p.conj();
                for i in 0..=e {
                    if primitive_only && i != 0 && i != e {
                        continue;
                    }
                    let part = p.pow(i as u64).mul(&pb.pow((e - i) as u64));
                    for c in &combos {
                        next.push(c.mul(&part));
                    }
                }
            }
        }
        combos = next;
    }
    Ok(combos)
}

/// Norm-equation solver reusing a precomputed class group (and its principal
/// cycle). Results are complete: one canonical representative per associate
/// class of solutions of N(x) = n.
pub fn norm_solutions_in(
    cg: &ClassGroup,
    n: &BigInt,
    primitive_only: bool,
) -> Result<NormSolutionSet> {
    if n.is_zero() {
        return Err(Error::InvalidArgument("norm must be nonzero".into()));
    }
    let factors = factor_abs(n)?;
    norm_solutions_factored(cg, n, &factors, primitive_only)
}

/// Solver entry point for callers that already know the factorization of
/// |n|, e.g. prime powers far beyond the factoring effort bound.
pub fn norm_solutions_factored(
    cg: &ClassGroup,
    n: &BigInt,
    factors: &[(u64, u32)],
    primitive_only: bool,
) -> Result<NormSolutionSet> {
    if n.is_zero() {
        return Err(Error::InvalidArgument("norm must be nonzero".into()));
    }
    debug_assert_eq!(
        factors.iter().fold(BigInt::from(1), |acc, &(q, e)| acc * BigInt::from(q).pow(e)),
        n.abs()
    );
    let field = &cg.field;
    let u = &cg.pc.unit_group;
    let mut solutions: Vec<QuadInt> = Vec::new();
    for ideal in ideals_of_norm(field, factors, primitive_only)? {
        if cg.class_of(&ideal) != 0 {
            continue;
        }
        let g = recover_generator(&cg.pc, &ideal)?
            .expect("principal class must yield a generator");
        let g = if g.norm() == *n {
            g
        } else if u.norm_eps == -1 {
            g.mul(&u.eps)
        } else {
            continue;
        };
        debug_assert_eq!(g.norm(), *n);
        solutions.push(u.canonicalize(&g).0);
    }
    solutions.sort_by(|x, y| (&x.b, &x.a).cmp(&(&y.b, &y.a)));
    Ok(NormSolutionSet { n: n.clone(), primitive_only, solutions })
}

/// See [`norm_solutions_in`]; computes the class group on the fly.
pub fn norm_solutions(
    field: &QuadraticField,
    n: &BigInt,
    primitive_only: bool,
) -> Result<NormSolutionSet> {
    let cg = ClassGroup::compute(field);
    norm_solutions_in(&cg, n, primitive_only)
}

/// S-unit above a split prime: eta generating p^h0 for a single prime ideal
/// p above p, with h0 the order of its class.
#[derive(Debug, Clone)]
pub struct PUnitRecord {
    pub eta: QuadInt,
    pub h0: u64,
    /// The prime above p dividing (eta): the one where the first embedding
    /// (root of m with smaller positive residue mod p) vanishes.
    pub prime_side: Ideal,
}

/// Root of D mod p matching the first-embedding convention: the square root
/// of D with smaller positive residue mod p.
pub(crate) fn first_root_mod_p(field: &QuadraticField, p: u64) -> u64 {
    let r = arith::sqrt_mod_prime(field.d % p, p).expect("p splits");
    r.min(p - r)
}

pub fn p_unit_in(cg: &ClassGroup, p: u64) -> Result<PUnitRecord> {
    let field = &cg.field;
    if p == 2 || !arith::is_prime(p) {
        return Err(Error::InvalidArgument(format!("{p} is not an odd prime")));
    }
    if field.splitting(p) != Splitting::Split {
        return Err(Error::NotSplit(p));
    }
    let r1 = first_root_mod_p(field, p);
    let pb = BigInt::from(p);
    for h0 in crate::classgroup::divisors(cg.h) {
        for sign in [-1i64, 1] {
            let n = BigInt::from(sign) * pb.pow(h0 as u32);
            let sols = norm_solutions_factored(cg, &n, &[(p, h0 as u32)], true)?;
            if sols.solutions.is_empty() {
                continue;
            }
            let eta = sols
                .solutions
                .into_iter()
                .find(|x| (&x.a + &x.b * r1).is_multiple_of(&pb))
                .expect("one solution per conjugate side");
            let b = if (BigInt::from(p - r1) - BigInt::from(field.d)).is_even() {
                p - r1
            } else {
                2 * p - r1
            };
            let prime_side = Ideal::new(field.d, BigInt::from(1), pb.clone(), BigInt::from(b));
            debug_assert_eq!(Ideal::principal(&eta), prime_side.pow(h0));
            return Ok(PUnitRecord { eta, h0, prime_side });
        }
    }
    unreachable!("the h-th power of any prime is principal")
}

/// See [`p_unit_in`]; computes the class group on the fly.
pub fn p_unit(field: &QuadraticField, p: u64) -> Result<PUnitRecord> {
    let cg = ClassGroup::compute(field);
    p_unit_in(&cg, p)
}
