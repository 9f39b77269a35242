//! Ray class groups of modulus p^t presented by generators and relations:
//! residue generators of (O/p^t)^x, class-group generators with
//! principalization witnesses, Smith normal form of the relation matrix,
//! and the torsion structure read off after dropping the free line.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::arith;
use crate::classgroup::{self, ClassGroup, Ideal};
use crate::error::{Error, Result};
use crate::field::{QuadInt, QuadraticField, Splitting};
use crate::padic;

/// Presentation of the ray class group of modulus p^t (no infinite places):
/// columns are residue generators of (O/p^t)^x followed by ideal class
/// generators; `divisors` are the nontrivial Smith normal form divisors in
/// ascending divisibility order.
#[derive(Debug, Clone)]
pub struct AbelianPresentation {
    pub m: u64,
    pub d: u64,
    pub p: u64,
    pub t: u32,
    pub generators: Vec<String>,
    pub relations: Vec<Vec<i128>>,
    pub divisors: Vec<u64>,
    /// #(O/p^t)^x.
    pub residue_order: u128,
    /// Order of the image of the unit group in (O/p^t)^x.
    pub unit_image_order: u128,
    pub class_number: u64,
}

impl AbelianPresentation {
    pub fn group_order(&self) -> u128 {
        self.divisors.iter().map(|&d| d as u128).product()
    }

    /// Independent count: h * #(O/p^t)^x / #(unit image).
    pub fn expected_order(&self) -> u128 {
        self.class_number as u128 * self.residue_order / self.unit_image_order
    }
}

/// Torsion structure derived from a saturated ray class computation: the
/// single largest cyclic factor (the free line) is dropped and the p-parts
/// of the remaining p-divisible factors are kept, descending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TorsionStructure {
    pub m: u64,
    #[serde(rename = "D")]
    pub d: u64,
    pub p: u64,
    pub t: u32,
    /// Raw divisor list at the saturated precision, ascending divisibility,
    /// so a tie for the largest factor stays visible.
    pub divisors: Vec<u64>,
    pub rank: u32,
    pub p_part: Vec<u64>,
    pub saturated_at: u32,
}

impl TorsionStructure {
    pub fn json_line(&self) -> String {
        serde_json::to_string(self).expect("structure serializes")
    }

    pub fn order(&self) -> u64 {
        self.p_part.iter().product()
    }
}

fn validate(field: &QuadraticField, p: u64, t: u32) -> Result<u64> {
    if p == 2 || !arith::is_prime(p) {
        return Err(Error::InvalidArgument(format!("{p} is not an odd prime")));
    }
    if t < 2 {
        return Err(Error::InvalidArgument(format!("modulus exponent {t} < 2")));
    }
    if field.d % p == 0 {
        return Err(Error::Ramified(p));
    }
    p.checked_pow(t).ok_or(Error::PrecisionExhausted(t))
}

/// Discrete log in (Z/p^t)^x to a primitive root g: brute force on the
/// order-(p-1) part, base-p digits on the 1-unit part.
fn dlog_cyclic(x: u64, g: u64, p: u64, t: u32, pt: u64) -> Result<u64> {
    if x % p == 0 {
        return Err(Error::NotCoprime(p));
    }
    let n1 = p - 1;
    let n2 = pt / p;
    let gn2 = arith::powmod(g, n2, pt);
    let xn2 = arith::powmod(x, n2, pt);
    let mut a1 = 0u64;
    let mut acc = 1u64;
    while acc != xn2 {
        acc = arith::mulmod(acc, gn2, pt);
        a1 += 1;
        assert!(a1 < n1, "primitive root misses target");
    }
    let h = arith::powmod(g, n1, pt);
    let hinv = arith::inv_mod_u64(h, pt).expect("unit");
    let w = arith::powmod(h, n2 / p, pt);
    let y = arith::powmod(x, n1, pt);
    let mut a2 = 0u64;
    let mut rem = y;
    let mut pi = 1u64;
    for _ in 0..t - 1 {
        let probe = arith::powmod(rem, n2 / (pi * p), pt);
        let mut dig = 0u64;
        let mut acc2 = 1u64;
        while acc2 != probe {
            acc2 = arith::mulmod(acc2, w, pt);
            dig += 1;
            assert!(dig < p, "digit out of range");
        }
        a2 += dig * pi;
        rem = arith::mulmod(rem, arith::powmod(hinv, dig * pi, pt), pt);
        pi *= p;
    }
    let inv = arith::inv_mod_u64(n1 % n2, n2).expect("coprime parts");
    let k = arith::mulmod((n2 + a2 % n2 - a1 % n2) % n2, inv, n2);
    Ok(a1 + n1 * k)
}

/// Unit group of O/p^t for inert p: a generator of the order-(p^2-1) part
/// and the 1-units 1+p and 1+p*sqrt(D), each of order p^{t-1}. Elements are
/// pairs (a, b) for a + b*sqrt(D) mod p^t.
struct InertUnits {
    p: u64,
    t: u32,
    pt: u64,
    dd: u64,
    inv2: u64,
    g0: (u64, u64),
    g0_inv: (u64, u64),
    u1_inv: (u64, u64),
    u2_inv: (u64, u64),
    /// w1^i * w2^j -> (i, j) over the order-p top layer of the 1-units.
    table: HashMap<(u64, u64), (u64, u64)>,
    group_order: u128,
}

impl InertUnits {
    fn mul(&self, x: (u64, u64), y: (u64, u64)) -> (u64, u64) {
        let m = self.pt as u128;
        let (a1, b1) = (x.0 as u128, x.1 as u128);
        let (a2, b2) = (y.0 as u128, y.1 as u128);
        let a = (a1 * a2 % m + b1 * b2 % m * (self.dd as u128)) % m;
        let b = (a1 * b2 % m + a2 * b1 % m) % m;
        (a as u64, b as u64)
    }

    fn pow(&self, mut x: (u64, u64), mut e: u128) -> (u64, u64) {
        let mut r = (1, 0);
        while e > 0 {
            if e & 1 == 1 {
                r = self.mul(r, x);
            }
            x = self.mul(x, x);
            e >>= 1;
        }
        r
    }

    fn inv(&self, x: (u64, u64)) -> (u64, u64) {
        self.pow(x, self.group_order - 1)
    }

    fn is_unit(&self, x: (u64, u64)) -> bool {
        let p = self.p as i128;
        let (a, b) = ((x.0 % self.p) as i128, (x.1 % self.p) as i128);
        (a * a - (self.dd % self.p) as i128 * b * b).rem_euclid(p) != 0
    }

    fn build(d: u64, p: u64, t: u32, pt: u64) -> Result<InertUnits> {
        let n1 = p * p - 1;
        let sylow = (p as u128).pow(2 * (t - 1));
        let mut me = InertUnits {
            p,
            t,
            pt,
            dd: d % pt,
            inv2: arith::inv_mod_u64(2, pt).expect("odd modulus"),
            g0: (0, 0),
            g0_inv: (0, 0),
            u1_inv: (0, 0),
            u2_inv: (0, 0),
            table: HashMap::new(),
            group_order: n1 as u128 * sylow,
        };
        let fac: Vec<u64> = arith::factor(n1).into_iter().map(|(q, _)| q).collect();
        'search: for b in 1..p {
            for a in 0..p {
                if !me.is_unit((a, b)) {
                    continue;
                }
                let cand = me.pow((a, b), sylow);
                if fac.iter().all(|&q| me.pow(cand, (n1 / q) as u128) != (1, 0)) {
                    me.g0 = cand;
                    break 'search;
                }
            }
        }
        assert_ne!(me.g0, (0, 0), "residue field has a generator");
        me.g0_inv = me.inv(me.g0);
        let (u1, u2) = ((1 + p, 0), (1, p));
        me.u1_inv = me.inv(u1);
        me.u2_inv = me.inv(u2);
        let e_top = (p as u128).pow(t - 2);
        let (w1, w2) = (me.pow(u1, e_top), me.pow(u2, e_top));
        let mut xi = (1, 0);
        for i in 0..p {
            let mut xij = xi;
            for j in 0..p {
                me.table.insert(xij, (i, j));
                xij = me.mul(xij, w2);
            }
            xi = me.mul(xi, w1);
        }
        assert_eq!(me.table.len(), (p * p) as usize, "1-unit generators are independent");
        Ok(me)
    }

    fn dlog(&self, x: (u64, u64)) -> Result<[u64; 3]> {
        if !self.is_unit(x) {
            return Err(Error::NotCoprime(self.p));
        }
        let (p, t) = (self.p, self.t);
        let n1 = p * p - 1;
        let sylow = (p as u128).pow(2 * (t - 1));
        let xs = self.pow(x, sylow);
        let gs = self.pow(self.g0, sylow);
        let mut a = 0u64;
        let mut acc = (1, 0);
        while acc != xs {
            acc = self.mul(acc, gs);
            a += 1;
            assert!(a < n1, "projective part out of range");
        }
        let mut u = self.mul(x, self.pow(self.g0_inv, a as u128));
        assert!(u.0 % p == 1 && u.1 % p == 0, "residual is a 1-unit");
        let (mut b1, mut b2) = (0u64, 0u64);
        let mut pi = 1u64;
        for i in 0..t - 1 {
            let probe = self.pow(u, (p as u128).pow(t - 2 - i));
            let &(d1, d2) = self.table.get(&probe).expect("top layer is spanned");
            b1 += d1 * pi;
            b2 += d2 * pi;
            u = self.mul(u, self.pow(self.u1_inv, (d1 * pi) as u128));
            u = self.mul(u, self.pow(self.u2_inv, (d2 * pi) as u128));
            pi *= p;
        }
        debug_assert_eq!(u, (1, 0));
        Ok([a, b1, b2])
    }
}

enum ResidueGens {
    Split { pair: padic::PadicEmbeddingPair, g: u64, t: u32 },
    Inert(InertUnits),
}

struct ResidueGroup {
    d: u64,
    p: u64,
    pt: u64,
    orders: Vec<u64>,
    labels: Vec<&'static str>,
    gens: ResidueGens,
}

impl ResidueGroup {
    fn build(field: &QuadraticField, p: u64, t: u32, pt: u64) -> Result<ResidueGroup> {
        match field.splitting(p) {
            Splitting::Split => {
                let pair = padic::split_embeddings(field, p, t)?;
                let g = arith::primitive_root_mod_p_pow(p, t).to_u64().expect("fits");
                let e = (p - 1) * (pt / p);
                Ok(ResidueGroup {
                    d: field.d,
                    p,
                    pt,
                    orders: vec![e, e],
                    labels: vec!["res1", "res2"],
                    gens: ResidueGens::Split { pair, g, t },
                })
            }
            Splitting::Inert => Ok(ResidueGroup {
                d: field.d,
                p,
                pt,
                orders: vec![p * p - 1, pt / p, pt / p],
                labels: vec!["res_f", "res_u1", "res_u2"],
                gens: ResidueGens::Inert(InertUnits::build(field.d, p, t, pt)?),
            }),
            Splitting::Ramified => Err(Error::Ramified(p)),
        }
    }

    fn order(&self) -> u128 {
        self.orders.iter().map(|&e| e as u128).product()
    }

    fn dlog(&self, x: &QuadInt) -> Result<Vec<u64>> {
        if x.d != self.d {
            return Err(Error::FieldMismatch);
        }
        match &self.gens {
            ResidueGens::Split { pair, g, t } => {
                let emb = pair.embed(x)?;
                Ok(vec![
                    dlog_cyclic(emb[0], *g, self.p, *t, self.pt)?,
                    dlog_cyclic(emb[1], *g, self.p, *t, self.pt)?,
                ])
            }
            ResidueGens::Inert(iu) => {
                let m = BigInt::from(self.pt);
                let a = x.a.mod_floor(&m).to_u64().expect("reduced");
                let b = x.b.mod_floor(&m).to_u64().expect("reduced");
                let xr = (
                    arith::mulmod(a, iu.inv2, self.pt),
                    arith::mulmod(b, iu.inv2, self.pt),
                );
                iu.dlog(xr).map(|v| v.to_vec())
            }
        }
    }

    fn dlog_int(&self, n: &BigInt) -> Result<Vec<u64>> {
        let r = n.mod_floor(&BigInt::from(self.pt)).to_u64().expect("reduced");
        match &self.gens {
            ResidueGens::Split { g, t, .. } => {
                let v = dlog_cyclic(r, *g, self.p, *t, self.pt)?;
                Ok(vec![v, v])
            }
            ResidueGens::Inert(iu) => iu.dlog((r, 0)).map(|v| v.to_vec()),
        }
    }
}

/// Split prime ideals whose classes generate the class group, plus a
/// triangular basis of their relation lattice: row i states
/// q_i^{b_i} = prod_{j<i} q_j^{w_j} in the class group.
fn class_generators(cg: &ClassGroup, p: u64) -> Result<(Vec<String>, Vec<Ideal>, Vec<Vec<i64>>)> {
    let mut labels = Vec::new();
    let mut ideals: Vec<Ideal> = Vec::new();
    let mut rows: Vec<Vec<i64>> = Vec::new();
    let mut sub: HashMap<u32, Vec<i64>> = HashMap::from([(0, Vec::new())]);
    let mut q = 1u64;
    while (sub.len() as u64) < cg.h {
        q += 1;
        if q > 100_000 {
            return Err(Error::GeneratorSearchFailed(format!(
                "no generating split primes below {q} for D={}",
                cg.field.d
            )));
        }
        if q == p || !arith::is_prime(q) || cg.field.splitting(q) != Splitting::Split {
            continue;
        }
        let ideal = Ideal::prime_above(&cg.field, q)?;
        let c = cg.class_of(&ideal);
        if sub.contains_key(&c) {
            continue;
        }
        let i = ideals.len();
        for w in sub.values_mut() {
            w.push(0);
        }
        let mut x = c;
        let mut b = 1i64;
        while !sub.contains_key(&x) {
            x = cg.mul_classes(x, c);
            b += 1;
        }
        let prev = sub[&x].clone();
        let mut row = vec![0i64; i + 1];
        for j in 0..i {
            row[j] = -prev[j];
        }
        row[i] = b;
        rows.push(row);
        let snapshot: Vec<(u32, Vec<i64>)> = sub.drain().collect();
        for e in 0..b {
            let ce = cg.pow_class(c, e as u64);
            for (k, w) in &snapshot {
                let mut w2 = w.clone();
                *w2.last_mut().expect("slot added") = e;
                let old = sub.insert(cg.mul_classes(*k, ce), w2);
                debug_assert!(old.is_none(), "cosets are disjoint");
            }
        }
        labels.push(format!("q{q}"));
        ideals.push(ideal);
    }
    let s = ideals.len();
    for r in &mut rows {
        r.resize(s, 0);
    }
    Ok((labels, ideals, rows))
}

fn smallest_nonzero(m: &[Vec<BigInt>], k: usize, cols: usize) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize)> = None;
    for i in k..m.len() {
        for j in k..cols {
            if m[i][j].is_zero() {
                continue;
            }
            if best.map_or(true, |(bi, bj)| m[i][j].abs() < m[bi][bj].abs()) {
                best = Some((i, j));
            }
        }
    }
    best
}

/// Diagonal of the Smith normal form (d_1 | d_2 | ..., 1s included); zeros
/// signal rank deficiency.
fn snf_divisors(mat: &[Vec<i128>], cols: usize) -> Vec<u64> {
    let mut m: Vec<Vec<BigInt>> = mat
        .iter()
        .map(|r| r.iter().map(|&x| BigInt::from(x)).collect())
        .collect();
    let nrows = m.len();
    let n = cols.min(nrows);
    let mut k = 0;
    'pivot: while k < n {
        let Some((pi, pj)) = smallest_nonzero(&m, k, cols) else { break };
        m.swap(k, pi);
        for row in m.iter_mut() {
            row.swap(k, pj);
        }
        loop {
            let mut dirty = false;
            for i in k + 1..nrows {
                if m[i][k].is_zero() {
                    continue;
                }
                let q = &m[i][k] / &m[k][k];
                if !q.is_zero() {
                    for j in k..cols {
                        let sub = &q * &m[k][j];
                        m[i][j] -= sub;
                    }
                }
                if !m[i][k].is_zero() {
                    m.swap(k, i);
                    dirty = true;
                }
            }
            if dirty {
                continue;
            }
            for j in k + 1..cols {
                if m[k][j].is_zero() {
                    continue;
                }
                let q = &m[k][j] / &m[k][k];
                if !q.is_zero() {
                    for i in k..nrows {
                        let sub = &q * &m[i][k];
                        m[i][j] -= sub;
                    }
                }
                if !m[k][j].is_zero() {
                    for row in m.iter_mut() {
                        row.swap(k, j);
                    }
                    dirty = true;
                }
            }
            if !dirty {
                break;
            }
        }
        for i in k + 1..nrows {
            for j in k + 1..cols {
                if (&m[i][j] % &m[k][k]).is_zero() {
                    continue;
                }
                for jj in k..cols {
                    let add = m[i][jj].clone();
                    m[k][jj] += add;
                }
                continue 'pivot;
            }
        }
        k += 1;
    }
    (0..cols)
        .map(|i| {
            if i < n {
                m[i][i].abs().to_u64().expect("divisor fits u64")
            } else {
                0
            }
        })
        .collect()
}

/// Present the ray class group of modulus p^t and return its cyclic
/// structure. Requires p odd and unramified; the class generators' relation
/// words are principalized through the reduction walk and enter the matrix
/// only via their residues mod p^t.
pub fn ray_class_structure(field: &QuadraticField, p: u64, t: u32) -> Result<AbelianPresentation> {
    let pt = validate(field, p, t)?;
    let res = ResidueGroup::build(field, p, t, pt)?;
    let cg = ClassGroup::compute(field);
    let (clabels, ideals, staircase) = class_generators(&cg, p)?;
    let rho = res.orders.len();
    let cols = rho + ideals.len();
    let mut rows: Vec<Vec<i128>> = Vec::new();
    for (j, &e) in res.orders.iter().enumerate() {
        let mut r = vec![0i128; cols];
        r[j] = e as i128;
        rows.push(r);
    }
    let mut unit_rows: Vec<Vec<i128>> = Vec::new();
    for u in [field.from_int(-1), cg.pc.unit_group.eps.clone()] {
        let dl = res.dlog(&u)?;
        let mut r = vec![0i128; cols];
        for (j, &v) in dl.iter().enumerate() {
            r[j] = v as i128;
        }
        unit_rows.push(r);
    }
    rows.extend(unit_rows.iter().cloned());
    for a in &staircase {
        let mut jp = Ideal::one(field.d);
        let mut jm = Ideal::one(field.d);
        for (k, &ak) in a.iter().enumerate() {
            if ak > 0 {
                jp = jp.mul(&ideals[k].pow(ak as u64));
            } else if ak < 0 {
                jm = jm.mul(&ideals[k].pow((-ak) as u64));
            }
        }
        let whole = jp.mul(&jm.conj());
        let gamma = classgroup::recover_generator(&cg.pc, &whole)?
            .expect("relation words are principal");
        let dg = res.dlog(&gamma)?;
        let dn = res.dlog_int(&jm.norm())?;
        let mut r = vec![0i128; cols];
        for j in 0..rho {
            r[j] = dn[j] as i128 - dg[j] as i128;
        }
        for (k, &ak) in a.iter().enumerate() {
            r[rho + k] = ak as i128;
        }
        rows.push(r);
    }
    let raw = snf_divisors(&rows, cols);
    assert!(raw.iter().all(|&x| x > 0), "presented group is finite");
    let mut unit_mat: Vec<Vec<i128>> = Vec::new();
    for (j, &e) in res.orders.iter().enumerate() {
        let mut r = vec![0i128; rho];
        r[j] = e as i128;
        unit_mat.push(r);
    }
    for ur in &unit_rows {
        unit_mat.push(ur[..rho].to_vec());
    }
    let unit_quotient: u128 = snf_divisors(&unit_mat, rho)
        .iter()
        .map(|&x| x as u128)
        .product();
    let residue_order = res.order();
    assert_eq!(residue_order % unit_quotient, 0);
    let pres = AbelianPresentation {
        m: field.m,
        d: field.d,
        p,
        t,
        generators: res
            .labels
            .iter()
            .map(|s| s.to_string())
            .chain(clabels)
            .collect(),
        relations: rows,
        divisors: raw.into_iter().filter(|&x| x > 1).collect(),
        residue_order,
        unit_image_order: residue_order / unit_quotient,
        class_number: cg.h,
    };
    assert_eq!(pres.group_order(), pres.expected_order(), "order identity");
    Ok(pres)
}

fn derived_parts(divisors: &[u64], p: u64) -> (u32, Vec<u64>) {
    if divisors.is_empty() {
        return (0, Vec::new());
    }
    let parts: Vec<u64> = divisors[..divisors.len() - 1]
        .iter()
        .rev()
        .filter(|&&c| c % p == 0)
        .map(|&c| p.pow(arith::valuation(c, p)))
        .collect();
    (parts.len() as u32, parts)
}

/// Torsion structure at the smallest saturated precision from `t` upward:
/// the reading at t must agree with the reading at t+1, else the precision
/// escalates to 16 then 32.
pub fn torsion_structure(field: &QuadraticField, p: u64, t: u32) -> Result<TorsionStructure> {
    let mut ladder = vec![t];
    for cand in [16u32, 32] {
        if cand > t {
            ladder.push(cand);
        }
    }
    let mut compared = false;
    for tt in ladder {
        let lo = match ray_class_structure(field, p, tt) {
            Ok(x) => x,
            Err(Error::PrecisionExhausted(_)) if compared => break,
            Err(e) => return Err(e),
        };
        let hi = match ray_class_structure(field, p, tt + 1) {
            Ok(x) => x,
            Err(Error::PrecisionExhausted(_)) if compared => break,
            Err(e) => return Err(e),
        };
        compared = true;
        let a = derived_parts(&lo.divisors, p);
        if a == derived_parts(&hi.divisors, p) {
            return Ok(TorsionStructure {
                m: field.m,
                d: field.d,
                p,
                t: tt,
                divisors: lo.divisors,
                rank: a.0,
                p_part: a.1,
                saturated_at: tt,
            });
        }
    }
    Err(Error::NotSaturated)
}
