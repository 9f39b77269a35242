//! Integer utilities: deterministic primality, factorization, modular
//! arithmetic, square roots, Kronecker symbols and p-adic valuations.

use num_bigint::BigInt;
use num_integer::{Integer, Roots};
use num_traits::{Signed, ToPrimitive, Zero};

/// Witnesses making Miller-Rabin deterministic for all n < 3.3e24.
pub const MR_BASES: [u64; 13] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41];

const SMALL_PRIMES: [u64; 54] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89,
    97, 101, 103, 107, 109, 113, 127, 131, 137, 139, 149, 151, 157, 163, 167, 173, 179, 181, 191,
    193, 197, 199, 211, 223, 227, 229, 233, 239, 241, 251,
];

pub fn mulmod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub fn powmod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut acc = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mulmod(acc, base, m);
        }
        base = mulmod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Deterministic Miller-Rabin primality test for u64.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for &p in &SMALL_PRIMES {
        if n == p {
            return true;
        }
        if n % p == 0 {
            return false;
        }
    }
    let mut d = n - 1;
    let mut s = 0u32;
    while d & 1 == 0 {
        d >>= 1;
        s += 1;
    }
    'witness: for &a in &MR_BASES {
        let mut x = powmod(a % n, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mulmod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn pollard_brent(n: u64) -> u64 {
    if n % 2 == 0 {
        return 2;
    }
    let mut c = 1u64;
    loop {
        let f = |x: u64| (mulmod(x, x, n) + c) % n;
        let mut x = 2u64;
        let mut y = 2u64;
        let mut d = 1u64;
        while d == 1 {
            x = f(x);
            y = f(f(y));
            d = gcd_u64(x.abs_diff(y), n);
        }
        if d != n {
            return d;
        }
        c += 1;
    }
}

pub fn gcd_u64(a: u64, b: u64) -> u64 {
    a.gcd(&b)
}

/// Prime factorization of n as (prime, exponent) pairs, primes ascending.
pub fn factor(n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    if n < 2 {
        return out;
    }
    let mut rest = n;
    for &p in &SMALL_PRIMES {
        if p * p > rest {
            break;
        }
        if rest % p == 0 {
            let mut e = 0;
            while rest % p == 0 {
                rest /= p;
                e += 1;
            }
            out.push((p, e));
        }
    }
    let mut stack = Vec::new();
    if rest > 1 {
        stack.push(rest);
    }
    let mut large = Vec::new();
    while let Some(v) = stack.pop() {
        if is_prime(v) {
            large.push(v);
            continue;
        }
        if let Some(r) = v.checked_isqrt_exact() {
            stack.push(r);
            stack.push(r);
            continue;
        }
        let d = pollard_brent(v);
        stack.push(d);
        stack.push(v / d);
    }
    large.sort_unstable();
    let mut i = 0;
    while i < large.len() {
        let p = large[i];
        let mut e = 0;
        while i < large.len() && large[i] == p {
            e += 1;
            i += 1;
        }
        out.push((p, e));
    }
    out.sort_unstable();
    out
}

trait IsqrtExact {
    fn checked_isqrt_exact(self) -> Option<u64>;
}

impl IsqrtExact for u64 {
    fn checked_isqrt_exact(self) -> Option<u64> {
        let r = self.sqrt();
        if r * r == self {
            Some(r)
        } else {
            None
        }
    }
}

pub fn is_squarefree(n: u64) -> bool {
    factor(n).iter().all(|&(_, e)| e == 1)
}

/// Squarefree core: product of the primes dividing n an odd number of times.
pub fn core(n: u64) -> u64 {
    factor(n)
        .iter()
        .filter(|&&(_, e)| e % 2 == 1)
        .map(|&(p, _)| p)
        .product()
}

pub fn isqrt(n: u64) -> u64 {
    n.sqrt()
}

pub fn is_square(n: u64) -> Option<u64> {
    let r = n.sqrt();
    (r * r == n).then_some(r)
}

pub fn valuation(mut n: u64, p: u64) -> u32 {
    assert!(n != 0 && p >= 2);
    let mut v = 0;
    while n % p == 0 {
        n /= p;
        v += 1;
    }
    v
}

pub fn valuation_big(n: &BigInt, p: u64) -> u32 {
    assert!(!n.is_zero());
    let p = BigInt::from(p);
    let mut v = 0;
    let mut n = n.clone();
    loop {
        let (q, r) = n.div_rem(&p);
        if !r.is_zero() {
            return v;
        }
        n = q;
        v += 1;
    }
}

/// Kronecker symbol (a/n), defined for all integers.
pub fn kronecker(mut a: i64, mut n: i64) -> i32 {
    if n == 0 {
        return if a == 1 || a == -1 { 1 } else { 0 };
    }
    if a % 2 == 0 && n % 2 == 0 {
        return 0;
    }
    let tab2 = |x: i64| match x.rem_euclid(8) {
        1 | 7 => 1,
        3 | 5 => -1,
        _ => 0,
    };
    let mut v = 0;
    while n % 2 == 0 {
        n /= 2;
        v += 1;
    }
    let mut k = if v % 2 == 0 { 1 } else { tab2(a) };
    if n < 0 {
        n = -n;
        if a < 0 {
            k = -k;
        }
    }
    loop {
        if a == 0 {
            return if n > 1 { 0 } else { k };
        }
        v = 0;
        while a % 2 == 0 {
            a /= 2;
            v += 1;
        }
        if v % 2 == 1 {
            k *= tab2(n);
        }
        // reciprocity for odd a, n
        if (a.rem_euclid(4) == 3) && (n % 4 == 3) {
            k = -k;
        }
        let r = a.abs();
        a = n % r;
        n = r;
    }
}

/// Extended gcd: returns (g, x, y) with a*x + b*y = g, g >= 0.
pub fn ext_gcd(a: i128, b: i128) -> (i128, i128, i128) {
    if b == 0 {
        if a < 0 {
            return (-a, -1, 0);
        }
        return (a, 1, 0);
    }
    let (g, x, y) = ext_gcd(b, a % b);
    (g, y, x - (a / b) * y)
}

pub fn inv_mod(a: i128, m: i128) -> Option<i128> {
    assert!(m > 1);
    let (g, x, _) = ext_gcd(a.rem_euclid(m), m);
    (g == 1).then(|| x.rem_euclid(m))
}

pub fn inv_mod_u64(a: u64, m: u64) -> Option<u64> {
    inv_mod(a as i128, m as i128).map(|x| x as u64)
}

pub fn inv_mod_big(a: &BigInt, m: &BigInt) -> Option<BigInt> {
    let e = a.mod_floor(m).extended_gcd(m);
    if e.gcd == 1.into() {
        Some(e.x.mod_floor(m))
    } else {
        None
    }
}

/// Square root of a mod odd prime p (Tonelli-Shanks).
pub fn sqrt_mod_prime(a: u64, p: u64) -> Option<u64> {
    let a = a % p;
    if a == 0 {
        return Some(0);
    }
    if p == 2 {
        return Some(a);
    }
    if powmod(a, (p - 1) / 2, p) != 1 {
        return None;
    }
    if p % 4 == 3 {
        return Some(powmod(a, (p + 1) / 4, p));
    }
    let mut q = p - 1;
    let mut s = 0;
    while q % 2 == 0 {
        q /= 2;
        s += 1;
    }
    let mut z = 2;
    while powmod(z, (p - 1) / 2, p) != p - 1 {
        z += 1;
    }
    let mut m = s;
    let mut c = powmod(z, q, p);
    let mut t = powmod(a, q, p);
    let mut r = powmod(a, (q + 1) / 2, p);
    while t != 1 {
        let mut i = 0;
        let mut tt = t;
        while tt != 1 {
            tt = mulmod(tt, tt, p);
            i += 1;
        }
        let b = powmod(c, 1 << (m - i - 1), p);
        m = i;
        c = mulmod(b, b, p);
        t = mulmod(t, c, p);
        r = mulmod(r, b, p);
    }
    Some(r)
}

/// Hensel lift: r with r^2 = d (mod p^t), p odd, p not dividing d,
/// starting from the root of d mod p with the smaller positive residue.
pub fn sqrt_mod_prime_power(d: u64, p: u64, t: u32) -> Option<BigInt> {
    assert!(p % 2 == 1 && t >= 1);
    if d % p == 0 {
        return None;
    }
    let r0 = sqrt_mod_prime(d % p, p)?;
    let r0 = r0.min(p - r0);
    let d = BigInt::from(d);
    let mut modulus = BigInt::from(p);
    let mut r = BigInt::from(r0);
    let mut k = 1u32;
    while k < t {
        let next = (&modulus * &modulus).min(BigInt::from(p).pow(t));
        // Newton step: r <- r - (r^2 - d) / (2r) mod next
        let inv = inv_mod_big(&(2 * &r), &next).expect("2r invertible");
        r = (&r - (&r * &r - &d) * inv).mod_floor(&next);
        k *= 2;
        modulus = next;
    }
    Some(r.mod_floor(&BigInt::from(p).pow(t)))
}

/// Natural log of a positive big integer, stable for any size.
pub fn ln_big(x: &BigInt) -> f64 {
    assert!(x.is_positive());
    if let Some(v) = x.to_f64() {
        if v.is_finite() {
            return v.ln();
        }
    }
    let bits = x.bits();
    let shift = bits - 53;
    let top = (x >> shift).to_f64().unwrap();
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// Smallest primitive root modulo the odd prime p.
pub fn primitive_root(p: u64) -> u64 {
    let phi = p - 1;
    let fac = factor(phi);
    'g: for g in 2..p {
        for &(q, _) in &fac {
            if powmod(g, phi / q, p) == 1 {
                continue 'g;
            }
        }
        return g;
    }
    unreachable!("no primitive root found");
}

/// Generator of (Z/p^t)^x for odd p, t >= 1.
pub fn primitive_root_mod_p_pow(p: u64, t: u32) -> BigInt {
    let g = primitive_root(p);
    if t == 1 {
        return BigInt::from(g);
    }
    // g generates mod p^t iff g^(p-1) != 1 mod p^2; otherwise g+p does.
    let p2 = BigInt::from(p * p);
    let gb = BigInt::from(g);
    if gb.modpow(&BigInt::from(p - 1), &p2) != 1.into() {
        gb
    } else {
        gb + p
    }
}
