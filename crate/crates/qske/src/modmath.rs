//! Modular arithmetic and parameter generation for prime-order subgroups.
//!
//! Everything here works on machine words: moduli fit `u64` (generated
//! parameters default to `p < 2^31`) and products go through `u128`, so the
//! arithmetic is exact with no bignum dependency. The discrete-log solver is
//! classical baby-step giant-step with the subgroup order known, which is all
//! the legitimate receiver needs at this scale.

use std::collections::HashMap;
use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SplitMix64;

/// Default upper bound on the prime modulus produced by parameter search.
pub const DEFAULT_MODULUS_BOUND: u64 = 1 << 31;

/// Attempt budget for generator search before giving up.
const GENERATOR_RETRIES: u64 = 128;

/// Greatest common divisor. `gcd(0, 0)` is 0 by convention.
pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// `a * b mod m` without overflow. Word-sized operands (the common case at
/// desk scale) stay on the u64 divider.
#[inline]
pub(crate) fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    if (a | b) < 1 << 32 {
        a * b % m
    } else {
        (a as u128 * b as u128 % m as u128) as u64
    }
}

/// `base^exp mod m` assuming `m >= 2`. Square-and-multiply.
pub(crate) fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    debug_assert!(m >= 2);
    let mut acc = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// `base^exp mod m`, rejecting moduli below 2.
pub fn mod_exp(base: u64, exp: u64, m: u64) -> Result<u64> {
    if m < 2 {
        return Err(Error::InvalidModulus(m));
    }
    Ok(pow_mod(base, exp, m))
}

/// Multiplicative inverse of `a` modulo `m` via the extended Euclidean
/// algorithm. Fails with [`Error::NotInvertible`] when `gcd(a, m) != 1`.
pub fn mod_inverse(a: u64, m: u64) -> Result<u64> {
    if m < 2 {
        return Err(Error::InvalidModulus(m));
    }
    // Bezout coefficients stay below m in magnitude, so i64 covers every
    // modulus up to 2^63; fall back to i128 beyond that.
    if m < 1 << 63 {
        let (mut old_r, mut r) = ((a % m) as i64, m as i64);
        let (mut old_s, mut s) = (1i64, 0i64);
        while r != 0 {
            let quotient = old_r / r;
            (old_r, r) = (r, old_r - quotient * r);
            (old_s, s) = (s, old_s - quotient * s);
        }
        if old_r != 1 {
            return Err(Error::NotInvertible {
                value: a % m,
                modulus: m,
            });
        }
        return Ok(old_s.rem_euclid(m as i64) as u64);
    }
    let (mut old_r, mut r) = ((a % m) as i128, m as i128);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let quotient = old_r / r;
        (old_r, r) = (r, old_r - quotient * r);
        (old_s, s) = (s, old_s - quotient * s);
    }
    if old_r != 1 {
        return Err(Error::NotInvertible {
            value: a % m,
            modulus: m,
        });
    }
    Ok(old_s.rem_euclid(m as i128) as u64)
}

/// Deterministic Miller-Rabin primality test, valid for all `u64` inputs.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for small in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == small {
            return true;
        }
        if n.is_multiple_of(small) {
            return false;
        }
    }
    let trailing = (n - 1).trailing_zeros();
    let odd = (n - 1) >> trailing;
    // This witness set decides primality for every n < 3.3 * 10^24.
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod(a, odd, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..trailing {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Distinct prime factors of `n`, by trial division.
pub(crate) fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut factors = Vec::new();
    let mut d = 2u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            factors.push(d);
            while n.is_multiple_of(d) {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        factors.push(n);
    }
    factors
}

/// Exact multiplicative order of `g` modulo the prime `p`.
///
/// Starts from the group order `p - 1` and strips each prime factor while the
/// power still fixes 1.
pub fn element_order(g: u64, p: u64) -> Result<u64> {
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    let g = g % p;
    if g == 0 {
        return Err(Error::ValueOutOfGroup {
            value: 0,
            modulus: p,
        });
    }
    let mut order = p - 1;
    for factor in prime_factors(p - 1) {
        while order.is_multiple_of(factor) && pow_mod(g, order / factor, p) == 1 {
            order /= factor;
        }
    }
    Ok(order)
}

/// Public parameters of the base protocol: primes `p`, `q` with `q | p - 1`
/// and a generator `g` of the order-`q` subgroup of `Z_p^*`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Params {
    p: u64,
    q: u64,
    g: u64,
}

impl Params {
    /// Validates and constructs parameters.
    pub fn new(p: u64, q: u64, g: u64) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        if !is_prime(q) {
            return Err(Error::NotPrime(q));
        }
        if !(p - 1).is_multiple_of(q) {
            return Err(Error::NotSubgroupOrder { q, p });
        }
        // q is prime, so g != 1 with g^q = 1 pins the order to exactly q.
        if g <= 1 || g >= p || pow_mod(g, q, p) != 1 {
            return Err(Error::NotGenerator { g, q, p });
        }
        Ok(Self { p, q, g })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn g(&self) -> u64 {
        self.g
    }

    /// The subgroup `<g>` as a sorted list of its `q` elements.
    pub fn subgroup_elements(&self) -> Vec<u64> {
        let mut elems: Vec<u64> = (0..self.q).map(|k| pow_mod(self.g, k, self.p)).collect();
        elems.sort_unstable();
        elems
    }
}

/// Parameters for the general protocol variant: a prime `p`, an element `g`
/// of exact order `r`, and an index set of distinct units modulo `r`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneralParams {
    p: u64,
    g: u64,
    r: u64,
    index_set: Vec<u64>,
}

impl GeneralParams {
    /// Validates and constructs general parameters, computing `r` as the
    /// exact order of `g` modulo `p`.
    pub fn new(p: u64, g: u64, index_set: Vec<u64>) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        if g.is_multiple_of(p) {
            return Err(Error::ValueOutOfGroup {
                value: g % p,
                modulus: p,
            });
        }
        let r = element_order(g, p)?;
        if index_set.is_empty() {
            return Err(Error::EmptyIndexSet);
        }
        let mut seen = std::collections::HashSet::new();
        for &a in &index_set {
            if a == 0 || a >= r {
                return Err(Error::IndexOutOfRange { index: a, order: r });
            }
            if gcd(a, r) != 1 {
                return Err(Error::IndexNotCoprime { index: a, order: r });
            }
            if !seen.insert(a) {
                return Err(Error::DuplicateIndex(a));
            }
        }
        Ok(Self { p, g, r, index_set })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn g(&self) -> u64 {
        self.g
    }

    /// Exact order of `g` modulo `p`.
    pub fn r(&self) -> u64 {
        self.r
    }

    pub fn index_set(&self) -> &[u64] {
        &self.index_set
    }
}

/// Finds a generator of the order-`q` subgroup of `Z_p^*` by cofactor
/// exponentiation: `g = a^((p-1)/q)` for random `a`, retried while `g = 1`.
pub fn find_order_q_generator(p: u64, q: u64, rng: &mut SplitMix64) -> Result<u64> {
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    if !(p - 1).is_multiple_of(q) {
        return Err(Error::NotSubgroupOrder { q, p });
    }
    let cofactor = (p - 1) / q;
    for _ in 0..GENERATOR_RETRIES {
        let a = rng.next_in_range(2, p - 1);
        let g = pow_mod(a, cofactor, p);
        if g != 1 {
            return Ok(g);
        }
    }
    Err(Error::ExhaustedSearch {
        attempts: GENERATOR_RETRIES,
    })
}

/// Searches for valid parameters with `q` drawn from `q_range` and the
/// modulus capped at [`DEFAULT_MODULUS_BOUND`].
pub fn generate_params(q_range: RangeInclusive<u64>, rng: &mut SplitMix64) -> Result<Params> {
    generate_params_bounded(q_range, DEFAULT_MODULUS_BOUND, rng)
}

/// Parameter search with an explicit modulus bound.
///
/// The prime `q` is picked in seeded-random order from the primes in the
/// range; for each candidate the cofactor `h` is scanned upward so the
/// smallest admissible `p = h*q + 1` is used. Deterministic for a fixed seed.
pub fn generate_params_bounded(
    q_range: RangeInclusive<u64>,
    modulus_bound: u64,
    rng: &mut SplitMix64,
) -> Result<Params> {
    let mut candidates: Vec<u64> = q_range.filter(|&q| is_prime(q)).collect();
    let mut attempts = 0u64;
    rng.shuffle(&mut candidates);
    for q in candidates {
        let mut h = 1u64;
        while let Some(p) = h.checked_mul(q).and_then(|hq| hq.checked_add(1)) {
            if p > modulus_bound {
                break;
            }
            attempts += 1;
            if p > 2 && is_prime(p) {
                if let Ok(g) = find_order_q_generator(p, q, rng) {
                    return Params::new(p, q, g);
                }
            }
            h += 1;
        }
    }
    Err(Error::ExhaustedSearch { attempts })
}

/// Baby-step giant-step discrete logarithm in the subgroup generated by `g`.
///
/// Returns the unique `e` in `[0, order)` with `g^e = target (mod p)`, or
/// [`Error::NoSolution`] when `target` is not in `<g>`. Runs in `O(sqrt(order))`
/// time and memory.
pub fn discrete_log(target: u64, g: u64, p: u64, order: u64) -> Result<u64> {
    if p < 2 {
        return Err(Error::InvalidModulus(p));
    }
    let target = target % p;
    let no_solution = || Error::NoSolution {
        target,
        base: g,
        modulus: p,
    };
    if target == 0 {
        return Err(no_solution());
    }
    let m = (order as f64).sqrt().ceil() as u64;
    let m = m.max(1);

    // A flat table beats hashing while the baby-step list stays tiny.
    let mut flat: Vec<(u64, u64)> = Vec::new();
    let mut hashed: HashMap<u64, u64> = HashMap::new();
    let use_flat = m <= 32;
    if use_flat {
        flat.reserve(m as usize);
    } else {
        hashed.reserve(m as usize);
    }
    let mut cur = 1u64;
    for j in 0..m {
        if use_flat {
            if !flat.iter().any(|&(v, _)| v == cur) {
                flat.push((cur, j));
            }
        } else {
            hashed.entry(cur).or_insert(j);
        }
        cur = mul_mod(cur, g % p, p);
    }
    let lookup = |v: u64| -> Option<u64> {
        if use_flat {
            flat.iter().find(|&&(k, _)| k == v).map(|&(_, j)| j)
        } else {
            hashed.get(&v).copied()
        }
    };

    // gamma = target * g^(-m*i); scan giant steps until a baby step matches.
    let giant = mod_inverse(pow_mod(g, m, p), p)?;
    let mut gamma = target;
    let mut i = 0u64;
    while i * m <= order {
        if let Some(j) = lookup(gamma) {
            let e = (i * m + j) % order;
            if pow_mod(g, e, p) == target {
                return Ok(e);
            }
        }
        gamma = mul_mod(gamma, giant, p);
        i += 1;
    }
    Err(no_solution())
}
