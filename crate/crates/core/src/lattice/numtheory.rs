//! Factorization, perfect powers and multiplicative dependence of integers.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Pow, ToPrimitive};

use crate::error::{Error, Result};

const SMALL_PRIMES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut a: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1 % m;
    a %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = mul_mod(r, a, m);
        }
        a = mul_mod(a, a, m);
        e >>= 1;
    }
    r
}

/// Deterministic Miller-Rabin for 64-bit inputs.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in SMALL_PRIMES {
        if n % p == 0 {
            return n == p;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for a in SMALL_PRIMES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Pollard's rho with Floyd cycle detection; `n` odd composite.
fn pollard_rho(n: u64) -> u64 {
    let mut c = 1u64;
    loop {
        let f = |x: u64| (mul_mod(x, x, n) + c) % n;
        let (mut x, mut y, mut d) = (2u64, 2u64, 1u64);
        while d == 1 {
            x = f(x);
            y = f(f(y));
            d = x.abs_diff(y).gcd(&n);
        }
        if d != n {
            return d;
        }
        c += 1;
    }
}

fn factor_into(n: u64, out: &mut Vec<u64>) {
    if n == 1 {
        return;
    }
    if is_prime(n) {
        out.push(n);
        return;
    }
    let d = pollard_rho(n);
    factor_into(d, out);
    factor_into(n / d, out);
}

/// Prime factorization as ascending `(prime, exponent)` pairs.
pub fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut primes = Vec::new();
    if n == 0 {
        return Vec::new();
    }
    let mut p = 2u64;
    while p < 1000 && p * p <= n {
        while n % p == 0 {
            primes.push(p);
            n /= p;
        }
        p += if p == 2 { 1 } else { 2 };
    }
    factor_into(n, &mut primes);
    primes.sort_unstable();
    let mut out: Vec<(u64, u32)> = Vec::new();
    for q in primes {
        match out.last_mut() {
            Some((last, k)) if *last == q => *k += 1,
            _ => out.push((q, 1)),
        }
    }
    out
}

/// `(b, nu)` with `a = b^nu` and `nu` maximal.
pub fn perfect_power(a: u64) -> Result<(u64, u32)> {
    if a < 2 {
        return Err(Error::BadParameter(format!("perfect_power needs a >= 2, got {a}")));
    }
    let f = factorize(a);
    let nu = f.iter().fold(0u32, |g, &(_, k)| g.gcd(&k));
    let base = f.iter().map(|&(p, k)| p.pow(k / nu)).product();
    Ok((base, nu))
}

/// `(c, p, q)` with `a = c^p`, `b = c^q` and `c` not a perfect power, when
/// `log a` and `log b` are rationally dependent.
pub fn multiplicative_dependence(a: u64, b: u64) -> Result<Option<(u64, u32, u32)>> {
    let (ca, p) = perfect_power(a)?;
    let (cb, q) = perfect_power(b)?;
    Ok((ca == cb).then_some((ca, p, q)))
}

/// Exact `k`-th root of a non-negative integer.
pub fn exact_root(n: &BigInt, k: u32) -> Option<BigInt> {
    if k == 0 || n.sign() == num_bigint::Sign::Minus {
        return None;
    }
    let r = n.nth_root(k);
    (Pow::pow(&r, k) == *n).then_some(r)
}

/// `x^k` for a `u64` base, exactly.
pub fn big_pow(x: u64, k: u32) -> BigInt {
    Pow::pow(BigInt::from(x), k)
}

/// Greatest common divisor of a non-empty list.
pub fn gcd_all(v: &[u32]) -> u32 {
    v.iter().fold(0u32, |g, &x| g.gcd(&x))
}

pub(crate) fn to_u64(x: &BigInt) -> Option<u64> {
    x.to_u64()
}
