//! Trivial equivalence: power relations between integer spectra that are
//! explained by rational exponents or by common logarithm bases.

use num_integer::Integer;
use serde::Serialize;

use super::numtheory::{big_pow, exact_root, gcd_all, multiplicative_dependence, perfect_power};
use super::certified_moduli;
use crate::equivalence::{simultaneous_diagonalization, EXPONENT_REL_TOL};
use crate::error::{Error, Result};
use crate::matrix::{SymMatrix, DEFAULT_TOL};
use crate::spectral;

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind")]
pub enum TrivialEquivalenceWitness {
    /// `t = p/q` with `|lambda_j^(1)| = bases_j^q` and `|lambda_j^(2)| = bases_j^p`.
    RationalExponent { p: u32, q: u32, bases: Vec<u64> },
    /// `|lambda_j^(1)| = a^{n_j}`, `|lambda_j^(2)| = b^{m_j}`, `q = gcd(n)` and
    /// `t = m/q * log b / log a`.
    CommonBase {
        a: u64,
        b: u64,
        n: Vec<u32>,
        m_exponents: Vec<u32>,
        q: u32,
        m: u64,
        t: f64,
    },
}

impl TrivialEquivalenceWitness {
    pub fn exponent(&self) -> f64 {
        match self {
            TrivialEquivalenceWitness::RationalExponent { p, q, .. } => *p as f64 / *q as f64,
            TrivialEquivalenceWitness::CommonBase { t, .. } => *t,
        }
    }

    /// Re-checks the witness against the moduli by exact powers. The moduli
    /// are listed along the common eigenbasis, i.e. ascending in the first map.
    pub fn verify(&self, moduli1: &[u64], moduli2: &[u64]) -> bool {
        if moduli1.len() != moduli2.len() {
            return false;
        }
        match self {
            TrivialEquivalenceWitness::RationalExponent { p, q, bases } => {
                bases.len() == moduli1.len()
                    && bases.iter().zip(moduli1.iter().zip(moduli2)).all(|(&a, (&l1, &l2))| {
                        big_pow(a, *q) == l1.into() && big_pow(a, *p) == l2.into()
                    })
            }
            TrivialEquivalenceWitness::CommonBase {
                a,
                b,
                n,
                m_exponents,
                q,
                m,
                ..
            } => {
                n.len() == moduli1.len()
                    && m_exponents.len() == moduli2.len()
                    && gcd_all(n) == *q
                    && n.iter().zip(m_exponents).all(|(&nk, &mk)| (*m as u128) * nk as u128 == mk as u128 * *q as u128)
                    && n.iter().zip(moduli1).all(|(&k, &l)| big_pow(*a, k) == l.into())
                    && m_exponents.iter().zip(moduli2).all(|(&k, &l)| big_pow(*b, k) == l.into())
            }
        }
    }
}

fn rational_exponent(m1: &[u64], m2: &[u64]) -> Option<TrivialEquivalenceWitness> {
    let mut ratio: Option<(u32, u32)> = None;
    for (&x, &y) in m1.iter().zip(m2) {
        // x = c^u, y = c^v, so t = v/u
        let (_, u, v) = multiplicative_dependence(x, y).ok()??;
        let g = u.gcd(&v);
        let r = (v / g, u / g);
        match ratio {
            None => ratio = Some(r),
            Some(prev) if prev != r => return None,
            _ => {}
        }
    }
    let (p, q) = ratio?;
    let bases = m1
        .iter()
        .map(|&x| exact_root(&x.into(), q).and_then(|r| super::numtheory::to_u64(&r)))
        .collect::<Option<Vec<u64>>>()?;
    let w = TrivialEquivalenceWitness::RationalExponent { p, q, bases };
    w.verify(m1, m2).then_some(w)
}

fn common_base(m1: &[u64], m2: &[u64]) -> Option<TrivialEquivalenceWitness> {
    let split = |v: &[u64]| -> Option<(u64, Vec<u32>)> {
        let pp = v.iter().map(|&x| perfect_power(x).ok()).collect::<Option<Vec<_>>>()?;
        let base = pp[0].0;
        pp.iter().all(|&(b, _)| b == base).then(|| (base, pp.iter().map(|&(_, k)| k).collect()))
    };
    let (a, n) = split(m1)?;
    let (b, m_exponents) = split(m2)?;
    // t n_k log a = m_k log b forces m_k / n_k to be constant
    let proportional = n
        .iter()
        .zip(&m_exponents)
        .all(|(&nk, &mk)| mk as u64 * n[0] as u64 == m_exponents[0] as u64 * nk as u64);
    if !proportional {
        return None;
    }
    let q = gcd_all(&n);
    let num = q as u64 * m_exponents[0] as u64;
    if num % n[0] as u64 != 0 {
        return None;
    }
    let m = num / n[0] as u64;
    let t = m as f64 / q as f64 * (b as f64).ln() / (a as f64).ln();
    let w = TrivialEquivalenceWitness::CommonBase {
        a,
        b,
        n,
        m_exponents,
        q,
        m,
        t,
    };
    w.verify(m1, m2).then_some(w)
}

/// Searches both kinds of trivial equivalence (rational exponent first) for
/// two integer maps whose eigenvalue moduli are natural numbers, given the
/// exponent `t` of their equivalence.
pub fn trivially_equivalent(a1: &SymMatrix, a2: &SymMatrix, t: f64) -> Result<Option<TrivialEquivalenceWitness>> {
    if !(a1.is_exact() && a2.is_exact()) {
        return Err(Error::PreconditionViolated("both maps must have integer entries".into()));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::PreconditionViolated(format!("exponent must be positive, got {t}")));
    }
    let p1 = spectral::absolutize(a1)?;
    let p2 = spectral::absolutize(a2)?;
    let basis = simultaneous_diagonalization(&p1, &p2, DEFAULT_TOL)?
        .ok_or_else(|| Error::PreconditionViolated("the maps share no eigenbasis".into()))?;
    let (Some(m1), Some(m2)) = (certified_moduli(a1, &p1, &basis), certified_moduli(a2, &p2, &basis)) else {
        return Err(Error::PreconditionViolated(
            "eigenvalue moduli must be natural numbers".into(),
        ));
    };
    let agrees = |w: &TrivialEquivalenceWitness| (w.exponent() - t).abs() <= EXPONENT_REL_TOL * t.max(1.0);
    if let Some(w) = rational_exponent(&m1, &m2).filter(agrees) {
        return Ok(Some(w));
    }
    Ok(common_base(&m1, &m2).filter(agrees))
}
