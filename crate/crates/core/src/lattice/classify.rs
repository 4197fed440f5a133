//! Integral similarity classes of expanding 2x2 integer matrices with
//! `|det| = 2`, roots of scalar matrices, and unimodular factorizations.

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::intmat::{serialize_bigint, IntMatrix};
use super::numtheory::exact_root;
use crate::error::{Error, Result};

pub const DEFAULT_SEARCH_BOUND: i64 = 10;
pub const DEFAULT_L_MAX: u32 = 12;
/// Exponents `l` for which a positive-determinant map with non-real
/// eigenvalues can have a scalar power.
pub const THEOREM_E_ROWS: [u32; 5] = [3, 4, 6, 8, 12];

/// The six representatives for `|det| = 2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SimilarityClass {
    A1,
    A2,
    #[serde(rename = "+A3")]
    PlusA3,
    #[serde(rename = "-A3")]
    MinusA3,
    #[serde(rename = "+A4")]
    PlusA4,
    #[serde(rename = "-A4")]
    MinusA4,
}

impl SimilarityClass {
    pub const ALL: [SimilarityClass; 6] = [
        SimilarityClass::A1,
        SimilarityClass::A2,
        SimilarityClass::PlusA3,
        SimilarityClass::MinusA3,
        SimilarityClass::PlusA4,
        SimilarityClass::MinusA4,
    ];

    pub fn representative(self) -> IntMatrix {
        match self {
            SimilarityClass::A1 => IntMatrix::m2(0, 2, 1, 0),
            SimilarityClass::A2 => IntMatrix::m2(0, 2, -1, 0),
            SimilarityClass::PlusA3 => IntMatrix::m2(1, 1, -1, 1),
            SimilarityClass::MinusA3 => IntMatrix::m2(-1, -1, 1, -1),
            SimilarityClass::PlusA4 => IntMatrix::m2(0, 2, -1, 1),
            SimilarityClass::MinusA4 => IntMatrix::m2(0, -2, 1, -1),
        }
    }

    /// Class of an expanding matrix from `(det, trace)`, which separate the
    /// six representatives.
    pub fn from_invariants(det: i64, trace: i64) -> Option<Self> {
        Some(match (det, trace) {
            (-2, 0) => SimilarityClass::A1,
            (2, 0) => SimilarityClass::A2,
            (2, 2) => SimilarityClass::PlusA3,
            (2, -2) => SimilarityClass::MinusA3,
            (2, 1) => SimilarityClass::PlusA4,
            (2, -1) => SimilarityClass::MinusA4,
            _ => return None,
        })
    }

    pub fn label(self) -> &'static str {
        match self {
            SimilarityClass::A1 => "A1",
            SimilarityClass::A2 => "A2",
            SimilarityClass::PlusA3 => "+A3",
            SimilarityClass::MinusA3 => "-A3",
            SimilarityClass::PlusA4 => "+A4",
            SimilarityClass::MinusA4 => "-A4",
        }
    }
}

/// Outcome of the bounded conjugator search.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum WitnessSearch {
    Found,
    WitnessNotFound { bound: i64 },
    NotSearched,
}

/// `(l, n)` with `M^l = n I`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RootOfIdentity {
    pub l: u32,
    #[serde(serialize_with = "serialize_bigint")]
    pub n: BigInt,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LatticeClassification {
    #[serde(serialize_with = "serialize_bigint")]
    pub det: BigInt,
    #[serde(serialize_with = "serialize_bigint")]
    pub trace: BigInt,
    pub expanding: bool,
    pub similarity_class: Option<SimilarityClass>,
    /// `C` with `C^{-1} R C = M` for the class representative `R`.
    pub conjugator: Option<IntMatrix>,
    pub witness: WitnessSearch,
    pub root_of_identity: Option<RootOfIdentity>,
}

fn check_2x2(m: &IntMatrix) -> Result<()> {
    if m.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: m.dim(),
        });
    }
    Ok(())
}

/// Points of `[-n, n]^2` in order of increasing max-norm.
fn shells(n: i64) -> impl Iterator<Item = (i64, i64)> {
    (0..=n).flat_map(|r| {
        (-r..=r).flat_map(move |x| (-r..=r).map(move |y| (x, y))).filter(move |&(x, y)| x.abs().max(y.abs()) == r)
    })
}

/// Unimodular `C` with entries in `[-bound, bound]` and `C^{-1} from C = to`.
pub fn find_conjugator(from: &IntMatrix, to: &IntMatrix, bound: i64) -> Option<IntMatrix> {
    if from.dim() != 2 || to.dim() != 2 || from.trace() != to.trace() || from.det() != to.det() {
        return None;
    }
    if from == to {
        return Some(IntMatrix::identity(2));
    }
    let f = from.to_i64()?;
    let t = to.to_i64()?;
    let accept = |c: IntMatrix| -> Option<IntMatrix> {
        (c.is_unimodular() && &*from * &c == &c * to).then_some(c)
    };
    // from C = C to, read column by column:
    //   from c1 = t11 c1 + t21 c2,  from c2 = t12 c1 + t22 c2
    if t[2] != 0 {
        for (x, y) in shells(bound) {
            let rx = f[0] * x + f[1] * y - t[0] * x;
            let ry = f[2] * x + f[3] * y - t[0] * y;
            if rx % t[2] != 0 || ry % t[2] != 0 {
                continue;
            }
            let (u, v) = (rx / t[2], ry / t[2]);
            if u.abs() > bound || v.abs() > bound {
                continue;
            }
            if let Some(c) = accept(IntMatrix::m2(x, u, y, v)) {
                return Some(c);
            }
        }
        return None;
    }
    for (x, y) in shells(bound) {
        for (u, v) in shells(bound) {
            if x * v - u * y == 0 {
                continue;
            }
            if let Some(c) = accept(IntMatrix::m2(x, u, y, v)) {
                return Some(c);
            }
        }
    }
    None
}

fn invariants(m: &IntMatrix) -> Result<(i64, i64)> {
    match (m.det().to_i64(), m.trace().to_i64()) {
        (Some(d), Some(t)) => Ok((d, t)),
        _ => Err(Error::PreconditionViolated("entries too large".into())),
    }
}

/// Classifies an expanding 2x2 integer matrix with `|det| = 2`.
pub fn classify_det2(m: &IntMatrix, bound: i64) -> Result<LatticeClassification> {
    classify_det2_with(m, bound, DEFAULT_L_MAX)
}

pub fn classify_det2_with(m: &IntMatrix, bound: i64, l_max: u32) -> Result<LatticeClassification> {
    check_2x2(m)?;
    if !m.is_expanding()? {
        return Err(Error::NotExpanding);
    }
    let (det, trace) = invariants(m)?;
    if det.abs() != 2 {
        return Err(Error::WrongDeterminant(det));
    }
    let class = SimilarityClass::from_invariants(det, trace)
        .expect("det and trace of an expanding |det| = 2 matrix are tabulated");
    let conjugator = find_conjugator(&class.representative(), m, bound);
    Ok(LatticeClassification {
        det: det.into(),
        trace: trace.into(),
        expanding: true,
        similarity_class: Some(class),
        witness: if conjugator.is_some() {
            WitnessSearch::Found
        } else {
            WitnessSearch::WitnessNotFound { bound }
        },
        conjugator,
        root_of_identity: minimal_root_of_identity(m, l_max),
    })
}

/// Invariants of any 2x2 integer matrix; class and conjugator only when
/// the matrix is expanding with `|det| = 2`.
pub fn classify_int2(m: &IntMatrix, bound: i64, l_max: u32) -> Result<LatticeClassification> {
    check_2x2(m)?;
    match classify_det2_with(m, bound, l_max) {
        Ok(c) => Ok(c),
        Err(Error::NotExpanding) | Err(Error::WrongDeterminant(_)) => Ok(LatticeClassification {
            det: m.det(),
            trace: m.trace(),
            expanding: m.is_expanding()?,
            similarity_class: None,
            conjugator: None,
            witness: WitnessSearch::NotSearched,
            root_of_identity: minimal_root_of_identity(m, l_max),
        }),
        Err(e) => Err(e),
    }
}

/// Smallest `l <= l_max` with `M^l = n I` for a positive integer `n`.
pub fn minimal_root_of_identity(m: &IntMatrix, l_max: u32) -> Option<RootOfIdentity> {
    let mut p = m.clone();
    for l in 1..=l_max {
        if l > 1 {
            p = &p * m;
        }
        if let Some(n) = p.as_scalar() {
            if n.is_positive() {
                return Some(RootOfIdentity { l, n });
            }
        }
    }
    None
}

/// Checks the trace/determinant condition of the table row for `M^l = n I`.
///
/// Returns `Ok(false)` when `M` is not a 2x2 matrix with positive
/// determinant and non-real eigenvalues, since the table only speaks about
/// those.
pub fn verify_theorem_e_row(m: &IntMatrix, l: u32, n: &BigInt) -> Result<bool> {
    if !THEOREM_E_ROWS.contains(&l) {
        return Err(Error::BadRow(l));
    }
    check_2x2(m)?;
    let det = m.det();
    let tr = m.trace();
    if !det.is_positive() || &tr * &tr - 4 * &det >= BigInt::zero() {
        return Ok(false);
    }
    let root = |k: u32| exact_root(n, k);
    Ok(match l {
        3 => match root(3) {
            Some(r) => tr == -&r && det == &r * &r,
            None => false,
        },
        4 => match root(2) {
            Some(r) => tr.is_zero() && det == r,
            None => false,
        },
        6 => match root(6) {
            Some(r) => tr == r && det == &r * &r,
            None => false,
        },
        8 => match root(4) {
            Some(r) => &tr * &tr == 2 * &r && det == r,
            None => false,
        },
        12 => match root(6) {
            Some(r) => &tr * &tr == 3 * &r && det == r,
            None => false,
        },
        _ => unreachable!(),
    })
}

/// For an expanding 2x2 matrix with negative determinant: `M` has a scalar
/// power exactly when its trace vanishes, and then `M^2 = -det M I`.
pub fn corollary_d_check(m: &IntMatrix) -> Result<bool> {
    check_2x2(m)?;
    let det = m.det();
    if !det.is_negative() {
        return Err(Error::WrongSign);
    }
    if !m.is_expanding()? {
        return Err(Error::NotExpanding);
    }
    if !m.trace().is_zero() {
        return Ok(false);
    }
    Ok(m.pow(2) == IntMatrix::scalar(2, -det))
}

/// `(l, n)` predicted from trace and determinant alone: the table rows for
/// non-real eigenvalues, the negative-determinant rule, and the scalar
/// matrices `cI`, which the classification leaves out as trivial.
pub fn predicted_root_of_identity(m: &IntMatrix) -> Result<Option<RootOfIdentity>> {
    check_2x2(m)?;
    if !m.is_expanding()? {
        return Ok(None);
    }
    if let Some(c) = m.as_scalar() {
        return Ok(Some(if c.is_positive() {
            RootOfIdentity { l: 1, n: c }
        } else {
            RootOfIdentity { l: 2, n: &c * &c }
        }));
    }
    let det = m.det();
    if det.is_negative() {
        return Ok(corollary_d_check(m)?.then(|| RootOfIdentity { l: 2, n: -det }));
    }
    for l in THEOREM_E_ROWS {
        // |lambda|^2 = det, so n = det^{l/2}
        let n = if l % 2 == 0 {
            num_traits::Pow::pow(&det, l / 2)
        } else {
            match exact_root(&det, 2) {
                Some(r) => num_traits::Pow::pow(&r, l),
                None => continue,
            }
        };
        if verify_theorem_e_row(m, l, &n)? {
            return Ok(Some(RootOfIdentity { l, n }));
        }
    }
    Ok(None)
}

/// Companion matrix `[[0, -p], [1, s]]` of `x^2 - s x + p` with distinct
/// roots of modulus `n^{1/l} > 1` satisfying `M^l = n I`, if one exists.
pub fn theorem_c_witness(l: u32, n: u64) -> Option<IntMatrix> {
    if l == 0 || n < 2 {
        return None;
    }
    // |p| = |lambda_1 lambda_2| = n^{2/l}
    let n_sq = BigInt::from(n) * BigInt::from(n);
    let m = exact_root(&n_sq, l)?.to_i64()?;
    let target = IntMatrix::scalar(2, BigInt::from(n));
    for p in [m, -m] {
        let s_max = (4 * p.abs()).isqrt_floor();
        for k in 0..=s_max {
            for s in if k == 0 { vec![0] } else { vec![k, -k] } {
                if s * s - 4 * p == 0 {
                    continue;
                }
                let c = IntMatrix::m2(0, -p, 1, s);
                if c.is_expanding().ok()? && c.pow(l) == target {
                    return Some(c);
                }
            }
        }
    }
    None
}

trait IsqrtFloor {
    fn isqrt_floor(self) -> i64;
}

impl IsqrtFloor for i64 {
    fn isqrt_floor(self) -> i64 {
        crate::spectral::isqrt_i128(self as i128) as i64
    }
}

fn permutation_of(p: &IntMatrix) -> Option<Vec<usize>> {
    let n = p.dim();
    let mut pi = vec![usize::MAX; n];
    for (r, slot) in pi.iter_mut().enumerate() {
        let ones: Vec<usize> = (0..n).filter(|&c| !p.get(r, c).is_zero()).collect();
        if ones.len() != 1 || *p.get(r, ones[0]) != BigInt::from(1) {
            return None;
        }
        *slot = ones[0];
    }
    let mut seen = vec![false; n];
    for &c in &pi {
        if std::mem::replace(&mut seen[c], true) {
            return None;
        }
    }
    Some(pi)
}

/// Checks `M = A D P A^{-1}` exactly (as `M A = A D P`) together with
/// `|d_i d_{pi(i)} ... d_{pi^{d-1}(i)}| > 1` for every `i`, where
/// `(P x)_i = x_{pi(i)}`.
pub fn verify_factorization(m: &IntMatrix, a: &IntMatrix, d: &IntMatrix, p: &IntMatrix) -> Result<bool> {
    let n = m.dim();
    for other in [a, d, p] {
        if other.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: other.dim(),
            });
        }
    }
    if !a.is_unimodular() {
        return Err(Error::NotUnimodular);
    }
    if (0..n).any(|r| (0..n).any(|c| r != c && !d.get(r, c).is_zero())) {
        return Err(Error::PreconditionViolated("D must be diagonal".into()));
    }
    let pi = permutation_of(p).ok_or_else(|| Error::PreconditionViolated("P must be a permutation matrix".into()))?;
    if m * a != &(a * d) * p {
        return Ok(false);
    }
    Ok((0..n).all(|i| {
        let mut k = i;
        let mut prod = BigInt::from(1);
        for _ in 0..n {
            prod *= d.get(k, k);
            k = pi[k];
        }
        prod.abs() > BigInt::from(1)
    }))
}

/// A verified factorization `M = A D P A^{-1}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Factorization {
    pub a: IntMatrix,
    pub d: IntMatrix,
    pub p: IntMatrix,
}

fn search_factorization(m: &IntMatrix, candidates: &[(IntMatrix, IntMatrix)], bound: i64) -> Option<Factorization> {
    for (d, p) in candidates {
        let target = d * p;
        // A^{-1} M A = D P
        if let Some(a) = find_conjugator(m, &target, bound) {
            if verify_factorization(m, &a, d, p).unwrap_or(false) {
                return Some(Factorization {
                    a,
                    d: d.clone(),
                    p: p.clone(),
                });
            }
        }
    }
    None
}

fn swap2() -> IntMatrix {
    IntMatrix::m2(0, 1, 1, 0)
}

/// Bounded search for `M = A S Pi A^{-1}` with `S = diag(+-2, +-1)` and
/// `Pi` the 2-cycle, for a 2x2 matrix with `M^2 = +-2 I`.
pub fn lemma_g_factorization(m: &IntMatrix, bound: i64) -> Result<Option<Factorization>> {
    check_2x2(m)?;
    match m.pow(2).as_scalar() {
        Some(c) if c.abs() == BigInt::from(2) => {}
        _ => return Err(Error::PreconditionViolated("M^2 must be +-2 I".into())),
    }
    let candidates: Vec<_> = [(2, 1), (2, -1), (-2, 1), (-2, -1)]
        .into_iter()
        .map(|(s1, s2)| (IntMatrix::diagonal(&[s1, s2]), swap2()))
        .collect();
    Ok(search_factorization(m, &candidates, bound))
}

/// Bounded search for `M = A D P A^{-1}` for an expanding 2x2 matrix with
/// `det M = -2^s`, `s in {1, 2, 3}`, trying diagonal `D` with `|d1 d2| = |det|`
/// and `P` the identity or the 2-cycle.
pub fn theorem_f_factorization(m: &IntMatrix, bound: i64) -> Result<Option<Factorization>> {
    check_2x2(m)?;
    let (det, _) = invariants(m)?;
    if ![-2, -4, -8].contains(&det) {
        return Err(Error::PreconditionViolated(format!("det must be -2, -4 or -8, got {det}")));
    }
    if !m.is_expanding()? {
        return Err(Error::NotExpanding);
    }
    let mut candidates = Vec::new();
    let abs = det.abs();
    for d1 in (1..=abs).filter(|d| abs % d == 0) {
        let d2 = abs / d1;
        for (s1, s2) in [(1, 1), (1, -1), (-1, 1), (-1, -1)] {
            let d = IntMatrix::diagonal(&[s1 * d1, s2 * d2]);
            candidates.push((d.clone(), IntMatrix::identity(2)));
            candidates.push((d, swap2()));
        }
    }
    Ok(search_factorization(m, &candidates, bound))
}

/// One row of an exhaustive scan.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanRow {
    pub entries: [i64; 4],
    pub det: i64,
    pub trace: i64,
    pub class: Option<SimilarityClass>,
    pub conjugator_found: Option<bool>,
    pub l: Option<u32>,
    #[serde(serialize_with = "serialize_opt_bigint")]
    pub n: Option<BigInt>,
}

fn serialize_opt_bigint<S: serde::Serializer>(v: &Option<BigInt>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(x) => serialize_bigint(x, s),
        None => s.serialize_none(),
    }
}

/// Every expanding 2x2 integer matrix with entries in `[-entry_bound, entry_bound]`,
/// in lexicographic order of `(a, b, c, d)`.
pub fn expanding_matrices(entry_bound: i64) -> Vec<IntMatrix> {
    let r = -entry_bound..=entry_bound;
    let mut out = Vec::new();
    for a in r.clone() {
        for b in r.clone() {
            for c in r.clone() {
                for d in r.clone() {
                    let m = IntMatrix::m2(a, b, c, d);
                    if m.is_expanding().unwrap_or(false) {
                        out.push(m);
                    }
                }
            }
        }
    }
    out
}

/// Classifies every expanding matrix of the box; the order of the rows does
/// not depend on the thread count.
pub fn scan(entry_bound: i64, search_bound: i64, l_max: u32) -> Vec<ScanRow> {
    expanding_matrices(entry_bound)
        .par_iter()
        .map(|m| {
            let c = classify_int2(m, search_bound, l_max).expect("2x2 input");
            let e = m.to_i64().expect("small entries");
            ScanRow {
                entries: [e[0], e[1], e[2], e[3]],
                det: c.det.to_i64().expect("small"),
                trace: c.trace.to_i64().expect("small"),
                class: c.similarity_class,
                conjugator_found: c.similarity_class.map(|_| c.conjugator.is_some()),
                l: c.root_of_identity.as_ref().map(|r| r.l),
                n: c.root_of_identity.map(|r| r.n),
            }
        })
        .collect()
}
