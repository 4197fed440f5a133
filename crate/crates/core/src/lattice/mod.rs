//! Exact integer-matrix machinery: the lattice condition `A Z^d ⊆ Z^d`,
//! classification of expanding 2x2 dilations, and trivial equivalence.

pub mod classify;
pub mod intmat;
pub mod numtheory;
pub mod trivial;

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_bigint::BigInt;
use serde::Serialize;

pub use classify::{
    classify_det2, classify_det2_with, classify_int2, corollary_d_check, find_conjugator, lemma_g_factorization,
    minimal_root_of_identity, predicted_root_of_identity, scan, theorem_c_witness, theorem_f_factorization,
    verify_factorization, verify_theorem_e_row, Factorization, LatticeClassification, RootOfIdentity, ScanRow,
    SimilarityClass, WitnessSearch, DEFAULT_L_MAX, DEFAULT_SEARCH_BOUND, THEOREM_E_ROWS,
};
pub use intmat::IntMatrix;
pub use numtheory::{multiplicative_dependence, perfect_power};
pub use trivial::{trivially_equivalent, TrivialEquivalenceWitness};

use crate::equivalence::{decide_equivalence, Certification, EquivalenceVerdict};
use crate::error::{Error, Result};
use crate::matrix::{SymMatrix, DEFAULT_TOL};
use crate::spectral::{self, CLUSTER_GAP};

/// `A Z^d ⊆ Z^d` in the canonical basis: every entry is an integer.
pub fn check_lattice_condition(a: &SymMatrix) -> bool {
    a.is_exact()
}

fn round_close(x: f64) -> Option<i64> {
    let k = x.round();
    ((x - k).abs() <= 1e-6 * k.abs().max(1.0) && k.abs() < 9.0e15).then_some(k as i64)
}

/// Eigenvalue moduli of the integer map `a` along the columns of `basis`,
/// certified exactly: the spectrum of `a` is confirmed as a multiset of
/// integers through `rank(A - kI) = d - mult(k)`, and the moduli read off
/// `a_abs` along the basis must reproduce it. `None` when `a` is not an
/// integer map or its spectrum is not integral.
pub(crate) fn certified_moduli(a: &SymMatrix, a_abs: &SymMatrix, basis: &DMatrix<f64>) -> Option<Vec<u64>> {
    let m = IntMatrix::from_sym(a)?;
    let d = a.dim();
    let dec = spectral::decompose(a, DEFAULT_TOL).ok()?;
    let mut counts: BTreeMap<i64, usize> = BTreeMap::new();
    for &x in &dec.eigenvalues {
        *counts.entry(round_close(x)?).or_default() += 1;
    }
    for (&k, &c) in &counts {
        if m.sub_scalar(&BigInt::from(k)).rank() != d - c {
            return None;
        }
    }
    let mut expected: Vec<u64> = counts
        .iter()
        .flat_map(|(&k, &c)| std::iter::repeat(k.unsigned_abs()).take(c))
        .collect();
    let moduli = basis
        .column_iter()
        .map(|u| round_close(u.dot(&(a_abs.as_matrix() * u))).map(|k| k.unsigned_abs()))
        .collect::<Option<Vec<u64>>>()?;
    let mut sorted = moduli.clone();
    sorted.sort_unstable();
    expected.sort_unstable();
    (sorted == expected && moduli.iter().all(|&k| k >= 2)).then_some(moduli)
}

/// Membership in the equivalence class of the dyadic dilation `2I`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DyadicClass {
    pub dyadic: bool,
    /// `t` with `(2I)^t = A'`.
    pub exponent: Option<f64>,
    pub certification: Certification,
}

/// `A` is equivalent to `2I` exactly when `A' = cI`, i.e. when `A^2` is
/// scalar; then `t = log c / log 2`.
pub fn dyadic_class(a: &SymMatrix) -> Result<DyadicClass> {
    if !spectral::is_expansive(a) {
        let min_modulus = spectral::decompose(a, DEFAULT_TOL)?.min_modulus();
        return Err(Error::NotExpansive { min_modulus });
    }
    if let Some(m) = IntMatrix::from_sym(a) {
        let sq = (&m * &m).as_scalar();
        return Ok(DyadicClass {
            dyadic: sq.is_some(),
            // c^2 = s
            exponent: sq.map(|s| f64_of(&s).ln() / (2.0 * std::f64::consts::LN_2)),
            certification: Certification::ExactInteger,
        });
    }
    let dec = spectral::decompose(a, DEFAULT_TOL)?;
    let (lo, hi) = dec
        .eigenvalues
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), x| (lo.min(x.abs()), hi.max(x.abs())));
    let dyadic = hi - lo <= CLUSTER_GAP * hi;
    let c = dec.eigenvalues.iter().map(|x| x.abs()).sum::<f64>() / dec.eigenvalues.len() as f64;
    Ok(DyadicClass {
        dyadic,
        exponent: dyadic.then(|| c.log2()),
        certification: Certification::Numeric,
    })
}

fn f64_of(x: &BigInt) -> f64 {
    num_traits::ToPrimitive::to_f64(x).unwrap_or(f64::INFINITY)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "status")]
pub enum MraStatus {
    NotEquivalent { reason: String },
    EquivalentTrivially { witness: TrivialEquivalenceWitness },
    /// Equivalent, but no trivial witness exists; for two integer maps this
    /// would contradict the Four Exponentials Conjecture.
    EquivalentNumericOnly { note: String },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MraReport {
    #[serde(flatten)]
    pub status: MraStatus,
    pub lattice_ok: bool,
    pub equivalence: Option<EquivalenceVerdict>,
    pub trivial_witness: Option<TrivialEquivalenceWitness>,
    pub dyadic: Vec<Option<DyadicClass>>,
    pub classification: Vec<Option<LatticeClassification>>,
    pub roots_of_identity: Vec<Option<RootOfIdentity>>,
}

/// Combined equivalence and lattice report with default tolerances.
pub fn mra_equivalence_report(a1: &SymMatrix, a2: &SymMatrix) -> MraReport {
    mra_equivalence_report_with(a1, a2, DEFAULT_TOL, DEFAULT_SEARCH_BOUND, DEFAULT_L_MAX)
}

pub fn mra_equivalence_report_with(
    a1: &SymMatrix,
    a2: &SymMatrix,
    tol: f64,
    search_bound: i64,
    l_max: u32,
) -> MraReport {
    let lattice_ok = check_lattice_condition(a1) && check_lattice_condition(a2);
    let ints: Vec<Option<IntMatrix>> = [a1, a2].iter().map(|a| IntMatrix::from_sym(a)).collect();
    let classification = ints
        .iter()
        .map(|m| {
            m.as_ref()
                .filter(|m| m.dim() == 2)
                .and_then(|m| classify_int2(m, search_bound, l_max).ok())
        })
        .collect();
    let roots_of_identity = ints
        .iter()
        .map(|m| m.as_ref().and_then(|m| minimal_root_of_identity(m, l_max)))
        .collect();
    let dyadic = [a1, a2].iter().map(|a| dyadic_class(a).ok()).collect();

    let verdict = decide_equivalence(a1, a2, tol);
    let (status, trivial_witness) = match &verdict {
        Err(e) => (MraStatus::NotEquivalent { reason: e.to_string() }, None),
        Ok(v) if !v.equivalent => (
            MraStatus::NotEquivalent {
                reason: v.obstruction_text().unwrap_or_default(),
            },
            None,
        ),
        Ok(_) if !lattice_ok => (
            MraStatus::EquivalentNumericOnly {
                note: "equivalent, but the lattice condition fails, so no integer MRA is generated".into(),
            },
            None,
        ),
        Ok(v) => match trivially_equivalent(a1, a2, v.exponent_t.expect("equivalent verdicts carry t")) {
            Ok(Some(w)) => (MraStatus::EquivalentTrivially { witness: w.clone() }, Some(w)),
            Ok(None) => (
                MraStatus::EquivalentNumericOnly {
                    note: "no trivial witness; conditional on the Four Exponentials Conjecture this should not occur for integer-lattice pairs".into(),
                },
                None,
            ),
            Err(e) => (
                MraStatus::EquivalentNumericOnly {
                    note: format!("trivial equivalence not applicable: {e}"),
                },
                None,
            ),
        },
    };
    MraReport {
        status,
        lattice_ok,
        equivalence: verdict.ok(),
        trivial_witness,
        dyadic,
        classification,
        roots_of_identity,
    }
}
