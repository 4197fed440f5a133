//! Deciding whether two self-adjoint expansive maps have the same dense sets.
//!
//! Two positive expansive maps share their dense sets exactly when one is a
//! real power of the other; for general self-adjoint maps the test is applied
//! to the absolutized maps `A' = C |J| C^T`. A power relation forces the maps
//! to commute, so the decision reduces to a common eigenbasis and a per-vector
//! comparison of `ln |lambda_i^(2)| / ln |lambda_i^(1)|`.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::density::ExpansiveMap;
use crate::error::{Error, Result};
use crate::lattice::{certified_moduli, numtheory, IntMatrix};
use crate::matrix::{commutator, SymMatrix};
use crate::region::Region;
use crate::spectral::{self, CLUSTER_GAP};

/// Relative agreement required between per-vector exponents.
pub const EXPONENT_REL_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind")]
pub enum Obstruction {
    NotSimultaneouslyDiagonalizable,
    /// Basis vectors `i` and `l` (0-based) carry different exponents.
    ExponentMismatch { i: usize, l: usize, t_i: f64, t_l: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Certification {
    /// Decided by exact integer arithmetic.
    ExactInteger,
    Numeric,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EquivalenceVerdict {
    pub equivalent: bool,
    #[serde(rename = "t")]
    pub exponent_t: Option<f64>,
    /// Orthonormal common eigenbasis of the absolutized maps, one vector per entry.
    #[serde(rename = "basis")]
    pub common_basis: Option<Vec<Vec<f64>>>,
    pub obstruction: Option<Obstruction>,
    pub certification: Certification,
    /// `(|lambda_i^(1)|, |lambda_i^(2)|)` along each common basis vector.
    #[serde(skip)]
    pub moduli: Vec<(f64, f64)>,
}

impl EquivalenceVerdict {
    pub fn obstruction_text(&self) -> Option<String> {
        self.obstruction.as_ref().map(|o| match o {
            Obstruction::NotSimultaneouslyDiagonalizable => {
                "the absolutized maps have no common eigenbasis".to_string()
            }
            Obstruction::ExponentMismatch { i, l, t_i, t_l } => {
                format!("exponents differ along basis vectors {i} and {l}: {t_i} vs {t_l}")
            }
        })
    }
}

fn columns(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.column_iter().map(|c| c.iter().copied().collect()).collect()
}

fn rayleigh(a: &DMatrix<f64>, u: nalgebra::DVectorView<'_, f64>) -> f64 {
    u.dot(&(a * u))
}

/// An orthonormal basis of eigenvectors shared by `a1` and `a2`, or `None`
/// when the maps do not commute.
pub fn simultaneous_diagonalization(a1: &SymMatrix, a2: &SymMatrix, tol: f64) -> Result<Option<DMatrix<f64>>> {
    let d = a1.dim();
    if a2.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: a2.dim(),
        });
    }
    let (m1, m2) = (a1.as_matrix(), a2.as_matrix());
    let scale = m1.norm() * m2.norm();
    if commutator(m1, m2).norm() > tol.max(8.0 * f64::EPSILON) * scale {
        return Ok(None);
    }
    let dec = spectral::decompose(a1, tol)?;
    let mut basis = DMatrix::zeros(d, d);
    let mut col = 0;
    for i in 0..dec.distinct_eigenvalues.len() {
        let u = dec.eigenspace_basis(i);
        let b = u.transpose() * m2 * &u;
        let b = (&b + b.transpose()) * 0.5;
        let (values, v) = spectral::jacobi(&b, tol);
        let mut order: Vec<usize> = (0..values.len()).collect();
        order.sort_by(|&x, &y| values[x].total_cmp(&values[y]));
        let rotated = &u * v;
        for k in order {
            basis.set_column(col, &rotated.column(k));
            col += 1;
        }
    }
    let slack = 10.0 * tol.max(CLUSTER_GAP);
    for m in [m1, m2] {
        let bound = slack * m.norm();
        for u in basis.column_iter() {
            let lambda = rayleigh(m, u);
            if (m * u - u * lambda).norm() > bound {
                return Ok(None);
            }
        }
    }
    Ok(Some(basis))
}

/// Whether `ln b_i / ln a_i = ln b_l / ln a_l`, decided exactly when the
/// logarithms involved are rationally related; `None` when the answer hinges
/// on the independence of products of logarithms.
fn exact_ratio_equal(a_i: u64, b_i: u64, a_l: u64, b_l: u64) -> Option<bool> {
    let pp = |x: u64| numtheory::perfect_power(x).ok();
    let ((ai, nai), (bi, nbi), (al, nal), (bl, nbl)) = (pp(a_i)?, pp(b_i)?, pp(a_l)?, pp(b_l)?);
    // compare nbi*nal * ln(bi) ln(al) with nbl*nai * ln(bl) ln(ai);
    // logs of distinct non-powers are linearly independent over Q
    let mut lhs = [bi, al];
    let mut rhs = [bl, ai];
    lhs.sort_unstable();
    rhs.sort_unstable();
    if lhs == rhs {
        return Some(nbi as u64 * nal as u64 == nbl as u64 * nai as u64);
    }
    if lhs.iter().any(|x| rhs.contains(x)) {
        return Some(false);
    }
    None
}

/// Decides equivalence of two self-adjoint expansive maps.
pub fn decide_equivalence(a1: &SymMatrix, a2: &SymMatrix, tol: f64) -> Result<EquivalenceVerdict> {
    let p1 = spectral::absolutize(a1)?;
    let p2 = spectral::absolutize(a2)?;
    let Some(basis) = simultaneous_diagonalization(&p1, &p2, tol)? else {
        let exact = match (IntMatrix::from_sym(&p1), IntMatrix::from_sym(&p2)) {
            (Some(x), Some(y)) => &x * &y != &y * &x,
            _ => false,
        };
        return Ok(EquivalenceVerdict {
            equivalent: false,
            exponent_t: None,
            common_basis: None,
            obstruction: Some(Obstruction::NotSimultaneouslyDiagonalizable),
            certification: if exact {
                Certification::ExactInteger
            } else {
                Certification::Numeric
            },
            moduli: Vec::new(),
        });
    };

    let moduli: Vec<(f64, f64)> = basis
        .column_iter()
        .map(|u| (rayleigh(p1.as_matrix(), u), rayleigh(p2.as_matrix(), u)))
        .collect();
    let t: Vec<f64> = moduli.iter().map(|&(x, y)| y.ln() / x.ln()).collect();
    let rel = EXPONENT_REL_TOL.max(tol);
    let numeric_mismatch = (1..t.len()).find(|&l| (t[l] - t[0]).abs() > rel * t[0].abs().max(1.0));

    let exact = match (certified_moduli(a1, &p1, &basis), certified_moduli(a2, &p2, &basis)) {
        (Some(m1), Some(m2)) => (1..t.len())
            .map(|l| exact_ratio_equal(m1[0], m2[0], m1[l], m2[l]))
            .collect::<Option<Vec<bool>>>()
            .map(|eq| (eq, m1, m2)),
        _ => None,
    };
    let (mismatch, certification, rational_t) = match &exact {
        Some((eq, m1, m2)) => {
            let rational = numtheory::multiplicative_dependence(m1[0], m2[0])
                .ok()
                .flatten()
                .map(|(_, p, q)| q as f64 / p as f64);
            (eq.iter().position(|&e| !e).map(|k| k + 1), Certification::ExactInteger, rational)
        }
        None => (numeric_mismatch, Certification::Numeric, None),
    };
    let common_basis = Some(columns(&basis));
    Ok(match mismatch {
        Some(l) => EquivalenceVerdict {
            equivalent: false,
            exponent_t: None,
            common_basis,
            obstruction: Some(Obstruction::ExponentMismatch {
                i: 0,
                l,
                t_i: t[0],
                t_l: t[l],
            }),
            certification,
            moduli,
        },
        None => EquivalenceVerdict {
            equivalent: true,
            exponent_t: Some(rational_t.unwrap_or_else(|| t.iter().sum::<f64>() / t.len() as f64)),
            common_basis,
            obstruction: None,
            certification,
            moduli,
        },
    })
}

fn check_invertible(c: &DMatrix<f64>, d: usize) -> Result<()> {
    if c.nrows() != d || c.ncols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: c.nrows(),
        });
    }
    let det = c.determinant();
    let scale = c.norm().powi(d as i32).max(f64::MIN_POSITIVE);
    if !(det.abs() > 1e-12 * scale) {
        return Err(Error::SingularMatrix);
    }
    Ok(())
}

/// `C^{-1} E = {x : C x in E}`: the set whose density under `C^{-1} A C`
/// mirrors that of `E` under `A`.
pub fn conjugate_decision_transport(c: &DMatrix<f64>, a: &SymMatrix, set: &Region) -> Result<Region> {
    if set.dim() != a.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: set.dim(),
        });
    }
    check_invertible(c, a.dim())?;
    set.preimage(c)
}

/// `C^{-1} A C` as a (generally non-symmetric) expansive map.
pub fn conjugate_map(c: &DMatrix<f64>, a: &ExpansiveMap) -> Result<ExpansiveMap> {
    check_invertible(c, a.dim())?;
    let inv = c.clone().try_inverse().ok_or(Error::SingularMatrix)?;
    ExpansiveMap::new(inv * a.matrix() * c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::DEFAULT_TOL;

    fn diag(v: &[f64]) -> SymMatrix {
        SymMatrix::diagonal(v)
    }

    fn rotation(theta: f64) -> DMatrix<f64> {
        let (s, c) = theta.sin_cos();
        DMatrix::from_row_slice(2, 2, &[c, -s, s, c])
    }

    #[test]
    fn common_basis_examples() {
        let b = simultaneous_diagonalization(&diag(&[2.0, 4.0]), &diag(&[3.0, 9.0]), DEFAULT_TOL)
            .unwrap()
            .unwrap();
        assert_eq!(b, DMatrix::identity(2, 2));

        let a = SymMatrix::new(2, vec![3.0, 1.0, 1.0, 3.0]).unwrap();
        let a2 = spectral::power(&a, 2.0).unwrap();
        let b = simultaneous_diagonalization(&a, &a2, DEFAULT_TOL).unwrap().unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((b[(0, 0)].abs() - h).abs() < 1e-15 && (b[(0, 1)].abs() - h).abs() < 1e-15);
        assert!((b[(0, 0)] * b[(1, 0)] + h * h).abs() < 1e-15);

        let r = rotation(std::f64::consts::FRAC_PI_4);
        let rot = r.clone() * diag(&[2.0, 4.0]).as_matrix() * r.transpose();
        // [A, R A R^T] = [[0, 2], [2, 0]] up to sign
        let comm = commutator(diag(&[2.0, 4.0]).as_matrix(), &rot);
        assert!((comm[(0, 1)].abs() - 2.0).abs() < 1e-14);
        let rot = SymMatrix::from_dmatrix(rot, 1e-12).unwrap();
        assert!(simultaneous_diagonalization(&diag(&[2.0, 4.0]), &rot, DEFAULT_TOL)
            .unwrap()
            .is_none());
    }

    #[test]
    fn decision_examples() {
        let v = decide_equivalence(&diag(&[2.0, 4.0]), &diag(&[4.0, 16.0]), DEFAULT_TOL).unwrap();
        assert!(v.equivalent);
        assert_eq!(v.exponent_t, Some(2.0));
        assert_eq!(v.certification, Certification::ExactInteger);

        let v = decide_equivalence(&diag(&[2.0, 4.0]), &diag(&[2.0, 8.0]), DEFAULT_TOL).unwrap();
        assert!(!v.equivalent);
        match v.obstruction {
            Some(Obstruction::ExponentMismatch { i: 0, l: 1, t_i, t_l }) => {
                assert_eq!(t_i, 1.0);
                assert!((t_l - 1.5).abs() < 1e-15);
            }
            other => panic!("unexpected obstruction {other:?}"),
        }

        let a = SymMatrix::new(2, vec![3.0, 1.0, 1.0, 3.0]).unwrap();
        let v = decide_equivalence(&a, &a, DEFAULT_TOL).unwrap();
        assert_eq!(v.exponent_t, Some(1.0));

        let v = decide_equivalence(&diag(&[-2.0, 4.0]), &diag(&[4.0, 16.0]), DEFAULT_TOL).unwrap();
        assert!(v.equivalent);
        assert_eq!(v.exponent_t, Some(2.0));

        let err = decide_equivalence(&diag(&[1.0, 4.0]), &diag(&[4.0, 16.0]), DEFAULT_TOL).unwrap_err();
        assert_eq!(err.code(), "NotExpansive");
    }

    #[test]
    fn irrational_exponents() {
        // t = log 3 / log 2 on both axes, certified through common bases
        let v = decide_equivalence(&diag(&[2.0, 4.0]), &diag(&[3.0, 9.0]), DEFAULT_TOL).unwrap();
        assert!(v.equivalent);
        assert_eq!(v.certification, Certification::ExactInteger);
        assert!((v.exponent_t.unwrap() - 3f64.ln() / 2f64.ln()).abs() < 1e-15);
        // 2 vs 3 and 5 vs 7: only numerically separable
        let v = decide_equivalence(&diag(&[2.0, 5.0]), &diag(&[3.0, 7.0]), DEFAULT_TOL).unwrap();
        assert!(!v.equivalent);
        assert_eq!(v.certification, Certification::Numeric);
    }

    #[test]
    fn exact_ratio_rules() {
        assert_eq!(exact_ratio_equal(2, 3, 4, 9), Some(true));
        assert_eq!(exact_ratio_equal(2, 2, 4, 8), Some(false));
        assert_eq!(exact_ratio_equal(2, 3, 2, 5), Some(false));
        assert_eq!(exact_ratio_equal(2, 3, 5, 7), None);
        assert_eq!(exact_ratio_equal(4, 8, 9, 27), Some(true));
    }

    #[test]
    fn dilations_are_all_equivalent() {
        let v = decide_equivalence(&diag(&[2.0, 2.0, 2.0]), &diag(&[5.0, 5.0, 5.0]), DEFAULT_TOL).unwrap();
        assert!(v.equivalent);
        assert!((v.exponent_t.unwrap() - 5f64.ln() / 2f64.ln()).abs() < 1e-15);
        // [[0,2],[2,0]] absolutizes to 2I and so commutes with everything
        let flip = SymMatrix::new(2, vec![0.0, 2.0, 2.0, 0.0]).unwrap();
        let v = decide_equivalence(&flip, &diag(&[3.0, 3.0]), DEFAULT_TOL).unwrap();
        assert!(v.equivalent);
    }

    #[test]
    fn transport_examples() {
        let a = diag(&[2.0, 4.0]);
        let ball = Region::ball(2, 1.0).unwrap();
        let same = conjugate_decision_transport(&DMatrix::identity(2, 2), &a, &ball).unwrap();
        for p in [[0.5, 0.5], [0.9, 0.0], [0.8, 0.8]] {
            assert_eq!(same.contains(&p), ball.contains(&p));
        }
        let c = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0]);
        let ellipse = conjugate_decision_transport(&c, &a, &ball).unwrap();
        assert!(ellipse.contains(&[0.49, 0.0]) && !ellipse.contains(&[0.51, 0.0]));
        let singular = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert_eq!(
            conjugate_decision_transport(&singular, &a, &ball).unwrap_err(),
            Error::SingularMatrix
        );
    }
}
