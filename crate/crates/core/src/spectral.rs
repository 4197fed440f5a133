//! Symmetric eigendecomposition and the functional calculus built on it.
//!
//! A self-adjoint map splits `R^d` into mutually orthogonal eigenspaces
//! `U_1 (+) ... (+) U_k` on which it acts as a homothety. Fractional powers
//! and the absolute-value map are defined by acting on the eigenvalues only.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::matrix::{SymMatrix, DEFAULT_TOL};

/// Eigenvalues closer than this (relative to the spectral radius) are
/// reported as one distinct eigenvalue.
pub const CLUSTER_GAP: f64 = 1e-8;

const MAX_SWEEPS: usize = 100;

/// Orthonormal eigendecomposition `A = C J C^T` of a symmetric matrix.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    /// One eigenvalue per basis column, ascending.
    pub eigenvalues: Vec<f64>,
    /// Cluster representatives `beta_1 < ... < beta_k`.
    pub distinct_eigenvalues: Vec<f64>,
    pub multiplicities: Vec<usize>,
    /// Orthonormal eigenvectors as columns, grouped by eigenspace.
    pub basis: DMatrix<f64>,
    /// Orthogonal projector onto each eigenspace.
    pub eigenspaces: Vec<DMatrix<f64>>,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.basis.nrows()
    }

    /// Column range of `basis` spanning the `i`-th eigenspace.
    pub fn eigenspace_columns(&self, i: usize) -> std::ops::Range<usize> {
        let start: usize = self.multiplicities[..i].iter().sum();
        start..start + self.multiplicities[i]
    }

    /// Orthonormal basis of the `i`-th eigenspace, one vector per column.
    pub fn eigenspace_basis(&self, i: usize) -> DMatrix<f64> {
        let cols = self.eigenspace_columns(i);
        self.basis.columns(cols.start, cols.len()).into_owned()
    }

    /// `C f(J) C^T`.
    pub fn map_eigenvalues(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let fj = DVector::from_iterator(self.eigenvalues.len(), self.eigenvalues.iter().map(|&x| f(x)));
        let scaled = DMatrix::from_fn(self.dim(), self.dim(), |r, c| self.basis[(r, c)] * fj[c]);
        scaled * self.basis.transpose()
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        self.map_eigenvalues(|x| x)
    }

    pub fn min_modulus(&self) -> f64 {
        self.eigenvalues.iter().fold(f64::INFINITY, |m, x| m.min(x.abs()))
    }

    pub fn spectral_radius(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

/// A diagonal map with entries kept in ascending order.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagonalMap {
    entries: Vec<f64>,
}

impl DiagonalMap {
    pub fn new(mut entries: Vec<f64>) -> Self {
        entries.sort_by(f64::total_cmp);
        DiagonalMap { entries }
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn to_sym(&self) -> SymMatrix {
        SymMatrix::diagonal(&self.entries)
    }
}

/// Cyclic Jacobi rotations until the off-diagonal Frobenius norm drops below
/// `tol * ||a||`. Returns unsorted eigenvalues and the rotation product.
pub(crate) fn jacobi(a: &DMatrix<f64>, tol: f64) -> (Vec<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let mut a = a.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    let scale = a.norm();
    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in 0..n {
                if p != q {
                    off += a[(p, q)] * a[(p, q)];
                }
            }
        }
        if off.sqrt() <= tol * scale || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                for k in 0..n {
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| a[(i, i)]).collect(), v)
}

/// Sorts eigenpairs ascending and groups them into clusters.
fn assemble(values: Vec<f64>, vectors: DMatrix<f64>) -> SpectralDecomposition {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| values[i]).collect();
    let basis = DMatrix::from_fn(n, n, |r, c| vectors[(r, order[c])]);

    let radius = eigenvalues.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let gap = CLUSTER_GAP * radius;
    let mut groups: Vec<(usize, usize)> = Vec::new();
    for i in 0..n {
        match groups.last_mut() {
            Some((_, end)) if eigenvalues[i] - eigenvalues[*end - 1] <= gap => *end = i + 1,
            _ => groups.push((i, i + 1)),
        }
    }
    let distinct_eigenvalues = groups
        .iter()
        .map(|&(s, e)| eigenvalues[s..e].iter().sum::<f64>() / (e - s) as f64)
        .collect();
    let multiplicities = groups.iter().map(|&(s, e)| e - s).collect();
    let eigenspaces = groups
        .iter()
        .map(|&(s, e)| {
            let cols = basis.columns(s, e - s);
            &cols * cols.transpose()
        })
        .collect();
    SpectralDecomposition {
        eigenvalues,
        distinct_eigenvalues,
        multiplicities,
        basis,
        eigenspaces,
    }
}

/// Closed-form eigenpairs of an exact symmetric 2x2 integer matrix.
fn exact_2x2(a: i64, b: i64, c: i64) -> (Vec<f64>, DMatrix<f64>) {
    if b == 0 {
        return (vec![a as f64, c as f64], DMatrix::identity(2, 2));
    }
    let (a, b, c) = (a as i128, b as i128, c as i128);
    let disc = (a - c) * (a - c) + 4 * b * b;
    let root = isqrt_i128(disc);
    let s = if root * root == disc {
        root as f64
    } else {
        (disc as f64).sqrt()
    };
    let tr = (a + c) as f64;
    let values = [(tr - s) / 2.0, (tr + s) / 2.0];
    let mut v = DMatrix::zeros(2, 2);
    for (k, &lambda) in values.iter().enumerate() {
        // two candidate kernel vectors of A - lambda I; keep the better conditioned
        let u1 = (b as f64, lambda - a as f64);
        let u2 = (lambda - c as f64, b as f64);
        let n1 = u1.0.hypot(u1.1);
        let n2 = u2.0.hypot(u2.1);
        let (x, y, n) = if n1 >= n2 { (u1.0, u1.1, n1) } else { (u2.0, u2.1, n2) };
        v[(0, k)] = x / n;
        v[(1, k)] = y / n;
    }
    (values.to_vec(), v)
}

pub(crate) fn isqrt_i128(n: i128) -> i128 {
    if n < 0 {
        return -1;
    }
    let mut x = (n as f64).sqrt() as i128;
    while x * x > n {
        x -= 1;
    }
    while (x + 1) * (x + 1) <= n {
        x += 1;
    }
    x
}

/// Orthonormal eigendecomposition of a symmetric matrix.
pub fn decompose(a: &SymMatrix, tol: f64) -> Result<SpectralDecomposition> {
    let m = a.as_matrix();
    let residual = (m - m.transpose()).amax();
    if residual > tol * m.norm() {
        return Err(Error::NotSymmetric { residual });
    }
    if let (2, Some(e)) = (a.dim(), a.integer_entries()) {
        let (values, vectors) = exact_2x2(e[0], e[1], e[3]);
        return Ok(assemble(values, vectors));
    }
    let (values, vectors) = jacobi(m, tol);
    Ok(assemble(values, vectors))
}

/// Exact expansiveness of a real 2x2 characteristic polynomial
/// `x^2 - tr x + det`: both roots strictly outside the unit disk.
pub(crate) fn quadratic_is_expanding(tr: i128, det: i128) -> bool {
    let disc = tr * tr - 4 * det;
    if disc < 0 {
        // complex pair with |lambda|^2 = det
        return det > 1;
    }
    let at_one = 1 - tr + det;
    let at_minus_one = 1 + tr + det;
    if at_one == 0 || at_minus_one == 0 {
        return false;
    }
    // roots straddle [-1, 1], or both lie on one side of it
    (at_one < 0 && at_minus_one < 0) || (at_one > 0 && at_minus_one > 0 && det.abs() > 1)
}

/// All eigenvalues have modulus strictly greater than one.
pub fn is_expansive(a: &SymMatrix) -> bool {
    if let Some(e) = a.integer_entries() {
        match a.dim() {
            1 => return e[0].abs() > 1,
            2 => {
                let tr = e[0] as i128 + e[3] as i128;
                let det = e[0] as i128 * e[3] as i128 - e[1] as i128 * e[2] as i128;
                return quadratic_is_expanding(tr, det);
            }
            _ => {}
        }
    }
    match decompose(a, DEFAULT_TOL) {
        Ok(d) => d.min_modulus() > 1.0,
        Err(_) => false,
    }
}

/// All eigenvalues are strictly positive.
pub fn is_positive(a: &SymMatrix) -> bool {
    if let Some(e) = a.integer_entries() {
        match a.dim() {
            1 => return e[0] > 0,
            2 => {
                let det = e[0] as i128 * e[3] as i128 - e[1] as i128 * e[2] as i128;
                return e[0] + e[3] > 0 && det > 0;
            }
            _ => {}
        }
    }
    match decompose(a, DEFAULT_TOL) {
        Ok(d) => d.eigenvalues[0] > 0.0,
        Err(_) => false,
    }
}

fn exact_int_power(e: &[i64], dim: usize, k: u32) -> Option<Vec<i64>> {
    let mut acc: Vec<i128> = (0..dim * dim).map(|i| (i / dim == i % dim) as i128).collect();
    let base: Vec<i128> = e.iter().map(|&x| x as i128).collect();
    let limit = 1i128 << 53;
    for _ in 0..k {
        let mut next = vec![0i128; dim * dim];
        for r in 0..dim {
            for c in 0..dim {
                let mut s = 0i128;
                for m in 0..dim {
                    s = s.checked_add(acc[r * dim + m].checked_mul(base[m * dim + c])?)?;
                }
                if s.abs() > limit {
                    return None;
                }
                next[r * dim + c] = s;
            }
        }
        acc = next;
    }
    Some(acc.into_iter().map(|x| x as i64).collect())
}

/// `A^t = C J^t C^T` for a positive map.
pub fn power(a: &SymMatrix, t: f64) -> Result<SymMatrix> {
    if !t.is_finite() {
        return Err(Error::BadParameter(format!("exponent {t} is not finite")));
    }
    let dec = decompose(a, DEFAULT_TOL)?;
    if !is_positive(a) {
        return Err(Error::NotPositive {
            min_eigenvalue: dec.eigenvalues[0],
        });
    }
    if t.fract() == 0.0 && (0.0..=64.0).contains(&t) {
        if let Some(e) = a.integer_entries() {
            if let Some(p) = exact_int_power(&e, a.dim(), t as u32) {
                return SymMatrix::new(a.dim(), p.into_iter().map(|x| x as f64).collect());
            }
        }
    }
    SymMatrix::from_dmatrix(dec.map_eigenvalues(|x| x.powf(t)), 1e-6)
}

/// `A' = C |J| C^T`: the positive map sharing the eigenspaces of `A` whose
/// eigenvalues are the moduli of those of `A`.
pub fn absolutize(a: &SymMatrix) -> Result<SymMatrix> {
    let dec = decompose(a, DEFAULT_TOL)?;
    if !is_expansive(a) {
        return Err(Error::NotExpansive {
            min_modulus: dec.min_modulus(),
        });
    }
    if is_positive(a) {
        return Ok(a.clone());
    }
    if let (2, Some(e)) = (a.dim(), a.integer_entries()) {
        if let Some(m) = exact_absolutize_2x2(&e) {
            return Ok(m);
        }
    }
    SymMatrix::from_dmatrix(dec.map_eigenvalues(f64::abs), 1e-6)
}

/// Integer path for a non-positive exact 2x2 map. With eigenvalues
/// `l1 < l2`: both negative gives `-A`; mixed signs give
/// `(tr A - 2 det I) / (l2 - l1)` whenever that is integral.
fn exact_absolutize_2x2(e: &[i64]) -> Option<SymMatrix> {
    let (a, b, c) = (e[0] as i128, e[1] as i128, e[3] as i128);
    let tr = a + c;
    let det = a * c - b * b;
    if det > 0 {
        // both eigenvalues share a sign, and A is not positive
        let neg: Vec<f64> = e.iter().map(|&x| -(x as f64)).collect();
        return SymMatrix::new(2, neg).ok();
    }
    let disc = (a - c) * (a - c) + 4 * b * b;
    let s = isqrt_i128(disc);
    if s * s != disc || s == 0 {
        return None;
    }
    let entries = [tr * a - 2 * det, tr * b, tr * b, tr * c - 2 * det];
    if entries.iter().any(|x| x % s != 0) {
        return None;
    }
    SymMatrix::new(2, entries.iter().map(|x| (x / s) as f64).collect()).ok()
}
