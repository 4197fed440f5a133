#![allow(dead_code)]

use densilab::{ExpansiveMap, Region, SymMatrix, DEFAULT_TOL};
use nalgebra::DMatrix;
use rand::Rng;

/// Haar-ish orthogonal matrix from the QR factorization of a Gaussian-like matrix.
pub fn random_orthogonal<R: Rng>(rng: &mut R, d: usize) -> DMatrix<f64> {
    let m = DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
    let qr = m.qr();
    let (q, r) = (qr.q(), qr.r());
    // fix column signs so the distribution does not depend on the QR convention
    let mut q = q;
    for k in 0..d {
        if r[(k, k)] < 0.0 {
            q.column_mut(k).neg_mut();
        }
    }
    q
}

/// `Q diag(values) Q^T`, symmetrized.
pub fn sym_from_spectrum(q: &DMatrix<f64>, values: &[f64]) -> SymMatrix {
    let d = values.len();
    let m = q * DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(values)) * q.transpose();
    let m = (&m + m.transpose()) * 0.5;
    SymMatrix::from_dmatrix(m, DEFAULT_TOL).unwrap_or_else(|e| panic!("symmetric by construction ({d}x{d}): {e}"))
}

pub fn diag_map(values: &[f64]) -> ExpansiveMap {
    ExpansiveMap::from_sym(&SymMatrix::diagonal(values)).expect("expansive diagonal")
}

pub fn column(v: &[f64]) -> DMatrix<f64> {
    DMatrix::from_column_slice(v.len(), 1, v)
}

/// Random invertible matrix with spectral condition number at most `max_cond`.
pub fn well_conditioned<R: Rng>(rng: &mut R, d: usize, max_cond: f64) -> DMatrix<f64> {
    loop {
        let c = DMatrix::from_fn(d, d, |_, _| rng.random_range(-2.0..2.0));
        let sv = c.singular_values();
        let (hi, lo) = (sv.max(), sv.min());
        if lo > 0.0 && hi / lo <= max_cond {
            return c;
        }
    }
}

/// The two essentially disjoint cones around the least-expanding directions
/// `a` and `b` of two positive maps, as in the simultaneous diagonalization
/// argument: `H_mu = {||P_{V_mu} x|| <= kappa ||P_{U_mu} x||}` where `V_mu`
/// is the complement of `U_mu` inside `span(a, b)`.
pub struct ConePair {
    pub a1: ExpansiveMap,
    pub a2: ExpansiveMap,
    pub h1: Region,
    pub h2: Region,
    pub kappa: f64,
    pub rho: f64,
}

/// `theta` is the angle between the least-expanding directions (at most
/// pi/2), `low` the smallest eigenvalue of each map and `gaps` the factors
/// of the remaining eigenvalues over it.
pub fn cone_pair(q: &DMatrix<f64>, theta: f64, low: [f64; 2], gaps: &[Vec<f64>; 2]) -> ConePair {
    let d = q.nrows();
    let q0 = q.column(0).into_owned();
    let q1 = q.column(1).into_owned();
    let (s, c) = theta.sin_cos();
    let b = &q0 * c + &q1 * s;
    let b_perp = &q1 * c - &q0 * s;

    let mut basis2 = q.clone();
    basis2.set_column(0, &b);
    basis2.set_column(1, &b_perp);

    let spectrum = |mu: usize| -> Vec<f64> {
        std::iter::once(low[mu]).chain(gaps[mu].iter().map(|g| low[mu] * g)).collect()
    };
    let m1 = sym_from_spectrum(q, &spectrum(0));
    let m2 = sym_from_spectrum(&basis2, &spectrum(1));

    let rho = (&q0 - &b).norm().min((&q0 + &b).norm());
    let kappa = 0.9 * rho / 4.0;
    let as_col = |v: &nalgebra::DVector<f64>| DMatrix::from_column_slice(d, 1, v.as_slice());
    let h1 = Region::cone(kappa, &as_col(&q0), &as_col(&q1)).expect("cone");
    let h2 = Region::cone(kappa, &as_col(&b), &as_col(&b_perp)).expect("cone");
    ConePair {
        a1: ExpansiveMap::from_sym(&m1).expect("expansive"),
        a2: ExpansiveMap::from_sym(&m2).expect("expansive"),
        h1,
        h2,
        kappa,
        rho,
    }
}

/// Adaptive Simpson quadrature on `[a, b]` to absolute tolerance `eps`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, eps: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, h: f64) -> f64 {
        h / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, eps: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(fa, flm, fm, m - a);
        let right = simpson(fm, frm, fb, b - m);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * eps {
            return left + right + delta / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, eps / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, eps / 2.0, depth - 1)
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    rec(f, a, b, fa, fm, fb, simpson(fa, fm, fb, b - a), eps, 60)
}

/// Quadrature oracle for the complement quotient of `E_alpha` under
/// `diag(l1, l2)^j` in `Q_1`: with `a = l1^{-j}`, `b = l2^{-j}` it is
/// `(1/a) ∫_0^a min(x^alpha, b) / b dx`, integrated in `u = x / a`.
pub fn ealpha_complement_quadrature(l1: f64, l2: f64, alpha: f64, j: i32) -> f64 {
    let a = l1.powi(-j);
    let b = l2.powi(-j);
    let f = move |u: f64| ((u * a).powf(alpha) / b).min(1.0);
    // integrate the two smooth pieces separately, each over fixed panels, so
    // the adaptive rule cannot stop early on a lucky coarse estimate
    let kink = (b.powf(1.0 / alpha) / a).clamp(0.0, 1.0);
    let mut total = 0.0;
    for (lo, hi) in [(0.0, kink), (kink, 1.0)] {
        let panels = 16;
        let h = (hi - lo) / panels as f64;
        for k in 0..panels {
            let x0 = lo + k as f64 * h;
            total += adaptive_simpson(&f, x0, x0 + h, 1e-17);
        }
    }
    total
}
