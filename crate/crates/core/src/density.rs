//! Density quotients `|E ∩ A^{-j}K| / |A^{-j}K|` and their behaviour in `j`.
//!
//! Sampling is done in the fixed window `K` and the samples are pulled back
//! by `A^{-j}`: since `|E ∩ A^{-j}K| / |A^{-j}K| = |A^j E ∩ K| / |K|`, the hit
//! fraction of `A^{-j} y ∈ E` over uniform `y ∈ K` is an unbiased estimate of
//! the quotient, and the window never degenerates into a thin ellipsoid.

use std::ops::RangeInclusive;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::matrix::{SymMatrix, DEFAULT_TOL};
use crate::region::{Region, RegionDescriptor};
use crate::spectral;

pub const DEFAULT_SAMPLES: u64 = 1_000_000;
pub const DEFAULT_J_RANGE: RangeInclusive<i32> = 0..=8;

/// Accepted samples per independently seeded batch.
const BATCH: u64 = 1 << 14;
/// Minimum window acceptance rate of the rejection sampler.
const MIN_ACCEPTANCE: f64 = 1e-3;

/// An expansive linear map on `R^d`: every complex eigenvalue has modulus
/// greater than one. Not necessarily self-adjoint.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpansiveMap {
    matrix: DMatrix<f64>,
    symmetric: bool,
}

impl ExpansiveMap {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                found: matrix.ncols(),
            });
        }
        if matrix == matrix.transpose() {
            let sym = SymMatrix::from_dmatrix(matrix, DEFAULT_TOL)?;
            return Self::from_sym(&sym);
        }
        let min_modulus = matrix
            .complex_eigenvalues()
            .iter()
            .fold(f64::INFINITY, |m, z| m.min(z.norm()));
        if !(min_modulus > 1.0) {
            return Err(Error::NotExpansive { min_modulus });
        }
        Ok(ExpansiveMap {
            matrix,
            symmetric: false,
        })
    }

    pub fn from_sym(a: &SymMatrix) -> Result<Self> {
        if !spectral::is_expansive(a) {
            let min_modulus = spectral::decompose(a, DEFAULT_TOL)?.min_modulus();
            return Err(Error::NotExpansive { min_modulus });
        }
        Ok(ExpansiveMap {
            matrix: a.as_matrix().clone(),
            symmetric: true,
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// `A^{-j}`.
    pub fn inverse_power(&self, j: i32) -> Result<DMatrix<f64>> {
        if self.symmetric {
            let sym = SymMatrix::from_dmatrix(self.matrix.clone(), DEFAULT_TOL)?;
            let dec = spectral::decompose(&sym, DEFAULT_TOL)?;
            if sym.is_diagonal() {
                // keep exact entries exact
                let d = self.dim();
                return Ok(DMatrix::from_fn(d, d, |r, c| {
                    if r == c {
                        self.matrix[(r, r)].powi(-j)
                    } else {
                        0.0
                    }
                }));
            }
            return Ok(dec.map_eigenvalues(|x| x.powi(-j)));
        }
        let base = if j >= 0 {
            self.matrix.clone().try_inverse().ok_or(Error::SingularMatrix)?
        } else {
            self.matrix.clone()
        };
        Ok(matrix_power(&base, j.unsigned_abs()))
    }
}

impl TryFrom<&SymMatrix> for ExpansiveMap {
    type Error = Error;
    fn try_from(a: &SymMatrix) -> Result<Self> {
        ExpansiveMap::from_sym(a)
    }
}

fn matrix_power(base: &DMatrix<f64>, mut k: u32) -> DMatrix<f64> {
    let n = base.nrows();
    let mut acc = DMatrix::identity(n, n);
    let mut sq = base.clone();
    while k > 0 {
        if k & 1 == 1 {
            acc = &acc * &sq;
        }
        sq = &sq * &sq;
        k >>= 1;
    }
    acc
}

/// Monte Carlo estimate of one density quotient.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityEstimate {
    pub j: i32,
    pub ratio: f64,
    pub stderr: f64,
    pub samples: u64,
}

impl DensityEstimate {
    fn from_counts(j: i32, hits: u64, samples: u64) -> Self {
        let ratio = hits as f64 / samples as f64;
        DensityEstimate {
            j,
            ratio,
            stderr: (ratio * (1.0 - ratio) / samples as f64).sqrt(),
            samples,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LimitClass {
    ConvergesToOne,
    ConvergesToZero,
    Other,
}

/// Thresholds of the limit heuristic.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifyConfig {
    /// Noise allowance in standard errors.
    pub sigma: f64,
    /// Number of trailing points that must move monotonically toward the limit.
    pub trend_window: usize,
    /// Largest per-step geometric factor of the distance to the limit, over
    /// the second half of the sweep, that still counts as convergence.
    pub max_decay: f64,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        ClassifyConfig {
            sigma: 3.0,
            trend_window: 3,
            max_decay: 0.95,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensitySeries {
    pub estimates: Vec<DensityEstimate>,
    pub classification: LimitClass,
    /// Human-readable account of why the heuristic decided as it did.
    pub note: String,
}

fn check_window(window: &Region, dim: usize) -> Result<f64> {
    if window.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: window.dim(),
        });
    }
    if !window.contains(&vec![0.0; dim]) {
        return Err(Error::BadParameter("window must contain the origin".into()));
    }
    window
        .bounding_half_width()
        .ok_or_else(|| Error::BadParameter("window must be bounded".into()))
}

fn stream_id(j: i32, batch: u64) -> u64 {
    ((j as u32 as u64) << 32) | (batch & 0xffff_ffff)
}

/// Estimates `|E ∩ A^{-j}K| / |A^{-j}K|` from `samples` uniform points of `K`.
///
/// Batches of samples are drawn from independent ChaCha streams keyed by
/// `(seed, j, batch)` and their hit counts are summed, so the result does not
/// depend on how the batches are scheduled.
pub fn density_ratio(
    set: &Region,
    map: &ExpansiveMap,
    j: i32,
    window: &Region,
    samples: u64,
    seed: u64,
) -> Result<DensityEstimate> {
    let d = map.dim();
    if set.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: set.dim(),
        });
    }
    if samples == 0 {
        return Err(Error::BadParameter("samples must be positive".into()));
    }
    let half = check_window(window, d)?;
    let pull = map.inverse_power(j)?;
    let pull: Vec<f64> = pull.transpose().iter().copied().collect();
    let batches = samples.div_ceil(BATCH);

    let (hits, accepted, attempts) = (0..batches)
        .into_par_iter()
        .map(|b| {
            let target = BATCH.min(samples - b * BATCH);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(stream_id(j, b));
            let mut y: SmallVec<[f64; 8]> = SmallVec::from_elem(0.0, d);
            let mut x: SmallVec<[f64; 8]> = SmallVec::from_elem(0.0, d);
            let (mut hits, mut accepted, mut attempts) = (0u64, 0u64, 0u64);
            let cap = target * 1000 + 64;
            while accepted < target && attempts < cap {
                attempts += 1;
                for v in y.iter_mut() {
                    *v = half * (2.0 * rng.random::<f64>() - 1.0);
                }
                if !window.contains(&y) {
                    continue;
                }
                accepted += 1;
                for (xi, row) in x.iter_mut().zip(pull.chunks_exact(d)) {
                    *xi = row.iter().zip(&y).map(|(a, b)| a * b).sum();
                }
                if set.contains(&x) {
                    hits += 1;
                }
            }
            (hits, accepted, attempts)
        })
        .reduce(|| (0, 0, 0), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2));

    let acceptance = accepted as f64 / attempts as f64;
    if accepted < samples || acceptance < MIN_ACCEPTANCE {
        return Err(Error::DegenerateWindow { acceptance });
    }
    Ok(DensityEstimate::from_counts(j, hits, samples))
}

/// Runs [`density_ratio`] over a range of `j` and classifies the limit with
/// the default thresholds.
pub fn density_sweep(
    set: &Region,
    map: &ExpansiveMap,
    window: &Region,
    j_range: RangeInclusive<i32>,
    samples: u64,
    seed: u64,
) -> Result<DensitySeries> {
    density_sweep_with(set, map, window, j_range, samples, seed, &ClassifyConfig::default())
}

pub fn density_sweep_with(
    set: &Region,
    map: &ExpansiveMap,
    window: &Region,
    j_range: RangeInclusive<i32>,
    samples: u64,
    seed: u64,
    config: &ClassifyConfig,
) -> Result<DensitySeries> {
    if j_range.is_empty() {
        return Err(Error::BadParameter("empty j range".into()));
    }
    let estimates = j_range
        .map(|j| density_ratio(set, map, j, window, samples, seed))
        .collect::<Result<Vec<_>>>()?;
    let (classification, note) = classify_series(&estimates, config);
    Ok(DensitySeries {
        estimates,
        classification,
        note,
    })
}

/// Limit heuristic for a finite sweep. A series converges to `L` when the
/// distance to `L` is non-increasing (up to noise) over the trailing window,
/// and either it is already within `sigma` standard errors of `L` or it
/// shrinks geometrically over the second half of the sweep.
pub fn classify_series(estimates: &[DensityEstimate], config: &ClassifyConfig) -> (LimitClass, String) {
    let n = estimates.len();
    let w = config.trend_window.max(2);
    if n < w {
        return (
            LimitClass::Other,
            format!("only {n} points; at least {w} needed to judge a trend"),
        );
    }
    let se: Vec<f64> = estimates.iter().map(|e| e.stderr).collect();
    for (limit, class) in [(1.0, LimitClass::ConvergesToOne), (0.0, LimitClass::ConvergesToZero)] {
        let dist: Vec<f64> = estimates.iter().map(|e| (limit - e.ratio).abs()).collect();
        let noise = |a: usize, b: usize| config.sigma * se[a].hypot(se[b]);
        let monotone = (n - w..n - 1).all(|k| dist[k + 1] <= dist[k] + noise(k, k + 1));
        if !monotone {
            continue;
        }
        let last = n - 1;
        if dist[last] <= config.sigma * se[last] {
            return (
                class,
                format!(
                    "heuristic: final distance {:.3e} to {limit} within {} standard errors",
                    dist[last], config.sigma
                ),
            );
        }
        let first = n - w.max(n.div_ceil(2));
        let span = (estimates[last].j - estimates[first].j) as f64;
        if dist[first] > 0.0 && span > 0.0 && dist[last] < dist[first] - noise(first, last) {
            let factor = (dist[last] / dist[first]).powf(1.0 / span);
            if factor <= config.max_decay {
                return (
                    class,
                    format!(
                        "heuristic: distance to {limit} shrinks by {factor:.4} per step (threshold {})",
                        config.max_decay
                    ),
                );
            }
        }
    }
    (
        LimitClass::Other,
        "heuristic: no monotone geometric approach to 0 or 1 detected".into(),
    )
}

/// Closed-form `|E_alpha^c ∩ A^{-j}Q_1| / |A^{-j}Q_1|` for `A = diag(l1, l2)`.
pub fn exact_ealpha_ratio(l1: f64, l2: f64, alpha: f64, j: i32) -> Result<f64> {
    exact_ealpha_ratio_window(l1, l2, alpha, j, 1.0)
}

/// Same quotient over the window `Q_r`.
///
/// With `a = r l1^{-j}`, `b = r l2^{-j}` the numerator is
/// `4 ∫_0^a min(x^alpha, b) dx`, which splits at `x* = b^{1/alpha}`.
pub fn exact_ealpha_ratio_window(l1: f64, l2: f64, alpha: f64, j: i32, r: f64) -> Result<f64> {
    if !(l1 > 1.0 && l2 > 1.0) {
        return Err(Error::BadParameter(format!("eigenvalues must exceed 1, got ({l1}, {l2})")));
    }
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::BadParameter(format!("alpha must be positive, got {alpha}")));
    }
    if j < 0 {
        return Err(Error::BadParameter(format!("j must be non-negative, got {j}")));
    }
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::BadParameter(format!("window radius must be positive, got {r}")));
    }
    let a = r * l1.powi(-j);
    let b = r * l2.powi(-j);
    if a.is_normal() && b.is_normal() {
        let x_star = b.powf(1.0 / alpha);
        return Ok(if x_star >= a {
            a.powf(alpha) / ((alpha + 1.0) * b)
        } else {
            1.0 - alpha / (alpha + 1.0) * (x_star / a)
        });
    }
    let ln_a = r.ln() - j as f64 * l1.ln();
    let ln_b = r.ln() - j as f64 * l2.ln();
    let ln_x = ln_b / alpha;
    Ok(if ln_x >= ln_a {
        (alpha * ln_a - ln_b).exp() / (alpha + 1.0)
    } else {
        1.0 - alpha / (alpha + 1.0) * (ln_x - ln_a).exp()
    })
}

/// Splits a cylinder `E = Y + F` whose axis `Y` (and hence `Y^perp`) is
/// invariant under `A`, returning `F` and `A` restricted to `Y^perp` in the
/// completion basis the cylinder uses for `F`.
pub fn cylinder_reduce(set: &Region, map: &ExpansiveMap, tol: f64) -> Result<(Region, ExpansiveMap)> {
    let RegionDescriptor::Cylinder { axis, dim, base } = set.descriptor() else {
        return Err(Error::BadParameter("cylinder_reduce needs a cylinder region".into()));
    };
    if *dim != map.dim() {
        return Err(Error::DimensionMismatch {
            expected: map.dim(),
            found: *dim,
        });
    }
    let d = *dim;
    let perp = crate::region::complement_basis(axis, d)?;
    let p = d - perp.len();
    let perp_m = DMatrix::from_fn(d, perp.len(), |r, c| perp[c][r]);
    let a = map.matrix();
    let proj_perp = &perp_m * perp_m.transpose();
    let proj_axis = DMatrix::<f64>::identity(d, d) - &proj_perp;
    let leak = (&proj_perp * a * &proj_axis).norm().max((&proj_axis * a * &proj_perp).norm());
    if leak > tol * a.norm() {
        return Err(Error::NotInvariant { residual: leak });
    }
    let base = crate::region::make_region((**base).clone())?;
    if p == 0 {
        return Ok((base, map.clone()));
    }
    let restricted = perp_m.transpose() * a * &perp_m;
    let restricted = if map.symmetric {
        // symmetrize against round-off so the symmetric path is kept
        let s = SymMatrix::from_dmatrix(restricted, 1e-9)?;
        ExpansiveMap::from_sym(&s)?
    } else {
        ExpansiveMap::new(restricted)?
    };
    Ok((base, restricted))
}
