//! Symmetric matrix storage and the matrix interchange formats.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default relative tolerance for floating-point decisions.
pub const DEFAULT_TOL: f64 = 1e-12;

/// Largest magnitude at which every integer is representable in an `f64`.
const EXACT_INT_LIMIT: f64 = 9_007_199_254_740_992.0;

/// A real symmetric `d x d` matrix.
///
/// `exact` is set when every entry is an integer stored without rounding;
/// exact matrices are checked for symmetry with `==` and unlock the integer
/// decision paths in [`crate::spectral`] and [`crate::lattice`].
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix {
    m: DMatrix<f64>,
    exact: bool,
}

pub(crate) fn is_exact_integer(x: f64) -> bool {
    x.is_finite() && x.fract() == 0.0 && x.abs() <= EXACT_INT_LIMIT
}

impl SymMatrix {
    /// Builds a matrix from row-major entries with the default tolerance.
    pub fn new(dim: usize, entries: Vec<f64>) -> Result<Self> {
        Self::with_tolerance(dim, entries, DEFAULT_TOL)
    }

    pub fn with_tolerance(dim: usize, entries: Vec<f64>, tol: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::BadParameter("dimension must be at least 1".into()));
        }
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: entries.len(),
            });
        }
        Self::from_dmatrix(DMatrix::from_row_slice(dim, dim, &entries), tol)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        let mut entries = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
            entries.extend_from_slice(row);
        }
        Self::new(dim, entries)
    }

    /// Wraps a square matrix, checking symmetry to `tol` relative to its
    /// Frobenius norm. Inexact inputs are symmetrized by averaging.
    pub fn from_dmatrix(m: DMatrix<f64>, tol: f64) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        if m.nrows() == 0 {
            return Err(Error::BadParameter("dimension must be at least 1".into()));
        }
        if m.iter().any(|x| !x.is_finite()) {
            return Err(Error::BadParameter("matrix entries must be finite".into()));
        }
        let exact = m.iter().all(|&x| is_exact_integer(x));
        let residual = (&m - m.transpose()).amax();
        if exact {
            if residual != 0.0 {
                return Err(Error::NotSymmetric { residual });
            }
            return Ok(SymMatrix { m, exact });
        }
        if residual > tol * m.norm().max(f64::MIN_POSITIVE) {
            return Err(Error::NotSymmetric { residual });
        }
        let sym = (&m + m.transpose()) * 0.5;
        let exact = sym.iter().all(|&x| is_exact_integer(x));
        Ok(SymMatrix { m: sym, exact })
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let m = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(values));
        let exact = values.iter().all(|&x| is_exact_integer(x));
        SymMatrix { m, exact }
    }

    pub fn scaled_identity(dim: usize, c: f64) -> Self {
        Self::diagonal(&vec![c; dim])
    }

    pub fn identity(dim: usize) -> Self {
        Self::scaled_identity(dim, 1.0)
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[(i, j)]
    }

    pub fn is_exact(&self) -> bool {
        self.exact
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.m
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim())
            .map(|i| (0..self.dim()).map(|j| self.m[(i, j)]).collect())
            .collect()
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.m.norm()
    }

    pub fn trace(&self) -> f64 {
        self.m.trace()
    }

    pub fn is_diagonal(&self) -> bool {
        let d = self.dim();
        (0..d).all(|i| (0..d).all(|j| i == j || self.m[(i, j)] == 0.0))
    }

    /// Integer entries in row-major order, when the matrix is exact.
    pub fn integer_entries(&self) -> Option<Vec<i64>> {
        if !self.exact {
            return None;
        }
        // row-major; nalgebra stores column-major
        Some(self.m.transpose().iter().map(|&x| x as i64).collect())
    }

    pub fn to_json(&self) -> MatrixJson {
        MatrixJson {
            dim: self.dim(),
            rows: self.rows(),
        }
    }
}

/// `{"dim": d, "rows": [[a11, ...], ...]}`
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub dim: usize,
    pub rows: Vec<Vec<f64>>,
}

impl MatrixJson {
    pub fn to_dmatrix(&self) -> Result<DMatrix<f64>> {
        if self.dim == 0 || self.rows.len() != self.dim {
            return Err(Error::Parse(format!(
                "expected {} rows, found {}",
                self.dim,
                self.rows.len()
            )));
        }
        let mut entries = Vec::with_capacity(self.dim * self.dim);
        for row in &self.rows {
            if row.len() != self.dim {
                return Err(Error::Parse(format!(
                    "expected rows of length {}, found {}",
                    self.dim,
                    row.len()
                )));
            }
            entries.extend_from_slice(row);
        }
        Ok(DMatrix::from_row_slice(self.dim, self.dim, &entries))
    }

    pub fn to_sym(&self, tol: f64) -> Result<SymMatrix> {
        SymMatrix::from_dmatrix(self.to_dmatrix()?, tol)
    }
}

/// Parses the inline `"a,b;c,d"` row format into a square matrix.
pub fn parse_inline(text: &str) -> Result<DMatrix<f64>> {
    let rows: Vec<Vec<f64>> = text
        .trim()
        .split(';')
        .map(|row| {
            row.split(',')
                .map(|x| {
                    x.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::Parse(format!("bad entry {x:?}: {e}")))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    MatrixJson {
        dim: rows.len(),
        rows,
    }
    .to_dmatrix()
}

/// `A B - B A`.
pub fn commutator(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a * b - b * a
}
