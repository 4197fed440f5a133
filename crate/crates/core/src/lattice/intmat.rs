//! Square matrices over arbitrary-precision integers.

use std::fmt;
use std::ops::Mul;

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::ser::{SerializeSeq, Serializer};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::SymMatrix;
use crate::spectral::quadratic_is_expanding;

/// Serializes a big integer as a JSON number when it fits in `i64`, else as
/// a decimal string.
pub(crate) fn serialize_bigint<S: Serializer>(v: &BigInt, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v.to_i64() {
        Some(x) => s.serialize_i64(x),
        None => s.serialize_str(&v.to_string()),
    }
}

struct BigNum<'a>(&'a BigInt);

impl Serialize for BigNum<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        serialize_bigint(self.0, s)
    }
}

/// Square integer matrix, row-major.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct IntMatrix {
    n: usize,
    e: Vec<BigInt>,
}

impl IntMatrix {
    pub fn new(n: usize, entries: Vec<BigInt>) -> Result<Self> {
        if n == 0 || entries.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                found: entries.len(),
            });
        }
        Ok(IntMatrix { n, e: entries })
    }

    pub fn from_i64(n: usize, entries: &[i64]) -> Result<Self> {
        Self::new(n, entries.iter().map(|&x| BigInt::from(x)).collect())
    }

    /// `[[a, b], [c, d]]`
    pub fn m2(a: i64, b: i64, c: i64, d: i64) -> Self {
        IntMatrix {
            n: 2,
            e: [a, b, c, d].into_iter().map(BigInt::from).collect(),
        }
    }

    pub fn scalar(n: usize, c: BigInt) -> Self {
        let e = (0..n * n)
            .map(|i| if i / n == i % n { c.clone() } else { BigInt::zero() })
            .collect();
        IntMatrix { n, e }
    }

    pub fn identity(n: usize) -> Self {
        Self::scalar(n, BigInt::one())
    }

    pub fn diagonal(d: &[i64]) -> Self {
        let n = d.len();
        let e = (0..n * n)
            .map(|i| if i / n == i % n { BigInt::from(d[i / n]) } else { BigInt::zero() })
            .collect();
        IntMatrix { n, e }
    }

    /// Exact copy of a symmetric matrix with integer entries.
    pub fn from_sym(a: &SymMatrix) -> Option<Self> {
        let e = a.integer_entries()?;
        Self::from_i64(a.dim(), &e).ok()
    }

    /// Exact copy of a floating matrix whose entries are all integers.
    pub fn from_dmatrix(m: &DMatrix<f64>) -> Option<Self> {
        if !m.is_square() || m.nrows() == 0 {
            return None;
        }
        let n = m.nrows();
        let mut e = Vec::with_capacity(n * n);
        for r in 0..n {
            for c in 0..n {
                let x = m[(r, c)];
                if !crate::matrix::is_exact_integer(x) {
                    return None;
                }
                e.push(BigInt::from(x as i64));
            }
        }
        Some(IntMatrix { n, e })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, r: usize, c: usize) -> &BigInt {
        &self.e[r * self.n + c]
    }

    pub fn entries(&self) -> &[BigInt] {
        &self.e
    }

    /// Entries as `i64`, when they all fit.
    pub fn to_i64(&self) -> Option<Vec<i64>> {
        self.e.iter().map(|x| x.to_i64()).collect()
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |r, c| self.get(r, c).to_f64().unwrap_or(f64::NAN))
    }

    pub fn trace(&self) -> BigInt {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    /// Determinant by fraction-free (Bareiss) elimination.
    pub fn det(&self) -> BigInt {
        let n = self.n;
        let mut a = self.e.clone();
        let mut sign = BigInt::one();
        let mut prev = BigInt::one();
        for k in 0..n {
            if a[k * n + k].is_zero() {
                let Some(p) = (k + 1..n).find(|&r| !a[r * n + k].is_zero()) else {
                    return BigInt::zero();
                };
                for c in 0..n {
                    a.swap(k * n + c, p * n + c);
                }
                sign = -sign;
            }
            for r in k + 1..n {
                for c in k + 1..n {
                    let v = &a[r * n + c] * &a[k * n + k] - &a[r * n + k] * &a[k * n + c];
                    a[r * n + c] = v / &prev;
                }
            }
            prev = a[k * n + k].clone();
        }
        sign * &a[n * n - 1]
    }

    /// Rank over the rationals, by fraction-free elimination.
    pub fn rank(&self) -> usize {
        let n = self.n;
        let mut a = self.e.clone();
        let mut prev = BigInt::one();
        let mut rank = 0;
        for col in 0..n {
            let Some(p) = (rank..n).find(|&r| !a[r * n + col].is_zero()) else {
                continue;
            };
            for c in 0..n {
                a.swap(rank * n + c, p * n + c);
            }
            for r in rank + 1..n {
                for c in 0..n {
                    if c == col {
                        continue;
                    }
                    let v = &a[r * n + c] * &a[rank * n + col] - &a[r * n + col] * &a[rank * n + c];
                    a[r * n + c] = v / &prev;
                }
                a[r * n + col] = BigInt::zero();
            }
            prev = a[rank * n + col].clone();
            rank += 1;
        }
        rank
    }

    pub fn pow(&self, mut k: u32) -> Self {
        let mut acc = Self::identity(self.n);
        let mut sq = self.clone();
        while k > 0 {
            if k & 1 == 1 {
                acc = &acc * &sq;
            }
            k >>= 1;
            if k > 0 {
                sq = &sq * &sq;
            }
        }
        acc
    }

    /// `c` when the matrix equals `c I`.
    pub fn as_scalar(&self) -> Option<BigInt> {
        let c = self.get(0, 0);
        let n = self.n;
        let ok = (0..n * n).all(|i| {
            if i / n == i % n {
                &self.e[i] == c
            } else {
                self.e[i].is_zero()
            }
        });
        ok.then(|| c.clone())
    }

    pub fn is_unimodular(&self) -> bool {
        self.det().abs().is_one()
    }

    /// Inverse of a unimodular 2x2 matrix.
    pub fn inverse_unimodular(&self) -> Option<Self> {
        if self.n != 2 {
            return None;
        }
        let det = self.det();
        if !det.abs().is_one() {
            return None;
        }
        let e = &self.e;
        Some(IntMatrix {
            n: 2,
            e: vec![&e[3] * &det, -&e[1] * &det, -&e[2] * &det, &e[0] * &det],
        })
    }

    pub fn sub_scalar(&self, k: &BigInt) -> Self {
        let n = self.n;
        let mut m = self.clone();
        for i in 0..n {
            m.e[i * n + i] -= k;
        }
        m
    }

    pub fn neg(&self) -> Self {
        IntMatrix {
            n: self.n,
            e: self.e.iter().map(|x| -x).collect(),
        }
    }

    /// Exact expanding test. Decided from the characteristic polynomial for
    /// `d <= 2`; larger sizes are out of reach of this module.
    pub fn is_expanding(&self) -> Result<bool> {
        match self.n {
            1 => Ok(self.e[0].abs() > BigInt::one()),
            2 => {
                let (Some(tr), Some(det)) = (self.trace().to_i128(), self.det().to_i128()) else {
                    return Err(Error::PreconditionViolated("entries too large".into()));
                };
                if tr.abs() > 1 << 60 || det.abs() > 1 << 120 {
                    return Err(Error::PreconditionViolated("entries too large".into()));
                }
                Ok(quadratic_is_expanding(tr, det))
            }
            n => Err(Error::PreconditionViolated(format!(
                "exact expanding test needs d <= 2, got {n}"
            ))),
        }
    }
}

impl Mul for &IntMatrix {
    type Output = IntMatrix;
    fn mul(self, rhs: &IntMatrix) -> IntMatrix {
        assert_eq!(self.n, rhs.n, "dimension mismatch");
        let n = self.n;
        let e = (0..n * n)
            .map(|i| {
                let (r, c) = (i / n, i % n);
                (0..n).map(|k| &self.e[r * n + k] * &rhs.e[k * n + c]).sum()
            })
            .collect();
        IntMatrix { n, e }
    }
}

impl fmt::Display for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for r in 0..self.n {
            if r > 0 {
                write!(f, ",")?;
            }
            write!(f, "[")?;
            for c in 0..self.n {
                if c > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{}", self.get(r, c))?;
            }
            write!(f, "]")?;
        }
        write!(f, "]")
    }
}

/// Serialized as a list of rows.
impl Serialize for IntMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<BigNum<'_>>> = self
            .e
            .chunks(self.n)
            .map(|row| row.iter().map(BigNum).collect())
            .collect();
        let mut seq = s.serialize_seq(Some(rows.len()))?;
        for row in &rows {
            seq.serialize_element(row)?;
        }
        seq.end()
    }
}
