//! Measurable subsets of `R^d` given by membership predicates.
//!
//! A [`Region`] is built from a serializable [`RegionDescriptor`] and keeps a
//! compiled form of it (orthonormalized subspace bases, flattened matrices)
//! so that membership tests in the sampling loop do not allocate for the
//! common shapes.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};

type Scratch = SmallVec<[f64; 8]>;

/// Structured description of a region. Boundaries follow the defining
/// inequalities exactly: balls, cubes, `G_delta` and `F_delta` are strict,
/// `E_alpha` and cones are closed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RegionDescriptor {
    /// All of `R^d`.
    Whole { dim: usize },
    /// `||x|| < r`.
    Ball { dim: usize, r: f64 },
    /// `|x_k| < r` for every coordinate.
    Cube { dim: usize, r: f64 },
    /// `|x_l| >= |x_i|^alpha`, other coordinates free.
    EAlpha {
        dim: usize,
        alpha: f64,
        i: usize,
        l: usize,
    },
    /// `||P_{U^perp} x|| < delta ||P_U x||` with `U` spanned by `u1`.
    GDelta { delta: f64, u1: Vec<Vec<f64>> },
    /// `||P_V x|| < delta ||P_U x||` with `V` orthogonal to `U`; the rest of
    /// the space is unconstrained.
    FDelta {
        delta: f64,
        u1: Vec<Vec<f64>>,
        v: Vec<Vec<f64>>,
    },
    /// `||P_V x|| <= kappa ||P_U x||` with `V` orthogonal to `U = core`.
    Cone {
        kappa: f64,
        core: Vec<Vec<f64>>,
        controlled: Vec<Vec<f64>>,
    },
    /// `Y + F`: the base region lives on `Y^perp`, expressed in the
    /// orthonormal completion basis of `Y` (see [`complement_basis`]).
    Cylinder {
        axis: Vec<Vec<f64>>,
        dim: usize,
        base: Box<RegionDescriptor>,
    },
    Complement { inner: Box<RegionDescriptor> },
    /// `inner + offset`.
    Translate {
        inner: Box<RegionDescriptor>,
        offset: Vec<f64>,
    },
    /// `{x : M x in inner}`, i.e. `M^{-1} inner` for invertible `M`.
    Preimage {
        map: Vec<Vec<f64>>,
        inner: Box<RegionDescriptor>,
    },
    Intersection { parts: Vec<RegionDescriptor> },
    Union { parts: Vec<RegionDescriptor> },
}

#[derive(Clone, Debug)]
enum Controlled {
    /// Orthogonal complement of the core subspace.
    Rest,
    Basis(Vec<f64>),
}

#[derive(Clone, Debug)]
enum Compiled {
    Whole,
    Ball { r2: f64 },
    Cube { r: f64 },
    EAlpha { alpha: f64, i: usize, l: usize },
    Cone {
        core: Vec<f64>,
        controlled: Controlled,
        ratio2: f64,
        closed: bool,
    },
    Cylinder { coords: Vec<f64>, base: Box<Compiled> },
    Complement(Box<Compiled>),
    Translate { offset: Vec<f64>, inner: Box<Compiled> },
    Preimage { map: Vec<f64>, inner: Box<Compiled> },
    Intersection(Vec<Compiled>),
    Union(Vec<Compiled>),
}

/// A measurable subset of `R^d` with a deterministic membership predicate.
#[derive(Clone, Debug)]
pub struct Region {
    dim: usize,
    descriptor: RegionDescriptor,
    compiled: Compiled,
}

impl PartialEq for Region {
    fn eq(&self, other: &Self) -> bool {
        self.descriptor == other.descriptor
    }
}

fn bad(msg: impl Into<String>) -> Error {
    Error::BadParameter(msg.into())
}

fn positive(name: &str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(bad(format!("{name} must be positive and finite, got {x}")))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Gram-Schmidt on `vectors`, rejecting rank deficiency.
fn orthonormalize(vectors: &[Vec<f64>], dim: usize) -> Result<Vec<Vec<f64>>> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(vectors.len());
    for v in vectors {
        if v.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: v.len(),
            });
        }
        let scale = dot(v, v).sqrt();
        let mut w = v.clone();
        // two passes keep the result orthogonal to working precision
        for _ in 0..2 {
            for u in &out {
                let c = dot(&w, u);
                w.iter_mut().zip(u).for_each(|(x, y)| *x -= c * y);
            }
        }
        let n = dot(&w, &w).sqrt();
        if !(n > 1e-10 * scale) || scale == 0.0 {
            return Err(bad("subspace spanning vectors are linearly dependent"));
        }
        w.iter_mut().for_each(|x| *x /= n);
        out.push(w);
    }
    Ok(out)
}

/// Orthonormal basis of the complement of `span(axis)`, obtained by running
/// Gram-Schmidt over the canonical vectors in order. With an empty axis this
/// is the canonical basis.
pub fn complement_basis(axis: &[Vec<f64>], dim: usize) -> Result<Vec<Vec<f64>>> {
    let mut basis = orthonormalize(axis, dim)?;
    let p = basis.len();
    for k in 0..dim {
        if basis.len() == dim {
            break;
        }
        let mut w = vec![0.0; dim];
        w[k] = 1.0;
        for _ in 0..2 {
            for u in &basis {
                let c = dot(&w, u);
                w.iter_mut().zip(u).for_each(|(x, y)| *x -= c * y);
            }
        }
        let n = dot(&w, &w).sqrt();
        if n > 1e-8 {
            w.iter_mut().for_each(|x| *x /= n);
            basis.push(w);
        }
    }
    Ok(basis.split_off(p))
}

fn flatten(rows: &[Vec<f64>]) -> Vec<f64> {
    rows.iter().flatten().copied().collect()
}

fn subspace_dim(vectors: &[Vec<f64>]) -> Result<usize> {
    vectors
        .first()
        .map(Vec::len)
        .ok_or_else(|| bad("subspace needs at least one spanning vector"))
}

fn check_orthogonal(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<()> {
    for u in a {
        for v in b {
            if dot(u, v).abs() > 1e-9 {
                return Err(bad("controlled subspace must be orthogonal to the core subspace"));
            }
        }
    }
    Ok(())
}

fn compile(desc: &RegionDescriptor) -> Result<(usize, Compiled)> {
    use RegionDescriptor as D;
    Ok(match desc {
        D::Whole { dim } => (*dim, Compiled::Whole),
        D::Ball { dim, r } => {
            positive("radius", *r)?;
            (*dim, Compiled::Ball { r2: r * r })
        }
        D::Cube { dim, r } => {
            positive("half side", *r)?;
            (*dim, Compiled::Cube { r: *r })
        }
        D::EAlpha { dim, alpha, i, l } => {
            positive("alpha", *alpha)?;
            if i == l || *i >= *dim || *l >= *dim {
                return Err(bad(format!("coordinates ({i}, {l}) invalid in dimension {dim}")));
            }
            (
                *dim,
                Compiled::EAlpha {
                    alpha: *alpha,
                    i: *i,
                    l: *l,
                },
            )
        }
        D::GDelta { delta, u1 } => {
            positive("delta", *delta)?;
            let dim = subspace_dim(u1)?;
            let core = orthonormalize(u1, dim)?;
            if core.len() >= dim {
                return Err(bad("G_delta needs a proper subspace U_1"));
            }
            (
                dim,
                Compiled::Cone {
                    core: flatten(&core),
                    controlled: Controlled::Rest,
                    ratio2: delta * delta,
                    closed: false,
                },
            )
        }
        D::FDelta { delta, u1, v } => {
            positive("delta", *delta)?;
            let dim = subspace_dim(u1)?;
            let core = orthonormalize(u1, dim)?;
            let ctrl = orthonormalize(v, dim)?;
            check_orthogonal(&core, &ctrl)?;
            (
                dim,
                Compiled::Cone {
                    core: flatten(&core),
                    controlled: Controlled::Basis(flatten(&ctrl)),
                    ratio2: delta * delta,
                    closed: false,
                },
            )
        }
        D::Cone {
            kappa,
            core,
            controlled,
        } => {
            if !(*kappa > 0.0 && *kappa < 1.0) {
                return Err(bad(format!("kappa must lie in (0, 1), got {kappa}")));
            }
            let dim = subspace_dim(core)?;
            let core = orthonormalize(core, dim)?;
            let ctrl = orthonormalize(controlled, dim)?;
            check_orthogonal(&core, &ctrl)?;
            (
                dim,
                Compiled::Cone {
                    core: flatten(&core),
                    controlled: Controlled::Basis(flatten(&ctrl)),
                    ratio2: kappa * kappa,
                    closed: true,
                },
            )
        }
        D::Cylinder { axis, dim, base } => {
            let coords = complement_basis(axis, *dim)?;
            let (bdim, base) = compile(base)?;
            if bdim != coords.len() {
                return Err(Error::DimensionMismatch {
                    expected: coords.len(),
                    found: bdim,
                });
            }
            (
                *dim,
                Compiled::Cylinder {
                    coords: flatten(&coords),
                    base: Box::new(base),
                },
            )
        }
        D::Complement { inner } => {
            let (dim, inner) = compile(inner)?;
            (dim, Compiled::Complement(Box::new(inner)))
        }
        D::Translate { inner, offset } => {
            let (dim, inner) = compile(inner)?;
            if offset.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: offset.len(),
                });
            }
            (
                dim,
                Compiled::Translate {
                    offset: offset.clone(),
                    inner: Box::new(inner),
                },
            )
        }
        D::Preimage { map, inner } => {
            let (dim, inner) = compile(inner)?;
            if map.len() != dim || map.iter().any(|r| r.len() != dim) {
                return Err(bad("preimage map must be square and match the region dimension"));
            }
            (
                dim,
                Compiled::Preimage {
                    map: flatten(map),
                    inner: Box::new(inner),
                },
            )
        }
        D::Intersection { parts } | D::Union { parts } => {
            let compiled = parts.iter().map(compile).collect::<Result<Vec<_>>>()?;
            let dim = compiled
                .first()
                .map(|c| c.0)
                .ok_or_else(|| bad("empty intersection/union"))?;
            if let Some((d, _)) = compiled.iter().find(|c| c.0 != dim) {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: *d,
                });
            }
            let parts = compiled.into_iter().map(|c| c.1).collect();
            let c = if matches!(desc, D::Union { .. }) {
                Compiled::Union(parts)
            } else {
                Compiled::Intersection(parts)
            };
            (dim, c)
        }
    })
}

/// `sum_k (b_k . x)^2` over the rows `b_k` of an orthonormal family.
fn projected_norm2(rows: &[f64], x: &[f64]) -> f64 {
    rows.chunks_exact(x.len()).map(|b| dot(b, x).powi(2)).sum()
}

impl Compiled {
    fn contains(&self, x: &[f64]) -> bool {
        match self {
            Compiled::Whole => true,
            Compiled::Ball { r2 } => dot(x, x) < *r2,
            Compiled::Cube { r } => x.iter().all(|v| v.abs() < *r),
            Compiled::EAlpha { alpha, i, l } => x[*l].abs() >= x[*i].abs().powf(*alpha),
            Compiled::Cone {
                core,
                controlled,
                ratio2,
                closed,
            } => {
                let u2 = projected_norm2(core, x);
                let v2 = match controlled {
                    Controlled::Rest => (dot(x, x) - u2).max(0.0),
                    Controlled::Basis(b) => projected_norm2(b, x),
                };
                if *closed {
                    v2 <= ratio2 * u2
                } else {
                    v2 < ratio2 * u2
                }
            }
            Compiled::Cylinder { coords, base } => {
                let y: Scratch = coords.chunks_exact(x.len()).map(|b| dot(b, x)).collect();
                base.contains(&y)
            }
            Compiled::Complement(inner) => !inner.contains(x),
            Compiled::Translate { offset, inner } => {
                let y: Scratch = x.iter().zip(offset).map(|(a, b)| a - b).collect();
                inner.contains(&y)
            }
            Compiled::Preimage { map, inner } => {
                let y: Scratch = map.chunks_exact(x.len()).map(|row| dot(row, x)).collect();
                inner.contains(&y)
            }
            Compiled::Intersection(parts) => parts.iter().all(|p| p.contains(x)),
            Compiled::Union(parts) => parts.iter().any(|p| p.contains(x)),
        }
    }
}

/// Builds a region from its descriptor, validating every parameter.
pub fn make_region(descriptor: RegionDescriptor) -> Result<Region> {
    let (dim, compiled) = compile(&descriptor)?;
    if dim == 0 {
        return Err(bad("dimension must be at least 1"));
    }
    Ok(Region {
        dim,
        descriptor,
        compiled,
    })
}

fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn columns(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.column_iter().map(|c| c.iter().copied().collect()).collect()
}

impl Region {
    pub fn whole(dim: usize) -> Region {
        make_region(RegionDescriptor::Whole { dim }).expect("whole space")
    }

    pub fn ball(dim: usize, r: f64) -> Result<Region> {
        make_region(RegionDescriptor::Ball { dim, r })
    }

    pub fn cube(dim: usize, r: f64) -> Result<Region> {
        make_region(RegionDescriptor::Cube { dim, r })
    }

    /// `E_alpha = {|x_2| >= |x_1|^alpha}` in the plane.
    pub fn e_alpha(alpha: f64) -> Result<Region> {
        Self::e_alpha_in(2, alpha, 0, 1)
    }

    pub fn e_alpha_in(dim: usize, alpha: f64, i: usize, l: usize) -> Result<Region> {
        make_region(RegionDescriptor::EAlpha { dim, alpha, i, l })
    }

    /// `G_delta` for the subspace spanned by the columns of `u1`.
    pub fn g_delta(delta: f64, u1: &DMatrix<f64>) -> Result<Region> {
        make_region(RegionDescriptor::GDelta {
            delta,
            u1: columns(u1),
        })
    }

    pub fn f_delta(delta: f64, u1: &DMatrix<f64>, v: &DMatrix<f64>) -> Result<Region> {
        make_region(RegionDescriptor::FDelta {
            delta,
            u1: columns(u1),
            v: columns(v),
        })
    }

    pub fn cone(kappa: f64, core: &DMatrix<f64>, controlled: &DMatrix<f64>) -> Result<Region> {
        make_region(RegionDescriptor::Cone {
            kappa,
            core: columns(core),
            controlled: columns(controlled),
        })
    }

    /// `Y + F` where `F = base` lives on `Y^perp`; `axis` columns span `Y`.
    pub fn cylinder(base: &Region, axis: &DMatrix<f64>) -> Result<Region> {
        make_region(RegionDescriptor::Cylinder {
            axis: columns(axis),
            dim: axis.nrows(),
            base: Box::new(base.descriptor.clone()),
        })
    }

    pub fn complement(&self) -> Region {
        make_region(RegionDescriptor::Complement {
            inner: Box::new(self.descriptor.clone()),
        })
        .expect("complement of a valid region")
    }

    pub fn translate(&self, offset: &[f64]) -> Result<Region> {
        make_region(RegionDescriptor::Translate {
            inner: Box::new(self.descriptor.clone()),
            offset: offset.to_vec(),
        })
    }

    /// `{x : M x in self}`.
    pub fn preimage(&self, map: &DMatrix<f64>) -> Result<Region> {
        make_region(RegionDescriptor::Preimage {
            map: to_rows(map),
            inner: Box::new(self.descriptor.clone()),
        })
    }

    pub fn intersect(&self, other: &Region) -> Result<Region> {
        make_region(RegionDescriptor::Intersection {
            parts: vec![self.descriptor.clone(), other.descriptor.clone()],
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn descriptor(&self) -> &RegionDescriptor {
        &self.descriptor
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        debug_assert_eq!(x.len(), self.dim);
        self.compiled.contains(x)
    }

    /// Half side of an origin-centred cube containing the region, if the
    /// region is known to be bounded.
    pub fn bounding_half_width(&self) -> Option<f64> {
        bound(&self.descriptor)
    }
}

fn bound(desc: &RegionDescriptor) -> Option<f64> {
    use RegionDescriptor as D;
    match desc {
        D::Ball { r, .. } | D::Cube { r, .. } => Some(*r),
        D::Translate { inner, offset } => {
            let shift = offset.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            bound(inner).map(|h| h + shift)
        }
        D::Preimage { map, inner } => {
            let h = bound(inner)?;
            let d = map.len();
            let m = DMatrix::from_row_slice(d, d, &flatten(map));
            let inv = m.try_inverse()?;
            // ||M^{-1} y||_inf <= ||M^{-1}||_F ||y||_2 <= ||M^{-1}||_F sqrt(d) h
            Some(inv.norm() * (d as f64).sqrt() * h)
        }
        D::Intersection { parts } => parts.iter().filter_map(bound).reduce(f64::min),
        D::Union { parts } => parts.iter().map(bound).collect::<Option<Vec<_>>>()?.into_iter().reduce(f64::max),
        _ => None,
    }
}
