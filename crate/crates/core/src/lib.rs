//! Equivalence of density families for self-adjoint expansive maps.
//!
//! A measurable set `E ⊆ R^d` has the origin as a point of `A`-density when
//! `|E ∩ A^{-j}B| / |A^{-j}B| → 1`. This crate decides when two self-adjoint
//! expansive maps produce the same dense sets ([`equivalence`]), estimates
//! the density quotients of witness sets by Monte Carlo and in closed form
//! ([`density`], [`region`]), and classifies integer dilation matrices with
//! exact arithmetic ([`lattice`]).

pub mod density;
pub mod equivalence;
pub mod error;
pub mod lattice;
pub mod matrix;
pub mod region;
pub mod spectral;

pub use density::{
    classify_series, cylinder_reduce, density_ratio, density_sweep, density_sweep_with, exact_ealpha_ratio,
    exact_ealpha_ratio_window, ClassifyConfig, DensityEstimate, DensitySeries, ExpansiveMap, LimitClass,
};
pub use equivalence::{
    conjugate_decision_transport, conjugate_map, decide_equivalence, simultaneous_diagonalization, Certification,
    EquivalenceVerdict, Obstruction,
};
pub use error::{Error, Result};
pub use lattice::{
    check_lattice_condition, dyadic_class, mra_equivalence_report, IntMatrix, LatticeClassification, MraReport,
    MraStatus, SimilarityClass, TrivialEquivalenceWitness,
};
pub use matrix::{parse_inline, MatrixJson, SymMatrix, DEFAULT_TOL};
pub use region::{make_region, Region, RegionDescriptor};
pub use spectral::{absolutize, decompose, is_expansive, is_positive, power, DiagonalMap, SpectralDecomposition};
