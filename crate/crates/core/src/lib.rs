//! Gap statistics of discrete point sets in the plane.
//!
//! The crate computes slope and angle gap distributions for Farey sequences,
//! unimodular and affine lattices and translation surfaces, and compares them
//! with Hall's limiting law via the BCZ map.

// NaN must fail these validity checks, so they are written as negated comparisons.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod affine;
pub mod bcz;
pub mod cli;
pub mod error;
pub mod farey;
pub mod geometry;
pub mod hall;
pub mod lattice;
pub mod pointcloud;
pub mod scalar;
pub mod stats;
pub mod surface;

pub use error::{Error, Result};
pub use scalar::{frac, FieldScalar, Fraction, GoldenNum, Scalar};
pub use geometry::{BoundingBox, Mat2, Region, Vec2};
pub use pointcloud::{GapSequence, PointSystem, SearchLimits, SlopeSequence};

pub type Vec2f = Vec2<f64>;
pub type Mat2f = Mat2<f64>;
pub type Lattice = lattice::UnimodularLattice<f64>;
pub type ExactLattice = lattice::UnimodularLattice<Fraction>;
pub type Affine = affine::AffineLattice<f64>;
pub type FloatSurface = surface::TranslationSurface<f64>;
pub type GoldenSurface = surface::TranslationSurface<GoldenNum>;
