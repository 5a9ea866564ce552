//! Curvature jets, Jacobi-operator obstructions, Riccati integration and
//! polynomial constraint classification for Riemannian 3-manifolds.
//!
//! Geometry code is generic over [`Real`] (`f32`, `f64`); polynomial code is
//! generic over [`Coeff`], which adds exact `BigRational` coefficients.

#![allow(
    clippy::needless_range_loop,
    clippy::neg_cmp_op_on_partial_ord,
    clippy::type_complexity
)]

pub mod curvature;
pub mod error;
pub mod expr;
pub mod frame_algebra;
pub mod jet;
pub mod linalg;
pub mod metric;
pub mod obstruction;
pub mod poly;
pub mod polyclass;
pub mod riccati;
pub mod scalar;

pub use error::{Error, Result};
pub use poly::{Coeff, UPoly};
pub use scalar::Real;

/// Rational numbers used by the exact polynomial backend.
pub type Rational = num_rational::BigRational;

pub type Jet = jet::Jet4<f64>;
pub type MetricJet = curvature::MetricJet<f64>;
pub type CurvaturePack = curvature::CurvaturePack<f64>;
pub type RankReport = curvature::RankReport<f64>;
pub type JacobiFrame = obstruction::JacobiFrame<f64>;
pub type ObstructionValues = obstruction::ObstructionValues<f64>;
pub type FrameData = frame_algebra::FrameData<f64>;
pub type PolyBundle = frame_algebra::PolyBundle<f64>;
pub type GeodesicPath = riccati::GeodesicPath<f64>;
pub type RationalInstance = polyclass::ConstraintInstance<Rational>;
pub type FloatInstance = polyclass::ConstraintInstance<f64>;
