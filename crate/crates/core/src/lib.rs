//! Geodesic curvature integrals ∫|k|^p ds for curves on the unit sphere,
//! approximated through inscribed geodesic polygonals and constant-curvature
//! bends at their vertices.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bend_construction;
pub mod cli;
pub mod conformal;
pub mod curve_model;
pub mod error;
pub mod experiments;
pub mod polygonal;
pub mod quadrature;
pub mod report;
pub mod sphere_geom;

pub use error::{Error, Result};
pub use sphere_geom::{GeodesicSegment, Rotation3, SpherePoint, TangentVector, Vec3};
