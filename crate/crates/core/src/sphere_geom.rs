//! Exact spherical primitives on the unit sphere embedded in R³.
//!
//! Distances and angles are computed with the `atan2(|a×b|, a·b)` form, which
//! is the clamped arccos of the dot product evaluated without the loss of
//! precision arccos suffers near 0 and π.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;

/// Tolerance on ‖p‖ = 1 for points handed to [`SpherePoint::from_unit`].
pub const UNIT_TOL: f64 = 1e-12;
/// Tolerance on orthogonality and unit length of tangent vectors.
pub const TANGENT_TOL: f64 = 1e-10;
/// Segments whose endpoints are closer than this to being antipodal are rejected.
pub const ANTIPODAL_GUARD: f64 = 1e-9;

/// Unsigned angle between two arbitrary nonzero vectors.
pub fn angle_between(a: &Vec3, b: &Vec3) -> f64 {
    a.cross(b).norm().atan2(a.dot(b))
}

/// A point on the unit sphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpherePoint(Vec3);

impl SpherePoint {
    /// Projects `v` radially onto the sphere.
    pub fn new(v: Vec3) -> Result<Self> {
        let n = v.norm();
        if !n.is_finite() || n < 1e-300 {
            return Err(Error::Validation(format!(
                "cannot project {:?} onto the sphere",
                v.as_slice()
            )));
        }
        Ok(Self(v / n))
    }

    pub fn from_xyz(x: f64, y: f64, z: f64) -> Result<Self> {
        Self::new(Vec3::new(x, y, z))
    }

    /// Accepts `v` only if it is already unit within [`UNIT_TOL`].
    pub fn from_unit(v: Vec3) -> Result<Self> {
        let n = v.norm();
        if (n - 1.0).abs() > UNIT_TOL {
            return Err(Error::Validation(format!("|p| = {n} is not 1")));
        }
        Ok(Self(v / n))
    }

    /// Wraps a vector the caller guarantees to be unit (renormalized anyway).
    pub(crate) fn new_unchecked(v: Vec3) -> Self {
        Self(v / v.norm())
    }

    pub fn north_pole() -> Self {
        Self(Vec3::z())
    }

    pub fn south_pole() -> Self {
        Self(-Vec3::z())
    }

    pub fn coords(&self) -> &Vec3 {
        &self.0
    }

    pub fn to_array(&self) -> [f64; 3] {
        [self.0.x, self.0.y, self.0.z]
    }

    pub fn antipode(&self) -> Self {
        Self(-self.0)
    }
}

impl From<SpherePoint> for Vec3 {
    fn from(p: SpherePoint) -> Self {
        p.0
    }
}

/// A vector in the tangent plane at `base`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangentVector {
    base: SpherePoint,
    dir: Vec3,
}

impl TangentVector {
    pub fn new(base: SpherePoint, dir: Vec3) -> Result<Self> {
        let scale = dir.norm().max(1.0);
        if base.0.dot(&dir).abs() > TANGENT_TOL * scale {
            return Err(Error::Validation(format!(
                "tangent vector not orthogonal to its base point (dot = {:e})",
                base.0.dot(&dir)
            )));
        }
        Ok(Self { base, dir })
    }

    /// Projects `dir` onto the tangent plane at `base` and normalizes it.
    pub fn unit(base: SpherePoint, dir: Vec3) -> Result<Self> {
        let proj = dir - base.0 * base.0.dot(&dir);
        let n = proj.norm();
        if !n.is_finite() || n < 1e-300 {
            return Err(Error::Validation("zero tangent direction".into()));
        }
        Ok(Self {
            base,
            dir: proj / n,
        })
    }

    pub fn base(&self) -> SpherePoint {
        self.base
    }

    pub fn dir(&self) -> &Vec3 {
        &self.dir
    }

    pub fn is_unit(&self) -> bool {
        (self.dir.norm() - 1.0).abs() <= TANGENT_TOL
    }

    pub fn rotated(&self, r: &Rotation3) -> Self {
        Self {
            base: r.apply_point(&self.base),
            dir: r.apply(&self.dir),
        }
    }
}

/// The minimizing great-circle arc between two non-antipodal points.
///
/// `pole` is the unit normal of the supporting great circle, oriented so that
/// `pole × start` is the forward tangent at `start`. Zero-length segments keep
/// the pole of the segment they were cut from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeodesicSegment {
    start: SpherePoint,
    end: SpherePoint,
    length: f64,
    pole: Vec3,
}

impl GeodesicSegment {
    pub fn new(start: SpherePoint, end: SpherePoint) -> Result<Self> {
        let length = geodesic_distance(&start, &end);
        if length >= std::f64::consts::PI - ANTIPODAL_GUARD {
            return Err(Error::Validation(format!(
                "segment endpoints are (nearly) antipodal: d = {length}"
            )));
        }
        let cross = start.0.cross(&end.0);
        let pole = if cross.norm() > 0.0 {
            cross.normalize()
        } else {
            any_orthogonal(&start.0)
        };
        Ok(Self {
            start,
            end,
            length,
            pole,
        })
    }

    /// The arc of length `length` leaving `start` along the unit tangent `dir`.
    pub fn from_direction(start: SpherePoint, dir: &TangentVector, length: f64) -> Result<Self> {
        if !(0.0..std::f64::consts::PI - ANTIPODAL_GUARD).contains(&length) {
            return Err(Error::Range {
                value: length,
                min: 0.0,
                max: std::f64::consts::PI - ANTIPODAL_GUARD,
            });
        }
        let d = dir.dir.normalize();
        let pole = start.0.cross(&d).normalize();
        let end = SpherePoint::new_unchecked(start.0 * length.cos() + d * length.sin());
        Ok(Self {
            start,
            end,
            length,
            pole,
        })
    }

    pub fn start(&self) -> SpherePoint {
        self.start
    }

    pub fn end(&self) -> SpherePoint {
        self.end
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn pole(&self) -> &Vec3 {
        &self.pole
    }

    /// Point at arc length `s` from the start, without range checking.
    pub(crate) fn point_unchecked(&self, s: f64) -> Vec3 {
        let t0 = self.pole.cross(&self.start.0);
        self.start.0 * s.cos() + t0 * s.sin()
    }

    /// Unit forward tangent at arc length `s`.
    pub fn tangent_at(&self, s: f64) -> TangentVector {
        let p = self.point_unchecked(s);
        let base = SpherePoint::new_unchecked(p);
        TangentVector {
            dir: self.pole.cross(&base.0),
            base,
        }
    }

    pub fn start_tangent(&self) -> TangentVector {
        TangentVector {
            base: self.start,
            dir: self.pole.cross(&self.start.0),
        }
    }

    pub fn end_tangent(&self) -> TangentVector {
        TangentVector {
            base: self.end,
            dir: self.pole.cross(&self.end.0),
        }
    }

    /// The sub-arc between arc lengths `a <= b`, sharing this segment's pole.
    pub fn sub_segment(&self, a: f64, b: f64) -> Result<Self> {
        let a = a.max(0.0);
        let b = b.min(self.length).max(a);
        Ok(Self {
            start: geodesic_point(self, a)?,
            end: geodesic_point(self, b)?,
            length: b - a,
            pole: self.pole,
        })
    }

    pub fn rotated(&self, r: &Rotation3) -> Self {
        Self {
            start: r.apply_point(&self.start),
            end: r.apply_point(&self.end),
            length: self.length,
            pole: r.apply(&self.pole),
        }
    }
}

/// A proper rotation of R³.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation3 {
    matrix: Matrix3<f64>,
}

impl Rotation3 {
    pub fn identity() -> Self {
        Self {
            matrix: Matrix3::identity(),
        }
    }

    /// Builds a rotation from a matrix, checking RᵀR = I and det R = 1 within 1e-12.
    pub fn from_matrix(matrix: Matrix3<f64>) -> Result<Self> {
        let orth = (matrix.transpose() * matrix - Matrix3::identity()).amax();
        let det = matrix.determinant();
        if orth > 1e-12 || (det - 1.0).abs() > 1e-12 {
            return Err(Error::Validation(format!(
                "matrix is not a proper rotation (|RᵀR − I| = {orth:e}, det = {det})"
            )));
        }
        Ok(Self { matrix })
    }

    /// The rotation whose columns are the images of e₁, e₂, e₃.
    pub fn from_columns(a: &Vec3, b: &Vec3, c: &Vec3) -> Result<Self> {
        Self::from_matrix(Matrix3::from_columns(&[*a, *b, *c]))
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.matrix
    }

    pub fn apply(&self, v: &Vec3) -> Vec3 {
        self.matrix * v
    }

    pub fn apply_point(&self, p: &SpherePoint) -> SpherePoint {
        SpherePoint::new_unchecked(self.matrix * p.0)
    }

    pub fn inverse(&self) -> Self {
        Self {
            matrix: self.matrix.transpose(),
        }
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &Rotation3) -> Self {
        Self {
            matrix: self.matrix * other.matrix,
        }
    }
}

/// Great-circle distance in radians.
pub fn geodesic_distance(p: &SpherePoint, q: &SpherePoint) -> f64 {
    angle_between(&p.0, &q.0)
}

/// Point at arc length `s` along `seg`.
pub fn geodesic_point(seg: &GeodesicSegment, s: f64) -> Result<SpherePoint> {
    let slack = 1e-12 * seg.length.max(1.0);
    if !(s >= -slack && s <= seg.length + slack) {
        return Err(Error::Range {
            value: s,
            min: 0.0,
            max: seg.length,
        });
    }
    if s <= 0.0 {
        return Ok(seg.start);
    }
    if s >= seg.length {
        return Ok(seg.end);
    }
    Ok(SpherePoint::new_unchecked(seg.point_unchecked(s)))
}

/// Rodrigues rotation by `angle` about the unit `axis`, right-handed.
pub fn rotation_about_axis(axis: &Vec3, angle: f64) -> Result<Rotation3> {
    if (axis.norm() - 1.0).abs() > TANGENT_TOL {
        return Err(Error::Validation(format!(
            "rotation axis must be unit, |axis| = {}",
            axis.norm()
        )));
    }
    let k = axis.cross_matrix();
    let matrix = Matrix3::identity() + k * angle.sin() + k * k * (1.0 - angle.cos());
    Ok(Rotation3 { matrix })
}

/// Unsigned exterior angle between two unit tangents at the same point, in [0, π].
pub fn turning_angle(incoming: &TangentVector, outgoing: &TangentVector) -> Result<f64> {
    let gap = (incoming.base.0 - outgoing.base.0).norm();
    if gap > TANGENT_TOL {
        return Err(Error::Validation(format!(
            "tangent vectors based at different points (gap {gap:e})"
        )));
    }
    if !incoming.is_unit() || !outgoing.is_unit() {
        return Err(Error::Validation("turning angle needs unit tangents".into()));
    }
    Ok(angle_between(&incoming.dir, &outgoing.dir))
}

/// Darboux frame of a curve on S²: tangent, conormal u = n × t, normal n = p.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DarbouxFrame {
    pub t: Vec3,
    pub u: Vec3,
    pub n: Vec3,
}

impl DarbouxFrame {
    pub fn determinant(&self) -> f64 {
        Matrix3::from_columns(&[self.t, self.u, self.n]).determinant()
    }
}

pub fn frame_at(p: &SpherePoint, t: &TangentVector) -> Result<DarbouxFrame> {
    if !t.is_unit() {
        return Err(Error::Validation("frame needs a unit tangent".into()));
    }
    if (t.base.0 - p.0).norm() > TANGENT_TOL {
        return Err(Error::Validation("tangent is not based at p".into()));
    }
    let n = p.0;
    Ok(DarbouxFrame {
        t: t.dir,
        u: n.cross(&t.dir),
        n,
    })
}

/// Some unit vector orthogonal to `v`.
pub(crate) fn any_orthogonal(v: &Vec3) -> Vec3 {
    let trial = if v.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    (trial - v * v.dot(&trial)).normalize()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn sp(x: f64, y: f64, z: f64) -> SpherePoint {
        SpherePoint::from_xyz(x, y, z).unwrap()
    }

    #[test]
    fn distance_cases() {
        let p = sp(1.0, 0.0, 0.0);
        assert_abs_diff_eq!(geodesic_distance(&p, &sp(0.0, 0.0, 1.0)), FRAC_PI_2, epsilon = 1e-15);
        assert_eq!(geodesic_distance(&p, &p), 0.0);
        assert_abs_diff_eq!(geodesic_distance(&p, &p.antipode()), PI, epsilon = 1e-15);
    }

    #[test]
    fn from_unit_rejects_non_unit() {
        assert!(SpherePoint::from_unit(Vec3::new(1.0, 1e-5, 0.0)).is_err());
        assert!(SpherePoint::new(Vec3::zeros()).is_err());
        assert!(SpherePoint::new(Vec3::new(f64::NAN, 0.0, 0.0)).is_err());
    }

    #[test]
    fn point_along_segment() {
        let seg = GeodesicSegment::new(sp(1.0, 0.0, 0.0), sp(0.0, 1.0, 0.0)).unwrap();
        let m = geodesic_point(&seg, FRAC_PI_4).unwrap();
        let h = 0.5f64.sqrt();
        assert_abs_diff_eq!((m.coords() - Vec3::new(h, h, 0.0)).norm(), 0.0, epsilon = 1e-15);
        assert_eq!(geodesic_point(&seg, 0.0).unwrap(), seg.start());

        let seg = GeodesicSegment::new(sp(1.0, 0.0, 0.0), sp(0.0, 0.0, 1.0)).unwrap();
        let e = geodesic_point(&seg, FRAC_PI_2).unwrap();
        assert_abs_diff_eq!((e.coords() - Vec3::z()).norm(), 0.0, epsilon = 1e-15);
        assert!(matches!(geodesic_point(&seg, 2.0), Err(Error::Range { .. })));
        assert!(geodesic_point(&seg, -0.1).is_err());
    }

    #[test]
    fn antipodal_segment_rejected() {
        let p = sp(0.3, -0.2, 0.9);
        assert!(GeodesicSegment::new(p, p.antipode()).is_err());
    }

    #[test]
    fn rotation_cases() {
        let id = rotation_about_axis(&Vec3::y(), 0.0).unwrap();
        assert_eq!(*id.matrix(), Matrix3::identity());
        let q = rotation_about_axis(&Vec3::z(), FRAC_PI_2).unwrap();
        assert_abs_diff_eq!((q.apply(&Vec3::x()) - Vec3::y()).norm(), 0.0, epsilon = 1e-15);
        assert!(rotation_about_axis(&Vec3::new(1.0, 1.0, 0.0), 0.3).is_err());
    }

    #[test]
    fn rotation_zeroes_third_component_of_incoming_bend_tangent() {
        // Canonical vertex frame with turning angle θ and half-edge δ.
        let (theta, delta) = (1.0f64, 0.25f64);
        let alpha = (PI - theta) / 2.0;
        let (k, s_) = (alpha.cos(), alpha.sin());
        let (s, c) = (delta.sin(), delta.cos());
        let root = (s * s + k * k * c * c).sqrt();
        let beta = (s / root).atan2(k * c / root);
        let v_minus = Vec3::new(-k * c, s_ * c, s);
        let r = rotation_about_axis(&Vec3::y(), beta).unwrap();
        // Row-vector convention v·Rᵀ of the construction, i.e. the inverse map.
        let w = r.inverse().apply(&v_minus);
        assert_abs_diff_eq!(w.z, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(beta.cos(), k * c / root, epsilon = 1e-15);
    }

    #[test]
    fn turning_angle_cases() {
        let p = SpherePoint::north_pole();
        let a = TangentVector::unit(p, Vec3::x()).unwrap();
        let b = TangentVector::unit(p, -Vec3::x()).unwrap();
        let c = TangentVector::unit(p, Vec3::y()).unwrap();
        assert_eq!(turning_angle(&a, &a).unwrap(), 0.0);
        assert_abs_diff_eq!(turning_angle(&a, &b).unwrap(), PI, epsilon = 1e-15);
        assert_abs_diff_eq!(turning_angle(&a, &c).unwrap(), FRAC_PI_2, epsilon = 1e-15);
        let elsewhere = TangentVector::unit(sp(1.0, 0.0, 0.0), Vec3::y()).unwrap();
        assert!(turning_angle(&a, &elsewhere).is_err());
    }

    #[test]
    fn frame_cases() {
        let p = SpherePoint::north_pole();
        let f = frame_at(&p, &TangentVector::unit(p, Vec3::x()).unwrap()).unwrap();
        assert_abs_diff_eq!((f.u - Vec3::y()).norm(), 0.0, epsilon = 1e-15);
        let f = frame_at(&p, &TangentVector::unit(p, Vec3::y()).unwrap()).unwrap();
        assert_abs_diff_eq!((f.u + Vec3::x()).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(f.determinant(), 1.0, epsilon = 1e-15);
        let half = TangentVector::new(p, Vec3::x() * 0.5).unwrap();
        assert!(frame_at(&p, &half).is_err());
    }

    #[test]
    fn distance_never_nan_near_rounding_limits() {
        let p = sp(0.6, 0.8, 0.0);
        let q = SpherePoint(Vec3::new(0.6, 0.8, 0.0) * (1.0 + 1e-16));
        assert!(geodesic_distance(&p, &q).is_finite());
        assert!(geodesic_distance(&p, &q.antipode()).is_finite());
    }

    #[test]
    fn sub_segment_keeps_direction_when_empty() {
        let seg = GeodesicSegment::new(sp(1.0, 0.0, 0.0), sp(0.0, 1.0, 0.0)).unwrap();
        let empty = seg.sub_segment(0.5, 0.5).unwrap();
        assert_eq!(empty.length(), 0.0);
        assert_abs_diff_eq!((empty.pole() - Vec3::z()).norm(), 0.0, epsilon = 1e-15);
    }
}
