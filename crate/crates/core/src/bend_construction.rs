//! Constant-curvature bends at polygonal corners, the glued C¹ curve γ(P),
//! and the closed-form p-rotation F_p(ℓ, θ).

use std::f64::consts::PI;
use std::io::Write;

use crate::error::{Error, Result};
use crate::polygonal::Polygonal;
use crate::sphere_geom::{
    angle_between, rotation_about_axis, GeodesicSegment, Rotation3, SpherePoint, TangentVector,
    Vec3,
};

/// Turning angles at or above π − this are treated as singular.
pub const SINGULAR_MARGIN: f64 = 1e-6;

/// Arc of the small circle {x : x·axis = cos Φ}, parametrized by the angle ω
/// about `axis` measured from `ref_dir`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BendArc {
    axis: Vec3,
    ref_dir: Vec3,
    colatitude: f64,
    angle_start: f64,
    angle_end: f64,
}

impl BendArc {
    pub fn new(axis: Vec3, ref_dir: Vec3, colatitude: f64, angle_start: f64, angle_end: f64) -> Result<Self> {
        if (axis.norm() - 1.0).abs() > 1e-12 || (ref_dir.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::Validation("bend axis and reference must be unit".into()));
        }
        if axis.dot(&ref_dir).abs() > 1e-12 {
            return Err(Error::Validation("bend reference direction must be orthogonal to the axis".into()));
        }
        if !(colatitude > 0.0 && colatitude < PI) {
            return Err(Error::Validation(format!("bend colatitude {colatitude} not in (0, pi)")));
        }
        Ok(Self {
            axis,
            ref_dir,
            colatitude,
            angle_start,
            angle_end,
        })
    }

    pub fn axis(&self) -> &Vec3 {
        &self.axis
    }

    pub fn ref_dir(&self) -> &Vec3 {
        &self.ref_dir
    }

    pub fn colatitude(&self) -> f64 {
        self.colatitude
    }

    pub fn angle_start(&self) -> f64 {
        self.angle_start
    }

    pub fn angle_end(&self) -> f64 {
        self.angle_end
    }

    /// Euclidean radius sin Φ.
    pub fn radius(&self) -> f64 {
        self.colatitude.sin()
    }

    /// |cot Φ|.
    pub fn curvature(&self) -> f64 {
        (self.colatitude.cos() / self.colatitude.sin()).abs()
    }

    pub fn length(&self) -> f64 {
        (self.angle_end - self.angle_start).abs() * self.radius()
    }

    /// |k|^p · length.
    pub fn kp_integral(&self, p: f64) -> f64 {
        self.curvature().powf(p) * self.length()
    }

    fn direction(&self) -> f64 {
        if self.angle_end >= self.angle_start {
            1.0
        } else {
            -1.0
        }
    }

    fn omega(&self, s: f64) -> f64 {
        self.angle_start + self.direction() * s / self.radius()
    }

    fn at_angle(&self, w: f64) -> Vec3 {
        let b2 = self.axis.cross(&self.ref_dir);
        self.axis * self.colatitude.cos() + (self.ref_dir * w.cos() + b2 * w.sin()) * self.radius()
    }

    /// Point at arc length `s` from the start.
    pub fn point_at(&self, s: f64) -> Vec3 {
        self.at_angle(self.omega(s))
    }

    /// Unit tangent at arc length `s`.
    pub fn tangent_at(&self, s: f64) -> Vec3 {
        let w = self.omega(s);
        let b2 = self.axis.cross(&self.ref_dir);
        (b2 * w.cos() - self.ref_dir * w.sin()) * self.direction()
    }

    /// Second derivative in arc length at `s`.
    pub fn acceleration_at(&self, s: f64) -> Vec3 {
        let w = self.omega(s);
        let b2 = self.axis.cross(&self.ref_dir);
        -(self.ref_dir * w.cos() + b2 * w.sin()) / self.radius()
    }

    pub fn start_point(&self) -> Vec3 {
        self.at_angle(self.angle_start)
    }

    pub fn end_point(&self) -> Vec3 {
        self.at_angle(self.angle_end)
    }

    pub fn rotated(&self, r: &Rotation3) -> Self {
        Self {
            axis: r.apply(&self.axis),
            ref_dir: r.apply(&self.ref_dir),
            ..*self
        }
    }

    fn reversed(&self) -> Self {
        Self {
            angle_start: self.angle_end,
            angle_end: self.angle_start,
            ..*self
        }
    }
}

/// The bend of a corner at the north pole, with the incoming edge arriving
/// along (−K, S, 0) and the outgoing edge leaving along (K, S, 0), where
/// K = sin(θ/2) and S = cos(θ/2).
#[derive(Debug, Clone, Copy)]
pub struct CanonicalBend {
    pub arc: BendArc,
    /// P₋, where the bend leaves the incoming edge.
    pub trim_in: Vec3,
    /// P₊, where the bend joins the outgoing edge.
    pub trim_out: Vec3,
    pub tangent_in: Vec3,
    pub tangent_out: Vec3,
    /// Rotation about e₂ taking the arc axis to e₃.
    pub tilt: Rotation3,
}

/// Bend for half edge length `delta` and turning angle `theta`; `None` when
/// θ = 0 (no bend).
pub fn canonical_bend(delta: f64, theta: f64) -> Result<Option<CanonicalBend>> {
    if !(delta > 0.0 && delta < std::f64::consts::FRAC_PI_2) {
        return Err(Error::Validation(format!("half length {delta} not in (0, pi/2)")));
    }
    if !(theta >= 0.0) {
        return Err(Error::Validation(format!("turning angle {theta} is negative")));
    }
    if theta >= PI - SINGULAR_MARGIN {
        return Err(Error::SingularAngle(theta));
    }
    if theta == 0.0 {
        return Ok(None);
    }
    let alpha = 0.5 * (PI - theta);
    let (big_s, big_k) = alpha.sin_cos();
    let (s, c) = delta.sin_cos();
    let trim_in = Vec3::new(big_k * s, -big_s * s, c);
    let trim_out = Vec3::new(big_k * s, big_s * s, c);
    let tangent_in = Vec3::new(-big_k * c, big_s * c, s);
    let tangent_out = Vec3::new(big_k * c, big_s * c, -s);

    let root = (s * s + big_k * big_k * c * c).sqrt();
    let tau = big_k * c / root;
    let sigma = s / root;
    let beta = sigma.atan2(tau);
    let tilt = rotation_about_axis(&Vec3::y(), beta)?.inverse();
    let q_in = tilt.apply(&trim_in);
    let q_out = tilt.apply(&trim_out);
    let colatitude = q_in.x.hypot(q_in.y).atan2(q_in.z);
    let w_in = q_in.y.atan2(q_in.x);
    let w_out = q_out.y.atan2(q_out.x).rem_euclid(2.0 * PI);
    let w_in = if w_in < 0.0 { w_in + 2.0 * PI } else { w_in };

    let back = tilt.inverse();
    let arc = BendArc::new(back.apply(&Vec3::z()), back.apply(&Vec3::x()), colatitude, w_in, w_out)?;

    let mismatch = angle_between(&arc.tangent_at(0.0), &tangent_in)
        .max(angle_between(&arc.tangent_at(arc.length()), &tangent_out));
    if mismatch > 1e-10 {
        return Err(Error::Internal(format!(
            "bend tangent mismatch {mismatch:e} at delta = {delta}, theta = {theta}"
        )));
    }
    Ok(Some(CanonicalBend {
        arc,
        trim_in,
        trim_out,
        tangent_in,
        tangent_out,
        tilt,
    }))
}

/// F_p(ℓ, θ): the p-rotation of one bend built on half length ℓ/2.
pub fn fp_closed_form(ell: f64, theta: f64, p: f64) -> Result<f64> {
    if !(ell > 0.0 && ell < PI) {
        return Err(Error::Validation(format!("edge length {ell} not in (0, pi)")));
    }
    if !(p >= 1.0) {
        return Err(Error::Validation(format!("exponent p = {p} must be >= 1")));
    }
    if !(theta >= 0.0) {
        return Err(Error::Validation(format!("turning angle {theta} is negative")));
    }
    if theta >= PI {
        return Err(Error::SingularAngle(theta));
    }
    if theta == 0.0 {
        return Ok(0.0);
    }
    let (sh, ch) = (0.5 * theta).sin_cos();
    let (sl, cl) = (0.5 * ell).sin_cos();
    let psi = (sl * sl + sh * sh * cl * cl).sqrt();
    Ok(2.0 * psi.atan2(ch * cl) / psi * sh.powf(p) / (ch * sl).powf(p - 1.0))
}

/// Placement of one vertex bend.
#[derive(Debug, Clone, Copy)]
pub struct VertexBendPlan {
    pub vertex: usize,
    /// δ = ℓᵢ/2 with ℓᵢ the shorter adjacent edge.
    pub half_length: f64,
    pub theta: f64,
    /// Maps the canonical corner to the world corner.
    pub local_frame: Rotation3,
    /// The canonical arc is traversed backwards (mirror-image corner).
    pub reversed: bool,
}

/// Bend placement at each interior vertex of `poly`.
pub fn vertex_bend_plans(poly: &Polygonal) -> Result<Vec<VertexBendPlan>> {
    let edges = poly.edges();
    let lengths = poly.edge_lengths();
    if let Some(i) = lengths.iter().position(|&l| !(l > 0.0)) {
        return Err(Error::Validation(format!("edge {i} has zero length")));
    }
    let thetas = poly.turning_angles();
    let mut plans = Vec::with_capacity(thetas.len());
    for (k, &theta) in thetas.iter().enumerate() {
        let i = k + 1;
        if theta >= PI - SINGULAR_MARGIN {
            return Err(Error::SingularAngle(theta));
        }
        let v = *poly.vertices()[i].coords();
        let t_in = *edges[k].end_tangent().dir();
        let t_out = *edges[i].start_tangent().dir();
        let b2 = (t_in + t_out).normalize();
        let b1 = b2.cross(&v);
        let reversed = t_out.dot(&b1) < 0.0;
        let local_frame = if reversed {
            Rotation3::from_columns(&-b1, &-b2, &v)?
        } else {
            Rotation3::from_columns(&b1, &b2, &v)?
        };
        plans.push(VertexBendPlan {
            vertex: i,
            half_length: 0.5 * lengths[k].min(lengths[i]),
            theta,
            local_frame,
            reversed,
        });
    }
    Ok(plans)
}

#[derive(Debug, Clone, Copy)]
pub enum Piece {
    Geodesic(GeodesicSegment),
    Bend(BendArc),
}

impl Piece {
    pub fn length(&self) -> f64 {
        match self {
            Piece::Geodesic(g) => g.length(),
            Piece::Bend(b) => b.length(),
        }
    }

    pub fn curvature(&self) -> f64 {
        match self {
            Piece::Geodesic(_) => 0.0,
            Piece::Bend(b) => b.curvature(),
        }
    }

    pub fn point_at(&self, s: f64) -> Vec3 {
        match self {
            Piece::Geodesic(g) => g.point_unchecked(s),
            Piece::Bend(b) => b.point_at(s),
        }
    }

    pub fn tangent_at(&self, s: f64) -> Vec3 {
        match self {
            Piece::Geodesic(g) => *g.tangent_at(s).dir(),
            Piece::Bend(b) => b.tangent_at(s),
        }
    }

    pub fn acceleration_at(&self, s: f64) -> Vec3 {
        match self {
            Piece::Geodesic(g) => -g.point_unchecked(s),
            Piece::Bend(b) => b.acceleration_at(s),
        }
    }

    pub fn start_point(&self) -> Vec3 {
        self.point_at(0.0)
    }

    pub fn end_point(&self) -> Vec3 {
        self.point_at(self.length())
    }

    pub fn rotated(&self, r: &Rotation3) -> Self {
        match self {
            Piece::Geodesic(g) => Piece::Geodesic(g.rotated(r)),
            Piece::Bend(b) => Piece::Bend(b.rotated(r)),
        }
    }
}

/// Position gap and tangent angle at a junction between consecutive pieces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Junction {
    pub position_gap: f64,
    pub tangent_mismatch: f64,
}

/// One sample of γ(P).
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GammaSample {
    pub s: f64,
    pub point: Vec3,
    pub k: f64,
}

/// γ(P): geodesic pieces and bends glued with matching tangents.
#[derive(Debug, Clone)]
pub struct GluedCurve {
    pieces: Vec<Piece>,
}

impl GluedCurve {
    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn bends(&self) -> impl Iterator<Item = &BendArc> {
        self.pieces.iter().filter_map(|p| match p {
            Piece::Bend(b) => Some(b),
            Piece::Geodesic(_) => None,
        })
    }

    pub fn length(&self) -> f64 {
        self.pieces.iter().map(Piece::length).sum()
    }

    pub fn junctions(&self) -> Vec<Junction> {
        self.pieces
            .windows(2)
            .map(|w| Junction {
                position_gap: (w[0].end_point() - w[1].start_point()).norm(),
                tangent_mismatch: angle_between(
                    &w[0].tangent_at(w[0].length()),
                    &w[1].tangent_at(0.0),
                ),
            })
            .collect()
    }

    pub fn max_tangent_mismatch(&self) -> f64 {
        self.junctions().iter().map(|j| j.tangent_mismatch).fold(0.0, f64::max)
    }

    /// ∫|k|^p summed exactly piece by piece.
    pub fn kp(&self, p: f64) -> f64 {
        self.bends().map(|b| b.kp_integral(p)).sum()
    }

    /// ∫|k|^p by Gauss-Legendre quadrature of ‖γ'' + γ‖^p on each piece.
    pub fn kp_quadrature(&self, p: f64, panels: usize) -> f64 {
        self.pieces
            .iter()
            .filter(|piece| piece.length() > 0.0)
            .map(|piece| {
                crate::quadrature::composite(
                    |s| (piece.acceleration_at(s) + piece.point_at(s)).norm().powf(p),
                    0.0,
                    piece.length(),
                    panels,
                )
            })
            .sum()
    }

    fn locate(&self, s: f64) -> (usize, f64) {
        let mut rest = s;
        for (i, piece) in self.pieces.iter().enumerate() {
            let l = piece.length();
            if rest <= l || i + 1 == self.pieces.len() {
                return (i, rest.clamp(0.0, l));
            }
            rest -= l;
        }
        unreachable!("glued curve has at least one piece")
    }

    pub fn point_at(&self, s: f64) -> Vec3 {
        let (i, local) = self.locate(s);
        self.pieces[i].point_at(local)
    }

    /// Piecewise-constant curvature at arc length `s`.
    pub fn curvature_at(&self, s: f64) -> f64 {
        let (i, _) = self.locate(s);
        self.pieces[i].curvature()
    }

    /// `n` evenly spaced samples including both ends.
    pub fn samples(&self, n: usize) -> Vec<GammaSample> {
        let n = n.max(2);
        let total = self.length();
        (0..n)
            .map(|j| {
                let s = total * j as f64 / (n - 1) as f64;
                GammaSample {
                    s,
                    point: self.point_at(s),
                    k: self.curvature_at(s),
                }
            })
            .collect()
    }

    pub fn rotated(&self, r: &Rotation3) -> Self {
        Self {
            pieces: self.pieces.iter().map(|p| p.rotated(r)).collect(),
        }
    }

    /// CSV `s,x,y,z,k` of `n` samples.
    pub fn write_csv<W: Write>(&self, out: W, n: usize) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["s", "x", "y", "z", "k"])?;
        for g in self.samples(n) {
            w.write_record(
                [g.s, g.point.x, g.point.y, g.point.z, g.k].map(|v| format!("{v:.16e}")),
            )?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Builds γ(P) by trimming each edge by δ at its bent ends and inserting the
/// vertex bends.
pub fn build_gamma(poly: &Polygonal) -> Result<GluedCurve> {
    let plans = vertex_bend_plans(poly)?;
    let edges = poly.edges();
    let h = edges.len();
    let mut trim = vec![0.0; h + 1];
    let mut bends: Vec<Option<BendArc>> = vec![None; h + 1];
    for plan in &plans {
        let Some(canon) = canonical_bend(plan.half_length, plan.theta)? else {
            continue;
        };
        let arc = if plan.reversed { canon.arc.reversed() } else { canon.arc };
        trim[plan.vertex] = plan.half_length;
        bends[plan.vertex] = Some(arc.rotated(&plan.local_frame));
    }
    let mut pieces = Vec::with_capacity(2 * h - 1);
    for (j, edge) in edges.iter().enumerate() {
        let a = trim[j];
        let b = edge.length() - trim[j + 1];
        if b < a - 1e-12 {
            return Err(Error::Internal(format!(
                "trims overlap on edge {j}: {a} + {} > {}",
                trim[j + 1],
                edge.length()
            )));
        }
        pieces.push(Piece::Geodesic(edge.sub_segment(a, b.max(a))?));
        if let Some(bend) = bends[j + 1] {
            pieces.push(Piece::Bend(bend));
        }
    }
    let glued = GluedCurve { pieces };
    for (i, j) in glued.junctions().iter().enumerate() {
        if j.position_gap > 1e-10 || j.tangent_mismatch > 1e-8 {
            return Err(Error::Internal(format!(
                "junction {i} not C1: gap {:e}, tangent mismatch {:e}",
                j.position_gap, j.tangent_mismatch
            )));
        }
    }
    Ok(glued)
}

/// k_p(P) = ∫_{γ(P)} |k|^p.
pub fn p_rotation(poly: &Polygonal, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::Validation(format!("exponent p = {p} must be >= 1")));
    }
    Ok(build_gamma(poly)?.kp(p))
}

/// Σᵢ F_p(ℓᵢ, θᵢ) over interior vertices, ℓᵢ the shorter adjacent edge.
pub fn fp_sum(poly: &Polygonal, p: f64) -> Result<f64> {
    let lengths = poly.edge_lengths();
    poly.turning_angles()
        .iter()
        .enumerate()
        .map(|(k, &theta)| fp_closed_form(lengths[k].min(lengths[k + 1]), theta, p))
        .sum()
}

/// A two-edge polygonal with edges of length `ell` turning by `theta` at the
/// north pole.
pub fn single_corner(ell: f64, theta: f64) -> Result<Polygonal> {
    let pole = SpherePoint::north_pole();
    let d_in = Vec3::x();
    let d_out = Vec3::new(-theta.cos(), -theta.sin(), 0.0);
    let start = SpherePoint::new(Vec3::z() * ell.cos() + d_in * ell.sin())?;
    let end = GeodesicSegment::from_direction(pole, &TangentVector::unit(pole, d_out)?, ell)?.end();
    Polygonal::from_vertices(vec![start, pole, end])
}
