//! Curves on S²: analytic test families, sampled curves, arc-length
//! reparametrization, pointwise geodesic curvature and the quadrature
//! reference for ∫|k|^p ds.

use std::fmt;
use std::io::Read;
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::quadrature::{self, QuadratureEstimate};
use crate::sphere_geom::{GeodesicSegment, Rotation3, SpherePoint, TangentVector, Vec3};

/// Samples in the arc-length table.
pub const DEFAULT_TABLE_SIZE: usize = 4096;
/// Central-difference step for numeric derivatives (one Richardson level).
pub const DEFAULT_H_FD: f64 = 1e-3;
/// Starting panel count for [`integral_kp`].
pub const DEFAULT_QUAD_PANELS: usize = 256;
/// Relative change at which panel doubling stops.
pub const QUAD_REL_TOL: f64 = 1e-10;
const QUAD_MAX_PANELS: usize = 1 << 16;

/// A parametrized map into S². Maps may be evaluated slightly outside their
/// nominal domain (numeric stencils reach past the ends).
pub trait CurveMap: Send + Sync + fmt::Debug {
    fn position(&self, t: f64) -> Vec3;

    /// Exact first and second derivatives, if the map knows them.
    fn derivatives(&self, _t: f64) -> Option<(Vec3, Vec3)> {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DerivativeMode {
    Analytic,
    Numeric { h: f64 },
}

/// Monotone table of (parameter, arc length) pairs.
#[derive(Debug, Clone)]
pub struct ArcLengthTable {
    t: Vec<f64>,
    s: Vec<f64>,
}

impl ArcLengthTable {
    fn build<F: Fn(f64) -> f64>(speed: F, domain: f64, n: usize) -> Result<Self> {
        let n = n.max(2);
        let dt = domain / n as f64;
        let mut t = Vec::with_capacity(n + 1);
        let mut s = Vec::with_capacity(n + 1);
        t.push(0.0);
        s.push(0.0);
        for j in 0..n {
            let lo = j as f64 * dt;
            let hi = if j + 1 == n { domain } else { lo + dt };
            let v = speed(lo);
            if !(v > 1e-12) {
                return Err(Error::DegenerateParametrization(format!(
                    "speed {v:e} at t = {lo}"
                )));
            }
            let ds = quadrature::gauss_legendre_8(&speed, lo, hi);
            let next = s[j] + ds;
            if !(next > s[j]) {
                return Err(Error::DegenerateParametrization(format!(
                    "arc length not increasing on [{lo}, {hi}]"
                )));
            }
            t.push(hi);
            s.push(next);
        }
        if !(speed(domain) > 1e-12) {
            return Err(Error::DegenerateParametrization(format!(
                "vanishing speed at t = {domain}"
            )));
        }
        Ok(Self { t, s })
    }

    fn identity(nodes: &[f64]) -> Self {
        Self {
            t: nodes.to_vec(),
            s: nodes.to_vec(),
        }
    }

    pub fn total(&self) -> f64 {
        *self.s.last().unwrap()
    }

    pub fn params(&self) -> &[f64] {
        &self.t
    }

    pub fn arclengths(&self) -> &[f64] {
        &self.s
    }

    fn interval_of(values: &[f64], x: f64) -> usize {
        match values.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
            Ok(i) => i.min(values.len() - 2),
            Err(i) => i.saturating_sub(1).min(values.len() - 2),
        }
    }
}

/// A curve on S² over the parameter domain [0, T].
#[derive(Clone)]
pub struct ParamCurve {
    map: Arc<dyn CurveMap>,
    domain: f64,
    mode: DerivativeMode,
    table: Arc<ArcLengthTable>,
    unit_speed: bool,
    corners: Vec<f64>,
    descriptor: String,
}

impl fmt::Debug for ParamCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ParamCurve")
            .field("descriptor", &self.descriptor)
            .field("domain", &self.domain)
            .field("mode", &self.mode)
            .field("unit_speed", &self.unit_speed)
            .field("corners", &self.corners)
            .field("length", &self.length())
            .finish()
    }
}

impl ParamCurve {
    pub fn new(
        map: Arc<dyn CurveMap>,
        domain: f64,
        mode: DerivativeMode,
        descriptor: impl Into<String>,
    ) -> Result<Self> {
        Self::with_table_size(map, domain, mode, descriptor, DEFAULT_TABLE_SIZE)
    }

    pub fn with_table_size(
        map: Arc<dyn CurveMap>,
        domain: f64,
        mode: DerivativeMode,
        descriptor: impl Into<String>,
        table_size: usize,
    ) -> Result<Self> {
        if !(domain > 0.0) || !domain.is_finite() {
            return Err(Error::Validation(format!("curve domain [0, {domain}] is empty")));
        }
        if mode == DerivativeMode::Analytic && map.derivatives(0.0).is_none() {
            return Err(Error::Validation(
                "analytic mode requested for a map without derivatives".into(),
            ));
        }
        let mut curve = Self {
            map,
            domain,
            mode,
            table: Arc::new(ArcLengthTable::identity(&[0.0, domain])),
            unit_speed: false,
            corners: Vec::new(),
            descriptor: descriptor.into(),
        };
        let table = ArcLengthTable::build(|t| curve.first_derivative(t).norm(), domain, table_size)?;
        for &t in table.params() {
            let n = curve.map.position(t).norm();
            if (n - 1.0).abs() > 1e-10 {
                return Err(Error::Validation(format!(
                    "curve leaves the sphere at t = {t} (|c| = {n})"
                )));
            }
        }
        curve.table = Arc::new(table);
        Ok(curve)
    }

    /// Marks the curve as arc-length parametrized (speed 1 everywhere).
    pub(crate) fn assume_unit_speed(mut self) -> Self {
        self.unit_speed = true;
        self
    }

    pub fn with_corners(mut self, mut corners: Vec<f64>) -> Self {
        corners.sort_by(|a, b| a.partial_cmp(b).unwrap());
        self.corners = corners;
        self
    }

    pub fn domain(&self) -> f64 {
        self.domain
    }

    pub fn mode(&self) -> DerivativeMode {
        self.mode
    }

    pub fn is_unit_speed(&self) -> bool {
        self.unit_speed
    }

    pub fn corners(&self) -> &[f64] {
        &self.corners
    }

    pub fn descriptor(&self) -> &str {
        &self.descriptor
    }

    pub fn table(&self) -> &ArcLengthTable {
        &self.table
    }

    /// Total arc length.
    pub fn length(&self) -> f64 {
        self.table.total()
    }

    pub fn position_vec(&self, t: f64) -> Vec3 {
        self.map.position(t)
    }

    pub fn position(&self, t: f64) -> SpherePoint {
        SpherePoint::new_unchecked(self.map.position(t))
    }

    pub fn first_derivative(&self, t: f64) -> Vec3 {
        match self.mode {
            DerivativeMode::Analytic => self.map.derivatives(t).expect("analytic map").0,
            DerivativeMode::Numeric { h } => {
                let d = |h: f64| (self.map.position(t + h) - self.map.position(t - h)) / (2.0 * h);
                (d(0.5 * h) * 4.0 - d(h)) / 3.0
            }
        }
    }

    pub fn second_derivative(&self, t: f64) -> Vec3 {
        match self.mode {
            DerivativeMode::Analytic => self.map.derivatives(t).expect("analytic map").1,
            DerivativeMode::Numeric { h } => {
                let mid = self.map.position(t);
                let d = |h: f64| {
                    (self.map.position(t + h) - mid * 2.0 + self.map.position(t - h)) / (h * h)
                };
                (d(0.5 * h) * 4.0 - d(h)) / 3.0
            }
        }
    }

    pub fn speed(&self, t: f64) -> f64 {
        self.first_derivative(t).norm()
    }

    pub fn unit_tangent(&self, t: f64) -> Result<TangentVector> {
        TangentVector::unit(self.position(t), self.first_derivative(t))
    }

    /// Arc length from 0 to `t`.
    pub fn arclength_at(&self, t: f64) -> f64 {
        if self.unit_speed {
            return t;
        }
        let tab = &self.table;
        let j = ArcLengthTable::interval_of(&tab.t, t);
        tab.s[j] + quadrature::gauss_legendre_8(|x| self.speed(x), tab.t[j], t)
    }

    /// Inverse of [`Self::arclength_at`], continued past both ends.
    pub fn param_at_arclength(&self, s: f64) -> f64 {
        if self.unit_speed {
            return s;
        }
        let tab = &self.table;
        let total = tab.total();
        if s <= 0.0 || s >= total {
            // Newton on the arc-length integral from the nearer end, so the
            // inverse stays smooth across the domain ends.
            let (t_ref, s_ref) = if s <= 0.0 { (0.0, 0.0) } else { (self.domain, total) };
            let mut t = t_ref + (s - s_ref) / self.speed(t_ref);
            for _ in 0..8 {
                let g = s_ref + quadrature::gauss_legendre_8(|x| self.speed(x), t_ref, t) - s;
                t -= g / self.speed(t);
            }
            return t;
        }
        let j = ArcLengthTable::interval_of(&tab.s, s);
        let (mut lo, mut hi) = (tab.t[j], tab.t[j + 1]);
        let (s_lo, s_hi) = (tab.s[j], tab.s[j + 1]);
        let mut t = lo + (hi - lo) * (s - s_lo) / (s_hi - s_lo);
        let tol = 1e-15 * self.domain.max(1.0);
        for _ in 0..64 {
            let g = tab.s[j] + quadrature::gauss_legendre_8(|x| self.speed(x), tab.t[j], t) - s;
            if g > 0.0 {
                hi = t;
            } else {
                lo = t;
            }
            let newton = t - g / self.speed(t);
            let next = if newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            let step = (next - t).abs();
            t = next;
            if step <= tol || hi - lo <= tol {
                break;
            }
        }
        t
    }

    /// The curve rotated rigidly by `r`.
    pub fn rotated(&self, r: &Rotation3) -> ParamCurve {
        let map: Arc<dyn CurveMap> = Arc::new(RotatedMap {
            inner: self.map.clone(),
            rotation: *r,
        });
        ParamCurve {
            map,
            domain: self.domain,
            mode: self.mode,
            table: self.table.clone(),
            unit_speed: self.unit_speed,
            corners: self.corners.clone(),
            descriptor: format!("{} (rotated)", self.descriptor),
        }
    }

    fn corner_inside(&self, a: f64, b: f64) -> Option<f64> {
        self.corners.iter().copied().find(|&c| c > a && c < b)
    }

    fn near_corner(&self, t: f64) -> Option<f64> {
        let reach = match self.mode {
            DerivativeMode::Analytic => 1e-12,
            DerivativeMode::Numeric { h } => h,
        };
        self.corners.iter().copied().find(|&c| (c - t).abs() <= reach)
    }

    /// |k| for any regular parametrization: |c·(ċ × c̈)| / |ċ|³.
    fn curvature_any_speed(&self, t: f64) -> f64 {
        let c = self.position_vec(t);
        let d1 = self.first_derivative(t);
        let d2 = self.second_derivative(t);
        c.dot(&d1.cross(&d2)).abs() / d1.norm().powi(3)
    }
}

#[derive(Debug)]
struct RotatedMap {
    inner: Arc<dyn CurveMap>,
    rotation: Rotation3,
}

impl CurveMap for RotatedMap {
    fn position(&self, t: f64) -> Vec3 {
        self.rotation.apply(&self.inner.position(t))
    }

    fn derivatives(&self, t: f64) -> Option<(Vec3, Vec3)> {
        self.inner
            .derivatives(t)
            .map(|(a, b)| (self.rotation.apply(&a), self.rotation.apply(&b)))
    }
}

/// Circle of colatitude `phi` traversed at longitude rate `rate`.
#[derive(Debug, Clone, Copy)]
pub struct ParallelMap {
    pub phi: f64,
    pub rate: f64,
}

impl CurveMap for ParallelMap {
    fn position(&self, t: f64) -> Vec3 {
        let (s, c) = self.phi.sin_cos();
        let w = self.rate * t;
        Vec3::new(s * w.cos(), s * w.sin(), c)
    }

    fn derivatives(&self, t: f64) -> Option<(Vec3, Vec3)> {
        let s = self.phi.sin();
        let w = self.rate * t;
        let r = self.rate;
        Some((
            Vec3::new(-s * r * w.sin(), s * r * w.cos(), 0.0),
            Vec3::new(-s * r * r * w.cos(), -s * r * r * w.sin(), 0.0),
        ))
    }
}

fn check_colatitude(phi: f64) -> Result<()> {
    if !(phi > 1e-12 && phi < std::f64::consts::PI - 1e-12) {
        return Err(Error::Validation(format!("degenerate colatitude {phi}")));
    }
    Ok(())
}

/// The parallel of colatitude `phi`, arc-length parametrized over `turns` turns.
pub fn make_parallel(phi: f64, turns: f64) -> Result<ParamCurve> {
    check_colatitude(phi)?;
    if !(turns > 0.0) {
        return Err(Error::Validation(format!("turns must be positive, got {turns}")));
    }
    let radius = phi.sin();
    let map = Arc::new(ParallelMap {
        phi,
        rate: 1.0 / radius,
    });
    let length = 2.0 * std::f64::consts::PI * radius * turns;
    Ok(ParamCurve::new(
        map,
        length,
        DerivativeMode::Analytic,
        format!("parallel:phi={phi},turns={turns}"),
    )?
    .assume_unit_speed())
}

/// The same parallel parametrized by longitude (speed sin Φ).
pub fn parallel_by_longitude(phi: f64, turns: f64) -> Result<ParamCurve> {
    check_colatitude(phi)?;
    let map = Arc::new(ParallelMap { phi, rate: 1.0 });
    ParamCurve::new(
        map,
        2.0 * std::f64::consts::PI * turns,
        DerivativeMode::Analytic,
        format!("parallel-longitude:phi={phi},turns={turns}"),
    )
}

/// The equator, arc-length parametrized.
pub fn make_great_circle(turns: f64) -> Result<ParamCurve> {
    let mut c = make_parallel(std::f64::consts::FRAC_PI_2, turns)?;
    c.descriptor = format!("great-circle:turns={turns}");
    Ok(c)
}

/// Two geodesic arms meeting at a vertex with exterior angle `corner_angle`.
#[derive(Debug, Clone, Copy)]
pub struct CornerCurve {
    pub incoming: GeodesicSegment,
    pub outgoing: GeodesicSegment,
    pub corner_angle: f64,
}

impl CornerCurve {
    /// Arms of length `arm_length` through the north pole; the incoming arm
    /// arrives along −e₁.
    pub fn new(theta: f64, arm_length: f64) -> Result<Self> {
        if !(theta > 0.0 && theta < std::f64::consts::PI) {
            return Err(Error::Validation(format!("corner angle {theta} not in (0, pi)")));
        }
        if !(arm_length > 0.0 && arm_length < std::f64::consts::FRAC_PI_2) {
            return Err(Error::Validation(format!(
                "arm length {arm_length} must lie in (0, pi/2)"
            )));
        }
        let pole = SpherePoint::north_pole();
        let d_in = Vec3::x();
        let d_out = Vec3::new(-theta.cos(), -theta.sin(), 0.0);
        let start = SpherePoint::new(Vec3::z() * arm_length.cos() + d_in * arm_length.sin())?;
        let incoming = GeodesicSegment::new(start, pole)?;
        let outgoing =
            GeodesicSegment::from_direction(pole, &TangentVector::unit(pole, d_out)?, arm_length)?;
        Ok(Self {
            incoming,
            outgoing,
            corner_angle: theta,
        })
    }

    pub fn to_param_curve(&self) -> Result<ParamCurve> {
        let arm = self.incoming.length();
        let s = *self.incoming.start().coords();
        let map = Arc::new(CornerMap {
            arm,
            d_in: Vec3::new(s.x, s.y, 0.0).normalize(),
            d_out: *self.outgoing.start_tangent().dir(),
        });
        Ok(ParamCurve::new(
            map,
            2.0 * arm,
            DerivativeMode::Analytic,
            format!("corner:theta={},arm={arm}", self.corner_angle),
        )?
        .assume_unit_speed()
        .with_corners(vec![arm]))
    }
}

#[derive(Debug, Clone, Copy)]
struct CornerMap {
    arm: f64,
    /// Horizontal direction of the incoming arm as seen from the vertex.
    d_in: Vec3,
    d_out: Vec3,
}

impl CurveMap for CornerMap {
    fn position(&self, t: f64) -> Vec3 {
        if t < self.arm {
            let u = self.arm - t;
            Vec3::z() * u.cos() + self.d_in * u.sin()
        } else {
            let u = t - self.arm;
            Vec3::z() * u.cos() + self.d_out * u.sin()
        }
    }

    fn derivatives(&self, t: f64) -> Option<(Vec3, Vec3)> {
        let p = self.position(t);
        let d1 = if t < self.arm {
            let u = self.arm - t;
            Vec3::z() * u.sin() - self.d_in * u.cos()
        } else {
            let u = t - self.arm;
            -Vec3::z() * u.sin() + self.d_out * u.cos()
        };
        Some((d1, -p))
    }
}

/// Two unit-speed geodesic arms meeting at the north pole with exterior angle `theta`.
pub fn make_corner_curve(theta: f64, arm_length: f64) -> Result<ParamCurve> {
    CornerCurve::new(theta, arm_length)?.to_param_curve()
}

#[derive(Debug)]
struct ReparamMap {
    inner: ParamCurve,
}

impl CurveMap for ReparamMap {
    fn position(&self, s: f64) -> Vec3 {
        self.inner.position_vec(self.inner.param_at_arclength(s))
    }

    fn derivatives(&self, s: f64) -> Option<(Vec3, Vec3)> {
        if self.inner.mode != DerivativeMode::Analytic {
            return None;
        }
        let t = self.inner.param_at_arclength(s);
        let (d1, d2) = self.inner.map.derivatives(t)?;
        let v = d1.norm();
        let tangent = d1 / v;
        let normal_part = d2 - tangent * tangent.dot(&d2);
        Some((tangent, normal_part / (v * v)))
    }
}

/// Arc-length reparametrization of `c`; unit speed is verified at table samples
/// by central differences.
pub fn arclength_reparam(c: &ParamCurve, tol: f64) -> Result<ParamCurve> {
    if c.unit_speed {
        return Ok(c.clone());
    }
    let length = c.length();
    let map: Arc<dyn CurveMap> = Arc::new(ReparamMap { inner: c.clone() });
    let mode = c.mode;
    let nodes: Vec<f64> = c.table.arclengths().to_vec();
    let corners = c.corners.iter().map(|&t| c.arclength_at(t)).collect();
    let out = ParamCurve {
        map,
        domain: length,
        mode,
        table: Arc::new(ArcLengthTable::identity(&nodes)),
        unit_speed: true,
        corners,
        descriptor: c.descriptor.clone(),
    };
    // Finite-difference speed at a spread of table samples.
    let h = 1e-3 * length.min(1.0);
    let stride = (nodes.len() / 64).max(1);
    for &s in nodes.iter().step_by(stride) {
        let d = |h: f64| (out.position_vec(s + h) - out.position_vec(s - h)).norm() / (2.0 * h);
        let speed = (d(0.5 * h) * 4.0 - d(h)) / 3.0;
        if (speed - 1.0).abs() > tol {
            return Err(Error::DegenerateParametrization(format!(
                "reparametrized speed {speed} at s = {s} misses 1 by more than {tol:e}"
            )));
        }
    }
    Ok(out)
}

/// A geodesic curvature sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvatureSample {
    pub s: f64,
    pub k: f64,
}

/// |k| = ‖c̈ + c‖ at arc length `s` of a unit-speed curve.
pub fn geodesic_curvature_at(c: &ParamCurve, s: f64) -> Result<f64> {
    if !c.unit_speed {
        return Err(Error::Validation(
            "geodesic_curvature_at needs an arc-length parametrized curve".into(),
        ));
    }
    if let Some(corner) = c.near_corner(s) {
        return Err(Error::NonSmooth(corner));
    }
    Ok((c.second_derivative(s) + c.position_vec(s)).norm())
}

/// `n` evenly spaced interior samples of |k|.
pub fn curvature_samples(c: &ParamCurve, n: usize) -> Result<Vec<CurvatureSample>> {
    let len = c.domain;
    (0..n)
        .map(|i| {
            let s = len * (i as f64 + 0.5) / n as f64;
            geodesic_curvature_at(c, s).map(|k| CurvatureSample { s, k })
        })
        .collect()
}

/// ∫ |k|^p ds over the whole curve.
pub fn integral_kp(c: &ParamCurve, p: f64, n_quad: usize) -> Result<QuadratureEstimate> {
    integral_kp_on(c, p, 0.0, c.domain, n_quad)
}

/// ∫ |k|^p ds over the parameter interval [a, b].
pub fn integral_kp_on(
    c: &ParamCurve,
    p: f64,
    a: f64,
    b: f64,
    n_quad: usize,
) -> Result<QuadratureEstimate> {
    if !(p >= 1.0) {
        return Err(Error::Validation(format!("exponent p = {p} must be >= 1")));
    }
    if let Some(corner) = c.corner_inside(a, b) {
        return Err(Error::NonSmooth(corner));
    }
    let est = if c.unit_speed {
        quadrature::adaptive(
            |s| (c.second_derivative(s) + c.position_vec(s)).norm().powf(p),
            a,
            b,
            n_quad,
            QUAD_REL_TOL,
            QUAD_MAX_PANELS,
        )
    } else {
        quadrature::adaptive(
            |t| c.curvature_any_speed(t).powf(p) * c.speed(t),
            a,
            b,
            n_quad,
            QUAD_REL_TOL,
            QUAD_MAX_PANELS,
        )
    };
    Ok(est)
}

/// Natural cubic spline through vector-valued samples, one spline per component.
#[derive(Debug, Clone)]
pub(crate) struct CubicSpline {
    t: Vec<f64>,
    values: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
}

impl CubicSpline {
    /// `values[k]` holds component k at every knot.
    pub(crate) fn new(t: Vec<f64>, values: Vec<Vec<f64>>) -> Self {
        let second = values
            .iter()
            .map(|y| spline_second_derivatives(&t, y))
            .collect();
        Self { t, values, second }
    }

    pub(crate) fn eval(&self, x: f64, out: &mut [f64]) {
        let j = ArcLengthTable::interval_of(&self.t, x);
        let (t0, t1) = (self.t[j], self.t[j + 1]);
        let h = t1 - t0;
        let a = (t1 - x) / h;
        let b = (x - t0) / h;
        for (k, o) in out.iter_mut().enumerate() {
            let (y0, y1) = (self.values[k][j], self.values[k][j + 1]);
            let (m0, m1) = (self.second[k][j], self.second[k][j + 1]);
            *o = a * y0 + b * y1 + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0;
        }
    }
}

/// Spline through (t, x, y, z) samples, projected onto S².
#[derive(Debug, Clone)]
struct SplineMap(CubicSpline);

impl CurveMap for SplineMap {
    fn position(&self, t: f64) -> Vec3 {
        let mut v = [0.0; 3];
        self.0.eval(t, &mut v);
        Vec3::from(v).normalize()
    }
}

/// Knot second derivatives with not-a-knot ends (natural ends for 3 knots).
fn spline_second_derivatives(t: &[f64], y: &[f64]) -> Vec<f64> {
    let n = t.len();
    let mut m = vec![0.0; n];
    if n < 3 {
        return m;
    }
    let h: Vec<f64> = t.windows(2).map(|w| w[1] - w[0]).collect();
    let k = n - 2;
    let mut lower = vec![0.0; k];
    let mut diag = vec![0.0; k];
    let mut upper = vec![0.0; k];
    let mut rhs = vec![0.0; k];
    for r in 0..k {
        let i = r + 1;
        lower[r] = h[i - 1] / 6.0;
        diag[r] = (h[i - 1] + h[i]) / 3.0;
        upper[r] = h[i] / 6.0;
        rhs[r] = (y[i + 1] - y[i]) / h[i] - (y[i] - y[i - 1]) / h[i - 1];
    }
    let not_a_knot = n >= 4;
    if not_a_knot {
        // m0 = ((h0 + h1) m1 − h0 m2) / h1, and the mirror image at the far end.
        let (h0, h1) = (h[0], h[1]);
        diag[0] += lower[0] * (h0 + h1) / h1;
        upper[0] -= lower[0] * h0 / h1;
        let (ha, hb) = (h[n - 3], h[n - 2]);
        diag[k - 1] += upper[k - 1] * (ha + hb) / ha;
        lower[k - 1] -= upper[k - 1] * hb / ha;
    }
    for r in 1..k {
        let w = lower[r] / diag[r - 1];
        diag[r] -= w * upper[r - 1];
        rhs[r] -= w * rhs[r - 1];
    }
    m[k] = rhs[k - 1] / diag[k - 1];
    for r in (0..k - 1).rev() {
        m[r + 1] = (rhs[r] - upper[r] * m[r + 2]) / diag[r];
    }
    if not_a_knot {
        m[0] = ((h[0] + h[1]) * m[1] - h[0] * m[2]) / h[1];
        m[n - 1] = ((h[n - 3] + h[n - 2]) * m[n - 2] - h[n - 2] * m[n - 3]) / h[n - 3];
    }
    m
}

/// Builds a numeric-mode curve from samples; points are renormalized and
/// rejected if their norm misses 1 by more than 1e-3.
pub fn sampled_curve(times: &[f64], points: &[Vec3], descriptor: &str) -> Result<ParamCurve> {
    if times.len() != points.len() || times.len() < 4 {
        return Err(Error::Validation(
            "sampled curve needs at least 4 (t, point) samples".into(),
        ));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Validation("sample times must be strictly increasing".into()));
    }
    let mut unit = Vec::with_capacity(points.len());
    for (i, p) in points.iter().enumerate() {
        let n = p.norm();
        if !((n - 1.0).abs() <= 1e-3) {
            return Err(Error::Validation(format!(
                "sample {i} has |p| = {n}, off the sphere by more than 1e-3"
            )));
        }
        unit.push(p / n);
    }
    let t0 = times[0];
    let shifted: Vec<f64> = times.iter().map(|t| t - t0).collect();
    let domain = *shifted.last().unwrap();
    let values = (0..3).map(|k| unit.iter().map(|p| p[k]).collect()).collect();
    let map = Arc::new(SplineMap(CubicSpline::new(shifted, values)));
    ParamCurve::new(
        map,
        domain,
        DerivativeMode::Numeric { h: DEFAULT_H_FD * domain.min(1.0) },
        descriptor,
    )
}

/// Reads a `t,x,y,z` CSV into a sampled curve.
pub fn read_sampled_curve<R: Read>(reader: R, descriptor: &str) -> Result<ParamCurve> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let expected = ["t", "x", "y", "z"];
    if headers.len() != 4 || headers.iter().zip(expected).any(|(h, e)| h != e) {
        return Err(Error::Validation(format!(
            "sampled curve header must be t,x,y,z, got {}",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut times = Vec::new();
    let mut points = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        let mut vals = [0.0; 4];
        for (k, v) in vals.iter_mut().enumerate() {
            *v = record[k].parse::<f64>().map_err(|e| {
                Error::Validation(format!("row {}: column {}: {e}", row + 1, expected[k]))
            })?;
        }
        times.push(vals[0]);
        points.push(Vec3::new(vals[1], vals[2], vals[3]));
    }
    sampled_curve(&times, &points, descriptor)
}

pub fn load_sampled_curve(path: &Path) -> Result<ParamCurve> {
    let file = std::fs::File::open(path)?;
    read_sampled_curve(file, &format!("csv:{}", path.display()))
}
