//! The conformal chart f : R² → S² ∖ {south pole},
//! f(x, y) = (4x/D, 4y/D, 8/D − 1) with D = 4 + x² + y², its conformal factor
//! e^λ = 4/D, and the curvature transform between planar and spherical curves.

use std::fmt;
use std::io::Read;
use std::ops::{Add, Div, Mul, Sub};
use std::path::Path;
use std::sync::Arc;

use nalgebra::{Matrix3x2, Vector2};

use crate::curve_model::{CurveMap, DerivativeMode, CubicSpline, ParamCurve, DEFAULT_H_FD};
use crate::error::{Error, Result};
use crate::quadrature::{self, QuadratureEstimate};
use crate::sphere_geom::{SpherePoint, Vec3};

pub type Vec2 = Vector2<f64>;

/// Value with first and second derivative in one parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Jet {
    v: f64,
    d: f64,
    dd: f64,
}

impl Jet {
    fn new(v: f64, d: f64, dd: f64) -> Self {
        Self { v, d, dd }
    }

    fn constant(v: f64) -> Self {
        Self::new(v, 0.0, 0.0)
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        Jet::new(self.v + o.v, self.d + o.d, self.dd + o.dd)
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        Jet::new(self.v - o.v, self.d - o.d, self.dd - o.dd)
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        Jet::new(
            self.v * o.v,
            self.d * o.v + self.v * o.d,
            self.dd * o.v + 2.0 * self.d * o.d + self.v * o.dd,
        )
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, k: f64) -> Jet {
        Jet::new(self.v * k, self.d * k, self.dd * k)
    }
}

impl Div for Jet {
    type Output = Jet;
    fn div(self, o: Jet) -> Jet {
        let w = self.v / o.v;
        let dw = (self.d - w * o.d) / o.v;
        let ddw = (self.dd - 2.0 * dw * o.d - w * o.dd) / o.v;
        Jet::new(w, dw, ddw)
    }
}

fn chart_jets(x: Jet, y: Jet) -> [Jet; 3] {
    let d = Jet::constant(4.0) + x * x + y * y;
    [
        x * 4.0 / d,
        y * 4.0 / d,
        Jet::constant(8.0) / d - Jet::constant(1.0),
    ]
}

fn inverse_jets(p: [Jet; 3]) -> [Jet; 2] {
    let den = Jet::constant(1.0) + p[2];
    [p[0] * 2.0 / den, p[1] * 2.0 / den]
}

/// f(x, y).
pub fn plane_to_sphere(x: f64, y: f64) -> SpherePoint {
    let d = 4.0 + x * x + y * y;
    SpherePoint::new_unchecked(Vec3::new(4.0 * x / d, 4.0 * y / d, 8.0 / d - 1.0))
}

/// f⁻¹(p) = (2X/(1+Z), 2Y/(1+Z)).
pub fn sphere_to_plane(p: &SpherePoint) -> Result<(f64, f64)> {
    let c = p.coords();
    if 1.0 + c.z <= 1e-9 {
        return Err(Error::ChartDomain(p.to_array()));
    }
    Ok((2.0 * c.x / (1.0 + c.z), 2.0 * c.y / (1.0 + c.z)))
}

/// λ(x, y) = ln(4 / (4 + x² + y²)).
pub fn log_conformal_factor(x: f64, y: f64) -> f64 {
    (4.0 / (4.0 + x * x + y * y)).ln()
}

/// e^λ = 4 / (4 + x² + y²).
pub fn conformal_factor(x: f64, y: f64) -> f64 {
    4.0 / (4.0 + x * x + y * y)
}

/// ∇λ = −2(x, y) / (4 + x² + y²).
pub fn grad_log_factor(x: f64, y: f64) -> Vec2 {
    Vec2::new(x, y) * (-2.0 / (4.0 + x * x + y * y))
}

/// Jacobian of f at (x, y).
pub fn chart_differential(x: f64, y: f64) -> Matrix3x2<f64> {
    let fx = chart_jets(Jet::new(x, 1.0, 0.0), Jet::constant(y));
    let fy = chart_jets(Jet::constant(x), Jet::new(y, 1.0, 0.0));
    Matrix3x2::new(fx[0].d, fy[0].d, fx[1].d, fy[1].d, fx[2].d, fy[2].d)
}

/// The chart as a value, for callers that prefer a handle.
#[derive(Debug, Clone, Copy, Default)]
pub struct ConformalChart;

impl ConformalChart {
    pub fn forward(&self, x: f64, y: f64) -> SpherePoint {
        plane_to_sphere(x, y)
    }

    pub fn inverse(&self, p: &SpherePoint) -> Result<(f64, f64)> {
        sphere_to_plane(p)
    }

    pub fn lambda(&self, x: f64, y: f64) -> f64 {
        log_conformal_factor(x, y)
    }

    pub fn grad_lambda(&self, x: f64, y: f64) -> Vec2 {
        grad_log_factor(x, y)
    }
}

/// Signed spherical curvature k_S² = e^{−λ}(k_plane − ∂_u λ) of the image of a
/// planar curve with signed curvature `k_plane` and unit conormal `conormal`
/// at `point`.
pub fn conformal_curvature(k_plane: f64, point: (f64, f64), conormal: Vec2) -> Result<f64> {
    if (conormal.norm() - 1.0).abs() > 1e-10 {
        return Err(Error::Validation(format!(
            "conormal must be unit, |u| = {}",
            conormal.norm()
        )));
    }
    let (x, y) = point;
    let du = grad_log_factor(x, y).dot(&conormal);
    Ok((k_plane - du) / conformal_factor(x, y))
}

/// Parametrized map into the plane.
pub trait PlanarMap: Send + Sync + fmt::Debug {
    fn position(&self, t: f64) -> Vec2;

    fn derivatives(&self, _t: f64) -> Option<(Vec2, Vec2)> {
        None
    }
}

#[derive(Clone)]
pub struct PlanarCurve {
    map: Arc<dyn PlanarMap>,
    domain: f64,
    mode: DerivativeMode,
    unit_speed: bool,
    descriptor: String,
}

impl fmt::Debug for PlanarCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PlanarCurve")
            .field("descriptor", &self.descriptor)
            .field("domain", &self.domain)
            .field("mode", &self.mode)
            .finish()
    }
}

impl PlanarCurve {
    pub fn new(
        map: Arc<dyn PlanarMap>,
        domain: f64,
        mode: DerivativeMode,
        descriptor: impl Into<String>,
    ) -> Result<Self> {
        if !(domain > 0.0) || !domain.is_finite() {
            return Err(Error::Validation(format!("planar domain [0, {domain}] is empty")));
        }
        if mode == DerivativeMode::Analytic && map.derivatives(0.0).is_none() {
            return Err(Error::Validation(
                "analytic mode requested for a planar map without derivatives".into(),
            ));
        }
        Ok(Self {
            map,
            domain,
            mode,
            unit_speed: false,
            descriptor: descriptor.into(),
        })
    }

    fn unit(mut self) -> Self {
        self.unit_speed = true;
        self
    }

    /// Segment from `start` along `direction` (normalized), unit speed.
    pub fn line(start: Vec2, direction: Vec2, length: f64) -> Result<Self> {
        let n = direction.norm();
        if !(n > 0.0) {
            return Err(Error::Validation("line direction must be nonzero".into()));
        }
        let map = Arc::new(LineMap {
            start,
            dir: direction / n,
        });
        Ok(Self::new(map, length, DerivativeMode::Analytic, "line")?.unit())
    }

    /// Counterclockwise circle, unit speed.
    pub fn circle(center: Vec2, radius: f64, turns: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::Validation(format!("circle radius {radius} must be positive")));
        }
        let map = Arc::new(CircleMap { center, radius });
        let len = 2.0 * std::f64::consts::PI * radius * turns;
        Ok(Self::new(map, len, DerivativeMode::Analytic, format!("circle:r={radius}"))?.unit())
    }

    /// r = a + bω for ω ∈ [ω₀, ω₀ + 2π·turns], parametrized by t = ω − ω₀.
    pub fn archimedean_spiral(a: f64, b: f64, start_angle: f64, turns: f64) -> Result<Self> {
        if !(a > 0.0 && b >= 0.0) {
            return Err(Error::Validation("spiral needs a > 0, b >= 0".into()));
        }
        let map = Arc::new(SpiralMap { a, b, start_angle });
        Self::new(
            map,
            2.0 * std::f64::consts::PI * turns,
            DerivativeMode::Analytic,
            format!("spiral:a={a},b={b}"),
        )
    }

    /// (x₀ + t, a(x₀ + t)³) for t ∈ [0, length].
    pub fn cubic(a: f64, x0: f64, length: f64) -> Result<Self> {
        Self::new(Arc::new(CubicMap { a, x0 }), length, DerivativeMode::Analytic, format!("cubic:a={a}"))
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

    pub fn descriptor(&self) -> &str {
        &self.descriptor
    }

    pub fn position(&self, t: f64) -> Vec2 {
        self.map.position(t)
    }

    pub fn first_derivative(&self, t: f64) -> Vec2 {
        match self.mode {
            DerivativeMode::Analytic => self.map.derivatives(t).expect("analytic map").0,
            DerivativeMode::Numeric { h } => {
                let d = |h: f64| (self.map.position(t + h) - self.map.position(t - h)) / (2.0 * h);
                (d(0.5 * h) * 4.0 - d(h)) / 3.0
            }
        }
    }

    pub fn second_derivative(&self, t: f64) -> Vec2 {
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

    /// Signed curvature (positive when turning left).
    pub fn curvature(&self, t: f64) -> f64 {
        let d1 = self.first_derivative(t);
        let d2 = self.second_derivative(t);
        (d1.x * d2.y - d1.y * d2.x) / d1.norm().powi(3)
    }

    /// Left unit normal ũ.
    pub fn conormal(&self, t: f64) -> Vec2 {
        let d = self.first_derivative(t).normalize();
        Vec2::new(-d.y, d.x)
    }

    /// Planar length by quadrature of the speed.
    pub fn length(&self) -> f64 {
        quadrature::adaptive(|t| self.speed(t), 0.0, self.domain, 64, 1e-13, 1 << 16).value
    }

    /// Spherical curvature of f∘γ at `t` through the conformal transform.
    pub fn image_curvature(&self, t: f64) -> f64 {
        let p = self.position(t);
        conformal_curvature(self.curvature(t), (p.x, p.y), self.conormal(t))
            .expect("conormal is unit")
    }
}

#[derive(Debug, Clone, Copy)]
struct LineMap {
    start: Vec2,
    dir: Vec2,
}

impl PlanarMap for LineMap {
    fn position(&self, t: f64) -> Vec2 {
        self.start + self.dir * t
    }
    fn derivatives(&self, _t: f64) -> Option<(Vec2, Vec2)> {
        Some((self.dir, Vec2::zeros()))
    }
}

#[derive(Debug, Clone, Copy)]
struct CircleMap {
    center: Vec2,
    radius: f64,
}

impl PlanarMap for CircleMap {
    fn position(&self, t: f64) -> Vec2 {
        let w = t / self.radius;
        self.center + Vec2::new(w.cos(), w.sin()) * self.radius
    }
    fn derivatives(&self, t: f64) -> Option<(Vec2, Vec2)> {
        let w = t / self.radius;
        Some((
            Vec2::new(-w.sin(), w.cos()),
            Vec2::new(-w.cos(), -w.sin()) / self.radius,
        ))
    }
}

#[derive(Debug, Clone, Copy)]
struct SpiralMap {
    a: f64,
    b: f64,
    start_angle: f64,
}

impl PlanarMap for SpiralMap {
    fn position(&self, t: f64) -> Vec2 {
        let w = self.start_angle + t;
        Vec2::new(w.cos(), w.sin()) * (self.a + self.b * t)
    }
    fn derivatives(&self, t: f64) -> Option<(Vec2, Vec2)> {
        let w = self.start_angle + t;
        let r = self.a + self.b * t;
        let (s, c) = w.sin_cos();
        let radial = Vec2::new(c, s);
        let normal = Vec2::new(-s, c);
        Some((
            radial * self.b + normal * r,
            normal * (2.0 * self.b) - radial * r,
        ))
    }
}

#[derive(Debug, Clone, Copy)]
struct CubicMap {
    a: f64,
    x0: f64,
}

impl PlanarMap for CubicMap {
    fn position(&self, t: f64) -> Vec2 {
        let x = self.x0 + t;
        Vec2::new(x, self.a * x * x * x)
    }
    fn derivatives(&self, t: f64) -> Option<(Vec2, Vec2)> {
        let x = self.x0 + t;
        Some((
            Vec2::new(1.0, 3.0 * self.a * x * x),
            Vec2::new(0.0, 6.0 * self.a * x),
        ))
    }
}

#[derive(Debug)]
struct PushforwardMap {
    planar: PlanarCurve,
}

impl CurveMap for PushforwardMap {
    fn position(&self, t: f64) -> Vec3 {
        let p = self.planar.position(t);
        *plane_to_sphere(p.x, p.y).coords()
    }

    fn derivatives(&self, t: f64) -> Option<(Vec3, Vec3)> {
        if self.planar.mode != DerivativeMode::Analytic {
            return None;
        }
        let p = self.planar.position(t);
        let (d1, d2) = self.planar.map.derivatives(t)?;
        let f = chart_jets(Jet::new(p.x, d1.x, d2.x), Jet::new(p.y, d1.y, d2.y));
        Some((
            Vec3::new(f[0].d, f[1].d, f[2].d),
            Vec3::new(f[0].dd, f[1].dd, f[2].dd),
        ))
    }
}

/// f∘γ, with chain-rule derivatives when γ is analytic.
pub fn pushforward_curve(g: &PlanarCurve) -> Result<ParamCurve> {
    pushforward_curve_with_mode(g, g.mode)
}

/// f∘γ with an explicit derivative mode (numeric mode ignores the chain rule).
pub fn pushforward_curve_with_mode(g: &PlanarCurve, mode: DerivativeMode) -> Result<ParamCurve> {
    let map = Arc::new(PushforwardMap { planar: g.clone() });
    ParamCurve::new(map, g.domain, mode, format!("pushforward({})", g.descriptor))
}

#[derive(Debug)]
struct PullbackMap {
    curve: ParamCurve,
}

impl PlanarMap for PullbackMap {
    fn position(&self, t: f64) -> Vec2 {
        let c = self.curve.position_vec(t);
        Vec2::new(2.0 * c.x / (1.0 + c.z), 2.0 * c.y / (1.0 + c.z))
    }

    fn derivatives(&self, t: f64) -> Option<(Vec2, Vec2)> {
        let c = self.curve.position_vec(t);
        let d1 = self.curve.first_derivative(t);
        let d2 = self.curve.second_derivative(t);
        let g = inverse_jets([0, 1, 2].map(|k| Jet::new(c[k], d1[k], d2[k])));
        Some((Vec2::new(g[0].d, g[1].d), Vec2::new(g[0].dd, g[1].dd)))
    }
}

/// γ = f⁻¹∘c; fails if c meets the south pole at an arc-length table sample.
pub fn pullback_curve(c: &ParamCurve) -> Result<PlanarCurve> {
    for &t in c.table().params() {
        let p = c.position(t);
        sphere_to_plane(&p)?;
    }
    let map = Arc::new(PullbackMap { curve: c.clone() });
    let mut g = PlanarCurve::new(map, c.domain(), DerivativeMode::Analytic, format!("pullback({})", c.descriptor()))?;
    g.unit_speed = false;
    Ok(g)
}

/// s(t) = ∫₀ᵗ e^{−λ(γ(τ))} dτ. For γ = f⁻¹∘c with c unit speed this is the
/// planar arc length of γ up to t.
pub fn arc_element_integral(g: &PlanarCurve, t: f64) -> QuadratureEstimate {
    quadrature::adaptive(
        |tau| {
            let p = g.position(tau);
            1.0 / conformal_factor(p.x, p.y)
        },
        0.0,
        t,
        16,
        1e-13,
        1 << 16,
    )
}

/// ∫ (k_Γ + 2 Γ·ũ / (4 + |Γ|²)) dσ over γ|[a, b], σ the planar arc length.
/// Equals the signed total curvature ∫ k_S² ds of f∘γ over the same piece.
pub fn plane_side_integral(g: &PlanarCurve, a: f64, b: f64) -> QuadratureEstimate {
    quadrature::adaptive(
        |t| {
            let p = g.position(t);
            let d = 4.0 + p.norm_squared();
            (g.curvature(t) + 2.0 * p.dot(&g.conormal(t)) / d) * g.speed(t)
        },
        a,
        b,
        64,
        1e-12,
        1 << 16,
    )
}

/// ∫ k_S² ds of f∘γ over [a, b], computed on the sphere from
/// k = c·(ċ × c̈)/|ċ|³.
pub fn sphere_side_integral(g: &PlanarCurve, a: f64, b: f64) -> Result<QuadratureEstimate> {
    let c = pushforward_curve(g)?;
    Ok(quadrature::adaptive(
        |t| {
            let p = c.position_vec(t);
            let d1 = c.first_derivative(t);
            let d2 = c.second_derivative(t);
            p.dot(&d1.cross(&d2)) / d1.norm_squared()
        },
        a,
        b,
        64,
        1e-12,
        1 << 16,
    ))
}

/// (1 − |1 − u|^p)/u, the quantity (t^p − |t − 1|^p)/t^{p−1} at u = 1/t.
fn pstima_objective(u: f64, p: f64) -> f64 {
    if u < 1.0 {
        -(p * (-u).ln_1p()).exp_m1() / u
    } else {
        (1.0 - (u - 1.0).powf(p)) / u
    }
}

/// ((t − 1)^p − t^p)/t^{p−1} for t > 1, evaluated without cancellation.
pub fn pstima_ratio(t: f64, p: f64) -> f64 {
    t * (p * (-1.0 / t).ln_1p()).exp_m1()
}

/// C(p) = sup_{t>0} (t^p − |t − 1|^p)/t^{p−1}, so that
/// |a − b|^p ≥ a^p − C b a^{p−1} for all a, b > 0.
pub fn pstima_constant(p: f64) -> Result<f64> {
    if !(p > 1.0) || !p.is_finite() {
        return Err(Error::Validation(format!("pstima constant needs p > 1, got {p}")));
    }
    let n = 4000;
    let (lo, hi) = (-12.0f64, 4.0f64);
    let us: Vec<f64> = (0..=n)
        .map(|i| 10f64.powf(lo + (hi - lo) * i as f64 / n as f64))
        .collect();
    let (best_i, mut best) = us
        .iter()
        .map(|&u| pstima_objective(u, p))
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
    let a = us[best_i.saturating_sub(1)];
    let b = us[(best_i + 1).min(n)];
    let (mut x0, mut x1) = (a.ln(), b.ln());
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..100 {
        let c = x1 - g * (x1 - x0);
        let d = x0 + g * (x1 - x0);
        if pstima_objective(c.exp(), p) > pstima_objective(d.exp(), p) {
            x1 = d;
        } else {
            x0 = c;
        }
    }
    best = best.max(pstima_objective((0.5 * (x0 + x1)).exp(), p));
    // The boundary u → 0 contributes the limit value p.
    Ok(best.max(p))
}

/// Reads a `t,x,y` CSV into a spline-interpolated planar curve (numeric mode).
pub fn read_planar_curve<R: Read>(reader: R, descriptor: &str) -> Result<PlanarCurve> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["t", "x", "y"] {
        return Err(Error::Validation("planar curve header must be t,x,y".into()));
    }
    let (mut t, mut xs, mut ys) = (Vec::new(), Vec::new(), Vec::new());
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        let parse = |k: usize| {
            record[k]
                .parse::<f64>()
                .map_err(|e| Error::Validation(format!("row {}: {e}", row + 1)))
        };
        t.push(parse(0)?);
        xs.push(parse(1)?);
        ys.push(parse(2)?);
    }
    if t.len() < 4 || t.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Validation(
            "planar curve needs at least 4 samples with increasing t".into(),
        ));
    }
    let t0 = t[0];
    let shifted: Vec<f64> = t.iter().map(|v| v - t0).collect();
    let domain = *shifted.last().unwrap();
    let map = Arc::new(PlanarSpline(CubicSpline::new(shifted, vec![xs, ys])));
    PlanarCurve::new(
        map,
        domain,
        DerivativeMode::Numeric { h: DEFAULT_H_FD * domain.min(1.0) },
        descriptor,
    )
}

pub fn load_planar_curve(path: &Path) -> Result<PlanarCurve> {
    read_planar_curve(std::fs::File::open(path)?, &format!("csv:{}", path.display()))
}

#[derive(Debug)]
struct PlanarSpline(CubicSpline);

impl PlanarMap for PlanarSpline {
    fn position(&self, t: f64) -> Vec2 {
        let mut v = [0.0; 2];
        self.0.eval(t, &mut v);
        Vec2::new(v[0], v[1])
    }
}
