//! Geodesic polygonals inscribed in a curve: construction at given times or by
//! equilateral marching, mesh, modulus and intrinsic rotation.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curve_model::ParamCurve;
use crate::error::{Error, Result};
use crate::sphere_geom::{
    geodesic_distance, turning_angle, GeodesicSegment, Rotation3, SpherePoint,
};

/// Default per-arc sample count for [`modulus`].
pub const DEFAULT_MODULUS_SAMPLES: usize = 64;
/// Tolerance on the chord equation d(c(tᵢ), c(tᵢ₊₁)) = ℓ.
pub const MARCH_TOL: f64 = 1e-12;
/// Largest edge count an equilateral inscription may produce.
pub const MAX_EDGES: usize = 1_000_000;

#[derive(Debug, Clone)]
pub struct Polygonal {
    times: Vec<f64>,
    vertices: Vec<SpherePoint>,
    edges: Vec<GeodesicSegment>,
}

impl Polygonal {
    /// A polygonal through explicit vertices; times are the vertex indices.
    pub fn from_vertices(vertices: Vec<SpherePoint>) -> Result<Self> {
        let times = (0..vertices.len()).map(|i| i as f64).collect();
        Self::assemble(times, vertices)
    }

    fn assemble(times: Vec<f64>, vertices: Vec<SpherePoint>) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(Error::Validation("a polygonal needs at least two vertices".into()));
        }
        let edges = vertices
            .windows(2)
            .enumerate()
            .map(|(i, w)| {
                GeodesicSegment::new(w[0], w[1]).map_err(|_| {
                    Error::Inscription(format!("vertices {i} and {} are antipodal", i + 1))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            times,
            vertices,
            edges,
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn vertices(&self) -> &[SpherePoint] {
        &self.vertices
    }

    pub fn edges(&self) -> &[GeodesicSegment] {
        &self.edges
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edge_lengths(&self) -> Vec<f64> {
        self.edges.iter().map(GeodesicSegment::length).collect()
    }

    /// Total length 𝓛(P).
    pub fn length(&self) -> f64 {
        self.edges.iter().map(GeodesicSegment::length).sum()
    }

    /// Largest edge length.
    pub fn mesh(&self) -> f64 {
        self.edges.iter().map(GeodesicSegment::length).fold(0.0, f64::max)
    }

    /// Turning angles θ₁,…,θ_{h−1} at the interior vertices.
    pub fn turning_angles(&self) -> Vec<f64> {
        self.edges
            .windows(2)
            .map(|w| turning_angle(&w[0].end_tangent(), &w[1].start_tangent()).unwrap())
            .collect()
    }

    /// Turning angle at the shared end vertex of a closed polygonal.
    pub fn closing_angle(&self) -> Result<f64> {
        let first = self.vertices[0];
        let last = *self.vertices.last().unwrap();
        if geodesic_distance(&first, &last) > 1e-10 {
            return Err(Error::Validation("polygonal is not closed".into()));
        }
        let out = self.edges[0].start_tangent();
        let inc = self.edges.last().unwrap().end_tangent();
        let inc = crate::sphere_geom::TangentVector::new(first, *inc.dir())?;
        turning_angle(&inc, &out)
    }

    /// Σθᵢ including the angle at the closing vertex.
    pub fn closed_rotation(&self) -> Result<f64> {
        Ok(intrinsic_rotation(self) + self.closing_angle()?)
    }

    pub fn rotated(&self, r: &Rotation3) -> Self {
        Self {
            times: self.times.clone(),
            vertices: self.vertices.iter().map(|v| r.apply_point(v)).collect(),
            edges: self.edges.iter().map(|e| e.rotated(r)).collect(),
        }
    }

    /// CSV `i,t,x,y,z,edge_length,theta`; edge length and angle are blank
    /// where undefined.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["i", "t", "x", "y", "z", "edge_length", "theta"])?;
        let thetas = self.turning_angles();
        let h = self.num_edges();
        for (i, (t, v)) in self.times.iter().zip(&self.vertices).enumerate() {
            let [x, y, z] = v.to_array();
            let edge = if i < h { format!("{:.16e}", self.edges[i].length()) } else { String::new() };
            let theta = if i > 0 && i < h { format!("{:.16e}", thetas[i - 1]) } else { String::new() };
            w.write_record([
                i.to_string(),
                format!("{t:.16e}"),
                format!("{x:.16e}"),
                format!("{y:.16e}"),
                format!("{z:.16e}"),
                edge,
                theta,
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolygonalStats {
    pub mesh: f64,
    pub modulus: f64,
    pub turning_angles: Vec<f64>,
    pub intrinsic_rotation: f64,
}

pub fn polygonal_stats(c: &ParamCurve, poly: &Polygonal, n_samples: usize) -> PolygonalStats {
    let turning_angles = poly.turning_angles();
    PolygonalStats {
        mesh: poly.mesh(),
        modulus: modulus(c, poly, n_samples),
        intrinsic_rotation: turning_angles.iter().sum(),
        turning_angles,
    }
}

/// Polygonal with vertices c(tᵢ).
pub fn inscribe_at_times(c: &ParamCurve, times: &[f64]) -> Result<Polygonal> {
    if times.len() < 2 {
        return Err(Error::Validation("need at least two inscription times".into()));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Validation("inscription times must be strictly increasing".into()));
    }
    let slack = 1e-12 * c.domain().max(1.0);
    if times[0] < -slack || *times.last().unwrap() > c.domain() + slack {
        return Err(Error::Validation(format!(
            "inscription times leave the domain [0, {}]",
            c.domain()
        )));
    }
    let vertices = times.iter().map(|&t| c.position(t)).collect();
    Polygonal::assemble(times.to_vec(), vertices)
}

/// How the last edge of an equilateral march is handled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Closing {
    /// All edges have length ℓ except a last edge ℓ̂ ∈ (0, ℓ].
    #[default]
    ShortLastEdge,
    /// Keep the edge count and shrink ℓ until every edge, the last included,
    /// has the same length.
    Exact,
}

/// Equilateral marching with chord length `ell`, short last edge allowed.
pub fn inscribe_equilateral(c: &ParamCurve, ell: f64) -> Result<Polygonal> {
    inscribe_equilateral_with(c, ell, Closing::ShortLastEdge)
}

pub fn inscribe_equilateral_with(c: &ParamCurve, ell: f64, closing: Closing) -> Result<Polygonal> {
    let limit = std::f64::consts::FRAC_PI_2.min(c.length());
    if !(ell > 0.0 && ell < limit) {
        return Err(Error::Validation(format!(
            "edge length {ell} must lie in (0, {limit})"
        )));
    }
    if c.length() / ell > MAX_EDGES as f64 {
        return Err(Error::Validation(format!(
            "edge length {ell} would need more than {MAX_EDGES} edges"
        )));
    }
    let times = march(c, ell)?;
    let times = match closing {
        Closing::ShortLastEdge => times,
        Closing::Exact => close_exactly(c, ell, times)?,
    };
    inscribe_at_times(c, &times)
}

fn chord(c: &ParamCurve, a: f64, b: f64) -> f64 {
    geodesic_distance(&c.position(a), &c.position(b))
}

/// Next time after `t0` whose chord from c(t0) equals `ell`, or `None` when
/// the chord stays below `ell` up to the domain end.
fn next_time(c: &ParamCurve, t0: f64, ell: f64) -> Option<f64> {
    let end = c.domain();
    let s0 = c.arclength_at(t0);
    let step = ell / 16.0;
    let f = |t: f64| chord(c, t0, t) - ell;
    // Chords never exceed arc length, so the root lies past arc length s0 + ℓ.
    let mut s = s0 + ell;
    let mut a = c.param_at_arclength(s).min(end);
    let fa = f(a);
    if fa.abs() <= MARCH_TOL || fa > 0.0 {
        return Some(a);
    }
    let mut b;
    loop {
        s += step;
        b = c.param_at_arclength(s).min(end);
        let fb = f(b);
        if fb.abs() <= MARCH_TOL {
            return Some(b);
        }
        if fb > 0.0 {
            break;
        }
        if b >= end {
            return None;
        }
        a = b;
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm.abs() <= MARCH_TOL || b - a <= 1e-15 * end.max(1.0) {
            return Some(m);
        }
        if fm > 0.0 {
            b = m;
        } else {
            a = m;
        }
    }
    Some(0.5 * (a + b))
}

/// Full-length edges of chord `ell` from t = 0; returns the vertex times
/// without the closing endpoint.
fn march_full_edges(c: &ParamCurve, ell: f64, max_edges: usize) -> Result<Vec<f64>> {
    let end = c.domain();
    let mut times = vec![0.0];
    loop {
        let t = *times.last().unwrap();
        if times.len() > max_edges {
            break;
        }
        match next_time(c, t, ell) {
            Some(next) if next < end => times.push(next),
            Some(_) => {
                times.push(end);
                break;
            }
            None => {
                if times.len() == 1 {
                    return Err(Error::Marching(format!(
                        "no point of the curve lies at distance {ell} from its start"
                    )));
                }
                let remaining = c.length() - c.arclength_at(t);
                if remaining >= 2.0 * ell {
                    return Err(Error::Marching(format!(
                        "chord equation has no root after t = {t} although arc length {remaining} remains; the curve doubles back within {ell}"
                    )));
                }
                break;
            }
        }
    }
    Ok(times)
}

fn march(c: &ParamCurve, ell: f64) -> Result<Vec<f64>> {
    let end = c.domain();
    let mut times = march_full_edges(c, ell, usize::MAX)?;
    let last = *times.last().unwrap();
    if last < end {
        if chord(c, last, end) <= MARCH_TOL && times.len() > 1 {
            *times.last_mut().unwrap() = end;
        } else {
            times.push(end);
        }
    }
    Ok(times)
}

/// Shrinks ℓ with the edge count fixed until the closing edge also has length ℓ.
fn close_exactly(c: &ParamCurve, ell: f64, times: Vec<f64>) -> Result<Vec<f64>> {
    let h = times.len() - 1;
    let end = c.domain();
    if (chord(c, times[h - 1], end) - ell).abs() <= MARCH_TOL {
        return Ok(times);
    }
    // Gap between the closing chord and ℓ after h−1 full edges; NaN when the
    // march ends early.
    let gap = |l: f64| -> f64 {
        match march_full_edges(c, l, h - 1) {
            Ok(ts) if ts.len() == h && ts[h - 1] < end => chord(c, ts[h - 1], end) - l,
            _ => f64::NAN,
        }
    };
    let mut hi = ell;
    let mut lo = ell * (h as f64 - 1.0) / h as f64;
    let mut g_lo = gap(lo);
    let mut tries = 0;
    while !(g_lo > 0.0) {
        tries += 1;
        if tries > 40 || g_lo.is_nan() {
            return Err(Error::Marching(format!(
                "could not bracket an exactly closing edge length below {ell} with {h} edges"
            )));
        }
        hi = lo;
        lo *= 0.98;
        g_lo = gap(lo);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let g = gap(mid);
        if g.is_nan() || g < 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if g.abs() <= MARCH_TOL || hi - lo <= 1e-15 * ell {
            break;
        }
    }
    let l = 0.5 * (lo + hi);
    let mut ts = march_full_edges(c, l, h - 1)?;
    ts.truncate(h);
    ts.push(end);
    Ok(ts)
}

fn van_der_corput(mut k: usize) -> f64 {
    let mut denom = 1.0;
    let mut out = 0.0;
    while k > 0 {
        denom *= 2.0;
        out += (k & 1) as f64 / denom;
        k >>= 1;
    }
    out
}

/// Sample fractions 0, 1, ½, ¼, ¾, …; the first n are a subset of the first n+1.
fn sample_fractions(n: usize) -> Vec<f64> {
    let n = n.max(2);
    let mut u = vec![0.0, 1.0];
    u.extend((1..n - 1).map(van_der_corput));
    u
}

/// Largest sampled geodesic diameter over the arcs c|[tᵢ, tᵢ₊₁].
pub fn modulus(c: &ParamCurve, poly: &Polygonal, n_samples: usize) -> f64 {
    let fractions = sample_fractions(n_samples);
    poly.times()
        .par_windows(2)
        .map(|w| {
            let pts: Vec<SpherePoint> = fractions
                .iter()
                .map(|u| c.position(w[0] + (w[1] - w[0]) * u))
                .collect();
            let mut best = 0.0f64;
            for i in 0..pts.len() {
                for j in i + 1..pts.len() {
                    best = best.max(geodesic_distance(&pts[i], &pts[j]));
                }
            }
            best
        })
        .reduce(|| 0.0, f64::max)
}

/// k*(P) = Σθᵢ over interior vertices.
pub fn intrinsic_rotation(poly: &Polygonal) -> f64 {
    poly.turning_angles().iter().sum()
}

/// Σ (ℓ/2)^{1−p} θᵢ tan^{p−1}(θᵢ/2), the Euclidean fillet p-rotation.
pub fn euclidean_p_rotation(ell: f64, thetas: &[f64], p: f64) -> Result<f64> {
    if !(ell > 0.0) {
        return Err(Error::Validation(format!("edge length {ell} must be positive")));
    }
    if !(p >= 1.0) {
        return Err(Error::Validation(format!("exponent p = {p} must be >= 1")));
    }
    let mut total = 0.0;
    for &theta in thetas {
        if theta >= std::f64::consts::PI {
            return Err(Error::SingularAngle(theta));
        }
        if !(theta >= 0.0) {
            return Err(Error::Validation(format!("turning angle {theta} is negative")));
        }
        total += (0.5 * ell).powf(1.0 - p) * theta * (0.5 * theta).tan().powf(p - 1.0);
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve_model::{make_great_circle, make_parallel, parallel_by_longitude};
    use crate::sphere_geom::Vec3;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, PI};

    #[test]
    fn endpoints_only_is_one_segment() {
        let c = make_parallel(1.0, 0.3).unwrap();
        let p = inscribe_at_times(&c, &[0.0, c.domain()]).unwrap();
        assert_eq!(p.num_edges(), 1);
        assert_abs_diff_eq!(
            p.length(),
            geodesic_distance(&c.position(0.0), &c.position(c.domain())),
            epsilon = 1e-15
        );
    }

    #[test]
    fn square_on_equator() {
        let c = make_great_circle(1.0).unwrap();
        let times: Vec<f64> = (0..=4).map(|i| i as f64 * FRAC_PI_2).collect();
        let p = inscribe_at_times(&c, &times).unwrap();
        for l in p.edge_lengths() {
            assert_abs_diff_eq!(l, FRAC_PI_2, epsilon = 1e-14);
        }
        assert!(intrinsic_rotation(&p) < 1e-10);
        assert!(p.closed_rotation().unwrap() < 1e-10);
    }

    #[test]
    fn inscription_errors() {
        let c = make_great_circle(1.0).unwrap();
        assert!(matches!(inscribe_at_times(&c, &[0.0, 2.0, 1.0]), Err(Error::Validation(_))));
        assert!(matches!(inscribe_at_times(&c, &[0.0, PI]), Err(Error::Inscription(_))));
    }

    #[test]
    fn refinement_shrinks_length_deficit() {
        let c = make_parallel(1.1, 1.0).unwrap();
        let mut times = vec![0.0, 1.7, 3.9, c.domain()];
        let mut deficit = c.length() - inscribe_at_times(&c, &times).unwrap().length();
        for extra in [0.6, 2.5, 5.0, 4.4] {
            times.push(extra);
            times.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let d = c.length() - inscribe_at_times(&c, &times).unwrap().length();
            assert!(d <= deficit + 1e-15);
            assert!(d >= 0.0);
            deficit = d;
        }
    }

    #[test]
    fn equilateral_on_great_circle_spaces_by_ell() {
        let c = make_great_circle(1.0).unwrap();
        let p = inscribe_equilateral(&c, 0.3).unwrap();
        let t = p.times();
        for w in t.windows(2).take(t.len() - 2) {
            assert_abs_diff_eq!(w[1] - w[0], 0.3, epsilon = 1e-10);
        }
        assert_eq!(p.num_edges(), (2.0 * PI / 0.3).ceil() as usize);
    }

    #[test]
    fn equilateral_on_parallel_matches_law_of_cosines() {
        let phi = FRAC_PI_3;
        let ell = 0.2;
        let c = parallel_by_longitude(phi, 1.0).unwrap();
        let p = inscribe_equilateral(&c, ell).unwrap();
        let dw = ((ell.cos() - phi.cos().powi(2)) / phi.sin().powi(2)).acos();
        let t = p.times();
        for w in t.windows(2).take(t.len() - 2) {
            assert_abs_diff_eq!(w[1] - w[0], dw, epsilon = 1e-10);
        }
        let lens = p.edge_lengths();
        for l in &lens[..lens.len() - 1] {
            assert_abs_diff_eq!(*l, ell, epsilon = 1e-12);
        }
        assert!(*lens.last().unwrap() <= ell + 1e-12);
    }

    #[test]
    fn exact_closing_makes_all_edges_equal() {
        let c = make_parallel(FRAC_PI_3, 1.0).unwrap();
        let short = inscribe_equilateral(&c, 0.2).unwrap();
        let exact = inscribe_equilateral_with(&c, 0.2, Closing::Exact).unwrap();
        assert_eq!(short.num_edges(), exact.num_edges());
        let lens = exact.edge_lengths();
        for l in &lens {
            assert_abs_diff_eq!(*l, lens[0], epsilon = 1e-11);
        }
        assert!(lens[0] <= 0.2);
    }

    #[test]
    fn marching_fails_past_diameter() {
        let c = make_parallel(0.2, 1.0).unwrap();
        assert!(matches!(inscribe_equilateral(&c, 0.5), Err(Error::Marching(_))));
    }

    #[test]
    fn modulus_of_great_circle_arc_is_its_length() {
        let c = make_great_circle(1.0).unwrap();
        let p = inscribe_at_times(&c, &[0.0, 1.2, 2.0]).unwrap();
        assert_abs_diff_eq!(modulus(&c, &p, 16), 1.2, epsilon = 1e-14);
    }

    #[test]
    fn modulus_of_full_parallel_against_dense_pairs() {
        let phi = 1.0;
        let c = make_parallel(phi, 1.0).unwrap();
        let p = inscribe_at_times(&c, &[0.0, c.domain()]).unwrap();
        // Two antipodal points of the parallel realize the diameter 2Φ.
        let dense = {
            let n = 1024;
            let pts: Vec<_> = (0..n).map(|i| c.position(c.domain() * i as f64 / n as f64)).collect();
            let mut best = 0.0f64;
            for a in &pts {
                for b in &pts {
                    best = best.max(geodesic_distance(a, b));
                }
            }
            best
        };
        assert_abs_diff_eq!(dense, 2.0 * phi, epsilon = 1e-12);
        let m = modulus(&c, &p, 64);
        assert_abs_diff_eq!(m, dense, epsilon = 1e-12);
        assert!(m >= p.mesh() - 1e-9);
    }

    #[test]
    fn modulus_nondecreasing_in_samples() {
        let c = make_parallel(0.8, 1.0).unwrap();
        let p = inscribe_at_times(&c, &[0.0, 1.1, 2.9, c.domain()]).unwrap();
        let mut prev = 0.0;
        for n in [2, 3, 5, 9, 17, 33, 64] {
            let m = modulus(&c, &p, n);
            assert!(m >= prev);
            prev = m;
        }
    }

    #[test]
    fn hexagon_on_parallel_turning_angles() {
        let phi = FRAC_PI_4;
        let c = make_parallel(phi, 1.0).unwrap();
        let times: Vec<f64> = (0..=6).map(|i| c.domain() * i as f64 / 6.0).collect();
        let p = inscribe_at_times(&c, &times).unwrap();
        // Brute force: tangents from finite differences along each edge.
        let v = |i: usize| *p.vertices()[i].coords();
        let tangent = |a: Vec3, b: Vec3, at: Vec3| {
            let t = if at == a { b - a * a.dot(&b) } else { -(a - b * b.dot(&a)) };
            t.normalize()
        };
        for (i, th) in p.turning_angles().iter().enumerate() {
            let (a, b, cc) = (v(i), v(i + 1), v(i + 2));
            let tin = tangent(a, b, b);
            let tout = tangent(b, cc, b);
            let brute = tin.dot(&tout).clamp(-1.0, 1.0).acos();
            assert_abs_diff_eq!(*th, brute, epsilon = 1e-7);
        }
        // All interior angles agree by symmetry.
        let th = p.turning_angles();
        for t in &th {
            assert_abs_diff_eq!(*t, th[0], epsilon = 1e-14);
        }
        assert_abs_diff_eq!(p.closing_angle().unwrap(), th[0], epsilon = 1e-12);
    }

    #[test]
    fn euclidean_rotation_cases() {
        let th = [0.3, 1.0, 2.0];
        assert_abs_diff_eq!(euclidean_p_rotation(0.4, &th, 1.0).unwrap(), 3.3, epsilon = 1e-15);
        let eps: f64 = 0.05;
        assert_abs_diff_eq!(
            euclidean_p_rotation(2.0 * eps, &[1.0], 2.5).unwrap(),
            eps.powf(-1.5) * 0.5f64.tan().powf(1.5),
            epsilon = 1e-12
        );
        assert_eq!(euclidean_p_rotation(0.1, &[0.0, 0.0], 3.0).unwrap(), 0.0);
        assert!(matches!(euclidean_p_rotation(0.1, &[PI], 2.0), Err(Error::SingularAngle(_))));
    }

    #[test]
    fn csv_export_blanks_undefined_fields() {
        let c = make_parallel(1.0, 0.5).unwrap();
        let p = inscribe_equilateral(&c, 0.4).unwrap();
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "i,t,x,y,z,edge_length,theta");
        assert!(lines[1].ends_with(','));
        assert!(lines.last().unwrap().ends_with(",,"));
        assert_eq!(lines.len(), p.num_edges() + 2);
    }
}
