//! Numerical studies: convergence of k_p(P_h) to ∫|k|^p, a relaxation
//! estimate of F_p, blowup at a corner, non-monotonicity of the intrinsic
//! rotation, bend tables and the conformal curvature check.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bend_construction::{build_gamma, fp_closed_form, p_rotation, single_corner};
use crate::conformal::{pushforward_curve_with_mode, PlanarCurve};
use crate::curve_model::{
    arclength_reparam, geodesic_curvature_at, integral_kp, make_corner_curve, make_parallel,
    DerivativeMode, ParamCurve, DEFAULT_H_FD, DEFAULT_QUAD_PANELS,
};
use crate::error::{Error, Result};
use crate::polygonal::{
    inscribe_at_times, inscribe_equilateral_with, modulus, Closing, DEFAULT_MODULUS_SAMPLES,
};
use crate::report::{fmt_f64, CsvRow, Metadata, Report};

/// Knobs shared by the polygonal studies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StudyOptions {
    pub closing: Closing,
    pub modulus_samples: usize,
    pub quad_panels: usize,
}

impl Default for StudyOptions {
    fn default() -> Self {
        Self {
            closing: Closing::Exact,
            modulus_samples: DEFAULT_MODULUS_SAMPLES,
            quad_panels: DEFAULT_QUAD_PANELS,
        }
    }
}

fn check_decreasing(name: &str, xs: &[f64]) -> Result<()> {
    if xs.is_empty() {
        return Err(Error::Schedule(format!("{name} schedule is empty")));
    }
    if xs.iter().any(|x| !(*x > 0.0) || !x.is_finite()) {
        return Err(Error::Schedule(format!("{name} schedule has a non-positive entry")));
    }
    if xs.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::Schedule(format!("{name} schedule not monotone")));
    }
    Ok(())
}

fn check_p(p: f64) -> Result<()> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::Validation(format!("exponent p = {p} must be >= 1")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub ell: f64,
    pub h: usize,
    pub mesh: f64,
    pub modulus: f64,
    pub k_p: f64,
    pub reference: f64,
    pub rel_error: f64,
}

impl CsvRow for ConvergenceRow {
    const HEADERS: &'static [&'static str] =
        &["ell", "h", "mesh", "modulus", "k_p", "reference", "rel_error"];

    fn fields(&self) -> Vec<String> {
        vec![
            fmt_f64(self.ell),
            self.h.to_string(),
            fmt_f64(self.mesh),
            fmt_f64(self.modulus),
            fmt_f64(self.k_p),
            fmt_f64(self.reference),
            fmt_f64(self.rel_error),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedRow {
    pub ell: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub curve: String,
    pub p: f64,
    pub reference: f64,
    /// Change of the reference under the last panel doubling.
    pub reference_error: f64,
    pub rows: Vec<ConvergenceRow>,
    pub skipped: Vec<SkippedRow>,
}

impl ConvergenceReport {
    pub fn final_rel_error(&self) -> Option<f64> {
        self.rows.last().map(|r| r.rel_error)
    }

    pub fn errors_strictly_decreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].rel_error < w[0].rel_error)
    }
}

impl Report for ConvergenceReport {
    type Row = ConvergenceRow;

    fn metadata(&self) -> Vec<(&'static str, String)> {
        vec![
            ("report", "convergence".into()),
            ("curve", self.curve.clone()),
            ("p", fmt_f64(self.p)),
            ("reference", fmt_f64(self.reference)),
            ("reference_error", fmt_f64(self.reference_error)),
            ("skipped", serde_json::to_string(&self.skipped).unwrap_or_default()),
        ]
    }

    fn rows(&self) -> &[ConvergenceRow] {
        &self.rows
    }

    fn from_parts(meta: &Metadata, rows: Vec<ConvergenceRow>) -> Result<Self> {
        Ok(Self {
            curve: meta.get("curve")?.to_string(),
            p: meta.parse("p")?,
            reference: meta.parse("reference")?,
            reference_error: meta.parse("reference_error")?,
            rows,
            skipped: serde_json::from_str(meta.get("skipped")?)?,
        })
    }
}

/// References at or below this are treated as zero and the error is absolute.
pub const ZERO_REFERENCE: f64 = 1e-12;

fn rel_error(value: f64, reference: f64) -> f64 {
    if reference > ZERO_REFERENCE {
        (value - reference).abs() / reference
    } else {
        value.abs()
    }
}

/// One equilateral inscription measured against `reference`.
fn measure(
    c: &ParamCurve,
    p: f64,
    ell: f64,
    reference: f64,
    opts: &StudyOptions,
) -> Result<ConvergenceRow> {
    let poly = inscribe_equilateral_with(c, ell, opts.closing)?;
    let k_p = p_rotation(&poly, p)?;
    Ok(ConvergenceRow {
        ell,
        h: poly.num_edges(),
        mesh: poly.mesh(),
        modulus: modulus(c, &poly, opts.modulus_samples),
        k_p,
        reference,
        rel_error: rel_error(k_p, reference),
    })
}

/// k_p of equilateral inscriptions along a decreasing ℓ schedule, compared
/// with the quadrature value of ∫|k|^p.
pub fn convergence_study(c: &ParamCurve, p: f64, ell_schedule: &[f64]) -> Result<ConvergenceReport> {
    convergence_study_with(c, p, ell_schedule, &StudyOptions::default())
}

pub fn convergence_study_with(
    c: &ParamCurve,
    p: f64,
    ell_schedule: &[f64],
    opts: &StudyOptions,
) -> Result<ConvergenceReport> {
    check_p(p)?;
    check_decreasing("ell", ell_schedule)?;
    let reference = integral_kp(c, p, opts.quad_panels)?;
    let results: Vec<(f64, Result<ConvergenceRow>)> = ell_schedule
        .par_iter()
        .map(|&ell| (ell, measure(c, p, ell, reference.value, opts)))
        .collect();
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for (ell, r) in results {
        match r {
            Ok(row) => rows.push(row),
            Err(e) if e.is_numerical() || matches!(e, Error::Validation(_)) => {
                skipped.push(SkippedRow {
                    ell,
                    reason: e.to_string(),
                })
            }
            Err(e) => return Err(e),
        }
    }
    Ok(ConvergenceReport {
        curve: c.descriptor().to_string(),
        p,
        reference: reference.value,
        reference_error: reference.error,
        rows,
        skipped,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelaxationRow {
    pub eps: f64,
    /// Smallest k_p among inscriptions with modulus below `eps`.
    pub min_k_p: f64,
    pub candidates: usize,
}

impl CsvRow for RelaxationRow {
    const HEADERS: &'static [&'static str] = &["eps", "min_k_p", "candidates"];

    fn fields(&self) -> Vec<String> {
        vec![fmt_f64(self.eps), fmt_f64(self.min_k_p), self.candidates.to_string()]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelaxationReport {
    pub curve: String,
    pub p: f64,
    /// Estimate at the smallest ε.
    pub value: f64,
    /// The estimate grew by more than 10% between the last two ε.
    pub diverging: bool,
    pub rows: Vec<RelaxationRow>,
}

impl Report for RelaxationReport {
    type Row = RelaxationRow;

    fn metadata(&self) -> Vec<(&'static str, String)> {
        vec![
            ("report", "relaxation".into()),
            ("curve", self.curve.clone()),
            ("p", fmt_f64(self.p)),
            ("value", fmt_f64(self.value)),
            ("diverging", self.diverging.to_string()),
        ]
    }

    fn rows(&self) -> &[RelaxationRow] {
        &self.rows
    }

    fn from_parts(meta: &Metadata, rows: Vec<RelaxationRow>) -> Result<Self> {
        Ok(Self {
            curve: meta.get("curve")?.to_string(),
            p: meta.parse("p")?,
            value: meta.parse("value")?,
            diverging: meta.parse("diverging")?,
            rows,
        })
    }
}

/// Growth factor between the last two estimates that flags divergence.
pub const DIVERGENCE_GROWTH: f64 = 1.1;

/// Estimates F_p(c) over equilateral inscriptions: for each ε the minimum of
/// k_p over inscriptions with modulus < ε. Edge lengths tried are ε/2 for
/// every ε and ε_min/4.
pub fn relaxation_estimate(c: &ParamCurve, p: f64, eps_schedule: &[f64]) -> Result<RelaxationReport> {
    check_p(p)?;
    check_decreasing("eps", eps_schedule)?;
    let opts = StudyOptions::default();
    let limit = std::f64::consts::FRAC_PI_2.min(c.length());
    let mut ells: Vec<f64> = eps_schedule.iter().map(|e| 0.5 * e).collect();
    ells.push(0.25 * eps_schedule.last().unwrap());
    ells.retain(|&l| l < limit);
    let measured: Vec<(f64, f64)> = ells
        .par_iter()
        .filter_map(|&ell| {
            let poly = inscribe_equilateral_with(c, ell, opts.closing).ok()?;
            let k = p_rotation(&poly, p).ok()?;
            Some((modulus(c, &poly, opts.modulus_samples), k))
        })
        .collect();
    let mut rows = Vec::with_capacity(eps_schedule.len());
    for &eps in eps_schedule {
        let admissible: Vec<f64> = measured.iter().filter(|(m, _)| *m < eps).map(|(_, k)| *k).collect();
        if admissible.is_empty() {
            return Err(Error::Schedule(format!(
                "no equilateral inscription has modulus below eps = {eps}"
            )));
        }
        rows.push(RelaxationRow {
            eps,
            min_k_p: admissible.iter().copied().fold(f64::INFINITY, f64::min),
            candidates: admissible.len(),
        });
    }
    let value = rows.last().unwrap().min_k_p;
    let diverging = rows.len() >= 2 && {
        let prev = rows[rows.len() - 2].min_k_p;
        value > DIVERGENCE_GROWTH * prev
    };
    Ok(RelaxationReport {
        curve: c.descriptor().to_string(),
        p,
        value,
        diverging,
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowupRow {
    pub h: usize,
    pub theta_h: f64,
    pub lower_bound: f64,
    pub k_p: f64,
}

impl CsvRow for BlowupRow {
    const HEADERS: &'static [&'static str] = &["h", "theta_h", "lower_bound", "k_p"];

    fn fields(&self) -> Vec<String> {
        vec![
            self.h.to_string(),
            fmt_f64(self.theta_h),
            fmt_f64(self.lower_bound),
            fmt_f64(self.k_p),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowupReport {
    pub theta: f64,
    pub p: f64,
    pub arm_length: f64,
    pub rows: Vec<BlowupRow>,
}

impl BlowupReport {
    /// k_p(P_{h_{j+1}}) / k_p(P_{h_j}) for consecutive rows.
    pub fn growth_ratios(&self) -> Vec<f64> {
        self.rows.windows(2).map(|w| w[1].k_p / w[0].k_p).collect()
    }
}

impl Report for BlowupReport {
    type Row = BlowupRow;

    fn metadata(&self) -> Vec<(&'static str, String)> {
        vec![
            ("report", "corner_blowup".into()),
            ("theta", fmt_f64(self.theta)),
            ("p", fmt_f64(self.p)),
            ("arm_length", fmt_f64(self.arm_length)),
        ]
    }

    fn rows(&self) -> &[BlowupRow] {
        &self.rows
    }

    fn from_parts(meta: &Metadata, rows: Vec<BlowupRow>) -> Result<Self> {
        Ok(Self {
            theta: meta.parse("theta")?,
            p: meta.parse("p")?,
            arm_length: meta.parse("arm_length")?,
            rows,
        })
    }
}

/// Arm length of the corner curve used by [`corner_blowup_study`].
pub const CORNER_ARM: f64 = 1.0;

/// Polygonals with vertices at {0, t̄ − 1/h, t̄, t̄ + 1/h, T} on a corner curve
/// with corner at t̄.
pub fn corner_blowup_study(theta: f64, p: f64, h_schedule: &[usize]) -> Result<BlowupReport> {
    check_p(p)?;
    if h_schedule.is_empty() || h_schedule.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Schedule("h schedule must be nonempty and increasing".into()));
    }
    let arm = CORNER_ARM;
    if (h_schedule[0] as f64) * arm <= 1.0 {
        return Err(Error::Schedule(format!("h must exceed 1/{arm}")));
    }
    let c = make_corner_curve(theta, arm)?;
    let rows = h_schedule
        .iter()
        .map(|&h| {
            let d = 1.0 / h as f64;
            let poly = inscribe_at_times(&c, &[0.0, arm - d, arm, arm + d, 2.0 * arm])?;
            let theta_h = poly.turning_angles()[1];
            Ok(BlowupRow {
                h,
                theta_h,
                lower_bound: (h as f64).powf(p - 1.0) * theta_h.powf(p),
                k_p: p_rotation(&poly, p)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BlowupReport {
        theta,
        p,
        arm_length: arm,
        rows,
    })
}

/// Intrinsic rotations of a regular n-gon P inscribed in a parallel and of
/// P' = P plus one vertex, against ∫|k| ds. Rotations include the angle at the
/// closing vertex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleReport {
    pub phi: f64,
    pub n: usize,
    pub extra_time: f64,
    pub k_star_p: f64,
    pub k_star_p_prime: f64,
    pub integral_k1: f64,
    /// k*(P) − k*(P').
    pub margin_refinement: f64,
    /// k*(P) − ∫|k| ds.
    pub margin_integral: f64,
}

impl CounterexampleReport {
    pub fn holds(&self) -> bool {
        self.margin_refinement > 0.0 && self.margin_integral > 0.0
    }
}

impl CsvRow for CounterexampleReport {
    const HEADERS: &'static [&'static str] = &[
        "phi",
        "n",
        "extra_time",
        "k_star_p",
        "k_star_p_prime",
        "integral_k1",
        "margin_refinement",
        "margin_integral",
    ];

    fn fields(&self) -> Vec<String> {
        vec![
            fmt_f64(self.phi),
            self.n.to_string(),
            fmt_f64(self.extra_time),
            fmt_f64(self.k_star_p),
            fmt_f64(self.k_star_p_prime),
            fmt_f64(self.integral_k1),
            fmt_f64(self.margin_refinement),
            fmt_f64(self.margin_integral),
        ]
    }
}

pub fn monotonicity_counterexample(phi: f64, n: usize, extra_time: f64) -> Result<CounterexampleReport> {
    if n < 3 {
        return Err(Error::Validation(format!("need n >= 3, got {n}")));
    }
    let c = make_parallel(phi, 1.0)?;
    let len = c.domain();
    let times: Vec<f64> = (0..=n).map(|i| len * i as f64 / n as f64).collect();
    if !(extra_time > 0.0 && extra_time < len) || times.iter().any(|t| (t - extra_time).abs() < 1e-12) {
        return Err(Error::Validation(format!(
            "extra time {extra_time} must lie strictly inside (0, {len}) and off the n-gon times"
        )));
    }
    let poly = inscribe_at_times(&c, &times)?;
    let mut refined_times = times.clone();
    refined_times.push(extra_time);
    refined_times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let refined = inscribe_at_times(&c, &refined_times)?;
    let k_star_p = poly.closed_rotation()?;
    let k_star_p_prime = refined.closed_rotation()?;
    let integral_k1 = integral_kp(&c, 1.0, DEFAULT_QUAD_PANELS)?.value;
    Ok(CounterexampleReport {
        phi,
        n,
        extra_time,
        k_star_p,
        k_star_p_prime,
        integral_k1,
        margin_refinement: k_star_p - k_star_p_prime,
        margin_integral: k_star_p - integral_k1,
    })
}

/// Midpoint of the first edge of the regular n-gon in the parallel of colatitude `phi`.
pub fn first_edge_midpoint_time(phi: f64, n: usize) -> f64 {
    std::f64::consts::PI * phi.sin() / n as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleTable {
    pub rows: Vec<CounterexampleReport>,
}

impl Report for CounterexampleTable {
    type Row = CounterexampleReport;

    fn metadata(&self) -> Vec<(&'static str, String)> {
        vec![("report", "counterexample".into())]
    }

    fn rows(&self) -> &[CounterexampleReport] {
        &self.rows
    }

    fn from_parts(_meta: &Metadata, rows: Vec<CounterexampleReport>) -> Result<Self> {
        Ok(Self { rows })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BendTableRow {
    pub ell: f64,
    pub theta: f64,
    pub p: f64,
    pub closed_form: f64,
    pub exact_arcs: f64,
    pub quadrature: f64,
    pub max_rel_diff: f64,
}

impl CsvRow for BendTableRow {
    const HEADERS: &'static [&'static str] =
        &["ell", "theta", "p", "closed_form", "exact_arcs", "quadrature", "max_rel_diff"];

    fn fields(&self) -> Vec<String> {
        [
            self.ell,
            self.theta,
            self.p,
            self.closed_form,
            self.exact_arcs,
            self.quadrature,
            self.max_rel_diff,
        ]
        .map(fmt_f64)
        .to_vec()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BendTable {
    pub rows: Vec<BendTableRow>,
}

impl BendTable {
    pub fn max_rel_diff(&self) -> f64 {
        self.rows.iter().map(|r| r.max_rel_diff).fold(0.0, f64::max)
    }
}

impl Report for BendTable {
    type Row = BendTableRow;

    fn metadata(&self) -> Vec<(&'static str, String)> {
        vec![("report", "bend_table".into())]
    }

    fn rows(&self) -> &[BendTableRow] {
        &self.rows
    }

    fn from_parts(_meta: &Metadata, rows: Vec<BendTableRow>) -> Result<Self> {
        Ok(Self { rows })
    }
}

/// F_p(ℓ, θ) three ways on single-corner polygonals: closed form, exact arc
/// sums, and quadrature of ‖γ'' + γ‖^p.
pub fn bend_table(ells: &[f64], thetas: &[f64], ps: &[f64]) -> Result<BendTable> {
    let mut rows = Vec::new();
    for &ell in ells {
        for &theta in thetas {
            let gamma = build_gamma(&single_corner(ell, theta)?)?;
            for &p in ps {
                check_p(p)?;
                let closed_form = fp_closed_form(ell, theta, p)?;
                let exact_arcs = gamma.kp(p);
                let quadrature = gamma.kp_quadrature(p, 8);
                let scale = closed_form.abs().max(f64::MIN_POSITIVE);
                let max_rel_diff = ((exact_arcs - closed_form).abs())
                    .max((quadrature - closed_form).abs())
                    / scale;
                rows.push(BendTableRow {
                    ell,
                    theta,
                    p,
                    closed_form,
                    exact_arcs,
                    quadrature,
                    max_rel_diff,
                });
            }
        }
    }
    Ok(BendTable { rows })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConformalRow {
    pub curve: String,
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub k_formula: f64,
    pub k_fd: f64,
    pub rel_error: f64,
}

impl CsvRow for ConformalRow {
    const HEADERS: &'static [&'static str] = &["curve", "t", "x", "y", "k_formula", "k_fd", "rel_error"];

    fn fields(&self) -> Vec<String> {
        vec![
            self.curve.clone(),
            fmt_f64(self.t),
            fmt_f64(self.x),
            fmt_f64(self.y),
            fmt_f64(self.k_formula),
            fmt_f64(self.k_fd),
            fmt_f64(self.rel_error),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConformalCheckReport {
    pub rows: Vec<ConformalRow>,
}

impl ConformalCheckReport {
    pub fn max_rel_error(&self) -> f64 {
        self.rows.iter().map(|r| r.rel_error).fold(0.0, f64::max)
    }
}

impl Report for ConformalCheckReport {
    type Row = ConformalRow;

    fn metadata(&self) -> Vec<(&'static str, String)> {
        vec![("report", "conformal_check".into())]
    }

    fn rows(&self) -> &[ConformalRow] {
        &self.rows
    }

    fn from_parts(_meta: &Metadata, rows: Vec<ConformalRow>) -> Result<Self> {
        Ok(Self { rows })
    }
}

/// The test curves of the conformal check: lines, circles and a spiral.
pub fn conformal_test_curves() -> Result<Vec<PlanarCurve>> {
    use crate::conformal::Vec2;
    Ok(vec![
        PlanarCurve::line(Vec2::new(-1.0, 0.0), Vec2::x(), 2.0)?,
        PlanarCurve::line(Vec2::new(-1.0, 0.7), Vec2::new(1.0, 0.3), 2.5)?,
        PlanarCurve::circle(Vec2::zeros(), 1.0, 1.0)?,
        PlanarCurve::circle(Vec2::new(0.9, -0.4), 0.5, 1.0)?,
        PlanarCurve::archimedean_spiral(0.3, 0.15, 0.0, 2.0)?,
    ])
}

/// Relative gap floor: differences are divided by max(|k_fd|, 1).
pub const CONFORMAL_REL_FLOOR: f64 = 1.0;

/// Compares |e^{−λ}(k_plane − ∂_u λ)| with finite-difference geodesic
/// curvature of the arc-length reparametrized pushforward at `n_points`
/// interior parameters per curve.
pub fn conformal_check(curves: &[PlanarCurve], n_points: usize) -> Result<ConformalCheckReport> {
    let per_curve = curves
        .par_iter()
        .map(|g| -> Result<Vec<ConformalRow>> {
            let c = pushforward_curve_with_mode(g, DerivativeMode::Numeric { h: DEFAULT_H_FD })?;
            let unit = arclength_reparam(&c, 1e-6)?;
            (0..n_points)
                .map(|j| {
                    let t = g.domain() * (j as f64 + 0.5) / n_points as f64;
                    let k_formula = g.image_curvature(t).abs();
                    let k_fd = geodesic_curvature_at(&unit, c.arclength_at(t))?;
                    let pt = g.position(t);
                    Ok(ConformalRow {
                        curve: g.descriptor().to_string(),
                        t,
                        x: pt.x,
                        y: pt.y,
                        k_formula,
                        k_fd,
                        rel_error: (k_formula - k_fd).abs() / k_fd.abs().max(CONFORMAL_REL_FLOOR),
                    })
                })
                .collect()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ConformalCheckReport {
        rows: per_curve.into_iter().flatten().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve_model::make_great_circle;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, PI};

    fn halving(start: f64, n: usize) -> Vec<f64> {
        (0..n).map(|j| start * 0.5f64.powi(j as i32)).collect()
    }

    #[test]
    fn parallel_p2_converges_monotonically() {
        let c = make_parallel(FRAC_PI_3, 1.0).unwrap();
        let rep = convergence_study(&c, 2.0, &halving(0.2, 5)).unwrap();
        assert!((rep.reference - PI / 3f64.sqrt()).abs() < 1e-10);
        assert!(rep.errors_strictly_decreasing(), "{:?}", rep.rows);
        assert!(rep.final_rel_error().unwrap() <= 0.02);
        assert!(rep.rows.windows(2).all(|w| w[1].modulus < w[0].modulus));
    }

    #[test]
    fn great_circle_rows_are_flat() {
        let c = make_great_circle(1.0).unwrap();
        let rep = convergence_study(&c, 2.0, &[0.3, 0.1]).unwrap();
        assert!(rep.reference < 1e-20);
        assert!(rep.rows.iter().all(|r| r.k_p <= 1e-8));
    }

    #[test]
    fn schedule_must_decrease() {
        let c = make_parallel(1.0, 1.0).unwrap();
        assert!(matches!(convergence_study(&c, 2.0, &[0.1, 0.2]), Err(Error::Schedule(_))));
        assert!(matches!(convergence_study(&c, 2.0, &[]), Err(Error::Schedule(_))));
    }

    #[test]
    fn failing_rows_are_skipped() {
        let c = make_parallel(0.2, 1.0).unwrap();
        let rep = convergence_study(&c, 2.0, &[0.5, 0.05]).unwrap();
        assert_eq!(rep.rows.len(), 1);
        assert_eq!(rep.skipped.len(), 1);
        assert_eq!(rep.skipped[0].ell, 0.5);
    }

    #[test]
    fn relaxation_on_parallel_and_corner() {
        let c = make_parallel(FRAC_PI_3, 1.0).unwrap();
        let rep = relaxation_estimate(&c, 2.0, &[0.4, 0.2, 0.1, 0.05]).unwrap();
        assert!((rep.value - PI / 3f64.sqrt()).abs() / (PI / 3f64.sqrt()) < 0.02);
        assert!(!rep.diverging);
        let g = make_great_circle(1.0).unwrap();
        assert!(relaxation_estimate(&g, 2.0, &[0.4, 0.1]).unwrap().value < 1e-8);
        let corner = make_corner_curve(FRAC_PI_2, 1.0).unwrap();
        let rep = relaxation_estimate(&corner, 2.0, &[0.4, 0.2, 0.1, 0.05]).unwrap();
        assert!(rep.diverging, "{:?}", rep.rows);
    }

    #[test]
    fn relaxation_schedule_error() {
        let c = make_parallel(FRAC_PI_3, 1.0).unwrap();
        assert!(matches!(relaxation_estimate(&c, 2.0, &[1e-9]), Err(Error::Schedule(_))));
    }

    #[test]
    fn corner_blowup_growth() {
        let rep = corner_blowup_study(FRAC_PI_2, 2.0, &[8, 16, 32, 64, 128]).unwrap();
        for r in &rep.rows {
            assert!(r.k_p >= r.lower_bound - 1e-9);
            assert!((r.theta_h - FRAC_PI_2).abs() < 1e-10);
        }
        for ratio in rep.growth_ratios() {
            assert!(ratio >= 1.8);
        }
        let p1 = corner_blowup_study(1.0, 1.0, &[8, 64, 512]).unwrap();
        for r in &p1.rows {
            assert!((r.k_p - 1.0).abs() < 0.05);
        }
    }

    #[test]
    fn counterexample_on_quarter_parallel() {
        let t = first_edge_midpoint_time(FRAC_PI_4, 6);
        let rep = monotonicity_counterexample(FRAC_PI_4, 6, t).unwrap();
        assert!(rep.holds(), "{rep:?}");
        assert!((rep.integral_k1 - 2.0 * PI * FRAC_PI_4.cos()).abs() < 1e-10);
        let eq = monotonicity_counterexample(FRAC_PI_2, 6, first_edge_midpoint_time(FRAC_PI_2, 6)).unwrap();
        assert!(eq.k_star_p < 1e-10 && eq.k_star_p_prime < 1e-10 && eq.integral_k1 < 1e-10);
        assert!(!eq.holds());
        assert!(monotonicity_counterexample(0.0, 6, 0.1).is_err());
    }

    #[test]
    fn counterexample_margins_shrink() {
        let m = |n| {
            monotonicity_counterexample(FRAC_PI_4, n, first_edge_midpoint_time(FRAC_PI_4, n))
                .unwrap()
                .margin_integral
        };
        assert!(m(6) > m(12) && m(12) > m(24));
    }

    #[test]
    fn bend_table_agrees() {
        let t = bend_table(&[0.5, 0.1], &[0.1, 1.0], &[1.0, 2.0]).unwrap();
        assert_eq!(t.rows.len(), 8);
        assert!(t.max_rel_diff() <= 1e-8);
    }

    #[test]
    fn conformal_check_passes() {
        let rep = conformal_check(&conformal_test_curves().unwrap(), 10).unwrap();
        assert!(rep.max_rel_error() <= 1e-4, "{}", rep.max_rel_error());
    }

    #[test]
    fn report_round_trips() {
        let c = make_parallel(1.0, 1.0).unwrap();
        let rep = convergence_study(&c, 1.5, &[0.3, 0.15]).unwrap();
        let csv = rep.to_csv_string().unwrap();
        assert_eq!(ConvergenceReport::read_csv(csv.as_bytes()).unwrap(), rep);
        let json = rep.to_json_string().unwrap();
        assert_eq!(ConvergenceReport::read_json(json.as_bytes()).unwrap(), rep);
    }
}
