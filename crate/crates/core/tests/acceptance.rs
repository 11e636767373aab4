//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, PI};
use std::time::Instant;

use sphere_pcurv::bend_construction::{build_gamma, fp_closed_form, p_rotation, single_corner, GluedCurve};
use sphere_pcurv::cli::{self, ClosingArg, Command, CurveSource, Format, RunConfig};
use sphere_pcurv::conformal::{
    conformal_curvature, pstima_constant, pstima_ratio, pushforward_curve, PlanarCurve, Vec2,
};
use sphere_pcurv::curve_model::{integral_kp, make_great_circle, make_parallel};
use sphere_pcurv::experiments::{
    bend_table, conformal_check, conformal_test_curves, convergence_study, corner_blowup_study,
    first_edge_midpoint_time, monotonicity_counterexample, CounterexampleTable,
};
use sphere_pcurv::polygonal::{inscribe_equilateral_with, Closing};
use sphere_pcurv::report::Report;
use sphere_pcurv::Vec3;

const ELLS: [f64; 3] = [0.5, 0.1, 0.02];
const THETAS: [f64; 4] = [0.1, 0.5, 1.0, 2.0];
const PS: [f64; 4] = [1.0, 1.5, 2.0, 3.0];

const TOL_EXACT_VS_CLOSED: f64 = 1e-12;
const TOL_BRUTE_FORCE: f64 = 1e-8;
const BRUTE_FORCE_SAMPLES: usize = 10_000;
const BEND_RUNTIME_S: f64 = 5.0;
const TOL_TANGENT: f64 = 1e-8;
const TOL_CORNER_LIMIT: f64 = 1e-6;
const EUCLID_BAND: (f64, f64) = (0.95, 1.05);
const TOL_REFERENCE_DOUBLING: f64 = 1e-10;
const FINAL_REL_ERROR: f64 = 0.02;
const CONVERGENCE_RUNTIME_S: f64 = 30.0;
const TOL_TURNING: f64 = 1e-10;
const TOL_GREAT_KP: f64 = 1e-8;
const TOL_EQUATOR: f64 = 1e-10;
const BLOWUP_RATIO: f64 = 1.8;
const TOL_CONFORMAL: f64 = 1e-4;
const CONFORMAL_POINTS: usize = 50;
const TOL_EQUATOR_IMAGE: f64 = 1e-8;
const TOL_C2: f64 = 1e-6;
const TOL_ASYMPTOTIC: f64 = 1e-4;
const PSTIMA_GRID: usize = 100;

type Outcome = Result<(bool, String), String>;
type Criterion = (&'static str, fn() -> Outcome);

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn halving(start: f64, n: usize) -> Vec<f64> {
    (0..n).map(|j| start * 0.5f64.powi(j as i32)).collect()
}

/// Small circle through three points on the sphere: (geodesic curvature,
/// Euclidean radius).
fn fit_circle(a: Vec3, b: Vec3, c: Vec3) -> (f64, f64) {
    let n = (b - a).cross(&(c - a));
    if n.norm() == 0.0 {
        return (0.0, 1.0);
    }
    let n = n.normalize();
    let r = n.cross(&b).norm();
    (n.dot(&b).abs() / r, r)
}

/// ∫|k|^p over γ from point samples only: each smooth piece is sampled, a
/// wide three-point circle gives the curvature and radius, and each sample
/// interval contributes its chord converted to arc length on that circle.
fn brute_force_kp(gamma: &GluedCurve, p: f64, samples: usize) -> f64 {
    let total = gamma.length();
    let mut start = 0.0;
    let mut sum = 0.0;
    for piece in gamma.pieces() {
        let len = piece.length();
        if len == 0.0 {
            continue;
        }
        let n = ((samples as f64 * len / total).round() as usize).max(3);
        let at = |s: f64| gamma.point_at(start + s);
        let h = len / 4.0;
        for j in 0..n {
            let s0 = len * j as f64 / n as f64;
            let s1 = len * (j + 1) as f64 / n as f64;
            let mid = (0.5 * (s0 + s1)).clamp(h, len - h);
            let (k, r) = fit_circle(at(mid - h), at(mid), at(mid + h));
            let chord = (at(s1) - at(s0)).norm();
            sum += k.powf(p) * 2.0 * r * (0.5 * chord / r).min(1.0).asin();
        }
        start += len;
    }
    sum
}

fn criterion_1() -> Outcome {
    let t0 = Instant::now();
    let (mut worst_exact, mut worst_brute) = (0.0f64, 0.0f64);
    for ell in ELLS {
        for theta in THETAS {
            let poly = single_corner(ell, theta).map_err(|e| e.to_string())?;
            let gamma = build_gamma(&poly).map_err(|e| e.to_string())?;
            for p in PS {
                let closed = fp_closed_form(ell, theta, p).map_err(|e| e.to_string())?;
                let exact = p_rotation(&poly, p).map_err(|e| e.to_string())?;
                worst_exact = worst_exact.max(rel(exact, closed));
                worst_brute = worst_brute.max(rel(brute_force_kp(&gamma, p, BRUTE_FORCE_SAMPLES), closed));
            }
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    Ok((
        worst_exact <= TOL_EXACT_VS_CLOSED && worst_brute <= TOL_BRUTE_FORCE && secs < BEND_RUNTIME_S,
        format!("exact vs closed {worst_exact:.2e}, brute force {worst_brute:.2e}, {secs:.2}s"),
    ))
}

fn criterion_2() -> Outcome {
    let mut worst = 0.0f64;
    let mut counts_ok = true;
    let mut check = |gamma: &GluedCurve, h: usize| {
        worst = worst.max(gamma.max_tangent_mismatch());
        counts_ok &= gamma.pieces().len() == 2 * h - 1 && gamma.junctions().len() == 2 * h - 2;
    };
    for ell in ELLS {
        for theta in THETAS {
            let poly = single_corner(ell, theta).map_err(|e| e.to_string())?;
            check(&build_gamma(&poly).map_err(|e| e.to_string())?, poly.num_edges());
        }
    }
    let c = make_parallel(FRAC_PI_3, 1.0).map_err(|e| e.to_string())?;
    let mut polys = 0;
    for ell in ELLS.iter().chain(&THETAS).filter(|&&l| l < FRAC_PI_2) {
        let poly = inscribe_equilateral_with(&c, *ell, Closing::ShortLastEdge).map_err(|e| e.to_string())?;
        check(&build_gamma(&poly).map_err(|e| e.to_string())?, poly.num_edges());
        polys += 1;
    }
    Ok((
        worst <= TOL_TANGENT && counts_ok,
        format!("max tangent mismatch {worst:.2e}, piece/junction counts exact: {counts_ok} ({} corners, {polys} inscriptions)", ELLS.len() * THETAS.len()),
    ))
}

fn criterion_3() -> Outcome {
    let mut worst = 0.0f64;
    for theta in [0.1, 1.0, 2.0] {
        let v = fp_closed_form(1e-6, theta, 1.0).map_err(|e| e.to_string())?;
        worst = worst.max((v - theta).abs() / theta);
    }
    Ok((worst <= TOL_CORNER_LIMIT, format!("max |F_1 - theta|/theta = {worst:.2e}")))
}

fn criterion_4() -> Outcome {
    let (ell, theta) = (1e-2, 1e-2);
    let mut ratios = Vec::new();
    for p in [1.5, 2.0, 3.0] {
        let euclid = (ell / 2.0f64).powf(1.0 - p) * theta * (theta / 2.0).tan().powf(p - 1.0);
        ratios.push(fp_closed_form(ell, theta, p).map_err(|e| e.to_string())? / euclid);
    }
    let ok = ratios.iter().all(|r| (EUCLID_BAND.0..=EUCLID_BAND.1).contains(r));
    Ok((ok, format!("ratios {ratios:.6?}")))
}

fn criterion_5() -> Outcome {
    let t0 = Instant::now();
    let phi = FRAC_PI_3;
    let c = make_parallel(phi, 1.0).map_err(|e| e.to_string())?;
    let schedule = halving(0.2, 5);
    let mut ok = true;
    let mut notes = Vec::new();
    for (p, oracle) in [(2.0, PI / 3f64.sqrt()), (1.0, 2.0 * PI * phi.cos())] {
        let coarse = integral_kp(&c, p, 256).map_err(|e| e.to_string())?.value;
        let fine = integral_kp(&c, p, 512).map_err(|e| e.to_string())?.value;
        let rep = convergence_study(&c, p, &schedule).map_err(|e| e.to_string())?;
        let final_err = rep.final_rel_error().unwrap_or(f64::INFINITY);
        let this = rel(coarse, fine) <= TOL_REFERENCE_DOUBLING
            && rel(rep.reference, oracle) <= TOL_REFERENCE_DOUBLING
            && rep.rows.len() == schedule.len()
            && rep.errors_strictly_decreasing()
            && final_err <= FINAL_REL_ERROR;
        ok &= this;
        let errs: Vec<String> = rep.rows.iter().map(|r| format!("{:.4}", r.rel_error)).collect();
        notes.push(format!("p={p}: errors [{}]", errs.join(", ")));
    }
    let secs = t0.elapsed().as_secs_f64();
    Ok((ok && secs < CONVERGENCE_RUNTIME_S, format!("{}; {secs:.2}s", notes.join("; "))))
}

fn criterion_6() -> Outcome {
    let c = make_great_circle(1.0).map_err(|e| e.to_string())?;
    let (mut max_turn, mut max_kp) = (0.0f64, 0.0f64);
    for ell in halving(0.2, 5) {
        for closing in [Closing::ShortLastEdge, Closing::Exact] {
            let poly = inscribe_equilateral_with(&c, ell, closing).map_err(|e| e.to_string())?;
            max_turn = poly.turning_angles().into_iter().fold(max_turn, f64::max);
            for p in PS {
                max_kp = max_kp.max(p_rotation(&poly, p).map_err(|e| e.to_string())?);
            }
        }
    }
    let rep = convergence_study(&c, 2.0, &halving(0.2, 5)).map_err(|e| e.to_string())?;
    max_kp = rep.rows.iter().map(|r| r.k_p).fold(max_kp, f64::max);
    Ok((
        max_turn <= TOL_TURNING && max_kp <= TOL_GREAT_KP,
        format!("max turning angle {max_turn:.2e}, max k_p {max_kp:.2e}"),
    ))
}

fn criterion_7() -> Outcome {
    let n = 6;
    let rep = monotonicity_counterexample(FRAC_PI_4, n, first_edge_midpoint_time(FRAC_PI_4, n))
        .map_err(|e| e.to_string())?;
    let eq = monotonicity_counterexample(FRAC_PI_2, n, first_edge_midpoint_time(FRAC_PI_2, n))
        .map_err(|e| e.to_string())?;
    let control = [eq.k_star_p, eq.k_star_p_prime, eq.integral_k1].iter().all(|v| v.abs() <= TOL_EQUATOR);
    Ok((
        rep.holds() && rep.margin_refinement > 0.0 && rep.margin_integral > 0.0 && control && !eq.holds(),
        format!(
            "k*(P)={:.6}, k*(P')={:.6}, 2pi cos = {:.6}; margins {:.4e}, {:.4e}; equator control zero: {control}",
            rep.k_star_p, rep.k_star_p_prime, rep.integral_k1, rep.margin_refinement, rep.margin_integral
        ),
    ))
}

fn criterion_8() -> Outcome {
    let theta = FRAC_PI_2;
    let rep = corner_blowup_study(theta, 2.0, &[8, 16, 32, 64, 128]).map_err(|e| e.to_string())?;
    let bound = rep.rows.iter().all(|r| r.k_p >= r.lower_bound * (1.0 - 1e-12));
    let gaps: Vec<f64> = rep.rows.iter().map(|r| (r.theta_h - theta).abs()).collect();
    let monotone = gaps.windows(2).all(|w| w[1] <= w[0]);
    let ratios: Vec<f64> = rep
        .rows
        .windows(2)
        .filter(|w| w[0].h >= 32 && w[1].h == 2 * w[0].h)
        .map(|w| w[1].k_p / w[0].k_p)
        .collect();
    let growth = !ratios.is_empty() && ratios.iter().all(|&r| r >= BLOWUP_RATIO);
    Ok((
        bound && monotone && growth,
        format!("lower bound held: {bound}, theta_h monotone: {monotone}, ratios h>=32 {ratios:.4?}"),
    ))
}

fn criterion_9() -> Outcome {
    let rep = conformal_check(&conformal_test_curves().map_err(|e| e.to_string())?, CONFORMAL_POINTS)
        .map_err(|e| e.to_string())?;
    let worst = rep.max_rel_error();
    let g = PlanarCurve::circle(Vec2::zeros(), 2.0, 1.0).map_err(|e| e.to_string())?;
    let c = pushforward_curve(&g).map_err(|e| e.to_string())?;
    let mut equator = 0.0f64;
    for j in 0..CONFORMAL_POINTS {
        let t = g.domain() * (j as f64 + 0.5) / CONFORMAL_POINTS as f64;
        let (x, d1, d2) = (c.position_vec(t), c.first_derivative(t), c.second_derivative(t));
        let k_sphere = x.dot(&d1.cross(&d2)).abs() / d1.norm().powi(3);
        let pt = g.position(t);
        let k_formula = conformal_curvature(g.curvature(t), (pt.x, pt.y), g.conormal(t)).map_err(|e| e.to_string())?;
        equator = equator.max(k_sphere).max(k_formula.abs()).max(x.z.abs());
    }
    Ok((
        worst <= TOL_CONFORMAL && equator <= TOL_EQUATOR_IMAGE && rep.rows.len() == 5 * CONFORMAL_POINTS,
        format!("max rel error {worst:.2e} over {} points; radius-2 circle image max(|k|, |z|) {equator:.2e}", rep.rows.len()),
    ))
}

fn criterion_10() -> Outcome {
    let c2 = pstima_constant(2.0).map_err(|e| e.to_string())?;
    let mut ok = (c2 - 2.0).abs() <= TOL_C2;
    let mut notes = vec![format!("C(2) = {c2:.10}")];
    for p in [1.5, 2.0, 3.0] {
        let r = pstima_ratio(1e6, p);
        let cp = pstima_constant(p).map_err(|e| e.to_string())?;
        let grid: Vec<f64> = (0..PSTIMA_GRID)
            .map(|i| 10f64.powf(-3.0 + 6.0 * i as f64 / (PSTIMA_GRID - 1) as f64))
            .collect();
        let mut worst = f64::INFINITY;
        for &a in &grid {
            for &b in &grid {
                let lhs = (a - b).abs().powf(p);
                let rhs = a.powf(p) - cp * b * a.powf(p - 1.0);
                worst = worst.min((lhs - rhs) / a.max(b).powf(p));
            }
        }
        ok &= (r + p).abs() <= TOL_ASYMPTOTIC && worst >= -1e-12;
        notes.push(format!("p={p}: ratio(1e6)={r:.8}, C={cp:.8}, min slack {worst:.2e}"));
    }
    Ok((ok, notes.join("; ")))
}

/// Every report the criteria produce, serialized.
fn reports(dir: &std::path::Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let e = |x: sphere_pcurv::Error| x.to_string();
    let mut out = Vec::new();
    let mut push = |name: &str, bytes: Vec<u8>| out.push((name.to_string(), bytes));
    let bt = bend_table(&ELLS, &THETAS, &PS).map_err(e)?;
    push("bend.csv", bt.to_csv_string().map_err(e)?.into_bytes());
    push("bend.json", bt.to_json_string().map_err(e)?.into_bytes());
    let par = make_parallel(FRAC_PI_3, 1.0).map_err(e)?;
    for p in [1.0, 2.0] {
        let r = convergence_study(&par, p, &halving(0.2, 5)).map_err(e)?;
        push(&format!("converge_p{p}.csv"), r.to_csv_string().map_err(e)?.into_bytes());
    }
    let gc = make_great_circle(1.0).map_err(e)?;
    push(
        "great.csv",
        convergence_study(&gc, 2.0, &halving(0.2, 5)).map_err(e)?.to_csv_string().map_err(e)?.into_bytes(),
    );
    let rows = [FRAC_PI_4, FRAC_PI_2]
        .iter()
        .map(|&phi| monotonicity_counterexample(phi, 6, first_edge_midpoint_time(phi, 6)))
        .collect::<sphere_pcurv::Result<Vec<_>>>()
        .map_err(e)?;
    push("counterexample.csv", CounterexampleTable { rows }.to_csv_string().map_err(e)?.into_bytes());
    let corner = corner_blowup_study(FRAC_PI_2, 2.0, &[8, 16, 32, 64, 128]).map_err(e)?;
    push("corner.json", corner.to_json_string().map_err(e)?.into_bytes());
    let conf = conformal_check(&conformal_test_curves().map_err(e)?, CONFORMAL_POINTS).map_err(e)?;
    push("conformal.csv", conf.to_csv_string().map_err(e)?.into_bytes());
    let pst: Vec<String> = [1.5, 2.0, 3.0]
        .iter()
        .map(|&p| format!("{p},{:.16e},{:.16e}", pstima_constant(p).unwrap(), pstima_ratio(1e6, p)))
        .collect();
    push("pstima.csv", pst.join("\n").into_bytes());
    for (name, cmd) in [
        (
            "cli_bend.csv",
            Command::BendTable { ell: vec![0.1], theta: vec![1.0], p: vec![2.0], random: 8 },
        ),
        (
            "cli_converge.csv",
            Command::Converge {
                curve: CurveSource::Parallel { phi: FRAC_PI_3, turns: 1.0 },
                p: 2.0,
                ell: vec![0.2, 0.1],
                closing: ClosingArg::Exact,
            },
        ),
    ] {
        let cfg = RunConfig { command: cmd, output: Some(dir.join(name)), format: Format::Csv, seed: 42 };
        cli::run(&cfg).map_err(e)?;
        push(name, std::fs::read(dir.join(name)).map_err(|x| x.to_string())?);
    }
    Ok(out)
}

fn criterion_11() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut runs = Vec::new();
    for (i, threads) in [1usize, 4].into_iter().enumerate() {
        let dir = tmp.path().join(format!("run{i}"));
        std::fs::create_dir(&dir).map_err(|e| e.to_string())?;
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().map_err(|e| e.to_string())?;
        let reps = pool.install(|| reports(&dir))?;
        for (name, bytes) in &reps {
            std::fs::write(dir.join(name), bytes).map_err(|e| e.to_string())?;
        }
        runs.push((dir, reps.into_iter().map(|(n, _)| n).collect::<Vec<_>>()));
    }
    let mut differing = Vec::new();
    for name in &runs[0].1 {
        let a = std::fs::read(runs[0].0.join(name)).map_err(|e| e.to_string())?;
        let b = std::fs::read(runs[1].0.join(name)).map_err(|e| e.to_string())?;
        if a != b {
            differing.push(name.clone());
        }
    }
    Ok((
        differing.is_empty(),
        format!("{} report files compared across 1- and 4-thread runs, differing: {differing:?}", runs[0].1.len()),
    ))
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("bend formula oracle equivalence", criterion_1),
        ("C1 gluing and piece counts", criterion_2),
        ("p=1 corner limit", criterion_3),
        ("Euclidean asymptotics", criterion_4),
        ("convergence on the pi/3 parallel", criterion_5),
        ("great-circle null case", criterion_6),
        ("monotonicity counterexample", criterion_7),
        ("corner blowup", criterion_8),
        ("conformal curvature formula", criterion_9),
        ("inequality constant", criterion_10),
        ("determinism", criterion_11),
    ];
    let mut failures = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let (pass, detail) = f().unwrap_or_else(|e| (false, format!("error: {e}")));
        if !pass {
            failures += 1;
        }
        println!("criterion {:>2} {}: {name}: {detail}", i + 1, if pass { "PASS" } else { "FAIL" });
    }
    if failures > 0 {
        println!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all 11 acceptance criteria passed");
}
