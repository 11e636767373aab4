//! Command-line front end: argument parsing, dry-run validation and report output.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bend_construction::{build_gamma, SINGULAR_MARGIN};
use crate::curve_model::{load_sampled_curve, make_corner_curve, make_great_circle, make_parallel, ParamCurve};
use crate::error::{Error, Result};
use crate::experiments::{
    bend_table, conformal_check, conformal_test_curves, convergence_study_with, corner_blowup_study,
    first_edge_midpoint_time, monotonicity_counterexample, relaxation_estimate, CounterexampleTable,
    StudyOptions,
};
use crate::polygonal::{inscribe_equilateral_with, Closing};
use crate::report::Report;

/// Caps the rayon pool when set to a positive integer.
pub const THREADS_ENV: &str = "SPHERE_PCURV_THREADS";

const COLATITUDE_MARGIN: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClosingArg {
    Exact,
    ShortLastEdge,
}

impl From<ClosingArg> for Closing {
    fn from(c: ClosingArg) -> Self {
        match c {
            ClosingArg::Exact => Closing::Exact,
            ClosingArg::ShortLastEdge => Closing::ShortLastEdge,
        }
    }
}

/// A curve addressed as `family:key=value,...` or by a `t,x,y,z` CSV path.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum CurveSource {
    Parallel { phi: f64, turns: f64 },
    GreatCircle { turns: f64 },
    Corner { theta: f64, arm: f64 },
    Sampled(PathBuf),
}

impl CurveSource {
    /// Parses a curve string; with `degrees` the angles `phi` and `theta` are
    /// read in degrees.
    pub fn parse(text: &str, degrees: bool) -> Result<Self> {
        let (family, rest) = text.split_once(':').unwrap_or((text, ""));
        let mut keys = parse_keys(rest)?;
        let angle = |v: f64| if degrees { v.to_radians() } else { v };
        let source = match family {
            "parallel" => CurveSource::Parallel {
                phi: angle(take(&mut keys, "phi", None)?),
                turns: take(&mut keys, "turns", Some(1.0))?,
            },
            "great-circle" => CurveSource::GreatCircle {
                turns: take(&mut keys, "turns", Some(1.0))?,
            },
            "corner" => CurveSource::Corner {
                theta: angle(take(&mut keys, "theta", None)?),
                arm: take(&mut keys, "arm", Some(1.0))?,
            },
            _ if text.ends_with(".csv") || Path::new(text).is_file() => {
                return Ok(CurveSource::Sampled(PathBuf::from(text)))
            }
            _ => return Err(Error::Validation(format!("unknown curve family {family:?}"))),
        };
        if let Some(k) = keys.keys().next() {
            return Err(Error::Validation(format!("unknown key {k:?} for curve family {family}")));
        }
        Ok(source)
    }

    pub fn build(&self) -> Result<ParamCurve> {
        match self {
            CurveSource::Parallel { phi, turns } => make_parallel(*phi, *turns),
            CurveSource::GreatCircle { turns } => make_great_circle(*turns),
            CurveSource::Corner { theta, arm } => make_corner_curve(*theta, *arm),
            CurveSource::Sampled(path) => load_sampled_curve(path),
        }
    }
}

fn parse_keys(rest: &str) -> Result<BTreeMap<String, f64>> {
    let mut out = BTreeMap::new();
    for pair in rest.split(',').filter(|s| !s.is_empty()) {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| Error::Validation(format!("expected key=value, got {pair:?}")))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| Error::Validation(format!("bad number {v:?} for {k}")))?;
        out.insert(k.trim().to_string(), v);
    }
    Ok(out)
}

fn take(keys: &mut BTreeMap<String, f64>, key: &str, default: Option<f64>) -> Result<f64> {
    keys.remove(key)
        .or(default)
        .ok_or_else(|| Error::Validation(format!("missing curve parameter {key}")))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    Converge { curve: CurveSource, p: f64, ell: Vec<f64>, closing: ClosingArg },
    Relax { curve: CurveSource, p: f64, eps: Vec<f64> },
    BendTable { ell: Vec<f64>, theta: Vec<f64>, p: Vec<f64>, random: usize },
    ConformalCheck { points: usize },
    Corner { theta: f64, p: f64, h: Vec<usize> },
    Counterexample { phi: f64, n: Vec<usize>, extra_time: Option<f64> },
    ExportGamma { curve: CurveSource, ell: f64, samples: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub output: Option<PathBuf>,
    pub format: Format,
    pub seed: u64,
}

/// A problem found by [`validate`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub diagnostic: &'static str,
    pub detail: String,
}

impl Diagnostic {
    fn new(diagnostic: &'static str, detail: impl Into<String>) -> Self {
        Self {
            diagnostic,
            detail: detail.into(),
        }
    }
}

/// Dry-run checks of a configuration; empty means "ok".
pub fn validate(config: &RunConfig) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let check_p = |p: f64, out: &mut Vec<Diagnostic>| {
        if !(p >= 1.0 && p.is_finite()) {
            out.push(Diagnostic::new("invalid p", format!("p = {p} must be a finite value >= 1")));
        }
    };
    match &config.command {
        Command::Converge { curve, p, ell, .. } => {
            check_p(*p, &mut out);
            check_curve(curve, &mut out);
            check_decreasing("ell", ell, &mut out);
            check_edge_lengths(ell, &mut out);
        }
        Command::Relax { curve, p, eps } => {
            check_p(*p, &mut out);
            check_curve(curve, &mut out);
            check_decreasing("eps", eps, &mut out);
        }
        Command::BendTable { ell, theta, p, .. } => {
            for &q in p {
                check_p(q, &mut out);
            }
            for (name, list) in [("ell", ell), ("theta", theta), ("p", p)] {
                if list.is_empty() {
                    out.push(Diagnostic::new("schedule empty", format!("{name} list is empty")));
                }
            }
            check_edge_lengths(ell, &mut out);
            check_turning_angles(theta, &mut out);
        }
        Command::ConformalCheck { points } => {
            if *points < 2 {
                out.push(Diagnostic::new("invalid parameter", "need at least 2 sample points"));
            }
        }
        Command::Corner { theta, p, h } => {
            check_p(*p, &mut out);
            check_turning_angles(&[*theta], &mut out);
            if h.is_empty() {
                out.push(Diagnostic::new("schedule empty", "h list is empty"));
            } else if h.windows(2).any(|w| w[1] <= w[0]) || h[0] < 2 {
                out.push(Diagnostic::new(
                    "schedule not monotone",
                    format!("h must be strictly increasing and start at >= 2, got {h:?}"),
                ));
            }
        }
        Command::Counterexample { phi, n, extra_time } => {
            check_colatitude(*phi, &mut out);
            if n.is_empty() || n.iter().any(|&k| k < 3) {
                out.push(Diagnostic::new("invalid parameter", format!("n values must be >= 3, got {n:?}")));
            }
            if let Some(t) = extra_time {
                let len = 2.0 * PI * phi.sin();
                if !(*t > 0.0 && *t < len) {
                    out.push(Diagnostic::new(
                        "invalid parameter",
                        format!("extra time {t} outside (0, {len})"),
                    ));
                }
            }
        }
        Command::ExportGamma { curve, ell, samples } => {
            check_curve(curve, &mut out);
            check_edge_lengths(&[*ell], &mut out);
            if *samples < 2 {
                out.push(Diagnostic::new("invalid parameter", "need at least 2 samples"));
            }
        }
    }
    if let Some(path) = &config.output {
        let dir = match path.parent() {
            Some(d) if !d.as_os_str().is_empty() => d,
            _ => Path::new("."),
        };
        let writable = std::fs::metadata(dir).map(|m| m.is_dir() && !m.permissions().readonly());
        if !matches!(writable, Ok(true)) {
            out.push(Diagnostic::new(
                "output not writable",
                format!("directory {} is missing or read-only", dir.display()),
            ));
        }
    }
    out
}

fn check_decreasing(name: &str, xs: &[f64], out: &mut Vec<Diagnostic>) {
    if xs.is_empty() {
        out.push(Diagnostic::new("schedule empty", format!("{name} schedule is empty")));
    } else if xs.windows(2).any(|w| !(w[1] < w[0])) || xs.iter().any(|x| !(*x > 0.0)) {
        out.push(Diagnostic::new(
            "schedule not monotone",
            format!("{name} must be positive and strictly decreasing, got {xs:?}"),
        ));
    }
}

fn check_edge_lengths(ells: &[f64], out: &mut Vec<Diagnostic>) {
    for &l in ells {
        if !(l > 0.0) {
            out.push(Diagnostic::new("invalid parameter", format!("edge length {l} must be positive")));
        } else if l >= FRAC_PI_2 {
            out.push(Diagnostic::new(
                "antipodal hazard",
                format!("edge length {l} is not below pi/2"),
            ));
        }
    }
}

fn check_turning_angles(thetas: &[f64], out: &mut Vec<Diagnostic>) {
    for &t in thetas {
        if !(t > 0.0) {
            out.push(Diagnostic::new("invalid parameter", format!("turning angle {t} must be positive")));
        } else if t >= PI - SINGULAR_MARGIN {
            out.push(Diagnostic::new(
                "antipodal hazard",
                format!("turning angle {t} is at or too close to pi"),
            ));
        }
    }
}

fn check_colatitude(phi: f64, out: &mut Vec<Diagnostic>) {
    if !(phi > COLATITUDE_MARGIN && phi < PI - COLATITUDE_MARGIN) {
        out.push(Diagnostic::new(
            "degenerate colatitude",
            format!("phi = {phi} must lie strictly inside (0, pi)"),
        ));
    }
}

fn check_curve(curve: &CurveSource, out: &mut Vec<Diagnostic>) {
    match curve {
        CurveSource::Parallel { phi, turns } => {
            check_colatitude(*phi, out);
            check_turns(*turns, out);
        }
        CurveSource::GreatCircle { turns } => check_turns(*turns, out),
        CurveSource::Corner { theta, arm } => {
            check_turning_angles(&[*theta], out);
            if !(*arm > 0.0 && *arm < FRAC_PI_2) {
                out.push(Diagnostic::new(
                    "antipodal hazard",
                    format!("corner arm {arm} must lie in (0, pi/2)"),
                ));
            }
        }
        CurveSource::Sampled(path) => {
            if let Err(e) = load_sampled_curve(path) {
                out.push(Diagnostic::new("curve not constructible", format!("{}: {e}", path.display())));
            }
        }
    }
}

fn check_turns(turns: f64, out: &mut Vec<Diagnostic>) {
    if !(turns > 0.0 && turns.is_finite()) {
        out.push(Diagnostic::new("invalid parameter", format!("turns = {turns} must be positive")));
    }
}

/// Runs the configured experiment and returns the serialized report.
pub fn render(config: &RunConfig) -> Result<Vec<u8>> {
    let diags = validate(config);
    if !diags.is_empty() {
        let text: Vec<String> = diags.iter().map(|d| format!("{}: {}", d.diagnostic, d.detail)).collect();
        return Err(Error::Validation(text.join("; ")));
    }
    let fmt = config.format;
    match &config.command {
        Command::Converge { curve, p, ell, closing } => {
            let opts = StudyOptions {
                closing: (*closing).into(),
                ..StudyOptions::default()
            };
            emit(&convergence_study_with(&curve.build()?, *p, ell, &opts)?, fmt)
        }
        Command::Relax { curve, p, eps } => emit(&relaxation_estimate(&curve.build()?, *p, eps)?, fmt),
        Command::BendTable { ell, theta, p, random } => {
            let mut ell = ell.clone();
            let mut theta = theta.clone();
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            for _ in 0..*random {
                ell.push(rng.random_range(0.01..1.0));
                theta.push(rng.random_range(0.05..2.5));
            }
            emit(&bend_table(&ell, &theta, p)?, fmt)
        }
        Command::ConformalCheck { points } => emit(&conformal_check(&conformal_test_curves()?, *points)?, fmt),
        Command::Corner { theta, p, h } => emit(&corner_blowup_study(*theta, *p, h)?, fmt),
        Command::Counterexample { phi, n, extra_time } => {
            let rows = n
                .iter()
                .map(|&k| {
                    let t = extra_time.unwrap_or_else(|| first_edge_midpoint_time(*phi, k));
                    monotonicity_counterexample(*phi, k, t)
                })
                .collect::<Result<Vec<_>>>()?;
            emit(&CounterexampleTable { rows }, fmt)
        }
        Command::ExportGamma { curve, ell, samples } => {
            let c = curve.build()?;
            let gamma = build_gamma(&inscribe_equilateral_with(&c, *ell, Closing::Exact)?)?;
            let mut buf = Vec::new();
            match fmt {
                Format::Csv => gamma.write_csv(&mut buf, *samples)?,
                Format::Json => serde_json::to_writer_pretty(
                    &mut buf,
                    &serde_json::json!({
                        "curve": c.descriptor(),
                        "ell": ell,
                        "length": gamma.length(),
                        "rows": gamma.samples(*samples),
                    }),
                )?,
            }
            Ok(buf)
        }
    }
}

fn emit<R: Report>(report: &R, format: Format) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    match format {
        Format::Csv => report.write_csv(&mut buf)?,
        Format::Json => {
            report.write_json(&mut buf)?;
            buf.push(b'\n');
        }
    }
    Ok(buf)
}

/// Runs the experiment and writes the report to the output path (stdout when unset).
pub fn run(config: &RunConfig) -> Result<()> {
    let bytes = render(config)?;
    match &config.output {
        Some(path) => std::fs::write(path, bytes)?,
        None => std::io::stdout().lock().write_all(&bytes)?,
    }
    Ok(())
}

/// 0 on success, 2 for numerical failures, 1 for everything else.
pub fn exit_code(e: &Error) -> i32 {
    if e.is_numerical() || matches!(e, Error::ChartDomain(_)) {
        2
    } else {
        1
    }
}

/// Sizes the global rayon pool from `SPHERE_PCURV_THREADS`.
pub fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .map_err(|_| Error::Validation(format!("{THREADS_ENV}={v:?} is not a thread count")))?;
    if n > 0 {
        // Fails only when the pool already exists, which is harmless.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

#[derive(Debug, Parser)]
#[command(name = "sphere-pcurv", version, about = "Discrete p-curvature experiments for curves on the unit sphere")]
pub struct Cli {
    #[command(subcommand)]
    top: Top,
}

#[derive(Debug, Subcommand)]
enum Top {
    #[command(flatten)]
    Run(Experiment),
    /// Check a command line without running it.
    Validate {
        #[command(subcommand)]
        experiment: Experiment,
    },
}

#[derive(Debug, Args)]
struct Common {
    /// Output file (stdout when omitted).
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Output format; inferred from the output extension, else csv.
    #[arg(long)]
    format: Option<Format>,
    /// Read phi and theta in degrees.
    #[arg(long)]
    degrees: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Subcommand)]
enum Experiment {
    /// k_p of equilateral inscriptions against the integral of |k|^p.
    Converge {
        #[arg(long)]
        curve: String,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        #[arg(long, value_delimiter = ',', default_values_t = [0.2, 0.1, 0.05, 0.025, 0.0125])]
        ell: Vec<f64>,
        #[arg(long, value_enum, default_value_t = ClosingArg::Exact)]
        closing: ClosingArg,
        #[command(flatten)]
        common: Common,
    },
    /// Relaxation estimate of F_p over a decreasing modulus schedule.
    Relax {
        #[arg(long)]
        curve: String,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        #[arg(long, value_delimiter = ',', default_values_t = [0.4, 0.2, 0.1, 0.05])]
        eps: Vec<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Single-bend F_p: closed form, exact arcs and quadrature.
    BendTable {
        #[arg(long, value_delimiter = ',', default_values_t = [0.5, 0.1, 0.02])]
        ell: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = [0.1, 0.5, 1.0, 2.0])]
        theta: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = [1.0, 1.5, 2.0, 3.0])]
        p: Vec<f64>,
        /// Extra random (ell, theta) grid values drawn from the seed.
        #[arg(long, default_value_t = 0)]
        random: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Chart curvature formula against finite differences on the sphere.
    ConformalCheck {
        #[arg(long, default_value_t = 50)]
        points: usize,
        #[command(flatten)]
        common: Common,
    },
    /// k_p growth at a corner.
    Corner {
        #[arg(long, default_value_t = FRAC_PI_2)]
        theta: f64,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        #[arg(long, value_delimiter = ',', default_values_t = [8, 16, 32, 64, 128])]
        h: Vec<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Rotation of a regular n-gon in a parallel versus one refinement.
    Counterexample {
        #[arg(long, default_value_t = FRAC_PI_4)]
        phi: f64,
        #[arg(long, value_delimiter = ',', default_values_t = [6])]
        n: Vec<usize>,
        /// Parameter of the extra vertex (default: midpoint of the first edge).
        #[arg(long)]
        extra_time: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Samples of the glued curve built from an equilateral inscription.
    ExportGamma {
        #[arg(long)]
        curve: String,
        #[arg(long, default_value_t = 0.2)]
        ell: f64,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[command(flatten)]
        common: Common,
    },
}

impl Experiment {
    fn into_config(self) -> Result<RunConfig> {
        let angle = |deg: bool, v: f64| if deg { v.to_radians() } else { v };
        let (command, common) = match self {
            Experiment::Converge { curve, p, ell, closing, common } => (
                Command::Converge {
                    curve: CurveSource::parse(&curve, common.degrees)?,
                    p,
                    ell,
                    closing,
                },
                common,
            ),
            Experiment::Relax { curve, p, eps, common } => (
                Command::Relax {
                    curve: CurveSource::parse(&curve, common.degrees)?,
                    p,
                    eps,
                },
                common,
            ),
            Experiment::BendTable { ell, theta, p, random, common } => (
                Command::BendTable {
                    ell,
                    theta: theta.into_iter().map(|t| angle(common.degrees, t)).collect(),
                    p,
                    random,
                },
                common,
            ),
            Experiment::ConformalCheck { points, common } => (Command::ConformalCheck { points }, common),
            Experiment::Corner { theta, p, h, common } => (
                Command::Corner {
                    theta: angle(common.degrees, theta),
                    p,
                    h,
                },
                common,
            ),
            Experiment::Counterexample { phi, n, extra_time, common } => (
                Command::Counterexample {
                    phi: angle(common.degrees, phi),
                    n,
                    extra_time,
                },
                common,
            ),
            Experiment::ExportGamma { curve, ell, samples, common } => (
                Command::ExportGamma {
                    curve: CurveSource::parse(&curve, common.degrees)?,
                    ell,
                    samples,
                },
                common,
            ),
        };
        let format = common.format.unwrap_or_else(|| {
            match common.out.as_ref().and_then(|p| p.extension()).and_then(|e| e.to_str()) {
                Some("json") => Format::Json,
                _ => Format::Csv,
            }
        });
        Ok(RunConfig {
            command,
            output: common.out,
            format,
            seed: common.seed,
        })
    }
}

#[derive(Serialize)]
struct ErrorRecord<'a> {
    error: &'a str,
    message: String,
    exit_code: i32,
}

fn report_error(kind: &str, message: String, code: i32) -> i32 {
    let rec = ErrorRecord {
        error: kind,
        message,
        exit_code: code,
    };
    eprintln!("{}", serde_json::to_string(&rec).unwrap_or_default());
    code
}

/// Parses `args` (program name first), runs, and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            if !e.use_stderr() {
                let _ = e.print();
                return 0;
            }
            return report_error("usage", e.to_string().trim_end().to_string(), 1);
        }
    };
    if let Err(e) = configure_threads() {
        return report_error(e.kind(), e.to_string(), 1);
    }
    match cli.top {
        Top::Run(exp) => {
            let result = exp.into_config().and_then(|cfg| run(&cfg));
            match result {
                Ok(()) => 0,
                Err(e) => report_error(e.kind(), e.to_string(), exit_code(&e)),
            }
        }
        Top::Validate { experiment } => {
            let diags = match experiment.into_config() {
                Ok(cfg) => validate(&cfg),
                Err(e) => {
                    let name = if e.to_string().contains("unknown curve family") {
                        "unknown curve family"
                    } else {
                        "invalid parameter"
                    };
                    vec![Diagnostic::new(name, e.to_string())]
                }
            };
            if diags.is_empty() {
                println!("ok");
                return 0;
            }
            for d in &diags {
                println!("{}", serde_json::to_string(d).unwrap_or_default());
            }
            1
        }
    }
}
