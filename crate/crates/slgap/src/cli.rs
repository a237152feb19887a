//! Command-line front end: coefficient-file parsing, subcommand dispatch,
//! CSV and SVG emission.
//!
//! Exit-code contract: 0 success, 1 usage or input error, 2 horizon
//! exhausted, 3 initialization not decayed, 4 not periodic. All numeric CSV
//! fields use shortest round-trip decimal formatting, so output is byte
//! deterministic for fixed inputs.
//!
//! Coefficient file grammar (`#` starts a comment, whitespace is free):
//!
//! ```text
//! [base]
//! omega = 1.0, 1.4142135623730951
//! [r]                     # r = 1/p
//! const = 2
//! term  = 0 1 @ 1 0       # A B @ k1 .. kd  => A cos(omega x) + B sin(omega x)
//! [q]
//! term  = 2 0 @ 0 1
//! [w]
//! const = 2
//! term  = -1 0 @ 1 0
//! ```

use crate::coeff::{
    module_of, CoeffError, CoefficientTriple, FrequencyBase, TrigPolynomial, TrigTerm,
};
use crate::floquet::{self, FloquetError};
use crate::ode::IntegratorConfig;
use crate::rotation::{self, RotationError};
use crate::scan::{self, scan_rho, GapReport, RhoCurve, ScanConfig};
use crate::weyl::{self, WeylError};
use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use thiserror::Error;

/// Gap labels are accepted within this distance of `2 rho` (the module's
/// default label tolerance).
const LABEL_TOL: f64 = 1e-2;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_HORIZON: i32 = 2;
pub const EXIT_NOT_DECAYED: i32 = 3;
pub const EXIT_NOT_PERIODIC: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("section [{section}] is not positive on its hull (certified bound {bound})")]
    Positivity { section: String, bound: f64 },
    #[error("line {line}: term has {got} exponents, base has {expected}")]
    Dimension { line: usize, expected: usize, got: usize },
    #[error("io error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("horizon exhausted: {0}")]
    Horizon(String),
    #[error("{0}")]
    NotDecayed(String),
    #[error("{0}")]
    NotPeriodic(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Horizon(_) => EXIT_HORIZON,
            CliError::NotDecayed(_) => EXIT_NOT_DECAYED,
            CliError::NotPeriodic(_) => EXIT_NOT_PERIODIC,
            _ => EXIT_USAGE,
        }
    }
}

/// Rotation numbers and gap labels for almost periodic Sturm-Liouville
/// operators with trigonometric-polynomial coefficients.
#[derive(Debug, Parser)]
#[command(name = "slgap", version, about, max_term_width = 100)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Rotation number at a single lambda (CSV row on stdout).
    Rho(RhoArgs),
    /// Rotation-number curve over a lambda grid with plateau detection and
    /// gap labelling.
    Scan(ScanArgs),
    /// Weyl m-functions and the Green-function diagonal on an x grid.
    Green(GreenArgs),
    /// Hill discriminant and band edges of a periodic triple.
    Bands(BandsArgs),
}

#[derive(Debug, Args)]
pub struct RhoArgs {
    /// Coefficient file.
    #[arg(long)]
    pub coeff: PathBuf,
    /// Spectral parameter lambda.
    #[arg(long, allow_negative_numbers = true)]
    pub lambda: f64,
    /// Target absolute error.
    #[arg(long, default_value_t = 1e-3)]
    pub err: f64,
    /// First horizon (default: 1e3 periods of the slowest frequency).
    #[arg(long)]
    pub xinit: Option<f64>,
    /// Horizon cap for the doubling protocol (default: 256 x the first).
    #[arg(long)]
    pub xmax: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    #[arg(long)]
    pub coeff: PathBuf,
    #[arg(long, allow_negative_numbers = true)]
    pub lmin: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub lmax: f64,
    /// Number of grid points (at least 16).
    #[arg(long)]
    pub n: usize,
    /// Target per-point error.
    #[arg(long, default_value_t = 2e-3)]
    pub err: f64,
    #[arg(long = "plateau-tol", default_value_t = 5e-3)]
    pub plateau_tol: f64,
    #[arg(long = "min-run", default_value_t = 3)]
    pub min_run: usize,
    /// Coordinate bound for the gap-label search.
    #[arg(long, default_value_t = 10)]
    pub nmax: i64,
    /// Curve CSV output path.
    #[arg(long)]
    pub out: PathBuf,
    /// Optional SVG chart of the curve with plateau guides.
    #[arg(long)]
    pub svg: Option<PathBuf>,
    /// Optional gap-report CSV.
    #[arg(long)]
    pub gaps: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GreenArgs {
    #[arg(long)]
    pub coeff: PathBuf,
    #[arg(long = "z-re", allow_negative_numbers = true)]
    pub z_re: f64,
    #[arg(long = "z-im", allow_negative_numbers = true)]
    pub z_im: f64,
    #[arg(long = "x-from", allow_negative_numbers = true)]
    pub x_from: f64,
    #[arg(long = "x-to", allow_negative_numbers = true)]
    pub x_to: f64,
    #[arg(long = "x-step")]
    pub x_step: f64,
    /// Far endpoint for the Riccati sweeps; defaults to max(40, 12/|Im z|).
    #[arg(long)]
    pub xfar: Option<f64>,
    /// Assert that a real z (z-im = 0) lies in a spectral gap.
    #[arg(long = "gap-lambda", default_value_t = false)]
    pub gap_lambda: bool,
    /// Also report the shift-covariance deviation for this shift.
    #[arg(long = "check-shift")]
    pub check_shift: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BandsArgs {
    #[arg(long)]
    pub coeff: PathBuf,
    /// Coefficient period T.
    #[arg(long)]
    pub period: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub lmin: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub lmax: f64,
    /// Number of discriminant samples.
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub out: PathBuf,
}

/// A parsed coefficient file: the base and the certified triple.
#[derive(Debug, Clone)]
pub struct CoefficientFile {
    pub base: Arc<FrequencyBase>,
    pub triple: CoefficientTriple,
}

#[derive(Default)]
struct SectionDraft {
    constant: Option<(usize, f64)>,
    terms: Vec<(usize, Vec<f64>, Vec<i64>)>, // line, [A, B], k
}

/// Parse the coefficient text format. Positivity of `r` and `w` is
/// certified at load; a triple whose hull reaches zero is rejected.
pub fn parse_coefficients(text: &str) -> Result<CoefficientFile, CliError> {
    let mut omega: Option<(usize, Vec<f64>)> = None;
    let mut sections: [SectionDraft; 3] = Default::default();
    let mut current: Option<usize> = None; // 0 = r, 1 = q, 2 = w
    let mut in_base = false;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            match name.trim() {
                "base" => {
                    in_base = true;
                    current = None;
                }
                "r" => {
                    in_base = false;
                    current = Some(0);
                }
                "q" => {
                    in_base = false;
                    current = Some(1);
                }
                "w" => {
                    in_base = false;
                    current = Some(2);
                }
                other => {
                    return Err(CliError::Parse {
                        line: line_no,
                        message: format!("unknown section [{other}]"),
                    })
                }
            }
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| CliError::Parse {
            line: line_no,
            message: "expected `key = value`".into(),
        })?;
        let key = key.trim();
        let value = value.trim();
        match (in_base, current, key) {
            (true, _, "omega") => {
                let gens = value
                    .split(',')
                    .map(|tok| parse_number(tok.trim(), line_no))
                    .collect::<Result<Vec<f64>, _>>()?;
                if omega.replace((line_no, gens)).is_some() {
                    return Err(CliError::Parse {
                        line: line_no,
                        message: "duplicate omega line".into(),
                    });
                }
            }
            (false, Some(sec), "const") => {
                let c = parse_number(value, line_no)?;
                if sections[sec].constant.replace((line_no, c)).is_some() {
                    return Err(CliError::Parse {
                        line: line_no,
                        message: "duplicate const line in section".into(),
                    });
                }
            }
            (false, Some(sec), "term") => {
                let (amps, ks) = value.split_once('@').ok_or_else(|| CliError::Parse {
                    line: line_no,
                    message: "term needs the form `A B @ k1 .. kd`".into(),
                })?;
                let amps = amps
                    .split_whitespace()
                    .map(|tok| parse_number(tok, line_no))
                    .collect::<Result<Vec<f64>, _>>()?;
                if amps.len() != 2 {
                    return Err(CliError::Parse {
                        line: line_no,
                        message: format!("expected two amplitudes before `@`, found {}", amps.len()),
                    });
                }
                let ks = ks
                    .split_whitespace()
                    .map(|tok| {
                        tok.parse::<i64>().map_err(|_| CliError::Parse {
                            line: line_no,
                            message: format!("bad integer exponent `{tok}`"),
                        })
                    })
                    .collect::<Result<Vec<i64>, _>>()?;
                if ks.is_empty() {
                    return Err(CliError::Parse {
                        line: line_no,
                        message: "term needs at least one exponent after `@`".into(),
                    });
                }
                sections[sec].terms.push((line_no, amps, ks));
            }
            _ => {
                return Err(CliError::Parse {
                    line: line_no,
                    message: format!("unexpected `{key}` here (missing section header?)"),
                })
            }
        }
    }

    let (_, generators) = omega
        .ok_or_else(|| CliError::Parse { line: 1, message: "missing [base] omega line".into() })?;
    let base = FrequencyBase::new(generators)
        .map_err(|e| CliError::Parse { line: 1, message: e.to_string() })?;
    let d = base.dim();

    let mut polys = Vec::with_capacity(3);
    for draft in &sections {
        let mut terms = Vec::with_capacity(draft.terms.len());
        for (line, amps, k) in &draft.terms {
            if k.len() != d {
                return Err(CliError::Dimension { line: *line, expected: d, got: k.len() });
            }
            terms.push(TrigTerm { k: k.clone(), cos_amp: amps[0], sin_amp: amps[1] });
        }
        let constant = draft.constant.map_or(0.0, |(_, c)| c);
        let poly = TrigPolynomial::new(base.clone(), constant, terms)
            .map_err(|e| CliError::Parse { line: 1, message: e.to_string() })?;
        polys.push(poly);
    }
    let w = polys.pop().unwrap();
    let q = polys.pop().unwrap();
    let r = polys.pop().unwrap();

    let triple = CoefficientTriple::new(r, q, w).map_err(|e| match e {
        CoeffError::HullNotPositive { section, bound, .. } => {
            CliError::Positivity { section: section.to_string(), bound }
        }
        other => CliError::Parse { line: 1, message: other.to_string() },
    })?;
    Ok(CoefficientFile { base, triple })
}

fn parse_number(tok: &str, line: usize) -> Result<f64, CliError> {
    tok.parse::<f64>().map_err(|_| CliError::Parse {
        line,
        message: format!("bad decimal literal `{tok}`"),
    })
}

/// Render the parsed structure back to text; `parse(render(x)) == x`.
pub fn render_coefficients(file: &CoefficientFile) -> String {
    let mut out = String::from("[base]\nomega = ");
    let gens: Vec<String> = file.base.generators().iter().map(|g| format!("{g}")).collect();
    out.push_str(&gens.join(", "));
    out.push('\n');
    for (name, poly) in
        [("r", file.triple.r()), ("q", file.triple.q()), ("w", file.triple.w())]
    {
        let _ = writeln!(out, "[{name}]");
        let _ = writeln!(out, "const = {}", poly.constant());
        for t in poly.terms() {
            let ks: Vec<String> = t.k.iter().map(|k| k.to_string()).collect();
            let _ = writeln!(out, "term = {} {} @ {}", t.cos_amp, t.sin_amp, ks.join(" "));
        }
    }
    out
}

fn load_coefficients(path: &Path) -> Result<CoefficientFile, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let file = parse_coefficients(&text)?;
    for warning in file.base.rationality_warnings() {
        eprintln!("warning: {warning}");
    }
    Ok(file)
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Run a parsed command; returns the process exit code.
pub fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Rho(args) => cmd_rho(args),
        Command::Scan(args) => cmd_scan(args),
        Command::Green(args) => cmd_green(args),
        Command::Bands(args) => cmd_bands(args),
    }
}

fn integrator_for(base: &FrequencyBase) -> IntegratorConfig {
    IntegratorConfig::with_max_frequency(base.max_generator())
}

fn cmd_rho(args: RhoArgs) -> Result<i32, CliError> {
    if args.err <= 0.0 {
        return Err(CliError::Usage("--err must be positive".into()));
    }
    let file = load_coefficients(&args.coeff)?;
    let v = &file.triple;
    let icfg = integrator_for(&file.base);
    let x_init = args.xinit.unwrap_or_else(|| rotation::default_x_init(&file.base));
    let x_max = args.xmax.unwrap_or_else(|| rotation::default_x_max(&file.base));
    if !(x_init > 0.0 && x_init <= x_max) {
        return Err(CliError::Usage("need 0 < xinit <= xmax".into()));
    }
    match rotation::rho(args.lambda, v, args.err, x_init, x_max, &icfg) {
        Ok(est) => {
            println!(
                "{},{},{},{},{}",
                args.lambda, est.rho, est.err, est.x_horizon, est.method
            );
            Ok(EXIT_OK)
        }
        Err(RotationError::HorizonExceeded { best }) => {
            println!(
                "{},{},{},{},{},horizon",
                args.lambda, best.rho, best.err, best.x_horizon, best.method
            );
            Ok(EXIT_HORIZON)
        }
        Err(RotationError::Ode(e)) => Err(CliError::Internal(e.to_string())),
    }
}

fn curve_csv(curve: &RhoCurve) -> String {
    let mut out = String::from("lambda,rho,err,flag\n");
    for p in &curve.points {
        let flag = if p.horizon_exceeded { "horizon" } else { "ok" };
        let _ = writeln!(out, "{},{},{},{flag}", p.lambda, p.rho, p.err);
    }
    out
}

fn gaps_csv(reports: &[GapReport], dim: usize) -> String {
    let mut out = String::from("lambda_lo,lambda_hi,rho");
    for j in 1..=dim {
        let _ = write!(out, ",label_n{j}");
    }
    out.push_str(",label_value,residual,ambiguous\n");
    for g in reports {
        let _ = write!(out, "{},{},{}", g.lambda_lo, g.lambda_hi, g.rho_plateau);
        for n in &g.label.n {
            let _ = write!(out, ",{n}");
        }
        let _ = writeln!(
            out,
            ",{},{},{}",
            g.label.value,
            g.label.residual,
            g.label.ambiguous
        );
    }
    out
}

fn cmd_scan(args: ScanArgs) -> Result<i32, CliError> {
    let file = load_coefficients(&args.coeff)?;
    let cfg = ScanConfig {
        lambda_min: args.lmin,
        lambda_max: args.lmax,
        n_points: args.n,
        target_err: args.err,
        plateau_tol: args.plateau_tol,
        min_run: args.min_run,
    };
    cfg.validate().map_err(CliError::Usage)?;
    if args.nmax < 1 {
        return Err(CliError::Usage("--nmax must be at least 1".into()));
    }
    let icfg = integrator_for(&file.base);
    let curve = scan_rho(&file.triple, &cfg, &icfg)
        .map_err(|e| CliError::Internal(e.to_string()))?;
    let plateaus = scan::detect_plateaus(&curve, cfg.plateau_tol, cfg.min_run);
    let module = module_of(&file.triple).map_err(|e| CliError::Internal(e.to_string()))?;
    let reports = scan::gap_reports(&curve, &plateaus, &module, LABEL_TOL, args.nmax);

    write_file(&args.out, &curve_csv(&curve))?;
    if let Some(path) = &args.gaps {
        write_file(path, &gaps_csv(&reports, file.base.dim()))?;
    }
    if let Some(path) = &args.svg {
        write_file(path, &svg_chart(&curve, &plateaus))?;
    }
    for report in &reports {
        if !report.within_tol {
            eprintln!(
                "warning: plateau at rho = {} has no module label within {} (best residual {})",
                report.rho_plateau, LABEL_TOL, report.label.residual
            );
        }
    }
    Ok(EXIT_OK)
}

fn cmd_green(args: GreenArgs) -> Result<i32, CliError> {
    if args.z_im == 0.0 && !args.gap_lambda {
        return Err(CliError::Usage(
            "real z needs --gap-lambda asserting that lambda lies in a spectral gap".into(),
        ));
    }
    if args.x_step <= 0.0 {
        return Err(CliError::Usage("--x-step must be positive".into()));
    }
    if args.x_to < args.x_from {
        return Err(CliError::Usage("--x-to must not precede --x-from".into()));
    }
    let file = load_coefficients(&args.coeff)?;
    let z = Complex64::new(args.z_re, args.z_im);
    let x_far = args.xfar.unwrap_or_else(|| weyl::default_x_far(z));
    let icfg = integrator_for(&file.base);

    let mut xs = Vec::new();
    let mut x = args.x_from;
    while x <= args.x_to + 1e-12 * (1.0 + args.x_to.abs()) {
        xs.push(x);
        x += args.x_step;
    }

    let map_weyl = |e: WeylError| match e {
        WeylError::NotDecayed { .. } => CliError::NotDecayed(e.to_string()),
        other => CliError::Internal(other.to_string()),
    };

    let mp = weyl_samples_for(&file.triple, z, &xs, x_far, &icfg, true).map_err(map_weyl)?;
    let mm = weyl_samples_for(&file.triple, z, &xs, x_far, &icfg, false).map_err(map_weyl)?;
    let greens = weyl::green_diag_samples(z, &file.triple, &xs, x_far, &icfg).map_err(map_weyl)?;

    let mut out =
        String::from("x,re_m_plus,im_m_plus,re_m_minus,im_m_minus,re_g,im_g,re_dg,im_dg\n");
    for ((p, m), g) in mp.iter().zip(&mm).zip(&greens) {
        let (vp, vm) = (p.m(), m.m());
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            g.x, vp.re, vp.im, vm.re, vm.im, g.g.re, g.g.im, g.dg_dx.re, g.dg_dx.im
        );
        if !g.herglotz_ok {
            eprintln!("warning: Herglotz sign check failed at x = {}", g.x);
        }
    }
    write_file(&args.out, &out)?;

    if let Some(tau) = args.check_shift {
        let dev = weyl::check_shift_covariance(z, &file.triple, tau, &xs, x_far, &icfg)
            .map_err(map_weyl)?;
        println!("check_shift,{tau},{dev}");
    }
    Ok(EXIT_OK)
}

fn weyl_samples_for(
    v: &CoefficientTriple,
    z: Complex64,
    xs: &[f64],
    x_far: f64,
    icfg: &IntegratorConfig,
    plus: bool,
) -> Result<Vec<weyl::MFunctionSample>, WeylError> {
    // one sweep per half line; the per-x batched entry points keep the
    // initialization-forgetting check
    xs.iter()
        .map(|&x| {
            if plus {
                weyl::m_plus(z, v, x, x_far, icfg)
            } else {
                weyl::m_minus(z, v, x, x_far, icfg)
            }
        })
        .collect()
}

fn cmd_bands(args: BandsArgs) -> Result<i32, CliError> {
    if args.n < 2 {
        return Err(CliError::Usage("--n must be at least 2".into()));
    }
    let file = load_coefficients(&args.coeff)?;
    let icfg = integrator_for(&file.base);
    let map_floquet = |e: FloquetError| match e {
        FloquetError::NotPeriodic { .. } => CliError::NotPeriodic(e.to_string()),
        FloquetError::Ode(o) => CliError::Internal(o.to_string()),
    };

    let mut out = String::from("lambda,delta,in_band\n");
    let step = (args.lmax - args.lmin) / (args.n - 1).max(1) as f64;
    for i in 0..args.n {
        let lambda = args.lmin + i as f64 * step;
        let m = floquet::monodromy(lambda, &file.triple, args.period, &icfg).map_err(map_floquet)?;
        let _ = writeln!(out, "{},{},{}", lambda, m.discriminant(), m.in_band());
    }
    write_file(&args.out, &out)?;

    let edges = floquet::band_edges(&file.triple, args.period, args.lmin, args.lmax, args.n, &icfg)
        .map_err(map_floquet)?;
    println!("lambda,kind,crossing");
    for e in &edges {
        let kind = match e.kind {
            floquet::EdgeKind::Periodic => "periodic",
            floquet::EdgeKind::Antiperiodic => "antiperiodic",
        };
        println!("{},{kind},{}", e.lambda, e.crossing);
    }
    Ok(EXIT_OK)
}

const SVG_W: f64 = 960.0;
const SVG_H: f64 = 600.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 20.0;
const MARGIN_B: f64 = 50.0;

/// Self-contained SVG 1.1 chart: the rho-vs-lambda polyline (one vertex per
/// grid point), axes with ticks, and a horizontal guide line per detected
/// plateau.
pub fn svg_chart(curve: &RhoCurve, plateaus: &[scan::Plateau]) -> String {
    let pts = &curve.points;
    let (lmin, lmax) = (pts.first().unwrap().lambda, pts.last().unwrap().lambda);
    let rho_max = pts.iter().map(|p| p.rho).fold(f64::NEG_INFINITY, f64::max);
    let rho_min = pts.iter().map(|p| p.rho).fold(f64::INFINITY, f64::min);
    let pad = 0.05 * (rho_max - rho_min).max(1e-3);
    let (ymin, ymax) = (rho_min - pad, rho_max + pad);

    let sx = |l: f64| MARGIN_L + (l - lmin) / (lmax - lmin) * (SVG_W - MARGIN_L - MARGIN_R);
    let sy = |r: f64| SVG_H - MARGIN_B - (r - ymin) / (ymax - ymin) * (SVG_H - MARGIN_T - MARGIN_B);

    let mut s = String::new();
    s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{SVG_W}\" height=\"{SVG_H}\" viewBox=\"0 0 {SVG_W} {SVG_H}\">"
    );
    let _ = writeln!(s, "  <rect width=\"{SVG_W}\" height=\"{SVG_H}\" fill=\"white\"/>");

    // axes
    let (x0, x1v, y0, y1v) = (MARGIN_L, SVG_W - MARGIN_R, SVG_H - MARGIN_B, MARGIN_T);
    let _ = writeln!(
        s,
        "  <line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x1v}\" y2=\"{y0}\" stroke=\"black\" stroke-width=\"1\"/>"
    );
    let _ = writeln!(
        s,
        "  <line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x0}\" y2=\"{y1v}\" stroke=\"black\" stroke-width=\"1\"/>"
    );
    for i in 0..=6 {
        let l = lmin + (lmax - lmin) * i as f64 / 6.0;
        let xx = sx(l);
        let _ = writeln!(
            s,
            "  <line x1=\"{xx:.2}\" y1=\"{y0}\" x2=\"{xx:.2}\" y2=\"{}\" stroke=\"black\"/>",
            y0 + 5.0
        );
        let _ = writeln!(
            s,
            "  <text x=\"{xx:.2}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\">{l:.3}</text>",
            y0 + 20.0
        );
        let r = ymin + (ymax - ymin) * i as f64 / 6.0;
        let yy = sy(r);
        let _ = writeln!(
            s,
            "  <line x1=\"{}\" y1=\"{yy:.2}\" x2=\"{x0}\" y2=\"{yy:.2}\" stroke=\"black\"/>",
            x0 - 5.0
        );
        let _ = writeln!(
            s,
            "  <text x=\"{}\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"end\">{r:.3}</text>",
            x0 - 8.0,
            yy + 4.0
        );
    }
    let _ = writeln!(
        s,
        "  <text x=\"{:.2}\" y=\"{}\" font-size=\"13\" text-anchor=\"middle\">lambda</text>",
        0.5 * (x0 + x1v),
        SVG_H - 12.0
    );
    let _ = writeln!(
        s,
        "  <text x=\"16\" y=\"{:.2}\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 16 {:.2})\">rho</text>",
        0.5 * (y0 + y1v),
        0.5 * (y0 + y1v)
    );

    // plateau guides
    for p in plateaus {
        let yy = sy(p.rho);
        let _ = writeln!(
            s,
            "  <line x1=\"{x0}\" y1=\"{yy:.2}\" x2=\"{x1v}\" y2=\"{yy:.2}\" stroke=\"#b22222\" stroke-width=\"0.8\" stroke-dasharray=\"6 4\"/>"
        );
    }

    // the curve itself: one vertex per scanned point
    s.push_str("  <polyline fill=\"none\" stroke=\"#1f4e9c\" stroke-width=\"1.5\" points=\"");
    for (i, p) in pts.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        let _ = write!(s, "{:.2},{:.2}", sx(p.lambda), sy(p.rho));
    }
    s.push_str("\"/>\n</svg>\n");
    s
}
