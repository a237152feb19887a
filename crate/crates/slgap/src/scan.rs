//! Rotation-number curves over a lambda grid, plateau (gap) detection, and
//! integer gap labelling against the frequency module.
//!
//! A spectral gap shows up as a locally constant stretch of the curve
//! `lambda -> rho(lambda)`; the plateau height locks `2 rho` onto an element
//! of the frequency module. Detection uses run medians so a single slowly
//! converged point near a gap edge cannot shift the plateau height.

use crate::coeff::{CoefficientTriple, FrequencyModule};
use crate::ode::{IntegratorConfig, OdeError};
use crate::rotation::{self, RhoOutcome};
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScanError {
    #[error("no module element within tol: best residual {best_residual} for label {best_label:?}")]
    NoLabelWithinTol { best_label: Vec<i64>, best_residual: f64 },
    #[error(transparent)]
    Ode(#[from] OdeError),
}

/// Grid and detection parameters for one scan.
#[derive(Debug, Clone)]
pub struct ScanConfig {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub n_points: usize,
    /// Target per-point error handed to the rotation-number protocol.
    pub target_err: f64,
    /// Height tolerance for plateau membership (and the per-point error
    /// ceiling inside a run).
    pub plateau_tol: f64,
    /// Minimum number of consecutive points forming a plateau.
    pub min_run: usize,
}

impl ScanConfig {
    pub fn new(lambda_min: f64, lambda_max: f64, n_points: usize) -> Self {
        ScanConfig {
            lambda_min,
            lambda_max,
            n_points,
            target_err: 2e-3,
            plateau_tol: 5e-3,
            min_run: 3,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.lambda_min >= self.lambda_max {
            return Err("lambda_min must be below lambda_max".into());
        }
        if self.n_points < 16 {
            return Err("n_points must be at least 16".into());
        }
        if self.min_run < 3 {
            return Err("min_run must be at least 3".into());
        }
        if self.target_err <= 0.0 || self.plateau_tol <= 0.0 {
            return Err("tolerances must be positive".into());
        }
        Ok(())
    }
}

/// One grid point of the curve.
#[derive(Debug, Clone, Copy)]
pub struct ScanPoint {
    pub lambda: f64,
    pub rho: f64,
    pub err: f64,
    /// Horizon the estimate settled at.
    pub x_horizon: f64,
    /// True when the doubling protocol hit its cap; the estimate is kept
    /// with its (enlarged) error.
    pub horizon_exceeded: bool,
    /// The two sub-estimates behind the combined value.
    pub rho_angle: f64,
    pub rho_zeros: f64,
}

/// The sampled curve `lambda -> rho(lambda)`, ordered by lambda.
#[derive(Debug, Clone)]
pub struct RhoCurve {
    pub points: Vec<ScanPoint>,
}

/// Scan cap on the horizon doubling: generous enough for gap interiors,
/// bounded so edge points cannot stall a whole scan. Points that hit the
/// cap are flagged and excluded from plateaus by the error filter.
const SCAN_X_MAX_FACTOR: f64 = 32.0;

/// Evaluate the rotation number on the uniform grid. Grid points are
/// independent and evaluated in parallel; assembly is ordered by index, so
/// the output is deterministic regardless of scheduling.
pub fn scan_rho(
    v: &CoefficientTriple,
    cfg: &ScanConfig,
    icfg: &IntegratorConfig,
) -> Result<RhoCurve, ScanError> {
    cfg.validate().expect("invalid scan configuration");
    let x_init = rotation::default_x_init(v.base());
    let x_max = SCAN_X_MAX_FACTOR * x_init;
    let step = (cfg.lambda_max - cfg.lambda_min) / (cfg.n_points - 1) as f64;
    let lambdas: Vec<f64> =
        (0..cfg.n_points).map(|i| cfg.lambda_min + i as f64 * step).collect();
    let outcomes: Result<Vec<(f64, RhoOutcome)>, OdeError> = lambdas
        .par_iter()
        .map(|&lambda| {
            rotation::rho_full(lambda, v, cfg.target_err, x_init, x_max, icfg)
                .map(|o| (lambda, o))
        })
        .collect();
    let points = outcomes?
        .into_iter()
        .map(|(lambda, o)| ScanPoint {
            lambda,
            rho: o.combined.rho,
            err: o.combined.err,
            x_horizon: o.combined.x_horizon,
            horizon_exceeded: o.horizon_exceeded,
            rho_angle: o.angle.rho,
            rho_zeros: o.zeros.rho,
        })
        .collect();
    Ok(RhoCurve { points })
}

/// A maximal run of plateau points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plateau {
    /// First and last curve index of the run (inclusive).
    pub start: usize,
    pub end: usize,
    /// Run median of rho.
    pub rho: f64,
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

fn run_is_plateau(points: &[ScanPoint], tol: f64) -> Option<f64> {
    if points.iter().any(|p| p.err > tol) {
        return None;
    }
    let mut rhos: Vec<f64> = points.iter().map(|p| p.rho).collect();
    let med = median(&mut rhos);
    points.iter().all(|p| (p.rho - med).abs() <= tol).then_some(med)
}

/// Detect maximal runs of at least `min_run` consecutive points whose rho
/// values sit within `plateau_tol` of the run median and whose per-point
/// error is at most `plateau_tol`. Runs are grown greedily left to right,
/// so the output ranges are disjoint and ordered.
pub fn detect_plateaus(curve: &RhoCurve, plateau_tol: f64, min_run: usize) -> Vec<Plateau> {
    assert!(!curve.points.is_empty(), "curve must be nonempty");
    let pts = &curve.points;
    let mut out = Vec::new();
    let mut i = 0;
    while i < pts.len() {
        let mut best: Option<(usize, f64)> = None;
        let mut j = i;
        while j < pts.len() {
            match run_is_plateau(&pts[i..=j], plateau_tol) {
                Some(med) => {
                    best = Some((j, med));
                    j += 1;
                }
                None => break,
            }
        }
        match best {
            Some((end, med)) if end + 1 - i >= min_run => {
                out.push(Plateau { start: i, end, rho: med });
                i = end + 1;
            }
            _ => i += 1,
        }
    }
    out
}

/// An integer label for a plateau height.
#[derive(Debug, Clone)]
pub struct GapLabel {
    /// Module coordinates `n` with `sum n_j beta_j` closest to `2 rho`.
    pub n: Vec<i64>,
    /// The module element value itself.
    pub value: f64,
    /// `|2 rho - value|`.
    pub residual: f64,
    /// True when a second module element also fits within tol (expected for
    /// dense modules).
    pub ambiguous: bool,
    /// Other candidates within tol, best first, excluding the winner.
    pub alternatives: Vec<(Vec<i64>, f64)>,
}

/// Fit `2 rho_plateau` by an element of the module with coordinates bounded
/// by `n_max`. The winner minimizes the residual, with ties broken by
/// smaller L1 norm and then lexicographic order. Errors when even the best
/// candidate misses by more than `tol`.
pub fn label_gap(
    rho_plateau: f64,
    module: &FrequencyModule,
    tol: f64,
    n_max: i64,
) -> Result<GapLabel, ScanError> {
    assert!(tol > 0.0, "tol must be positive");
    assert!(n_max >= 1, "n_max must be at least 1");
    let target = 2.0 * rho_plateau;
    let d = module.dim();
    let l1 = |v: &[i64]| v.iter().map(|e| e.abs()).sum::<i64>();
    let mut best: Option<(f64, i64, Vec<i64>, f64)> = None; // residual, l1, n, value
    let mut within: Vec<(Vec<i64>, f64)> = Vec::new();
    let mut n = vec![-n_max; d];
    'enumerate: loop {
        if module.contains(&n) {
            let value = module.value_of(&n);
            let residual = (target - value).abs();
            if residual <= tol {
                within.push((n.clone(), residual));
            }
            let better = match &best {
                None => true,
                Some((br, bl1, bn, _)) => (residual, l1(&n), &n) < (*br, *bl1, bn),
            };
            if better {
                best = Some((residual, l1(&n), n.clone(), value));
            }
        }
        // odometer over the box [-n_max, n_max]^d
        let mut j = 0;
        loop {
            if j == d {
                break 'enumerate;
            }
            n[j] += 1;
            if n[j] <= n_max {
                break;
            }
            n[j] = -n_max;
            j += 1;
        }
    }
    let (residual, _, n, value) = best.expect("box enumeration is nonempty");
    if residual > tol {
        return Err(ScanError::NoLabelWithinTol { best_label: n, best_residual: residual });
    }
    within.sort_by(|a, b| (a.1, l1(&a.0), &a.0).partial_cmp(&(b.1, l1(&b.0), &b.0)).unwrap());
    let alternatives: Vec<(Vec<i64>, f64)> =
        within.into_iter().filter(|(v, _)| *v != n).collect();
    Ok(GapLabel { ambiguous: !alternatives.is_empty(), n, value, residual, alternatives })
}

/// A labelled gap interval as reported to the CLI.
#[derive(Debug, Clone)]
pub struct GapReport {
    pub lambda_lo: f64,
    pub lambda_hi: f64,
    pub rho_plateau: f64,
    pub label: GapLabel,
    /// False when even the best label misses `tol` (the label then records
    /// the best effort and the residual says by how much it missed).
    pub within_tol: bool,
}

/// Assemble gap reports from detected plateaus. Gap endpoints are reported
/// at grid resolution.
pub fn gap_reports(
    curve: &RhoCurve,
    plateaus: &[Plateau],
    module: &FrequencyModule,
    tol: f64,
    n_max: i64,
) -> Vec<GapReport> {
    plateaus
        .iter()
        .map(|p| {
            let (label, within_tol) = match label_gap(p.rho, module, tol, n_max) {
                Ok(l) => (l, true),
                Err(ScanError::NoLabelWithinTol { best_label, best_residual }) => {
                    let value = module.value_of(&best_label);
                    (
                        GapLabel {
                            n: best_label,
                            value,
                            residual: best_residual,
                            ambiguous: false,
                            alternatives: Vec::new(),
                        },
                        false,
                    )
                }
                Err(_) => unreachable!("label_gap only fails with NoLabelWithinTol"),
            };
            GapReport {
                lambda_lo: curve.points[p.start].lambda,
                lambda_hi: curve.points[p.end].lambda,
                rho_plateau: p.rho,
                label,
                within_tol,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::{CoefficientTriple, FrequencyBase, FrequencyModule};
    use crate::testing::periodic_triple;

    const SQRT2: f64 = std::f64::consts::SQRT_2;

    fn synthetic_point(lambda: f64, rho: f64) -> ScanPoint {
        ScanPoint {
            lambda,
            rho,
            err: 1e-4,
            x_horizon: 1e4,
            horizon_exceeded: false,
            rho_angle: rho,
            rho_zeros: rho,
        }
    }

    #[test]
    fn strictly_increasing_curve_has_no_plateau() {
        let curve = RhoCurve {
            points: (0..40).map(|i| synthetic_point(i as f64 * 0.1, i as f64 * 0.1)).collect(),
        };
        assert!(detect_plateaus(&curve, 5e-3, 3).is_empty());
    }

    #[test]
    fn single_plateau_is_found_exactly() {
        // ramp of slope 1 with a 10-point shelf at 0.5, grid step 0.1
        let mut points = Vec::new();
        for i in 0..40 {
            let lambda = i as f64 * 0.1;
            let rho = if (15..25).contains(&i) { 0.5 } else { lambda };
            points.push(synthetic_point(lambda, rho));
        }
        let curve = RhoCurve { points };
        let plateaus = detect_plateaus(&curve, 5e-3, 3);
        assert_eq!(plateaus.len(), 1);
        assert_eq!((plateaus[0].start, plateaus[0].end), (15, 24));
        assert_eq!(plateaus[0].rho, 0.5);
    }

    #[test]
    fn plateau_excludes_unconverged_points() {
        let mut points: Vec<ScanPoint> =
            (0..20).map(|i| synthetic_point(i as f64, 0.5)).collect();
        points[10].err = 0.1; // one bad point splits the run
        let curve = RhoCurve { points };
        let plateaus = detect_plateaus(&curve, 5e-3, 3);
        assert_eq!(plateaus.len(), 2);
        assert!(plateaus[0].end < 10 && plateaus[1].start > 10);
        assert!(plateaus[0].end < plateaus[1].start);
    }

    #[test]
    fn label_integer_module() {
        let base = FrequencyBase::new(vec![1.0]).unwrap();
        let module = FrequencyModule::from_witnesses(base, [vec![1]]);
        let label = label_gap(0.5, &module, 1e-2, 5).unwrap();
        assert_eq!(label.n, vec![1]);
        assert_eq!(label.residual, 0.0);
        assert!(!label.ambiguous);
    }

    #[test]
    fn label_exact_lattice_point() {
        let base = FrequencyBase::new(vec![1.0, SQRT2]).unwrap();
        let module = FrequencyModule::from_witnesses(base, [vec![1, 0], vec![0, 1]]);
        let label = label_gap((1.0 + SQRT2) / 2.0, &module, 1e-2, 5).unwrap();
        assert_eq!(label.n, vec![1, 1]);
        assert!(label.residual < 1e-9);
    }

    #[test]
    fn label_near_miss_is_unambiguous_within_tol() {
        // 2 rho = 1 over Z + sqrt2 Z: inside the box |n_j| <= 5 the
        // runner-up is -2 + 2 sqrt2 with residual 3 - 2 sqrt2 ~ 0.1716,
        // well past tol = 0.05
        let base = FrequencyBase::new(vec![1.0, SQRT2]).unwrap();
        let module = FrequencyModule::from_witnesses(base, [vec![1, 0], vec![0, 1]]);
        let label = label_gap(0.5, &module, 0.05, 5).unwrap();
        assert_eq!(label.n, vec![1, 0]);
        assert_eq!(label.residual, 0.0);
        assert!(!label.ambiguous);
        // a wider box admits -6 + 5 sqrt2 with residual 5 sqrt2 - 7 ~ 0.0711;
        // widening tol past it trips the ambiguity flag
        let wide = label_gap(0.5, &module, 0.08, 6).unwrap();
        assert!(wide.ambiguous);
        assert_eq!(wide.alternatives[0].0, vec![-6, 5]);
        let runner_up = 5.0 * SQRT2 - 7.0;
        assert!((wide.alternatives[0].1 - runner_up).abs() < 1e-12);
        // at n_max = 5 that candidate is outside the box and tol = 0.08
        // stays unambiguous
        let boxed = label_gap(0.5, &module, 0.08, 5).unwrap();
        assert!(!boxed.ambiguous);
    }

    #[test]
    fn label_trivial_module() {
        let base = FrequencyBase::new(vec![1.0]).unwrap();
        let module = FrequencyModule::from_witnesses(base, Vec::<Vec<i64>>::new());
        let zero = label_gap(0.0, &module, 1e-2, 5).unwrap();
        assert_eq!(zero.n, vec![0]);
        let err = label_gap(0.5, &module, 1e-2, 5).unwrap_err();
        assert!(matches!(err, ScanError::NoLabelWithinTol { .. }));
    }

    #[test]
    fn label_scale_consistency() {
        // labelling 2 rho against the base equals labelling rho against the
        // halved base
        let base = FrequencyBase::new(vec![1.0, SQRT2]).unwrap();
        let module = FrequencyModule::from_witnesses(base, [vec![1, 0], vec![0, 1]]);
        let halved_base = FrequencyBase::new(vec![0.5, SQRT2 / 2.0]).unwrap();
        let halved = FrequencyModule::from_witnesses(halved_base, [vec![1, 0], vec![0, 1]]);
        for rho in [0.5, 0.707, 1.2071] {
            let a = label_gap(rho, &module, 0.1, 6).unwrap();
            let b = label_gap(rho / 2.0, &halved, 0.05, 6).unwrap();
            assert_eq!(a.n, b.n, "labels differ at rho = {rho}");
        }
    }

    #[test]
    fn free_operator_short_scan() {
        // rho = sqrt(lambda): the curve tracks the closed form and shows no
        // plateau
        let v = CoefficientTriple::constant(1.0, 0.0, 1.0).unwrap();
        let cfg = ScanConfig::new(0.5, 2.0, 16);
        let curve = scan_rho(&v, &cfg, &IntegratorConfig::new()).unwrap();
        assert_eq!(curve.points.len(), 16);
        for p in &curve.points {
            assert!(
                (p.rho - p.lambda.sqrt()).abs() <= 2.0 * p.err,
                "rho({}) = {} vs sqrt = {}",
                p.lambda,
                p.rho,
                p.lambda.sqrt()
            );
        }
        assert!(detect_plateaus(&curve, 5e-3, 3).is_empty());
    }

    #[test]
    fn periodic_short_scan_is_monotone() {
        let v = periodic_triple();
        let cfg = ScanConfig { target_err: 2.5e-3, ..ScanConfig::new(0.0, 0.4, 16) };
        let curve = scan_rho(&v, &cfg, &IntegratorConfig::new()).unwrap();
        for pair in curve.points.windows(2) {
            let slack = 2.0 * pair[0].err.max(pair[1].err);
            assert!(
                pair[1].rho >= pair[0].rho - slack,
                "curve dips at lambda = {}",
                pair[1].lambda
            );
        }
    }
}
