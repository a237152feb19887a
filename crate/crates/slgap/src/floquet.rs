//! Independent Floquet oracle for the periodic special case: monodromy
//! matrix, Hill discriminant, and band/gap edges. Cross-validates the
//! rotation-number scan on periodic triples; a non-periodic triple is
//! rejected outright.

use crate::coeff::CoefficientTriple;
use crate::ode::{integrate, IntegratorConfig, OdeError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FloquetError {
    #[error("coefficients are not {period}-periodic (max sampled deviation {max_dev:e})")]
    NotPeriodic { period: f64, max_dev: f64 },
    #[error(transparent)]
    Ode(#[from] OdeError),
}

/// Period map of the first-order system in the variables `(phi, p phi')`,
/// integrated from identity initial data over one period.
#[derive(Debug, Clone, Copy)]
pub struct Monodromy {
    pub period: f64,
    /// `u1(T)` where `u1` has `(phi, p phi') = (1, 0)` at 0.
    pub u1: f64,
    /// `u2(T)` where `u2` has `(phi, p phi') = (0, 1)` at 0.
    pub u2: f64,
    /// `(p u1')(T)`.
    pub pu1p: f64,
    /// `(p u2')(T)`.
    pub pu2p: f64,
    det: f64,
}

impl Monodromy {
    /// Hill discriminant, the trace of the period map.
    pub fn discriminant(&self) -> f64 {
        self.u1 + self.pu2p
    }

    /// Wronskian of the fundamental pair; 1 exactly for the true flow.
    /// Accumulated as the product of the panel determinants: deep in a gap
    /// the composed entries reach magnitudes where the plain 2x2 formula
    /// cancels to entries^2 * eps, far above the drift actually committed
    /// by the integrator.
    pub fn determinant(&self) -> f64 {
        self.det
    }

    /// Inside a spectral band iff `|Delta| <= 2`.
    pub fn in_band(&self) -> bool {
        self.discriminant().abs() <= 2.0
    }
}

/// Kahan's compensated 2x2 determinant `a d - b c`, accurate to a few ulp
/// of the result even under heavy cancellation.
fn det2(a: f64, b: f64, c: f64, d: f64) -> f64 {
    let w = b * c;
    let e = f64::mul_add(b, c, -w);
    let f = f64::mul_add(a, d, -w);
    f - e
}

/// First-order form of the eigenvalue equation: `y = (phi, p phi')` with
/// `y1' = r y2`, `y2' = (q - lambda w) y1`.
#[inline]
pub fn linear_system_rhs(x: f64, y: &[f64; 2], lambda: f64, v: &CoefficientTriple) -> [f64; 2] {
    [
        v.r().evaluate(x) * y[1],
        (v.q().evaluate(x) - lambda * v.w().evaluate(x)) * y[0],
    ]
}

const PERIODICITY_TOL: f64 = 1e-12;

/// Max sampled deviation of the three coefficients from `period`-jumps.
fn periodicity_defect(v: &CoefficientTriple, period: f64) -> f64 {
    let mut max_dev: f64 = 0.0;
    // incommensurate stride so samples do not collude with the coefficients
    for i in 0..97 {
        let x = 0.137 + i as f64 * period / 89.0;
        for f in [v.r(), v.q(), v.w()] {
            max_dev = max_dev.max((f.evaluate(x + period) - f.evaluate(x)).abs());
        }
    }
    max_dev
}

/// Monodromy matrix over `[0, T]`. Both fundamental columns are propagated
/// in one four-dimensional integration.
pub fn monodromy(
    lambda: f64,
    v: &CoefficientTriple,
    period: f64,
    cfg: &IntegratorConfig,
) -> Result<Monodromy, FloquetError> {
    let max_dev = periodicity_defect(v, period);
    if max_dev > PERIODICITY_TOL {
        return Err(FloquetError::NotPeriodic { period, max_dev });
    }
    monodromy_unchecked(lambda, v, period, cfg)
}

fn monodromy_unchecked(
    lambda: f64,
    v: &CoefficientTriple,
    period: f64,
    cfg: &IntegratorConfig,
) -> Result<Monodromy, FloquetError> {
    // the oracle must hold the Wronskian to 1e-9, so its tolerances are
    // floored below the caller's general-purpose settings
    let cfg = IntegratorConfig {
        rtol: cfg.rtol.min(1e-11),
        atol: cfg.atol.min(1e-13),
        ..cfg.clone()
    };
    // deep in a gap the solutions grow like exp(gamma x) and a single sweep
    // loses the Wronskian in the growing direction; composing short-panel
    // transfer matrices keeps every integrated column moderate
    const PANELS: usize = 16;
    let rhs = |x: f64, y: &[f64; 4]| {
        let r = v.r().evaluate(x);
        let qw = v.q().evaluate(x) - lambda * v.w().evaluate(x);
        [r * y[1], qw * y[0], r * y[3], qw * y[2]]
    };
    // accumulated matrix, column major: [u1, pu1', u2, pu2']
    let mut m = [1.0, 0.0, 0.0, 1.0];
    let mut det = 1.0;
    for k in 0..PANELS {
        let a = period * k as f64 / PANELS as f64;
        let b = period * (k + 1) as f64 / PANELS as f64;
        let traj = integrate(rhs, [1.0, 0.0, 0.0, 1.0], a, b, &cfg)?;
        let p = traj.final_y();
        det *= det2(p[0], p[2], p[1], p[3]);
        m = [
            p[0] * m[0] + p[2] * m[1],
            p[1] * m[0] + p[3] * m[1],
            p[0] * m[2] + p[2] * m[3],
            p[1] * m[2] + p[3] * m[3],
        ];
    }
    Ok(Monodromy { period, u1: m[0], pu1p: m[1], u2: m[2], pu2p: m[3], det })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeKind {
    /// `Delta = +2`: periodic eigenvalue.
    Periodic,
    /// `Delta = -2`: antiperiodic eigenvalue.
    Antiperiodic,
}

/// A band edge `|Delta| = 2`.
#[derive(Debug, Clone, Copy)]
pub struct BandEdge {
    pub lambda: f64,
    pub kind: EdgeKind,
    /// True when `Delta` crosses through the level (an open gap starts or
    /// ends here); false for a grazing touch (closed gap).
    pub crossing: bool,
}

const EDGE_LAMBDA_TOL: f64 = 1e-8;
const TOUCH_TOL: f64 = 1e-6;

/// Locate band edges in `[lambda_min, lambda_max]` from `n_seed` discriminant
/// samples: sign changes of `Delta -+ 2` are bisected to `1e-8` in lambda;
/// grazing touches are refined by golden-section search and kept when the
/// refined level defect is below `1e-6`.
pub fn band_edges(
    v: &CoefficientTriple,
    period: f64,
    lambda_min: f64,
    lambda_max: f64,
    n_seed: usize,
    cfg: &IntegratorConfig,
) -> Result<Vec<BandEdge>, FloquetError> {
    let max_dev = periodicity_defect(v, period);
    if max_dev > PERIODICITY_TOL {
        return Err(FloquetError::NotPeriodic { period, max_dev });
    }
    if lambda_min >= lambda_max || n_seed < 2 {
        return Ok(Vec::new());
    }
    let disc = |lambda: f64| -> Result<f64, FloquetError> {
        Ok(monodromy_unchecked(lambda, v, period, cfg)?.discriminant())
    };
    let n = n_seed.max(2);
    let step = (lambda_max - lambda_min) / (n - 1) as f64;
    let mut samples = Vec::with_capacity(n);
    for i in 0..n {
        let l = lambda_min + i as f64 * step;
        samples.push((l, disc(l)?));
    }

    let mut edges: Vec<BandEdge> = Vec::new();
    for (target, kind) in [(2.0, EdgeKind::Periodic), (-2.0, EdgeKind::Antiperiodic)] {
        let g = |d: f64| d - target;
        for i in 1..n {
            let (la, da) = samples[i - 1];
            let (lb, db) = samples[i];
            if g(da) == 0.0 {
                continue; // exact sample hits are vanishingly unlikely; skip
            }
            if g(da) * g(db) < 0.0 {
                let lambda = bisect_level(&disc, la, lb, target, g(da))?;
                edges.push(BandEdge { lambda, kind, crossing: true });
            }
        }
        // grazing touches: local minima of |Delta - target| without a sign change
        for i in 1..n - 1 {
            let (gm, gl, gr) =
                (g(samples[i].1).abs(), g(samples[i - 1].1).abs(), g(samples[i + 1].1).abs());
            if gm <= gl && gm <= gr && g(samples[i - 1].1) * g(samples[i + 1].1) > 0.0 {
                let (lambda, value) =
                    golden_min(|l| disc(l).map(|d| (d - target).abs()), samples[i - 1].0, samples[i + 1].0)?;
                if value <= TOUCH_TOL
                    && !edges.iter().any(|e| (e.lambda - lambda).abs() <= 10.0 * EDGE_LAMBDA_TOL)
                {
                    edges.push(BandEdge { lambda, kind, crossing: false });
                }
            }
        }
    }
    edges.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
    Ok(edges)
}

fn bisect_level(
    disc: &impl Fn(f64) -> Result<f64, FloquetError>,
    mut a: f64,
    mut b: f64,
    target: f64,
    g_a: f64,
) -> Result<f64, FloquetError> {
    let mut ga = g_a;
    while (b - a).abs() > EDGE_LAMBDA_TOL {
        let mid = 0.5 * (a + b);
        let gm = disc(mid)? - target;
        if gm == 0.0 {
            return Ok(mid);
        }
        if (ga < 0.0) == (gm < 0.0) {
            a = mid;
            ga = gm;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}

fn golden_min(
    f: impl Fn(f64) -> Result<f64, FloquetError>,
    mut a: f64,
    mut b: f64,
) -> Result<(f64, f64), FloquetError> {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while (b - a).abs() > EDGE_LAMBDA_TOL {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
        }
    }
    let mid = 0.5 * (a + b);
    Ok((mid, f(mid)?))
}

/// Open gap intervals within `[lambda_min, lambda_max]`: maximal subintervals
/// where `|Delta| > 2`, read off the crossing edges (grazing touches do not
/// open a gap). The window boundaries clip gaps that extend beyond them.
pub fn gap_intervals(
    v: &CoefficientTriple,
    period: f64,
    lambda_min: f64,
    lambda_max: f64,
    n_seed: usize,
    cfg: &IntegratorConfig,
) -> Result<Vec<(f64, f64)>, FloquetError> {
    let edges = band_edges(v, period, lambda_min, lambda_max, n_seed, cfg)?;
    let mut cuts = vec![lambda_min];
    cuts.extend(edges.iter().filter(|e| e.crossing).map(|e| e.lambda));
    cuts.push(lambda_max);
    let mut gaps = Vec::new();
    for pair in cuts.windows(2) {
        let (lo, hi) = (pair[0], pair[1]);
        if hi - lo <= 2.0 * EDGE_LAMBDA_TOL {
            continue;
        }
        let mid = 0.5 * (lo + hi);
        if !monodromy_unchecked(mid, v, period, cfg)?.in_band() {
            gaps.push((lo, hi));
        }
    }
    Ok(gaps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::CoefficientTriple;
    use crate::testing::{periodic_triple, quasiperiodic_triple};
    use std::f64::consts::TAU;

    fn cfg() -> IntegratorConfig {
        IntegratorConfig::new()
    }

    fn free() -> CoefficientTriple {
        CoefficientTriple::constant(1.0, 0.0, 1.0).unwrap()
    }

    #[test]
    fn rhs_examples() {
        let v = free();
        assert_eq!(linear_system_rhs(0.0, &[1.0, 0.0], 1.0, &v), [0.0, -1.0]);
        assert_eq!(linear_system_rhs(0.3, &[0.0, 1.0], 1.0, &v), [1.0, 0.0]);
        assert_eq!(linear_system_rhs(0.3, &[0.0, 0.0], 5.0, &v), [0.0, 0.0]);
    }

    #[test]
    fn free_discriminant_closed_form() {
        // Delta(lambda) = 2 cos(2 pi sqrt(lambda)) for the free operator
        let v = free();
        for lambda in [0.3, 1.7, 4.0, 6.2] {
            let m = monodromy(lambda, &v, TAU, &cfg()).unwrap();
            let exact = 2.0 * (TAU * lambda.sqrt()).cos();
            assert!(
                (m.discriminant() - exact).abs() < 1e-8,
                "Delta({lambda}) = {} vs {exact}",
                m.discriminant()
            );
            assert!((m.determinant() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn band_edge_at_quarter() {
        // lambda = 1/4: Delta = 2 cos(pi) = -2
        let m = monodromy(0.25, &free(), TAU, &cfg()).unwrap();
        assert!((m.discriminant() + 2.0).abs() < 1e-8);
    }

    #[test]
    fn rejects_aperiodic_triple() {
        let err = monodromy(1.0, &quasiperiodic_triple(), TAU, &cfg()).unwrap_err();
        assert!(matches!(err, FloquetError::NotPeriodic { .. }));
    }

    #[test]
    fn periodic_triple_monodromy_determinant() {
        let v = periodic_triple();
        for lambda in [-0.5, 0.4, 1.3] {
            let m = monodromy(lambda, &v, TAU, &cfg()).unwrap();
            assert!((m.determinant() - 1.0).abs() < 1e-9, "det = {}", m.determinant());
        }
    }

    #[test]
    fn free_operator_has_no_open_gaps() {
        // every |Delta| = 2 level is grazed, never crossed, on (0, 9];
        // touching points sit at lambda = k^2 / 4
        let v = free();
        let edges = band_edges(&v, TAU, 0.01, 9.0, 600, &cfg()).unwrap();
        assert!(!edges.is_empty());
        for e in &edges {
            assert!(!e.crossing, "unexpected open-gap edge at {}", e.lambda);
            let k = (2.0 * e.lambda.sqrt()).round();
            assert!(
                (e.lambda - k * k / 4.0).abs() < 1e-3,
                "touch at {} not near k^2/4",
                e.lambda
            );
        }
        let gaps = gap_intervals(&v, TAU, 0.01, 9.0, 600, &cfg()).unwrap();
        assert!(gaps.is_empty(), "free operator reported gaps {gaps:?}");
    }

    #[test]
    fn empty_range_gives_no_edges() {
        let edges = band_edges(&free(), TAU, 2.0, 2.0, 100, &cfg()).unwrap();
        assert!(edges.is_empty());
    }

    #[test]
    fn periodic_triple_has_open_gaps() {
        let v = periodic_triple();
        let gaps = gap_intervals(&v, TAU, -1.0, 1.5, 400, &cfg()).unwrap();
        assert!(!gaps.is_empty(), "expected at least one open gap for the periodic triple");
        for (lo, hi) in &gaps {
            assert!(lo < hi);
        }
    }

    #[test]
    fn rho_sits_on_the_ladder_in_gaps_and_between_in_bands() {
        // |Delta| > 2 forces rho onto a rung k pi / T; |Delta| < 2 places it
        // strictly between consecutive rungs
        let v = periodic_triple();
        let c = cfg();
        let rung = std::f64::consts::PI / TAU; // 1/2
        for (lambda, expect_band) in [(0.25, false), (1.7, true)] {
            let m = monodromy(lambda, &v, TAU, &c).unwrap();
            assert_eq!(m.in_band(), expect_band);
            let est = crate::rotation::rho_full(lambda, &v, 2e-3, 2000.0, 64000.0, &c)
                .unwrap()
                .combined;
            let pos = est.rho / rung;
            if expect_band {
                let margin = 2.0 * est.err / rung;
                assert!(
                    pos - pos.floor() > margin && pos.ceil() - pos > margin,
                    "in-band rho {} sits on a rung",
                    est.rho
                );
            } else {
                assert!(
                    (pos - pos.round()).abs() * rung <= 5e-3,
                    "in-gap rho {} is off the ladder",
                    est.rho
                );
            }
        }
    }
}
