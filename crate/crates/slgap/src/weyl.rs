//! Weyl m-functions by Riccati integration with chart swapping, the
//! Green-function diagonal `G(x, x, z) = 1/(m_minus - m_plus)`, and the
//! structural checks on it: shift covariance, almost periodicity, zero
//! counting against the rotation number, and the derivative law at zeros.
//!
//! The Weyl solutions grow or decay exponentially and would overflow at the
//! far endpoints needed to forget the initialization, so the logarithmic
//! quasi-derivative `m = p phi' / phi` is propagated instead. It stays O(1)
//! except at its poles (zeros of `phi`), which are crossed in the inverted
//! chart `n = 1/m`. Both limit-point halves contract toward the true Weyl
//! value; agreement of two different initializations is the acceptance test
//! for having integrated from far enough out.

use crate::coeff::CoefficientTriple;
use crate::ode::{IntegratorConfig, OdeError, Stepper};
use crate::prufer::{self, PruferAngle};
use num_complex::Complex64;
use std::cell::Cell;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum WeylError {
    #[error(
        "two initializations disagree by {disagreement:e} at x = {x}; \
         the far endpoint is too close or lambda is not in a gap"
    )]
    NotDecayed { x: f64, disagreement: f64 },
    #[error("Wronskian vanished at x = {x}: m_minus and m_plus coincide")]
    WronskianVanished { x: f64 },
    #[error(transparent)]
    Ode(#[from] OdeError),
}

/// Which variable the stored value represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Chart {
    /// The value is `m` itself.
    Direct,
    /// The value is `n = 1/m` (used across poles of `m`).
    Inverted,
}

/// One Weyl m-function sample `m = (p phi')/phi` at `x`, stored in whichever
/// chart is finite there.
#[derive(Debug, Clone, Copy)]
pub struct MFunctionSample {
    pub x: f64,
    /// The value in the chart named by `chart`.
    pub value: Complex64,
    pub chart: Chart,
}

impl MFunctionSample {
    /// The m-value itself; infinite at a pole stored in the inverted chart.
    pub fn m(&self) -> Complex64 {
        match self.chart {
            Chart::Direct => self.value,
            Chart::Inverted => self.value.finv(),
        }
    }

    /// Chordal distance on the Riemann sphere; finite and small for nearby
    /// values even when both sit near a pole.
    pub fn chordal_distance(&self, other: &MFunctionSample) -> f64 {
        let (a, b) = (self.m(), other.m());
        match (a.is_finite(), b.is_finite()) {
            (true, true) => {
                (a - b).norm() / ((1.0 + a.norm_sqr()) * (1.0 + b.norm_sqr())).sqrt()
            }
            (true, false) => 1.0 / (1.0 + a.norm_sqr()).sqrt(),
            (false, true) => 1.0 / (1.0 + b.norm_sqr()).sqrt(),
            (false, false) => 0.0,
        }
    }
}

/// Green-function diagonal sample.
#[derive(Debug, Clone, Copy)]
pub struct GreenDiagSample {
    pub x: f64,
    pub g: Complex64,
    pub dg_dx: Complex64,
    /// Herglotz sign check at this sample (trivially true for real z).
    pub herglotz_ok: bool,
}

/// Riccati right-hand side for `m = p phi'/phi`:
/// `m' = (q - z w) - m^2 r`, with `r = 1/p`.
#[inline]
pub fn riccati_rhs(x: f64, m: Complex64, z: Complex64, v: &CoefficientTriple) -> Complex64 {
    Complex64::new(v.q().evaluate(x), 0.0) - z * v.w().evaluate(x) - m * m * v.r().evaluate(x)
}

/// The same flow in the inverted chart `n = 1/m`:
/// `n' = r - (q - z w) n^2` (the exact Moebius transform of `riccati_rhs`).
#[inline]
pub fn riccati_rhs_inverted(x: f64, n: Complex64, z: Complex64, v: &CoefficientTriple) -> Complex64 {
    Complex64::new(v.r().evaluate(x), 0.0)
        - (Complex64::new(v.q().evaluate(x), 0.0) - z * v.w().evaluate(x)) * n * n
}

/// Swap charts once the state grows past this magnitude.
const CHART_SWAP_THRESHOLD: f64 = 1e6;
/// Relative chordal tolerance for initialization forgetting.
const DECAY_TOL: f64 = 1e-8;
/// Hard cap for the far-endpoint doubling at real lambda.
const X_FAR_CAP: f64 = 40960.0; // 2^10 * 40

/// Default far endpoint: `max(40, 12/|Im z|)` off the real axis, 40 on it
/// (the real-lambda path doubles adaptively from there).
pub fn default_x_far(z: Complex64) -> f64 {
    if z.im == 0.0 {
        40.0
    } else {
        (12.0 / z.im.abs()).max(40.0)
    }
}

/// Integrate the Riccati flow for `m_plus` or `m_minus` from the far
/// endpoint to every requested abscissa (sorted toward the near end),
/// swapping charts across poles. Returns one sample per checkpoint. When
/// `poles` is given (real lambda only), the crossings of the inverted-chart
/// variable through zero are localized and recorded: those are the poles of
/// `m`, i.e. the zeros of the Weyl solution, found here in the sweep's
/// stable direction.
fn riccati_sweep(
    z: Complex64,
    v: &CoefficientTriple,
    init: Complex64,
    x_far: f64,
    checkpoints: &[f64],
    cfg: &IntegratorConfig,
    mut poles: Option<&mut Vec<f64>>,
) -> Result<Vec<MFunctionSample>, WeylError> {
    let chart = Cell::new(Chart::Direct);
    let rhs = |x: f64, y: &[f64; 2]| {
        let state = Complex64::new(y[0], y[1]);
        let d = match chart.get() {
            Chart::Direct => riccati_rhs(x, state, z, v),
            Chart::Inverted => riccati_rhs_inverted(x, state, z, v),
        };
        [d.re, d.im]
    };
    let direction = if checkpoints.last().is_some_and(|&c| c < x_far) { -1.0 } else { 1.0 };
    let mut stepper = Stepper::new(rhs, x_far, [init.re, init.im], direction, cfg)?;
    let mut samples = Vec::with_capacity(checkpoints.len());
    for &cp in checkpoints {
        while stepper.x() != cp {
            let rec = stepper.step_toward(cp)?;
            if let Some(out) = poles.as_deref_mut() {
                if chart.get() == Chart::Inverted && rec.y0[0] * rec.y1[0] < 0.0 {
                    out.push(bisect_real_zero(&rec));
                }
            }
            let y = *stepper.y();
            let mag = Complex64::new(y[0], y[1]).norm();
            if mag > CHART_SWAP_THRESHOLD {
                let inv = Complex64::new(y[0], y[1]).finv();
                chart.set(match chart.get() {
                    Chart::Direct => Chart::Inverted,
                    Chart::Inverted => Chart::Direct,
                });
                stepper.reset_state([inv.re, inv.im])?;
            }
        }
        let y = *stepper.y();
        samples.push(MFunctionSample {
            x: cp,
            value: Complex64::new(y[0], y[1]),
            chart: chart.get(),
        });
    }
    Ok(samples)
}

/// Bisection of the first state component through zero on the dense output
/// of one accepted step.
fn bisect_real_zero(rec: &crate::ode::StepRecord<2>) -> f64 {
    let (mut a, mut b) = (rec.x0, rec.x1);
    let mut ga = rec.y0[0];
    while (b - a).abs() > 1e-10 * (1.0 + a.abs()) {
        let mid = 0.5 * (a + b);
        let gm = crate::ode::hermite_eval(rec, mid)[0];
        if gm == 0.0 {
            return mid;
        }
        if (ga < 0.0) == (gm < 0.0) {
            a = mid;
            ga = gm;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}

fn initial_pair(z: Complex64, plus_side: bool) -> (Complex64, Complex64) {
    if z.im == 0.0 {
        // real gap lambda: the flow is real; 1.0 would sit on a fixed point
        // of the free flow, so the second probe uses 0.5
        (Complex64::new(0.0, 0.0), Complex64::new(0.5, 0.0))
    } else {
        let s = if plus_side { z.im.signum() } else { -z.im.signum() };
        (Complex64::new(0.0, s), Complex64::new(0.0, 2.0 * s))
    }
}

/// Batched Weyl m-function on the half line containing `x_far`. For
/// `m_plus`, `x_far > max(xs)` and the sweep runs backward; mirrored for
/// `m_minus`. Two initializations are propagated; their disagreement at any
/// checkpoint raises `NotDecayed`. For real `lambda` the far endpoint is
/// doubled until the probes agree (or the cap is reached).
fn m_samples(
    z: Complex64,
    v: &CoefficientTriple,
    xs: &[f64],
    x_far: f64,
    cfg: &IntegratorConfig,
    plus_side: bool,
) -> Result<Vec<MFunctionSample>, WeylError> {
    m_samples_with_poles(z, v, xs, x_far, cfg, plus_side, None)
}

fn m_samples_with_poles(
    z: Complex64,
    v: &CoefficientTriple,
    xs: &[f64],
    x_far: f64,
    cfg: &IntegratorConfig,
    plus_side: bool,
    mut poles: Option<&mut Vec<f64>>,
) -> Result<Vec<MFunctionSample>, WeylError> {
    assert!(!xs.is_empty(), "at least one abscissa is required");
    let mut ordered = xs.to_vec();
    // sweep from far to near
    if plus_side {
        ordered.sort_by(|a, b| b.total_cmp(a));
    } else {
        ordered.sort_by(|a, b| a.total_cmp(b));
    }
    let extreme = ordered[0];
    let (init_a, init_b) = initial_pair(z, plus_side);

    let mut x_far = x_far;
    loop {
        let signed_far = if plus_side { x_far } else { -x_far };
        assert!(
            if plus_side { signed_far > extreme } else { signed_far < extreme },
            "x_far must lie beyond every requested abscissa"
        );
        if let Some(out) = poles.as_deref_mut() {
            out.clear();
        }
        let a = riccati_sweep(z, v, init_a, signed_far, &ordered, cfg, poles.as_deref_mut())?;
        let b = riccati_sweep(z, v, init_b, signed_far, &ordered, cfg, None)?;
        let (worst_x, disagreement) = a
            .iter()
            .zip(&b)
            .map(|(sa, sb)| (sa.x, sa.chordal_distance(sb)))
            .max_by(|p, q| p.1.total_cmp(&q.1))
            .expect("nonempty samples");
        if disagreement <= DECAY_TOL {
            // restore the caller's ordering
            let mut out = a;
            out.sort_by(|s, t| {
                let pos = |x: f64| xs.iter().position(|&u| u == x).unwrap();
                pos(s.x).cmp(&pos(t.x))
            });
            return Ok(out);
        }
        if z.im != 0.0 || 2.0 * x_far > X_FAR_CAP {
            return Err(WeylError::NotDecayed { x: worst_x, disagreement });
        }
        x_far *= 2.0;
    }
}

/// Weyl m-function of the right half line at `x`.
pub fn m_plus(
    z: Complex64,
    v: &CoefficientTriple,
    x: f64,
    x_far: f64,
    cfg: &IntegratorConfig,
) -> Result<MFunctionSample, WeylError> {
    Ok(m_samples(z, v, &[x], x_far, cfg, true)?.remove(0))
}

/// Weyl m-function of the left half line at `x`.
pub fn m_minus(
    z: Complex64,
    v: &CoefficientTriple,
    x: f64,
    x_far: f64,
    cfg: &IntegratorConfig,
) -> Result<MFunctionSample, WeylError> {
    Ok(m_samples(z, v, &[x], x_far, cfg, false)?.remove(0))
}

/// One Riccati sweep from a caller-chosen initialization, without the
/// two-probe agreement check. Exposes the limit-point contraction itself.
pub fn m_plus_from_init(
    z: Complex64,
    v: &CoefficientTriple,
    x: f64,
    x_far: f64,
    cfg: &IntegratorConfig,
    init: Complex64,
) -> Result<MFunctionSample, WeylError> {
    Ok(riccati_sweep(z, v, init, x_far, &[x], cfg, None)?.remove(0))
}

/// `G(x, x, z) = 1/(m_minus - m_plus)` and its derivative
/// `d/dx G = r (m_plus + m_minus) G`, assembled chart-aware so values stay
/// finite across poles of either m-function.
fn assemble_green(
    x: f64,
    r_x: f64,
    z: Complex64,
    mp: &MFunctionSample,
    mm: &MFunctionSample,
) -> Result<GreenDiagSample, WeylError> {
    let one = Complex64::new(1.0, 0.0);
    let (g, dg) = match (mp.chart, mm.chart) {
        (Chart::Direct, Chart::Direct) => {
            let den = mm.value - mp.value;
            if den.norm() <= 1e-12 * (1.0 + mp.value.norm() + mm.value.norm()) {
                return Err(WeylError::WronskianVanished { x });
            }
            let g = den.finv();
            (g, (mp.value + mm.value) * r_x * g)
        }
        (Chart::Inverted, Chart::Direct) => {
            // m_plus at a pole: G = n_plus / (n_plus m_minus - 1)
            let np = mp.value;
            let den = np * mm.value - one;
            if den.norm() <= 1e-12 {
                return Err(WeylError::WronskianVanished { x });
            }
            ((np / den), (one + np * mm.value) * r_x / den)
        }
        (Chart::Direct, Chart::Inverted) => {
            let nm = mm.value;
            let den = one - nm * mp.value;
            if den.norm() <= 1e-12 {
                return Err(WeylError::WronskianVanished { x });
            }
            ((nm / den), (nm * mp.value + one) * r_x / den)
        }
        (Chart::Inverted, Chart::Inverted) => {
            let (np, nm) = (mp.value, mm.value);
            let den = np - nm;
            if den.norm() <= 1e-12 * (1.0 + np.norm() + nm.norm()) {
                return Err(WeylError::WronskianVanished { x });
            }
            ((np * nm / den), (np + nm) * r_x / den)
        }
    };
    let herglotz_ok = herglotz_signs_ok(z, mp, mm, g);
    Ok(GreenDiagSample { x, g, dg_dx: dg, herglotz_ok })
}

/// For `Im z > 0` the Weyl functions and the Green diagonal are Herglotz:
/// `Im m_plus > 0`, `Im m_minus < 0`, `Im G > 0` (mirrored for `Im z < 0`).
fn herglotz_signs_ok(z: Complex64, mp: &MFunctionSample, mm: &MFunctionSample, g: Complex64) -> bool {
    if z.im == 0.0 {
        return true;
    }
    let s = z.im.signum();
    let imp = match mp.chart {
        Chart::Direct => mp.value.im,
        Chart::Inverted => -mp.value.im, // Im(1/n) has the opposite sign of Im(n)
    };
    let imm = match mm.chart {
        Chart::Direct => mm.value.im,
        Chart::Inverted => -mm.value.im,
    };
    imp * s > 0.0 && imm * s < 0.0 && g.im * s > 0.0
}

/// Green-function diagonal at one point.
pub fn green_diag(
    z: Complex64,
    v: &CoefficientTriple,
    x: f64,
    x_far: f64,
    cfg: &IntegratorConfig,
) -> Result<GreenDiagSample, WeylError> {
    Ok(green_diag_samples(z, v, &[x], x_far, cfg)?.remove(0))
}

/// Green-function diagonal at many points, one m-sweep per half line.
pub fn green_diag_samples(
    z: Complex64,
    v: &CoefficientTriple,
    xs: &[f64],
    x_far: f64,
    cfg: &IntegratorConfig,
) -> Result<Vec<GreenDiagSample>, WeylError> {
    let mp = m_samples(z, v, xs, x_far, cfg, true)?;
    let mm = m_samples(z, v, xs, x_far, cfg, false)?;
    mp.iter()
        .zip(&mm)
        .map(|(p, m)| assemble_green(p.x, v.r().evaluate(p.x), z, p, m))
        .collect()
}

/// Zeros of the Green diagonal over `[0, X]` for a gap `lambda`: initial
/// Prufer angles are taken from `m_pm(0)` via `theta = atan2(phi, p phi')`
/// with `phi(0) = 1`, each Weyl solution is evolved, and the crossing
/// counts add up.
pub fn count_green_zeros(
    lambda: f64,
    v: &CoefficientTriple,
    x_end: f64,
    x_far: f64,
    cfg: &IntegratorConfig,
) -> Result<u64, WeylError> {
    let (np, nm) = weyl_angles(lambda, v, x_far, cfg)?;
    let tp = prufer::evolve(lambda, v, np, x_end, cfg)?;
    let tm = prufer::evolve(lambda, v, nm, x_end, cfg)?;
    Ok(tp.zero_count.unwrap() + tm.zero_count.unwrap())
}

/// A zero of the Green diagonal with the derivative magnitude there and the
/// predicted value `r(s) = (1/p)(s)`.
#[derive(Debug, Clone, Copy)]
pub struct GreenZero {
    pub x: f64,
    pub dg_abs: f64,
    pub r_at_x: f64,
}

/// Locate the zeros of `G(x, x, lambda)` on `[0, X]` (as zeros of either
/// Weyl solution) and evaluate `|dG/dx|` at each; the derivative law says
/// it equals `r` there.
///
/// Zeros of `phi_pm` are the poles of `m_pm`, harvested from the m-sweeps
/// themselves: each sweep runs in the direction in which its Weyl solution
/// is dynamically stable, so the locations do not suffer the exponential
/// contamination a forward-evolved `phi_plus` would.
pub fn green_zero_derivatives(
    lambda: f64,
    v: &CoefficientTriple,
    x_end: f64,
    x_far: f64,
    cfg: &IntegratorConfig,
) -> Result<Vec<GreenZero>, WeylError> {
    let z = Complex64::new(lambda, 0.0);
    let far = x_far.max(x_end + 40.0);
    let mut poles_p = Vec::new();
    let mut poles_m = Vec::new();
    m_samples_with_poles(z, v, &[0.0], far, cfg, true, Some(&mut poles_p))?;
    m_samples_with_poles(z, v, &[x_end], far, cfg, false, Some(&mut poles_m))?;
    let mut zeros: Vec<f64> = poles_p
        .into_iter()
        .chain(poles_m)
        .filter(|&s| (0.0..=x_end).contains(&s))
        .collect();
    zeros.sort_by(f64::total_cmp);
    if zeros.is_empty() {
        return Ok(Vec::new());
    }
    let samples = green_diag_samples(z, v, &zeros, far, cfg)?;
    Ok(samples
        .iter()
        .map(|s| GreenZero { x: s.x, dg_abs: s.dg_dx.norm(), r_at_x: v.r().evaluate(s.x) })
        .collect())
}

fn weyl_angles(
    lambda: f64,
    v: &CoefficientTriple,
    x_far: f64,
    cfg: &IntegratorConfig,
) -> Result<(PruferAngle, PruferAngle), WeylError> {
    let z = Complex64::new(lambda, 0.0);
    let mp = m_plus(z, v, 0.0, x_far, cfg)?;
    let mm = m_minus(z, v, 0.0, x_far, cfg)?;
    Ok((prufer_angle_of(&mp), prufer_angle_of(&mm)))
}

/// Initial angle of the Prufer vector `(p phi', phi)` for a real m-sample:
/// `(m, 1)` in the direct chart, `(1, n)` in the inverted one.
fn prufer_angle_of(sample: &MFunctionSample) -> PruferAngle {
    let theta = match sample.chart {
        Chart::Direct => f64::atan2(1.0, sample.value.re),
        Chart::Inverted => f64::atan2(sample.value.re, 1.0),
    };
    PruferAngle::from_radians(theta)
}

/// Max over `xs` of `|G(x + t, x + t, z; v) - G(x, x, z; v shifted by t)|`:
/// the diagonal shift covariance of the Green function.
pub fn check_shift_covariance(
    z: Complex64,
    v: &CoefficientTriple,
    t: f64,
    xs: &[f64],
    x_far: f64,
    cfg: &IntegratorConfig,
) -> Result<f64, WeylError> {
    let shifted_pts: Vec<f64> = xs.iter().map(|&x| x + t).collect();
    let lhs = green_diag_samples(z, v, &shifted_pts, x_far, cfg)?;
    let vs = v.shift(t);
    let rhs = green_diag_samples(z, &vs, xs, x_far, cfg)?;
    Ok(lhs
        .iter()
        .zip(&rhs)
        .map(|(a, b)| (a.g - b.g).norm())
        .fold(0.0, f64::max))
}

/// Sup deviation of the Green diagonal and its derivative under a trial
/// almost period `tau`, over the sample points `xs`.
#[derive(Debug, Clone, Copy)]
pub struct AlmostPeriodDeviation {
    pub tau: f64,
    pub dev_g: f64,
    pub dev_dg: f64,
}

/// Empirical epsilon-almost-period scan: for each candidate `tau`, the sup
/// over `xs` of `|G(x+tau) - G(x)|` and of the same for `dG/dx`.
pub fn almost_period_scan(
    z: Complex64,
    v: &CoefficientTriple,
    tau_candidates: &[f64],
    xs: &[f64],
    x_far: f64,
    cfg: &IntegratorConfig,
) -> Result<Vec<AlmostPeriodDeviation>, WeylError> {
    let here = green_diag_samples(z, v, xs, x_far, cfg)?;
    let mut out = Vec::with_capacity(tau_candidates.len());
    for &tau in tau_candidates {
        let pts: Vec<f64> = xs.iter().map(|&x| x + tau).collect();
        let there = green_diag_samples(z, v, &pts, x_far + tau.abs(), cfg)?;
        let mut dev_g: f64 = 0.0;
        let mut dev_dg: f64 = 0.0;
        for (a, b) in here.iter().zip(&there) {
            dev_g = dev_g.max((a.g - b.g).norm());
            dev_dg = dev_dg.max((a.dg_dx - b.dg_dx).norm());
        }
        out.push(AlmostPeriodDeviation { tau, dev_g, dev_dg });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testing::{periodic_triple, quasiperiodic_triple};
    use std::f64::consts::{FRAC_1_SQRT_2, TAU};

    fn cfg() -> IntegratorConfig {
        IntegratorConfig::new()
    }

    fn free() -> CoefficientTriple {
        CoefficientTriple::constant(1.0, 0.0, 1.0).unwrap()
    }

    const I: Complex64 = Complex64::new(0.0, 1.0);

    #[test]
    fn riccati_rhs_examples() {
        let v = free();
        // m = i sqrt(i) is the fixed point of m' = -z - m^2 at z = i
        let m_star = I * I.sqrt();
        let d = riccati_rhs(0.0, m_star, I, &v);
        assert!(d.norm() < 1e-15, "fixed-point residual {d}");
        // m = 0: the rhs reduces to q - z w
        let d0 = riccati_rhs(0.3, Complex64::new(0.0, 0.0), Complex64::new(2.0, 0.0), &v);
        assert!((d0 - Complex64::new(-2.0, 0.0)).norm() < 1e-15);
        // real z, real m, real coefficients: real output
        let dr = riccati_rhs(1.1, Complex64::new(0.7, 0.0), Complex64::new(-1.0, 0.0), &periodic_triple());
        assert_eq!(dr.im, 0.0);
    }

    #[test]
    fn inverted_chart_is_moebius_conjugate() {
        let v = periodic_triple();
        let z = Complex64::new(0.3, 0.8);
        let m = Complex64::new(1.4, -0.6);
        let n = m.finv();
        let dm = riccati_rhs(0.7, m, z, &v);
        let dn = riccati_rhs_inverted(0.7, n, z, &v);
        // n' = -m'/m^2
        assert!((dn + dm * n * n).norm() < 1e-12);
    }

    #[test]
    fn constant_triple_m_plus_closed_form() {
        // z = i: m_plus = i sqrt(i) = (-1 + i)/sqrt(2)
        let v = free();
        let got = m_plus(I, &v, 0.0, 40.0, &cfg()).unwrap();
        let want = Complex64::new(-FRAC_1_SQRT_2, FRAC_1_SQRT_2);
        assert_eq!(got.chart, Chart::Direct);
        assert!((got.m() - want).norm() < 1e-6, "m_plus = {}", got.m());
        // longer far endpoint: same value
        let far = m_plus(I, &v, 0.0, 80.0, &cfg()).unwrap();
        assert!((far.m() - got.m()).norm() < 1e-10);
    }

    #[test]
    fn constant_triple_m_minus_closed_form() {
        let v = free();
        let got = m_minus(I, &v, 0.0, 40.0, &cfg()).unwrap();
        let want = Complex64::new(FRAC_1_SQRT_2, -FRAC_1_SQRT_2);
        assert!((got.m() - want).norm() < 1e-6, "m_minus = {}", got.m());
        // even coefficients: m_minus(0) = -m_plus(0)
        let mp = m_plus(I, &v, 0.0, 40.0, &cfg()).unwrap();
        assert!((got.m() + mp.m()).norm() < 1e-8);
    }

    #[test]
    fn real_gap_lambda_closed_form() {
        // spectrum of the free operator is [0, inf); lambda = -1 is in the
        // resolvent and phi_pm = exp(-+x), so m_pm = -+1
        let v = free();
        let z = Complex64::new(-1.0, 0.0);
        let mp = m_plus(z, &v, 0.0, 40.0, &cfg()).unwrap();
        let mm = m_minus(z, &v, 0.0, 40.0, &cfg()).unwrap();
        assert!((mp.m() - Complex64::new(-1.0, 0.0)).norm() < 1e-6, "m_plus = {}", mp.m());
        assert!((mm.m() - Complex64::new(1.0, 0.0)).norm() < 1e-6, "m_minus = {}", mm.m());
        assert_eq!(mp.m().im, 0.0, "real flow must stay real");
        let g = green_diag(z, &v, 0.0, 40.0, &cfg()).unwrap();
        assert!((g.g - Complex64::new(0.5, 0.0)).norm() < 1e-6);
        assert!(g.dg_dx.norm() < 1e-6, "dG = {}", g.dg_dx);
    }

    #[test]
    fn green_diag_closed_form_at_i() {
        // G(0,0,i) = 1/(m_minus - m_plus) = 1/(-2 i sqrt(i)) = (sqrt2/4)(1+i)
        let v = free();
        let g = green_diag(I, &v, 0.0, 40.0, &cfg()).unwrap();
        let want = Complex64::new(2f64.sqrt() / 4.0, 2f64.sqrt() / 4.0);
        assert!((g.g - want).norm() < 1e-6, "G = {}", g.g);
        assert!(g.herglotz_ok);
        // conjugating z conjugates G for real coefficients
        let gc = green_diag(-I, &v, 0.0, 40.0, &cfg()).unwrap();
        assert!((gc.g - g.g.conj()).norm() < 1e-8);
    }

    #[test]
    fn initialization_forgetting() {
        let v = free();
        let z = Complex64::new(1.0, 1.0);
        let a = m_plus_from_init(z, &v, 0.0, 40.0, &cfg(), I).unwrap();
        let b = m_plus_from_init(z, &v, 0.0, 40.0, &cfg(), 2.0 * I).unwrap();
        assert!((a.m() - b.m()).norm() < 1e-10, "inits differ by {:e}", (a.m() - b.m()).norm());
        let f1 = periodic_triple();
        let a1 = m_plus_from_init(z, &f1, 0.0, 40.0, &cfg(), I).unwrap();
        let b1 = m_plus_from_init(z, &f1, 0.0, 40.0, &cfg(), 2.0 * I).unwrap();
        assert!((a1.m() - b1.m()).norm() < 1e-10);
    }

    #[test]
    fn not_decayed_for_tiny_far_endpoint() {
        let v = free();
        // z close to the spectrum and x_far far too small to contract
        let z = Complex64::new(4.0, 1e-8);
        let err = m_plus(z, &v, 0.0, 1.0, &cfg()).unwrap_err();
        assert!(matches!(err, WeylError::NotDecayed { .. }), "got {err:?}");
    }

    #[test]
    fn herglotz_signs_across_triples() {
        let zs = [I, Complex64::new(1.0, 1.0), Complex64::new(0.3, 0.7)];
        let xs = [0.0, 0.7, 1.9, 3.4];
        for v in [free(), periodic_triple(), quasiperiodic_triple()] {
            for &z in &zs {
                let samples = green_diag_samples(z, &v, &xs, default_x_far(z), &cfg()).unwrap();
                for s in &samples {
                    assert!(s.herglotz_ok, "Herglotz violation at x = {} for z = {z}", s.x);
                }
            }
        }
    }

    #[test]
    fn shift_covariance_exact_period() {
        // shifting the periodic triple by its exact period is the identity
        let v = periodic_triple();
        let z = Complex64::new(1.0, 1.0);
        let xs = [0.0, 0.9, 2.2, 4.8];
        let dev = check_shift_covariance(z, &v, TAU, &xs, 40.0, &cfg()).unwrap();
        assert!(dev <= 1e-6, "shift covariance deviation {dev:e}");
        let dev0 = check_shift_covariance(z, &v, 0.0, &xs, 40.0, &cfg()).unwrap();
        assert_eq!(dev0, 0.0);
        let devc = check_shift_covariance(z, &free(), 1.37, &xs, 40.0, &cfg()).unwrap();
        assert!(devc <= 1e-8, "autonomous deviation {devc:e}");
    }

    #[test]
    fn no_zeros_below_free_spectrum() {
        // phi_pm = exp(-+x) never vanish
        let v = free();
        let n = count_green_zeros(-1.0, &v, 50.0, 40.0, &cfg()).unwrap();
        assert_eq!(n, 0);
    }

    #[test]
    fn zero_count_is_nondecreasing_in_x() {
        let v = periodic_triple();
        let mut prev = 0;
        for x_end in [10.0, 20.0, 40.0, 80.0] {
            let n = count_green_zeros(0.25, &v, x_end, 40.0, &cfg()).unwrap();
            assert!(n >= prev, "count dropped from {prev} to {n} at X = {x_end}");
            prev = n;
        }
        assert!(prev > 0);
    }

    #[test]
    fn almost_period_scan_exact_period_wins() {
        let v = periodic_triple();
        let z = Complex64::new(1.0, 1.0);
        let xs: Vec<f64> = (0..8).map(|i| 0.3 + 0.9 * i as f64).collect();
        let devs = almost_period_scan(z, &v, &[0.0, 1.0, TAU], &xs, 40.0, &cfg()).unwrap();
        assert_eq!(devs[0].dev_g, 0.0);
        assert!(devs[2].dev_g <= 1e-6, "exact period deviation {:e}", devs[2].dev_g);
        assert!(devs[1].dev_g > devs[2].dev_g, "generic tau should deviate more");
    }

    #[test]
    fn almost_periods_improve_along_convergents() {
        // quasiperiodic triple has frequencies 1 and sqrt2; tau = 2 pi q with q a
        // continued-fraction denominator of sqrt2 (1, 2, 5, 12, 29) is a
        // simultaneous near-period, and the quality improves along the
        // sequence
        let v = quasiperiodic_triple();
        let z = Complex64::new(1.0, 1.0);
        let xs: Vec<f64> = (0..24).map(|i| 0.25 + 0.45 * i as f64).collect();
        let taus: Vec<f64> = [1.0, 2.0, 5.0, 12.0, 29.0].iter().map(|q| TAU * q).collect();
        let devs = almost_period_scan(z, &v, &taus, &xs, 40.0, &cfg()).unwrap();
        for pair in devs.windows(2) {
            assert!(
                pair[1].dev_g < pair[0].dev_g,
                "G deviation did not improve: {:?} -> {:?}",
                pair[0],
                pair[1]
            );
            assert!(
                pair[1].dev_dg < pair[0].dev_dg,
                "dG deviation did not improve: {:?} -> {:?}",
                pair[0],
                pair[1]
            );
        }
        let (first, last) = (&devs[0], devs.last().unwrap());
        assert!(last.dev_g < 0.1 * first.dev_g && last.dev_dg < 0.1 * first.dev_dg);
    }
}
