//! Prufer-angle dynamics for the eigenvalue equation: the scalar angle ODE
//! `theta' = r(x) cos^2 theta + (lambda w(x) - q(x)) sin^2 theta`, evolved
//! winding-safely, with zero counting.
//!
//! The integrated state is the residual modulo 2 pi with an explicit winding
//! counter, so horizons of 1e5 and beyond lose no phase precision and the
//! trigonometric right-hand side always sees an O(1) argument. Zeros of the
//! solution are upward crossings of theta through multiples of pi (the
//! vector field at those levels equals `r(x) > 0`), so the count over
//! `[0, x)` is recovered exactly from the endpoint angles.

use crate::coeff::CoefficientTriple;
use crate::ode::{hermite_eval, IntegratorConfig, OdeError, Stats, Stepper};
use std::f64::consts::{PI, TAU};

/// An angle stored as `2 pi * winding + residual` with `residual` in
/// `[0, 2 pi)`; reconstruction is lossless for windings up to 2^52.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PruferAngle {
    winding: i64,
    residual: f64,
}

impl PruferAngle {
    pub const ZERO: PruferAngle = PruferAngle { winding: 0, residual: 0.0 };

    pub fn new(winding: i64, residual: f64) -> Self {
        PruferAngle { winding, residual }.normalized()
    }

    pub fn from_radians(theta: f64) -> Self {
        let winding = (theta / TAU).floor() as i64;
        PruferAngle { winding, residual: theta - TAU * winding as f64 }.normalized()
    }

    fn normalized(mut self) -> Self {
        while self.residual >= TAU {
            self.residual -= TAU;
            self.winding += 1;
        }
        while self.residual < 0.0 {
            self.residual += TAU;
            self.winding -= 1;
        }
        self
    }

    pub fn winding(&self) -> i64 {
        self.winding
    }

    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn value(&self) -> f64 {
        TAU * self.winding as f64 + self.residual
    }

    pub fn add_radians(&self, delta: f64) -> Self {
        let shift = PruferAngle::from_radians(delta);
        PruferAngle {
            winding: self.winding + shift.winding,
            residual: self.residual + shift.residual,
        }
        .normalized()
    }

    /// Difference `self - other` in radians, exact in the winding part.
    pub fn sub(&self, other: &PruferAngle) -> f64 {
        TAU * (self.winding - other.winding) as f64 + (self.residual - other.residual)
    }

    /// `floor(theta / pi)`, computed exactly from the pair.
    pub fn pi_floor(&self) -> i64 {
        2 * self.winding + if self.residual >= PI { 1 } else { 0 }
    }
}

impl PartialOrd for PruferAngle {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        (self.winding, self.residual).partial_cmp(&(other.winding, other.residual))
    }
}

/// Right-hand side of the angle equation at angle `theta`:
/// `r(x) cos^2 theta + (lambda w(x) - q(x)) sin^2 theta`.
#[inline]
pub fn prufer_rhs(x: f64, theta: f64, lambda: f64, v: &CoefficientTriple) -> f64 {
    let (s, c) = theta.sin_cos();
    v.r().evaluate(x) * c * c + (lambda * v.w().evaluate(x) - v.q().evaluate(x)) * s * s
}

/// Result of evolving the angle from 0 to `x_end`.
#[derive(Debug, Clone)]
pub struct PruferTrajectory {
    pub theta_end: PruferAngle,
    /// Upward crossings of multiples of pi over `(0, x_end]`; `None` for
    /// backward evolution, where the count is undefined.
    pub zero_count: Option<u64>,
    /// Angle samples at accepted steps, when requested.
    pub samples: Option<Vec<(f64, PruferAngle)>>,
    /// Crossing abscissas, when requested.
    pub crossings: Option<Vec<f64>>,
    pub stats: Stats,
}

/// What to record along the way.
#[derive(Debug, Clone, Copy, Default)]
pub struct EvolveOptions {
    pub record_samples: bool,
    pub record_crossings: bool,
}

/// Guard band added to the final angle before the crossing census, so a
/// trajectory that lands (up to integration error) exactly on a multiple of
/// pi counts it deterministically. Kept far below pi.
fn census_guard(theta_end: f64) -> f64 {
    (1e-6 * (1.0 + theta_end.abs())).min(0.3)
}

/// Number of upward crossings of multiples of pi between the start and end
/// angles: `#{k : theta_start < k pi <= theta_end + guard}`.
fn crossing_census(start: &PruferAngle, end: &PruferAngle) -> u64 {
    let adjusted = end.add_radians(census_guard(end.value()));
    (adjusted.pi_floor() - start.pi_floor()).max(0) as u64
}

/// A stateful forward (or backward) evolution of the Prufer angle, advanced
/// checkpoint by checkpoint. Used directly by the rotation-number protocol
/// so a doubled horizon extends the same trajectory instead of restarting.
pub struct PruferEvolution<'v> {
    stepper: Stepper<Box<dyn FnMut(f64, &[f64; 1]) -> [f64; 1] + 'v>, 1>,
    winding: i64,
    theta0: PruferAngle,
}

impl<'v> PruferEvolution<'v> {
    pub fn new(
        lambda: f64,
        v: &'v CoefficientTriple,
        theta0: PruferAngle,
        forward: bool,
        cfg: &IntegratorConfig,
    ) -> Result<Self, OdeError> {
        let rhs: Box<dyn FnMut(f64, &[f64; 1]) -> [f64; 1] + 'v> =
            Box::new(move |x, y: &[f64; 1]| [prufer_rhs(x, y[0], lambda, v)]);
        let stepper = Stepper::new(
            rhs,
            0.0,
            [theta0.residual()],
            if forward { 1.0 } else { -1.0 },
            cfg,
        )?;
        Ok(PruferEvolution { stepper, winding: theta0.winding(), theta0 })
    }

    pub fn x(&self) -> f64 {
        self.stepper.x()
    }

    pub fn angle(&self) -> PruferAngle {
        PruferAngle::new(self.winding, self.stepper.y()[0])
    }

    pub fn start_angle(&self) -> PruferAngle {
        self.theta0
    }

    /// Crossing count over `(0, x_current]`; only meaningful forward.
    pub fn zero_count(&self) -> u64 {
        crossing_census(&self.theta0, &self.angle())
    }

    pub fn stats(&self) -> Stats {
        self.stepper.stats()
    }

    /// Advance to `x` (which must lie ahead in the evolution direction),
    /// reporting each accepted step to `on_step(x0, theta0, dtheta0, x1,
    /// theta1, dtheta1)` with unwrapped angle values.
    pub fn advance_to_with(
        &mut self,
        x: f64,
        mut on_step: impl FnMut(f64, f64, f64, f64, f64, f64),
    ) -> Result<(), OdeError> {
        while self.stepper.x() != x {
            let rec = self.stepper.step_toward(x)?;
            let base = TAU * self.winding as f64;
            on_step(rec.x0, base + rec.y0[0], rec.dy0[0], rec.x1, base + rec.y1[0], rec.dy1[0]);
            // wrap the residual back into [0, 2 pi); the vector field is
            // 2 pi periodic in theta so the derivative is reused as is
            let mut wraps = 0i64;
            let mut r = rec.y1[0];
            while r >= TAU {
                r -= TAU;
                wraps += 1;
            }
            while r < 0.0 {
                r += TAU;
                wraps -= 1;
            }
            if wraps != 0 {
                self.winding += wraps;
                self.stepper.shift_state(|y| y[0] = r);
            }
        }
        Ok(())
    }

    pub fn advance_to(&mut self, x: f64) -> Result<(), OdeError> {
        self.advance_to_with(x, |_, _, _, _, _, _| {})
    }
}

/// Evolve the angle from `theta0` at 0 to `x_end`. Forward evolution counts
/// zeros; backward evolution (`x_end < 0`) leaves the count undefined.
pub fn evolve(
    lambda: f64,
    v: &CoefficientTriple,
    theta0: PruferAngle,
    x_end: f64,
    cfg: &IntegratorConfig,
) -> Result<PruferTrajectory, OdeError> {
    evolve_detailed(lambda, v, theta0, x_end, cfg, EvolveOptions::default())
}

pub fn evolve_detailed(
    lambda: f64,
    v: &CoefficientTriple,
    theta0: PruferAngle,
    x_end: f64,
    cfg: &IntegratorConfig,
    opts: EvolveOptions,
) -> Result<PruferTrajectory, OdeError> {
    let forward = x_end >= 0.0;
    let mut ev = PruferEvolution::new(lambda, v, theta0, forward, cfg)?;
    let mut samples = opts.record_samples.then(|| vec![(0.0, theta0)]);
    let mut crossings = opts.record_crossings.then(Vec::new);
    ev.advance_to_with(x_end, |x0, th0, dth0, x1, th1, dth1| {
        if let Some(s) = samples.as_mut() {
            s.push((x1, PruferAngle::from_radians(th1)));
        }
        if let Some(cr) = crossings.as_mut() {
            if forward {
                locate_pi_crossings(x0, th0, dth0, x1, th1, dth1, cr);
            }
        }
    })?;
    Ok(PruferTrajectory {
        theta_end: ev.angle(),
        zero_count: forward.then(|| ev.zero_count()),
        samples,
        crossings,
        stats: ev.stats(),
    })
}

/// Localize every solution zero (angle through a multiple of pi) inside one
/// accepted step by bisection on the cubic Hermite interpolant.
fn locate_pi_crossings(x0: f64, th0: f64, dth0: f64, x1: f64, th1: f64, dth1: f64, out: &mut Vec<f64>) {
    let k_lo = (th0 / PI).floor() as i64 + 1;
    let k_hi = (th1 / PI).floor() as i64;
    if k_hi < k_lo {
        return;
    }
    let rec = crate::ode::StepRecord { x0, y0: [th0], dy0: [dth0], x1, y1: [th1], dy1: [dth1] };
    for k in k_lo..=k_hi {
        let level = k as f64 * PI;
        let (mut a, mut b) = (x0, x1);
        let mut ga = th0 - level;
        while (b - a).abs() > 1e-10 * (1.0 + a.abs()) {
            let mid = 0.5 * (a + b);
            let gm = hermite_eval(&rec, mid)[0] - level;
            if gm == 0.0 {
                a = mid;
                b = mid;
                break;
            }
            if (ga < 0.0) == (gm < 0.0) {
                a = mid;
                ga = gm;
            } else {
                b = mid;
            }
        }
        out.push(0.5 * (a + b));
    }
}

/// Deviation of the flow from the cocycle identity
/// `theta(x1 + x2, Theta; v) = theta(x1, theta(x2, Theta; v); v shifted by x2)`.
/// A test utility; returns the absolute angle difference.
pub fn cocycle_check(
    lambda: f64,
    v: &CoefficientTriple,
    theta0: PruferAngle,
    x1: f64,
    x2: f64,
    cfg: &IntegratorConfig,
) -> Result<f64, OdeError> {
    let whole = evolve(lambda, v, theta0, x1 + x2, cfg)?.theta_end;
    let first = evolve(lambda, v, theta0, x2, cfg)?.theta_end;
    let shifted = v.shift(x2);
    let second = evolve(lambda, &shifted, first, x1, cfg)?.theta_end;
    Ok(whole.sub(&second).abs())
}
