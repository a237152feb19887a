//! Adaptive embedded Runge-Kutta integration for small nonstiff systems.
//!
//! A Dormand-Prince 5(4) pair with the standard I step controller, cubic
//! Hermite dense output on accepted steps, and bisection-based localization
//! of event sign changes. The `Stepper` exposes single accepted steps so
//! callers that need to renormalize state between steps (phase wrapping,
//! chart swaps) can drive it directly; `integrate` and
//! `integrate_with_events` are the batteries-included front ends.

use thiserror::Error;

/// Tolerances and step limits for the adaptive integrator.
#[derive(Debug, Clone)]
pub struct IntegratorConfig {
    /// Relative tolerance per component.
    pub rtol: f64,
    /// Absolute tolerance per component.
    pub atol: f64,
    /// Initial step size (sign is taken from the integration direction).
    pub h_init: f64,
    /// Hard cap on the step size.
    pub h_max: f64,
    /// Budget of accepted plus rejected steps per call.
    pub max_steps: u64,
}

impl IntegratorConfig {
    /// Defaults for coefficients oscillating at frequencies up to 1 rad per
    /// unit x: the cap resolves the fastest oscillation, not the solution.
    pub fn new() -> Self {
        Self::with_max_frequency(1.0)
    }

    /// Defaults with the step cap set to a tenth of the shortest coefficient
    /// period `2*pi/beta_max`.
    pub fn with_max_frequency(beta_max: f64) -> Self {
        assert!(beta_max > 0.0, "beta_max must be positive");
        let h_max = 0.1 * std::f64::consts::TAU / beta_max;
        IntegratorConfig {
            rtol: 1e-9,
            atol: 1e-12,
            h_init: 1e-2 * h_max,
            h_max,
            max_steps: 200_000_000,
        }
    }

    fn validate(&self) {
        assert!(self.rtol > 0.0 && self.atol > 0.0, "tolerances must be positive");
        assert!(self.h_max > 0.0, "h_max must be positive");
        assert!(self.max_steps > 0, "max_steps must be positive");
    }
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self::new()
    }
}

#[derive(Debug, Error)]
pub enum OdeError {
    #[error("step limit exceeded at x = {x} after {steps} steps")]
    StepLimitExceeded { x: f64, steps: u64 },
    #[error("right-hand side returned a non-finite value near x = {x}")]
    NonFiniteState { x: f64 },
}

/// Work counters for one integration.
#[derive(Debug, Clone, Copy, Default)]
pub struct Stats {
    pub steps_accepted: u64,
    pub steps_rejected: u64,
    pub rhs_evals: u64,
}

impl Stats {
    fn total_steps(&self) -> u64 {
        self.steps_accepted + self.steps_rejected
    }
}

/// One accepted step with endpoint derivatives; enough for cubic Hermite
/// dense output on `[x0, x1]`.
#[derive(Debug, Clone, Copy)]
pub struct StepRecord<const N: usize> {
    pub x0: f64,
    pub y0: [f64; N],
    pub dy0: [f64; N],
    pub x1: f64,
    pub y1: [f64; N],
    pub dy1: [f64; N],
}

/// Cubic Hermite interpolation of an accepted step at `x`.
pub fn hermite_eval<const N: usize>(rec: &StepRecord<N>, x: f64) -> [f64; N] {
    let h = rec.x1 - rec.x0;
    if h == 0.0 {
        return rec.y0;
    }
    let t = (x - rec.x0) / h;
    let t2 = t * t;
    let t3 = t2 * t;
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + t;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    let mut out = [0.0; N];
    for i in 0..N {
        out[i] = h00 * rec.y0[i] + h10 * h * rec.dy0[i] + h01 * rec.y1[i] + h11 * h * rec.dy1[i];
    }
    out
}

// Dormand-Prince 5(4) tableau. The fifth-order weights coincide with the
// last stage (FSAL), so an accepted step costs six fresh evaluations.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
// b - b_hat, error weights of the embedded fourth-order solution.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;

/// Driver for one adaptive trajectory. State is a fixed-size `[f64; N]`.
pub struct Stepper<F, const N: usize>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    rhs: F,
    cfg: IntegratorConfig,
    x: f64,
    y: [f64; N],
    dy: [f64; N],
    h: f64,
    dir: f64,
    stats: Stats,
}

impl<F, const N: usize> Stepper<F, N>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    /// Start a trajectory at `(x0, y0)` heading in `direction` (+1 or -1).
    pub fn new(mut rhs: F, x0: f64, y0: [f64; N], direction: f64, cfg: &IntegratorConfig) -> Result<Self, OdeError> {
        cfg.validate();
        assert!(direction == 1.0 || direction == -1.0, "direction must be +1 or -1");
        let dy = rhs(x0, &y0);
        let mut stats = Stats::default();
        stats.rhs_evals += 1;
        if !all_finite(&dy) {
            return Err(OdeError::NonFiniteState { x: x0 });
        }
        Ok(Stepper {
            rhs,
            cfg: cfg.clone(),
            x: x0,
            y: y0,
            dy,
            h: cfg.h_init.abs().min(cfg.h_max),
            dir: direction,
            stats,
        })
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn y(&self) -> &[f64; N] {
        &self.y
    }

    pub fn stats(&self) -> Stats {
        self.stats
    }

    /// Replace the state by `f(y)` without re-evaluating the derivative.
    /// Only valid when the right-hand side is invariant under the change
    /// (e.g. shifting a phase by its period).
    pub fn shift_state(&mut self, f: impl FnOnce(&mut [f64; N])) {
        f(&mut self.y);
    }

    /// Replace the state and re-evaluate the derivative (used after a
    /// change of chart, where the right-hand side itself changes).
    pub fn reset_state(&mut self, y: [f64; N]) -> Result<(), OdeError> {
        self.y = y;
        self.dy = (self.rhs)(self.x, &self.y);
        self.stats.rhs_evals += 1;
        if !all_finite(&self.dy) {
            return Err(OdeError::NonFiniteState { x: self.x });
        }
        Ok(())
    }

    /// Take one accepted step toward `x_target` (never past it). When the
    /// remaining interval fits in the current step size the step lands on
    /// `x_target` exactly.
    pub fn step_toward(&mut self, x_target: f64) -> Result<StepRecord<N>, OdeError> {
        debug_assert!(
            (x_target - self.x) * self.dir >= 0.0,
            "target lies behind the integration direction"
        );
        let mut h_attempt = self.h.min(self.cfg.h_max);
        loop {
            if self.stats.total_steps() >= self.cfg.max_steps {
                return Err(OdeError::StepLimitExceeded { x: self.x, steps: self.stats.total_steps() });
            }
            let remaining = x_target - self.x;
            let landing = h_attempt >= remaining.abs();
            let h = if landing { remaining } else { h_attempt * self.dir };

            match self.try_step(h) {
                StepAttempt::Accept { y1, dy1, err_norm } => {
                    self.stats.steps_accepted += 1;
                    let rec = StepRecord {
                        x0: self.x,
                        y0: self.y,
                        dy0: self.dy,
                        x1: if landing { x_target } else { self.x + h },
                        y1,
                        dy1,
                    };
                    self.x = rec.x1;
                    self.y = y1;
                    self.dy = dy1;
                    if !landing {
                        self.h = (h_attempt * grow_factor(err_norm)).min(self.cfg.h_max);
                    }
                    return Ok(rec);
                }
                StepAttempt::Reject { err_norm } => {
                    self.stats.steps_rejected += 1;
                    h_attempt *= shrink_factor(err_norm);
                }
                StepAttempt::NonFinite => {
                    self.stats.steps_rejected += 1;
                    h_attempt *= 0.5;
                    if h_attempt < 1e-14 * (1.0 + self.x.abs()) {
                        return Err(OdeError::NonFiniteState { x: self.x });
                    }
                }
            }
            if h_attempt < f64::EPSILON * (1.0 + self.x.abs()) {
                return Err(OdeError::StepLimitExceeded { x: self.x, steps: self.stats.total_steps() });
            }
        }
    }

    fn try_step(&mut self, h: f64) -> StepAttempt<N> {
        let x = self.x;
        let y = &self.y;
        let k1 = self.dy;

        let y2 = axpy(y, &[(h * A21, &k1)]);
        let k2 = (self.rhs)(x + C2 * h, &y2);
        let y3 = axpy(y, &[(h * A31, &k1), (h * A32, &k2)]);
        let k3 = (self.rhs)(x + C3 * h, &y3);
        let y4 = axpy(y, &[(h * A41, &k1), (h * A42, &k2), (h * A43, &k3)]);
        let k4 = (self.rhs)(x + C4 * h, &y4);
        let y5 = axpy(y, &[(h * A51, &k1), (h * A52, &k2), (h * A53, &k3), (h * A54, &k4)]);
        let k5 = (self.rhs)(x + C5 * h, &y5);
        let y6 = axpy(
            y,
            &[(h * A61, &k1), (h * A62, &k2), (h * A63, &k3), (h * A64, &k4), (h * A65, &k5)],
        );
        let k6 = (self.rhs)(x + h, &y6);
        let y_new = axpy(y, &[(h * B1, &k1), (h * B3, &k3), (h * B4, &k4), (h * B5, &k5), (h * B6, &k6)]);
        let k7 = (self.rhs)(x + h, &y_new);
        self.stats.rhs_evals += 6;

        if !all_finite(&y_new) || !all_finite(&k7) {
            return StepAttempt::NonFinite;
        }

        let mut err_sq = 0.0;
        for i in 0..N {
            let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let scale = self.cfg.atol + self.cfg.rtol * y[i].abs().max(y_new[i].abs());
            err_sq += (e / scale) * (e / scale);
        }
        let err_norm = (err_sq / N as f64).sqrt();
        if !err_norm.is_finite() {
            return StepAttempt::NonFinite;
        }
        if err_norm <= 1.0 {
            StepAttempt::Accept { y1: y_new, dy1: k7, err_norm }
        } else {
            StepAttempt::Reject { err_norm }
        }
    }
}

enum StepAttempt<const N: usize> {
    Accept { y1: [f64; N], dy1: [f64; N], err_norm: f64 },
    Reject { err_norm: f64 },
    NonFinite,
}

fn grow_factor(err_norm: f64) -> f64 {
    if err_norm == 0.0 {
        MAX_FACTOR
    } else {
        (SAFETY * err_norm.powf(-0.2)).clamp(MIN_FACTOR, MAX_FACTOR)
    }
}

fn shrink_factor(err_norm: f64) -> f64 {
    (SAFETY * err_norm.powf(-0.2)).clamp(MIN_FACTOR, 1.0)
}

fn axpy<const N: usize>(y: &[f64; N], terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for &(c, k) in terms {
        for i in 0..N {
            out[i] += c * k[i];
        }
    }
    out
}

fn all_finite<const N: usize>(v: &[f64; N]) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Accepted step endpoints of one trajectory, in order.
#[derive(Debug, Clone)]
pub struct Trajectory<const N: usize> {
    pub xs: Vec<f64>,
    pub ys: Vec<[f64; N]>,
    pub dys: Vec<[f64; N]>,
    pub stats: Stats,
}

impl<const N: usize> Trajectory<N> {
    pub fn final_x(&self) -> f64 {
        *self.xs.last().expect("trajectory is never empty")
    }

    pub fn final_y(&self) -> [f64; N] {
        *self.ys.last().expect("trajectory is never empty")
    }
}

/// Integrate `y' = rhs(x, y)` from `x0` to `x1` (either direction). The last
/// step is clipped so the final abscissa equals `x1` exactly.
pub fn integrate<F, const N: usize>(
    rhs: F,
    y0: [f64; N],
    x0: f64,
    x1: f64,
    cfg: &IntegratorConfig,
) -> Result<Trajectory<N>, OdeError>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    integrate_impl(rhs, y0, x0, x1, cfg, |_| {})
}

/// A localized sign change of the event function along the trajectory.
#[derive(Debug, Clone, Copy)]
pub struct EventCrossing {
    pub x: f64,
    /// True when the event function passes from negative to positive.
    pub rising: bool,
}

/// Like [`integrate`], additionally localizing the sign changes of
/// `event(y)` between accepted steps by bisection on the dense output,
/// to `|dx| <= 1e-10 * (1 + |x|)`.
pub fn integrate_with_events<F, G, const N: usize>(
    rhs: F,
    y0: [f64; N],
    x0: f64,
    x1: f64,
    cfg: &IntegratorConfig,
    event: G,
) -> Result<(Trajectory<N>, Vec<EventCrossing>), OdeError>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
    G: Fn(&[f64; N]) -> f64,
{
    let mut crossings = Vec::new();
    let mut g_prev = event(&y0);
    let traj = integrate_impl(rhs, y0, x0, x1, cfg, |rec| {
        let g_next = event(&rec.y1);
        if g_prev * g_next < 0.0 {
            let x = bisect_event(rec, &event, g_prev);
            crossings.push(EventCrossing { x, rising: g_next > g_prev });
        } else if g_next == 0.0 && g_prev != 0.0 {
            crossings.push(EventCrossing { x: rec.x1, rising: g_prev < 0.0 });
        }
        g_prev = g_next;
    })?;
    Ok((traj, crossings))
}

fn bisect_event<G, const N: usize>(rec: &StepRecord<N>, event: &G, g_lo: f64) -> f64
where
    G: Fn(&[f64; N]) -> f64,
{
    let (mut a, mut b) = (rec.x0, rec.x1);
    let mut ga = g_lo;
    while (b - a).abs() > 1e-10 * (1.0 + a.abs()) {
        let mid = 0.5 * (a + b);
        let gm = event(&hermite_eval(rec, mid));
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

fn integrate_impl<F, H, const N: usize>(
    rhs: F,
    y0: [f64; N],
    x0: f64,
    x1: f64,
    cfg: &IntegratorConfig,
    mut on_step: H,
) -> Result<Trajectory<N>, OdeError>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
    H: FnMut(&StepRecord<N>),
{
    let dir = if x1 >= x0 { 1.0 } else { -1.0 };
    let mut stepper = Stepper::new(rhs, x0, y0, dir, cfg)?;
    let mut traj = Trajectory {
        xs: vec![x0],
        ys: vec![y0],
        dys: vec![stepper.dy],
        stats: Stats::default(),
    };
    while stepper.x() != x1 {
        let rec = stepper.step_toward(x1)?;
        on_step(&rec);
        traj.xs.push(rec.x1);
        traj.ys.push(rec.y1);
        traj.dys.push(rec.dy1);
    }
    traj.stats = stepper.stats();
    Ok(traj)
}
