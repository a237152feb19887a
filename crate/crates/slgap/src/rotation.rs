//! Rotation number estimators: the tail angle quotient, the zero-count
//! density, and a horizon-doubling protocol that combines and cross-checks
//! them.

use crate::coeff::{CoefficientTriple, FrequencyBase};
use crate::ode::{IntegratorConfig, OdeError};
use crate::prufer::{PruferAngle, PruferEvolution};
use std::f64::consts::TAU;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RotationError {
    #[error("horizon limit reached; best estimate rho = {} with err = {}", best.rho, best.err)]
    HorizonExceeded { best: RotationEstimate },
    #[error(transparent)]
    Ode(#[from] OdeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RhoMethod {
    Angle,
    Zeros,
    Combined,
}

impl std::fmt::Display for RhoMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RhoMethod::Angle => write!(f, "angle"),
            RhoMethod::Zeros => write!(f, "zeros"),
            RhoMethod::Combined => write!(f, "combined"),
        }
    }
}

/// An estimate of the rotation number at one `lambda`.
#[derive(Debug, Clone, Copy)]
pub struct RotationEstimate {
    /// Estimated average angular speed, rad per unit x.
    pub rho: f64,
    /// Estimated absolute error (heuristic discrepancy plus the rigorous
    /// `2 pi / X` zero-count slack).
    pub err: f64,
    /// Horizon used.
    pub x_horizon: f64,
    pub method: RhoMethod,
}

/// Both quotients of the angle estimator at horizon `X`; the tail quotient
/// `(theta(2X) - theta(X)) / X` discards the initial transient and is the
/// primary value, the head quotient `(theta(X) - theta(0)) / X` is kept for
/// the discrepancy estimate.
#[derive(Debug, Clone, Copy)]
pub struct AngleQuotients {
    pub head: f64,
    pub tail: f64,
    pub estimate: RotationEstimate,
}

/// Default first horizon: 1e3 periods of the slowest declared frequency.
pub fn default_x_init(base: &FrequencyBase) -> f64 {
    1e3 * TAU / base.min_generator()
}

/// Default horizon cap for the doubling protocol.
pub fn default_x_max(base: &FrequencyBase) -> f64 {
    256.0 * default_x_init(base)
}

/// Angle estimator from initial angle `theta0`: evolves over `[0, 2X]` and
/// quotients the two halves. `err = |tail - head| + 2 pi / X`.
pub fn rho_angle_from(
    lambda: f64,
    v: &CoefficientTriple,
    theta0: PruferAngle,
    x: f64,
    cfg: &IntegratorConfig,
) -> Result<AngleQuotients, RotationError> {
    assert!(x > 0.0, "horizon must be positive");
    let mut ev = PruferEvolution::new(lambda, v, theta0, true, cfg)?;
    ev.advance_to(x)?;
    let theta_x = ev.angle();
    ev.advance_to(2.0 * x)?;
    let theta_2x = ev.angle();
    Ok(quotients(theta0, theta_x, theta_2x, x))
}

fn quotients(theta0: PruferAngle, theta_x: PruferAngle, theta_2x: PruferAngle, x: f64) -> AngleQuotients {
    let head = theta_x.sub(&theta0) / x;
    let tail = theta_2x.sub(&theta_x) / x;
    AngleQuotients {
        head,
        tail,
        estimate: RotationEstimate {
            rho: tail,
            err: (tail - head).abs() + TAU / x,
            x_horizon: x,
            method: RhoMethod::Angle,
        },
    }
}

/// Angle estimator started at `Theta = 0`.
pub fn rho_angle(
    lambda: f64,
    v: &CoefficientTriple,
    x: f64,
    cfg: &IntegratorConfig,
) -> Result<RotationEstimate, RotationError> {
    Ok(rho_angle_from(lambda, v, PruferAngle::ZERO, x, cfg)?.estimate)
}

/// Zero-count estimator `pi N / X` with the rigorous slack `2 pi / X`.
pub fn rho_zeros(
    lambda: f64,
    v: &CoefficientTriple,
    x: f64,
    cfg: &IntegratorConfig,
) -> Result<RotationEstimate, RotationError> {
    assert!(x > 0.0, "horizon must be positive");
    let mut ev = PruferEvolution::new(lambda, v, PruferAngle::ZERO, true, cfg)?;
    ev.advance_to(x)?;
    Ok(RotationEstimate {
        rho: std::f64::consts::PI * ev.zero_count() as f64 / x,
        err: TAU / x,
        x_horizon: x,
        method: RhoMethod::Zeros,
    })
}

/// Everything the doubling protocol produced for one `lambda`.
#[derive(Debug, Clone, Copy)]
pub struct RhoOutcome {
    pub combined: RotationEstimate,
    pub angle: RotationEstimate,
    pub zeros: RotationEstimate,
    /// True when the protocol hit the horizon cap before meeting the target.
    pub horizon_exceeded: bool,
}

/// Horizon-doubling protocol around the angle estimator, cross-checked
/// against the zero-count estimator. One trajectory serves all horizons:
/// a doubled horizon extends the previous evolution.
pub fn rho_full(
    lambda: f64,
    v: &CoefficientTriple,
    target_err: f64,
    x_init: f64,
    x_max: f64,
    cfg: &IntegratorConfig,
) -> Result<RhoOutcome, OdeError> {
    assert!(target_err > 0.0, "target_err must be positive");
    assert!(0.0 < x_init && x_init <= x_max, "need 0 < x_init <= x_max");

    let theta0 = PruferAngle::ZERO;
    let mut ev = PruferEvolution::new(lambda, v, theta0, true, cfg)?;
    let mut x = x_init;
    ev.advance_to(x)?;
    let mut theta_x = ev.angle();
    let mut count_x = ev.zero_count();
    let mut best: Option<RhoOutcome> = None;

    loop {
        ev.advance_to(2.0 * x)?;
        let theta_2x = ev.angle();
        let q = quotients(theta0, theta_x, theta_2x, x);
        let zeros = RotationEstimate {
            rho: std::f64::consts::PI * count_x as f64 / x,
            err: TAU / x,
            x_horizon: x,
            method: RhoMethod::Zeros,
        };
        let cross = (q.estimate.rho - zeros.rho).abs();
        let combined = RotationEstimate {
            rho: q.estimate.rho,
            err: (q.tail - q.head).abs().max(cross).max(TAU / x),
            x_horizon: x,
            method: RhoMethod::Combined,
        };
        let outcome = RhoOutcome { combined, angle: q.estimate, zeros, horizon_exceeded: false };
        if q.estimate.err <= target_err {
            return Ok(outcome);
        }
        if best.is_none_or(|b| outcome.angle.err < b.angle.err) {
            best = Some(outcome);
        }
        x *= 2.0;
        if x > x_max {
            let mut b = best.expect("at least one horizon was evaluated");
            b.horizon_exceeded = true;
            b.combined.err = b.combined.err.max(b.angle.err);
            return Ok(b);
        }
        // theta(2x) and the count at 2x become the new midpoint data
        theta_x = theta_2x;
        count_x = ev.zero_count();
    }
}

/// Adaptive-horizon rotation number. Errors with the best estimate when the
/// horizon cap is reached before the target accuracy (slow convergence near
/// gap edges); the caller decides what to do with it.
pub fn rho(
    lambda: f64,
    v: &CoefficientTriple,
    target_err: f64,
    x_init: f64,
    x_max: f64,
    cfg: &IntegratorConfig,
) -> Result<RotationEstimate, RotationError> {
    let outcome = rho_full(lambda, v, target_err, x_init, x_max, cfg)?;
    if outcome.horizon_exceeded {
        Err(RotationError::HorizonExceeded { best: outcome.combined })
    } else {
        Ok(outcome.combined)
    }
}
