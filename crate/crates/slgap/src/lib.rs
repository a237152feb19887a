//! Rotation numbers, spectral-gap detection and integer gap labelling for
//! Sturm-Liouville operators with almost periodic trigonometric-polynomial
//! coefficients, plus Weyl m-functions, the Green-function diagonal, and an
//! independent Floquet oracle for the periodic special case.
//!
//! The operator is `(1/w) (-(p f')' + q f)` with `1/p`, `q`, `w` finite
//! trigonometric sums over a declared frequency base. The library evolves
//! the Prufer angle of solutions, estimates the rotation number
//! `rho(lambda)` as the average angular speed, detects spectral gaps as
//! plateaus of the curve `lambda -> rho(lambda)`, and labels each plateau
//! by the integer frequency-module combination that `2 rho` locks onto.

#![allow(clippy::needless_range_loop)] // index loops read better in the stage math
#![allow(clippy::too_many_arguments)]
#![allow(clippy::type_complexity)]

pub mod cli;
pub mod coeff;
pub mod floquet;
pub mod ode;
pub mod prufer;
pub mod rotation;
pub mod scan;
pub mod weyl;
