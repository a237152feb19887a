//! Shared fixtures for the integration tests.

use slgap::coeff::{CoefficientTriple, FrequencyBase, TrigPolynomial, TrigTerm};
use std::sync::Arc;

pub fn term(k: Vec<i64>, cos_amp: f64, sin_amp: f64) -> TrigTerm {
    TrigTerm { k, cos_amp, sin_amp }
}

fn poly(
    base: &Arc<FrequencyBase>,
    constant: f64,
    terms: Vec<TrigTerm>,
) -> TrigPolynomial {
    TrigPolynomial::new(base.clone(), constant, terms).unwrap()
}

/// p = 1/(sin x + 2), q = 2 cos x, w = -cos x + 2 over base {1}.
pub fn periodic_triple() -> CoefficientTriple {
    let base = FrequencyBase::new(vec![1.0]).unwrap();
    CoefficientTriple::new(
        poly(&base, 2.0, vec![term(vec![1], 0.0, 1.0)]),
        poly(&base, 0.0, vec![term(vec![1], 2.0, 0.0)]),
        poly(&base, 2.0, vec![term(vec![1], -1.0, 0.0)]),
    )
    .unwrap()
}

/// Same but q = 2 cos(sqrt2 x) over base {1, sqrt2}.
pub fn quasiperiodic_triple() -> CoefficientTriple {
    let base = FrequencyBase::new(vec![1.0, std::f64::consts::SQRT_2]).unwrap();
    CoefficientTriple::new(
        poly(&base, 2.0, vec![term(vec![1, 0], 0.0, 1.0)]),
        poly(&base, 0.0, vec![term(vec![0, 1], 2.0, 0.0)]),
        poly(&base, 2.0, vec![term(vec![1, 0], -1.0, 0.0)]),
    )
    .unwrap()
}

/// The autonomous triple (1, 0, 1): the free operator.
pub fn free_triple() -> CoefficientTriple {
    CoefficientTriple::constant(1.0, 0.0, 1.0).unwrap()
}
