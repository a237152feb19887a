//! Coefficient algebra: real trigonometric polynomials over a declared
//! frequency base, the coefficient triple `(r, q, w)` with certified
//! positivity floors for `r = 1/p` and `w`, and the frequency module spanned
//! by the exponents that actually occur.
//!
//! Mean values and Fourier coefficients are exact for this class, which is
//! what makes integer gap labels meaningful. Rational independence of the
//! base generators is declared by the caller, never inferred; a heuristic
//! warning is available for near-rational generator ratios.

use num_complex::Complex64;
use std::collections::BTreeSet;
use std::f64::consts::{PI, TAU};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoeffError {
    #[error("frequency base must have at least one strictly positive generator")]
    EmptyOrNonPositiveBase,
    #[error("term exponent vector has length {got}, base has {expected} generators")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("the three coefficient polynomials carry different frequency bases")]
    BaseMismatch,
    #[error("two distinct term frequencies lie within tol of lambda = {lambda}")]
    AmbiguousFrequency { lambda: f64 },
    #[error("certified torus lower bound for [{section}] is {bound} at grid {grid}; not accepted as positive")]
    HullNotPositive { section: &'static str, bound: f64, grid: u32 },
}

/// Base frequencies `beta_1..beta_d`, declared rationally independent.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyBase {
    generators: Vec<f64>,
    labels: Vec<String>,
}

impl FrequencyBase {
    pub fn new(generators: Vec<f64>) -> Result<Arc<Self>, CoeffError> {
        if generators.is_empty() || generators.iter().any(|g| !g.is_finite() || *g <= 0.0) {
            return Err(CoeffError::EmptyOrNonPositiveBase);
        }
        let labels = generators.iter().map(|g| format!("{g}")).collect();
        Ok(Arc::new(FrequencyBase { generators, labels }))
    }

    pub fn dim(&self) -> usize {
        self.generators.len()
    }

    pub fn generators(&self) -> &[f64] {
        &self.generators
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn min_generator(&self) -> f64 {
        self.generators.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max_generator(&self) -> f64 {
        self.generators.iter().cloned().fold(0.0, f64::max)
    }

    /// Frequency of the integer vector `k`: `sum_j k_j beta_j`.
    pub fn frequency_of(&self, k: &[i64]) -> f64 {
        k.iter().zip(&self.generators).map(|(&n, &b)| n as f64 * b).sum()
    }

    /// Heuristic check that no generator ratio is suspiciously close to a
    /// small rational p/q with p, q <= 64. Detection of rational dependence
    /// is ill-posed, so this only warns; it never rejects.
    pub fn rationality_warnings(&self) -> Vec<String> {
        let mut warnings = Vec::new();
        for i in 0..self.dim() {
            for j in (i + 1)..self.dim() {
                let ratio = self.generators[i] / self.generators[j];
                for q in 1..=64i64 {
                    let p = (ratio * q as f64).round();
                    if (1.0..=64.0).contains(&p) && (ratio - p / q as f64).abs() <= 1e-12 {
                        warnings.push(format!(
                            "generators {} and {} have ratio within 1e-12 of {}/{}; \
                             the base may not be rationally independent",
                            self.labels[i], self.labels[j], p, q
                        ));
                        break;
                    }
                }
            }
        }
        warnings
    }
}

/// One oscillatory term `cos_amp * cos(omega x) + sin_amp * sin(omega x)`
/// with `omega = k . beta`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigTerm {
    pub k: Vec<i64>,
    pub cos_amp: f64,
    pub sin_amp: f64,
}

/// Finite real trigonometric sum over a frequency base. The constant part
/// is the exact mean value.
#[derive(Debug, Clone)]
pub struct TrigPolynomial {
    base: Arc<FrequencyBase>,
    constant: f64,
    terms: Vec<TrigTerm>,
    omegas: Vec<f64>,
}

impl PartialEq for TrigPolynomial {
    fn eq(&self, other: &Self) -> bool {
        *self.base == *other.base && self.constant == other.constant && self.terms == other.terms
    }
}

impl TrigPolynomial {
    /// Build a polynomial, canonicalizing the term list: zero exponent
    /// vectors fold into the constant, the leading nonzero entry of each
    /// `k` is made positive (cos is even, sin is odd), duplicate exponents
    /// merge, and terms are sorted by `k`.
    pub fn new(
        base: Arc<FrequencyBase>,
        constant: f64,
        terms: Vec<TrigTerm>,
    ) -> Result<Self, CoeffError> {
        let d = base.dim();
        let mut constant = constant;
        let mut canon: Vec<TrigTerm> = Vec::new();
        for mut t in terms {
            if t.k.len() != d {
                return Err(CoeffError::DimensionMismatch { expected: d, got: t.k.len() });
            }
            if t.k.iter().all(|&n| n == 0) {
                constant += t.cos_amp; // sin(0 x) contributes nothing
                continue;
            }
            if t.k.iter().find(|&&n| n != 0).is_some_and(|&first| first < 0) {
                for n in &mut t.k {
                    *n = -*n;
                }
                t.sin_amp = -t.sin_amp;
            }
            match canon.iter_mut().find(|c| c.k == t.k) {
                Some(c) => {
                    c.cos_amp += t.cos_amp;
                    c.sin_amp += t.sin_amp;
                }
                None => canon.push(t),
            }
        }
        canon.retain(|t| t.cos_amp != 0.0 || t.sin_amp != 0.0);
        canon.sort_by(|a, b| a.k.cmp(&b.k));
        let omegas = canon.iter().map(|t| base.frequency_of(&t.k)).collect();
        Ok(TrigPolynomial { base, constant, terms: canon, omegas })
    }

    pub fn constant_fn(base: Arc<FrequencyBase>, c: f64) -> Self {
        TrigPolynomial { base, constant: c, terms: Vec::new(), omegas: Vec::new() }
    }

    pub fn base(&self) -> &Arc<FrequencyBase> {
        &self.base
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    pub fn terms(&self) -> &[TrigTerm] {
        &self.terms
    }

    #[inline]
    pub fn evaluate(&self, x: f64) -> f64 {
        let mut acc = self.constant;
        for (t, &omega) in self.terms.iter().zip(&self.omegas) {
            let (s, c) = (omega * x).sin_cos();
            acc += t.cos_amp * c + t.sin_amp * s;
        }
        acc
    }

    /// Translate: `shift(f, t)(x) = f(x + t)`, realized as an exact phase
    /// rotation of each amplitude pair. Base and exponents are unchanged.
    pub fn shift(&self, t: f64) -> Self {
        let terms = self
            .terms
            .iter()
            .zip(&self.omegas)
            .map(|(term, &omega)| {
                let (s, c) = (omega * t).sin_cos();
                TrigTerm {
                    k: term.k.clone(),
                    cos_amp: term.cos_amp * c + term.sin_amp * s,
                    sin_amp: term.sin_amp * c - term.cos_amp * s,
                }
            })
            .collect();
        TrigPolynomial {
            base: self.base.clone(),
            constant: self.constant,
            terms,
            omegas: self.omegas.clone(),
        }
    }

    /// Mean value `lim (1/T) int_0^T f`; exact, since every nonconstant term
    /// averages to zero.
    pub fn mean_value(&self) -> f64 {
        self.constant
    }

    /// Fourier coefficient at exponent `lambda`, matched against the term
    /// frequencies within `tol`. `2 cos(omega x)` carries `1` at both
    /// `omega` and `-omega`; `sin` carries `-i/2` and `i/2`.
    pub fn fourier_coefficient(&self, lambda: f64, tol: f64) -> Result<Complex64, CoeffError> {
        assert!(tol > 0.0, "tol must be positive");
        let mut hit: Option<Complex64> = None;
        let mut record = |value: Complex64| -> Result<(), CoeffError> {
            if hit.is_some() {
                return Err(CoeffError::AmbiguousFrequency { lambda });
            }
            hit = Some(value);
            Ok(())
        };
        for (t, &omega) in self.terms.iter().zip(&self.omegas) {
            if (lambda - omega).abs() <= tol {
                record(Complex64::new(t.cos_amp / 2.0, -t.sin_amp / 2.0))?;
            }
            if (lambda + omega).abs() <= tol {
                record(Complex64::new(t.cos_amp / 2.0, t.sin_amp / 2.0))?;
            }
        }
        if lambda.abs() <= tol {
            record(Complex64::new(self.constant, 0.0))?;
        }
        Ok(hit.unwrap_or(Complex64::new(0.0, 0.0)))
    }

    /// The torus lift `F(phi) = c + sum A cos(k . phi) + B sin(k . phi)`.
    pub fn torus_eval(&self, phi: &[f64]) -> f64 {
        let mut acc = self.constant;
        for t in &self.terms {
            let angle: f64 = t.k.iter().zip(phi).map(|(&n, &p)| n as f64 * p).sum();
            let (s, c) = angle.sin_cos();
            acc += t.cos_amp * c + t.sin_amp * s;
        }
        acc
    }

    /// Minimum of the torus lift over the uniform grid with `grid_per_dim`
    /// points per dimension.
    pub fn torus_grid_min(&self, grid_per_dim: u32) -> f64 {
        assert!(grid_per_dim >= 8, "grid_per_dim must be at least 8");
        let d = self.base.dim();
        let g = grid_per_dim as usize;
        let step = TAU / grid_per_dim as f64;
        let mut idx = vec![0usize; d];
        let mut phi = vec![0.0f64; d];
        let mut min = f64::INFINITY;
        loop {
            for j in 0..d {
                phi[j] = idx[j] as f64 * step;
            }
            let v = self.torus_eval(&phi);
            if v < min {
                min = v;
            }
            // odometer over the d-dimensional grid
            let mut j = 0;
            loop {
                if j == d {
                    return min;
                }
                idx[j] += 1;
                if idx[j] < g {
                    break;
                }
                idx[j] = 0;
                j += 1;
            }
        }
    }

    /// A Lipschitz constant of the torus lift in the Euclidean metric:
    /// `sum |k|_2 sqrt(A^2 + B^2)` over the terms.
    pub fn torus_lipschitz(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                let k_norm = (t.k.iter().map(|&n| (n as f64) * (n as f64)).sum::<f64>()).sqrt();
                k_norm * t.cos_amp.hypot(t.sin_amp)
            })
            .sum()
    }

    /// Certified lower bound on the infimum of the torus lift (hence on the
    /// infimum of every function in the hull): grid minimum minus the
    /// Lipschitz slack `L * (pi / grid) * sqrt(d)`. A coarse grid may return
    /// a negative bound for a positive function; callers refine.
    pub fn hull_min(&self, grid_per_dim: u32) -> f64 {
        let slack = self.torus_lipschitz() * (PI / grid_per_dim as f64) * (self.base.dim() as f64).sqrt();
        self.torus_grid_min(grid_per_dim) - slack
    }
}

const HULL_GRID_START: u32 = 256;
const HULL_GRID_MAX: u32 = 4096;

fn certify_positive(f: &TrigPolynomial, section: &'static str) -> Result<f64, CoeffError> {
    let mut grid = HULL_GRID_START;
    loop {
        let bound = f.hull_min(grid);
        if bound > 0.0 {
            return Ok(bound);
        }
        if grid >= HULL_GRID_MAX {
            return Err(CoeffError::HullNotPositive { section, bound, grid });
        }
        grid *= 2;
    }
}

/// The triple `v = (r, q, w)` with `r = 1/p`, sharing one base, together
/// with certified positive floors for `r` and `w`. `p` itself is never
/// stored; every downstream formula consumes `r` directly.
#[derive(Debug, Clone)]
pub struct CoefficientTriple {
    r: TrigPolynomial,
    q: TrigPolynomial,
    w: TrigPolynomial,
    hull_floor_r: f64,
    hull_floor_w: f64,
}

impl CoefficientTriple {
    pub fn new(
        r: TrigPolynomial,
        q: TrigPolynomial,
        w: TrigPolynomial,
    ) -> Result<Self, CoeffError> {
        if *r.base() != *q.base() || *r.base() != *w.base() {
            return Err(CoeffError::BaseMismatch);
        }
        let hull_floor_r = certify_positive(&r, "r")?;
        let hull_floor_w = certify_positive(&w, "w")?;
        Ok(CoefficientTriple { r, q, w, hull_floor_r, hull_floor_w })
    }

    /// The autonomous triple with constant coefficients `(r0, 0-ish q0, w0)`
    /// over the unit base.
    pub fn constant(r0: f64, q0: f64, w0: f64) -> Result<Self, CoeffError> {
        let base = FrequencyBase::new(vec![1.0])?;
        Self::new(
            TrigPolynomial::constant_fn(base.clone(), r0),
            TrigPolynomial::constant_fn(base.clone(), q0),
            TrigPolynomial::constant_fn(base, w0),
        )
    }

    pub fn r(&self) -> &TrigPolynomial {
        &self.r
    }

    pub fn q(&self) -> &TrigPolynomial {
        &self.q
    }

    pub fn w(&self) -> &TrigPolynomial {
        &self.w
    }

    pub fn base(&self) -> &Arc<FrequencyBase> {
        self.r.base()
    }

    pub fn hull_floor_r(&self) -> f64 {
        self.hull_floor_r
    }

    pub fn hull_floor_w(&self) -> f64 {
        self.hull_floor_w
    }

    /// Shift all three coefficients by `t`. The positivity certificates
    /// carry over: the hull (and the torus lift) is shift invariant.
    pub fn shift(&self, t: f64) -> Self {
        CoefficientTriple {
            r: self.r.shift(t),
            q: self.q.shift(t),
            w: self.w.shift(t),
            hull_floor_r: self.hull_floor_r,
            hull_floor_w: self.hull_floor_w,
        }
    }
}

/// The additive group generated by the Fourier exponents of `r`, `q`, `w`,
/// represented by the integer span of the exponent vectors that occur.
#[derive(Debug, Clone)]
pub struct FrequencyModule {
    base: Arc<FrequencyBase>,
    witnesses: BTreeSet<Vec<i64>>,
    lattice: Vec<Vec<i64>>,
}

/// Collect the exponent vectors of the triple into its frequency module.
/// The module is built from `r = 1/p` directly, never from `p`.
pub fn module_of(v: &CoefficientTriple) -> Result<FrequencyModule, CoeffError> {
    if *v.r().base() != *v.q().base() || *v.r().base() != *v.w().base() {
        return Err(CoeffError::BaseMismatch);
    }
    let mut witnesses = BTreeSet::new();
    for poly in [v.r(), v.q(), v.w()] {
        for t in poly.terms() {
            witnesses.insert(t.k.clone());
        }
    }
    let lattice = lattice_basis(v.base().dim(), witnesses.iter().cloned().collect());
    Ok(FrequencyModule { base: v.base().clone(), witnesses, lattice })
}

impl FrequencyModule {
    /// A module over an explicit generator set, mainly for tests.
    pub fn from_witnesses(
        base: Arc<FrequencyBase>,
        witnesses: impl IntoIterator<Item = Vec<i64>>,
    ) -> Self {
        let witnesses: BTreeSet<Vec<i64>> = witnesses.into_iter().collect();
        let lattice = lattice_basis(base.dim(), witnesses.iter().cloned().collect());
        FrequencyModule { base, witnesses, lattice }
    }

    pub fn base(&self) -> &Arc<FrequencyBase> {
        &self.base
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    pub fn witnesses(&self) -> &BTreeSet<Vec<i64>> {
        &self.witnesses
    }

    /// The real value of the module element with coordinates `n`.
    pub fn value_of(&self, n: &[i64]) -> f64 {
        self.base.frequency_of(n)
    }

    /// Whether `n` lies in the integer span of the witnesses.
    pub fn contains(&self, n: &[i64]) -> bool {
        lattice_contains(&self.lattice, n)
    }

    pub fn is_trivial(&self) -> bool {
        self.lattice.is_empty()
    }
}

/// Column-style Hermite reduction of integer vectors: returns a triangular
/// basis (each with a unique lowest pivot row) of the span.
fn lattice_basis(d: usize, mut cols: Vec<Vec<i64>>) -> Vec<Vec<i64>> {
    let mut basis = Vec::new();
    for row in 0..d {
        loop {
            let mut nonzero: Vec<usize> =
                (0..cols.len()).filter(|&i| cols[i][row] != 0).collect();
            if nonzero.is_empty() {
                break;
            }
            if nonzero.len() == 1 {
                let mut pivot = cols.swap_remove(nonzero[0]);
                if pivot[row] < 0 {
                    for e in pivot.iter_mut() {
                        *e = -*e;
                    }
                }
                basis.push(pivot);
                break;
            }
            // reduce the larger entry by the smaller until one survives
            nonzero.sort_by_key(|&i| cols[i][row].unsigned_abs());
            let (small, large) = (nonzero[0], nonzero[1]);
            let q = cols[large][row].div_euclid(cols[small][row]);
            let reducer = cols[small].clone();
            for (le, &se) in cols[large].iter_mut().zip(&reducer) {
                *le -= q * se;
            }
        }
        cols.retain(|c| c.iter().any(|&e| e != 0));
    }
    basis
}

fn lattice_contains(basis: &[Vec<i64>], n: &[i64]) -> bool {
    let mut rem: Vec<i64> = n.to_vec();
    for b in basis {
        let row = b.iter().position(|&e| e != 0).expect("basis vectors are nonzero");
        if rem[row] % b[row] != 0 {
            return false;
        }
        let c = rem[row] / b[row];
        for (re, be) in rem.iter_mut().zip(b) {
            *re -= c * be;
        }
    }
    rem.iter().all(|&e| e == 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testing::{periodic_triple, quasiperiodic_triple};
    use proptest::prelude::*;

    const SQRT2: f64 = std::f64::consts::SQRT_2;

    fn poly(base: &Arc<FrequencyBase>, constant: f64, terms: &[(&[i64], f64, f64)]) -> TrigPolynomial {
        TrigPolynomial::new(
            base.clone(),
            constant,
            terms
                .iter()
                .map(|(k, a, b)| TrigTerm { k: k.to_vec(), cos_amp: *a, sin_amp: *b })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn evaluate_examples() {
        let base = FrequencyBase::new(vec![1.0]).unwrap();
        let f = poly(&base, 2.0, &[(&[1], 0.0, 1.0)]); // 2 + sin x
        assert_eq!(f.evaluate(0.0), 2.0);

        let base2 = FrequencyBase::new(vec![SQRT2]).unwrap();
        let g = poly(&base2, 0.0, &[(&[1], 2.0, 0.0)]); // 2 cos(sqrt2 x)
        assert_eq!(g.evaluate(0.0), 2.0);

        let h = poly(&base, 2.0, &[(&[1], -1.0, 0.0)]); // -cos x + 2
        assert!((h.evaluate(PI) - 3.0).abs() < 1e-15);
    }

    #[test]
    fn shift_identity_and_quarter_period() {
        let base = FrequencyBase::new(vec![1.0]).unwrap();
        let f = poly(&base, 0.0, &[(&[1], 0.0, 1.0)]); // sin x
        let same = f.shift(0.0);
        assert_eq!(f, same);

        let g = f.shift(PI / 2.0); // sin(x + pi/2) = cos x
        assert!((g.evaluate(0.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn mean_value_examples() {
        let base = FrequencyBase::new(vec![1.0]).unwrap();
        assert_eq!(poly(&base, 0.0, &[(&[1], 2.0, 0.0)]).mean_value(), 0.0);
        assert_eq!(poly(&base, 2.0, &[(&[1], -1.0, 0.0)]).mean_value(), 2.0);
    }

    #[test]
    fn mean_value_matches_quadrature() {
        // Oracle: composite Simpson over [0, T], T = 1e4. The finite-horizon
        // average of sin(x) + 2 differs from the mean by at most
        // ||f||_inf * 2 pi * d / (min_omega * T).
        let base = FrequencyBase::new(vec![1.0]).unwrap();
        let f = poly(&base, 2.0, &[(&[1], 0.0, 1.0)]);
        let t_end = 1e4;
        let n = 400_000usize; // even
        let h = t_end / n as f64;
        let mut acc = f.evaluate(0.0) + f.evaluate(t_end);
        for i in 1..n {
            let weight = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += weight * f.evaluate(i as f64 * h);
        }
        let average = acc * h / 3.0 / t_end;
        let sup = 3.0;
        let bound = sup * TAU * 1.0 / (1.0 * t_end);
        assert!(
            (average - f.mean_value()).abs() <= bound,
            "quadrature average {average} vs mean {} (bound {bound})",
            f.mean_value()
        );
    }

    #[test]
    fn fourier_coefficient_examples() {
        let base2 = FrequencyBase::new(vec![SQRT2]).unwrap();
        let f = poly(&base2, 0.0, &[(&[1], 2.0, 0.0)]); // 2 cos(sqrt2 x)
        let c = f.fourier_coefficient(SQRT2, 1e-9).unwrap();
        assert!((c - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        let zero = f.fourier_coefficient(1.0, 1e-9).unwrap();
        assert_eq!(zero, Complex64::new(0.0, 0.0));

        let base = FrequencyBase::new(vec![1.0]).unwrap();
        let s = poly(&base, 0.0, &[(&[1], 0.0, 1.0)]); // sin x
        let c = s.fourier_coefficient(1.0, 1e-9).unwrap();
        assert!((c - Complex64::new(0.0, -0.5)).norm() < 1e-15);
        let cc = s.fourier_coefficient(-1.0, 1e-9).unwrap();
        assert!((cc - Complex64::new(0.0, 0.5)).norm() < 1e-15);
    }

    #[test]
    fn fourier_coefficient_ambiguity() {
        let base = FrequencyBase::new(vec![1.0, SQRT2]).unwrap();
        let f = poly(&base, 0.0, &[(&[1, 0], 1.0, 0.0), (&[0, 1], 1.0, 0.0)]);
        let err = f.fourier_coefficient(1.2, 0.5).unwrap_err();
        assert!(matches!(err, CoeffError::AmbiguousFrequency { .. }));
    }

    #[test]
    fn hull_min_certifies_positive_functions() {
        let base = FrequencyBase::new(vec![1.0]).unwrap();
        let f = poly(&base, 2.0, &[(&[1], 0.0, 1.0)]); // sin x + 2, inf = 1
        let b256 = f.hull_min(256);
        let b4096 = f.hull_min(4096);
        assert!(b256 > 0.9 && b256 <= 1.0);
        assert!(b4096 > b256 - 1e-12 && (b4096 - 1.0).abs() < 1e-3);

        let g = poly(&base, 2.0, &[(&[1], -1.0, 0.0)]); // -cos x + 2
        assert!((g.hull_min(4096) - 1.0).abs() < 1e-3);
    }

    #[test]
    fn hull_min_on_boundary_case() {
        // cos(x) + cos(sqrt2 x) + 2 is positive pointwise but its hull
        // reaches zero; the certificate must never report a positive bound.
        let base = FrequencyBase::new(vec![1.0, SQRT2]).unwrap();
        let f = poly(&base, 2.0, &[(&[1, 0], 1.0, 0.0), (&[0, 1], 1.0, 0.0)]);
        for grid in [256u32, 512] {
            assert!(f.hull_min(grid) <= 0.0);
            let gm = f.torus_grid_min(grid);
            assert!((0.0..1e-10).contains(&gm), "grid min {gm} should approach 0");
        }
    }

    #[test]
    fn hull_bound_below_sampled_minimum() {
        let base = FrequencyBase::new(vec![1.0, SQRT2]).unwrap();
        let f = poly(&base, 2.5, &[(&[1, 0], 1.0, 0.5), (&[0, 1], -0.4, 0.2)]);
        let bound = f.hull_min(256);
        let sampled = (0..5000).map(|i| f.evaluate(i as f64 * 0.37)).fold(f64::INFINITY, f64::min);
        assert!(bound <= sampled + 1e-12);
    }

    #[test]
    fn triple_construction_and_floors() {
        let v = periodic_triple();
        assert!(v.hull_floor_r() > 0.9 && v.hull_floor_r() <= 1.0);
        assert!(v.hull_floor_w() > 0.9 && v.hull_floor_w() <= 1.0);
    }

    #[test]
    fn triple_rejects_hull_zero() {
        let base = FrequencyBase::new(vec![1.0]).unwrap();
        let r = poly(&base, 2.0, &[(&[1], 0.0, 1.0)]);
        let q = poly(&base, 0.0, &[]);
        let w = poly(&base, 1.0, &[(&[1], 1.0, 0.0)]); // cos x + 1 attains 0
        let err = CoefficientTriple::new(r, q, w).unwrap_err();
        match err {
            CoeffError::HullNotPositive { section, .. } => assert_eq!(section, "w"),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn triple_rejects_base_mismatch() {
        let base1 = FrequencyBase::new(vec![1.0]).unwrap();
        let base2 = FrequencyBase::new(vec![2.0]).unwrap();
        let r = poly(&base1, 2.0, &[]);
        let q = poly(&base2, 0.0, &[]);
        let w = poly(&base1, 2.0, &[]);
        assert!(matches!(CoefficientTriple::new(r, q, w), Err(CoeffError::BaseMismatch)));
    }

    #[test]
    fn module_examples() {
        // periodic-triple exponents span the full integer lattice over base {1}.
        let m1 = module_of(&periodic_triple()).unwrap();
        assert!(m1.contains(&[1]) && m1.contains(&[-7]));
        assert_eq!(m1.value_of(&[3]), 3.0);

        // the quasiperiodic triple spans Z + sqrt2 Z.
        let m2 = module_of(&quasiperiodic_triple()).unwrap();
        assert!(m2.contains(&[1, 0]) && m2.contains(&[0, 1]) && m2.contains(&[4, -3]));
        assert!((m2.value_of(&[1, 1]) - (1.0 + SQRT2)).abs() < 1e-15);

        // Constant triple: trivial module {0}.
        let m0 = module_of(&CoefficientTriple::constant(1.0, 0.0, 1.0).unwrap()).unwrap();
        assert!(m0.is_trivial());
        assert!(m0.contains(&[0]) && !m0.contains(&[1]));
    }

    #[test]
    fn lattice_span_reduction() {
        // {2, 3} spans Z; {2, 4} spans 2Z.
        let b = lattice_basis(1, vec![vec![2], vec![3]]);
        assert!(lattice_contains(&b, &[1]));
        let b2 = lattice_basis(1, vec![vec![2], vec![4]]);
        assert!(lattice_contains(&b2, &[6]) && !lattice_contains(&b2, &[3]));
        // {(2,0),(0,2),(1,1)} spans the checkerboard sublattice of Z^2.
        let b3 = lattice_basis(2, vec![vec![2, 0], vec![0, 2], vec![1, 1]]);
        assert!(lattice_contains(&b3, &[3, 1]) && !lattice_contains(&b3, &[1, 0]));
    }

    #[test]
    fn rationality_warning_fires_on_dependent_base() {
        let base = FrequencyBase::new(vec![1.0, 1.5]).unwrap();
        assert!(!base.rationality_warnings().is_empty());
        let good = FrequencyBase::new(vec![1.0, SQRT2]).unwrap();
        assert!(good.rationality_warnings().is_empty());
    }

    #[test]
    fn shift_preserves_mean_exactly() {
        let v = periodic_triple();
        for t in [0.3, 1.0, std::f64::consts::E, 10.0] {
            assert_eq!(v.r().shift(t).mean_value(), v.r().mean_value());
            assert_eq!(v.q().shift(t).mean_value(), v.q().mean_value());
        }
    }

    proptest! {
        // shift is a group action under evaluation: f.(t1+t2) == (f.t1).t2
        #[test]
        fn shift_composes(t1 in -20.0..20.0f64, t2 in -20.0..20.0f64, x in -50.0..50.0f64) {
            let v = quasiperiodic_triple();
            let f = v.q();
            let once = f.shift(t1 + t2).evaluate(x);
            let twice = f.shift(t1).shift(t2).evaluate(x);
            prop_assert!((once - twice).abs() < 1e-10);
            let direct = f.evaluate(x + t1 + t2);
            prop_assert!((once - direct).abs() < 1e-10);
        }

        // shift is an isometry in the sup norm, checked on samples
        #[test]
        fn shift_preserves_sup_norm(t in -10.0..10.0f64) {
            let v = periodic_triple();
            let f = v.r();
            let g = f.shift(t);
            let sup_f = (0..1000).map(|i| f.evaluate(i as f64 * 0.0628).abs()).fold(0.0, f64::max);
            let sup_g = (0..1000).map(|i| g.evaluate(i as f64 * 0.0628).abs()).fold(0.0, f64::max);
            // samples cover whole periods of both, so the sups agree closely
            prop_assert!((sup_f - sup_g).abs() < 1e-3);
        }
    }
}
