//! Generalized power series: finite sums of c * t^g with exponents g > -1.
//!
//! This is the exact-arithmetic backbone of the toolkit. Caputo derivatives,
//! Riemann-Liouville fractional integrals and time convolutions all act
//! termwise through Gamma-function ratios, so every quantity the estimators
//! need from a fitted expansion is available in closed form.

use crate::error::FracError;
use crate::special::gamma_pos;

/// Absolute tolerance below which two exponents are considered identical and
/// their coefficients merged. Prevents spurious near-duplicate terms from
/// Gamma-ratio arithmetic.
pub const EXPONENT_MERGE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Term {
    pub coefficient: f64,
    pub exponent: f64,
}

/// Finite sum of real-exponent monomials, kept sorted by strictly increasing
/// exponent with no zero coefficients.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PowerSeries {
    terms: Vec<Term>,
}

impl PowerSeries {
    /// Builds a series from (coefficient, exponent) pairs, merging duplicates
    /// and dropping zero coefficients. Exponents must be > -1.
    pub fn new(pairs: impl IntoIterator<Item = (f64, f64)>) -> Result<Self, FracError> {
        let mut terms: Vec<Term> = Vec::new();
        for (coefficient, exponent) in pairs {
            if !(exponent > -1.0) {
                return Err(FracError::domain(format!(
                    "power series exponent must exceed -1, got {exponent}"
                )));
            }
            if !coefficient.is_finite() || !exponent.is_finite() {
                return Err(FracError::numeric("non-finite power series term"));
            }
            terms.push(Term {
                coefficient,
                exponent,
            });
        }
        Ok(Self::normalized(terms))
    }

    fn normalized(mut terms: Vec<Term>) -> Self {
        terms.sort_by(|a, b| a.exponent.total_cmp(&b.exponent));
        let mut merged: Vec<Term> = Vec::with_capacity(terms.len());
        for t in terms {
            match merged.last_mut() {
                Some(last) if (t.exponent - last.exponent).abs() < EXPONENT_MERGE_TOL => {
                    last.coefficient += t.coefficient;
                }
                _ => merged.push(t),
            }
        }
        merged.retain(|t| t.coefficient != 0.0);
        PowerSeries { terms: merged }
    }

    pub fn zero() -> Self {
        PowerSeries { terms: Vec::new() }
    }

    pub fn constant(c: f64) -> Self {
        if c == 0.0 {
            Self::zero()
        } else {
            PowerSeries {
                terms: vec![Term {
                    coefficient: c,
                    exponent: 0.0,
                }],
            }
        }
    }

    /// Single term c * t^g.
    pub fn monomial(coefficient: f64, exponent: f64) -> Result<Self, FracError> {
        Self::new([(coefficient, exponent)])
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn min_exponent(&self) -> Option<f64> {
        self.terms.first().map(|t| t.exponent)
    }

    /// Coefficient of the exponent-zero term (the value at t = 0 when all
    /// exponents are nonnegative).
    pub fn constant_term(&self) -> f64 {
        self.terms
            .iter()
            .find(|t| t.exponent.abs() < EXPONENT_MERGE_TOL)
            .map_or(0.0, |t| t.coefficient)
    }

    /// Evaluates the series. At t = 0 terms with negative exponent produce
    /// infinities, matching the IEEE semantics of 0^g; such series are only
    /// meant to be evaluated at t > 0.
    pub fn eval(&self, t: f64) -> f64 {
        self.terms
            .iter()
            .map(|term| term.coefficient * t.powf(term.exponent))
            .sum()
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self::normalized(
            self.terms
                .iter()
                .map(|t| Term {
                    coefficient: t.coefficient * factor,
                    exponent: t.exponent,
                })
                .collect(),
        )
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut terms = self.terms.clone();
        terms.extend_from_slice(&other.terms);
        Self::normalized(terms)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    /// Pointwise product; exponents add.
    pub fn mul(&self, other: &Self) -> Self {
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                terms.push(Term {
                    coefficient: a.coefficient * b.coefficient,
                    exponent: a.exponent + b.exponent,
                });
            }
        }
        Self::normalized(terms)
    }
}

/// Caputo fractional derivative of order mu in (0,1), termwise:
/// D^mu t^g = [Gamma(g+1) / Gamma(g+1-mu)] t^{g-mu} for g > 0, constants map
/// to zero. Input exponents must be >= 0 (the regularized Caputo derivative
/// needs a value at t = 0); outputs may carry exponents in (-1, 0).
pub fn caputo_series(s: &PowerSeries, mu: f64) -> Result<PowerSeries, FracError> {
    if !(mu > 0.0 && mu < 1.0) {
        return Err(FracError::domain(format!(
            "caputo order must lie in (0,1), got {mu}"
        )));
    }
    if let Some(g) = s.min_exponent() {
        if g < 0.0 {
            return Err(FracError::domain(format!(
                "caputo_series requires nonnegative exponents, found {g}"
            )));
        }
    }
    let mut terms = Vec::with_capacity(s.terms().len());
    for t in s.terms() {
        if t.exponent.abs() < EXPONENT_MERGE_TOL {
            continue; // derivative of a constant vanishes
        }
        let ratio = gamma_pos(t.exponent + 1.0) / gamma_pos(t.exponent + 1.0 - mu);
        terms.push((t.coefficient * ratio, t.exponent - mu));
    }
    PowerSeries::new(terms)
}

/// Riemann-Liouville fractional integral of order theta in (0,1): convolution
/// with omega_theta(t) = t^{theta-1} / Gamma(theta), termwise
/// omega_theta * t^g = [Gamma(g+1) / Gamma(g+1+theta)] t^{g+theta}.
pub fn rl_convolve(theta: f64, s: &PowerSeries) -> Result<PowerSeries, FracError> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(FracError::domain(format!(
            "fractional integration order must lie in (0,1), got {theta}"
        )));
    }
    let mut terms = Vec::with_capacity(s.terms().len());
    for t in s.terms() {
        let ratio = gamma_pos(t.exponent + 1.0) / gamma_pos(t.exponent + 1.0 + theta);
        terms.push((t.coefficient * ratio, t.exponent + theta));
    }
    PowerSeries::new(terms)
}

/// Time convolution (k * s)(t) = integral of k(t-tau) s(tau) dtau, termwise
/// t^p * t^q = [Gamma(p+1) Gamma(q+1) / Gamma(p+q+2)] t^{p+q+1}.
pub fn kernel_convolve(k: &PowerSeries, s: &PowerSeries) -> PowerSeries {
    let mut terms = Vec::with_capacity(k.terms().len() * s.terms().len());
    for a in k.terms() {
        for b in s.terms() {
            let beta = gamma_pos(a.exponent + 1.0) * gamma_pos(b.exponent + 1.0)
                / gamma_pos(a.exponent + b.exponent + 2.0);
            terms.push(Term {
                coefficient: a.coefficient * b.coefficient * beta,
                exponent: a.exponent + b.exponent + 1.0,
            });
        }
    }
    // exponents p+q+1 > -1 hold automatically for p, q > -1
    PowerSeries::new(terms.into_iter().map(|t| (t.coefficient, t.exponent))).expect("valid terms")
}

/// Caputo derivative of a product rho(t) s(t) with rho a polynomial: the
/// product is expanded exactly and differentiated termwise, which sidesteps
/// the strongly singular integral term of the fractional Leibniz rule.
pub fn caputo_product(
    rho: &PowerSeries,
    s: &PowerSeries,
    mu: f64,
) -> Result<PowerSeries, FracError> {
    for t in rho.terms() {
        let rounded = t.exponent.round();
        if (t.exponent - rounded).abs() > EXPONENT_MERGE_TOL || rounded < 0.0 {
            return Err(FracError::domain(format!(
                "caputo_product requires a polynomial multiplier, found exponent {}",
                t.exponent
            )));
        }
    }
    caputo_series(&rho.mul(s), mu)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::gamma_fn;

    fn series(pairs: &[(f64, f64)]) -> PowerSeries {
        PowerSeries::new(pairs.iter().copied()).unwrap()
    }

    #[test]
    fn normalization_merges_and_sorts() {
        let s = series(&[(1.0, 0.5), (2.0, 0.5 + 1e-13), (3.0, 0.2)]);
        assert_eq!(s.terms().len(), 2);
        assert_eq!(s.terms()[0].exponent, 0.2);
        assert!((s.terms()[1].coefficient - 3.0).abs() < 1e-15);
    }

    #[test]
    fn zero_coefficients_dropped() {
        let s = series(&[(1.0, 0.3), (-1.0, 0.3)]);
        assert!(s.is_zero());
    }

    #[test]
    fn rejects_low_exponent() {
        assert!(PowerSeries::new([(1.0, -1.0)]).is_err());
        assert!(PowerSeries::new([(1.0, -1.5)]).is_err());
        assert!(PowerSeries::new([(1.0, -0.5)]).is_ok());
    }

    #[test]
    fn caputo_of_constant_is_zero() {
        let s = PowerSeries::constant(1.0);
        assert!(caputo_series(&s, 0.5).unwrap().is_zero());
    }

    #[test]
    fn caputo_matching_order() {
        // D^nu t^nu = Gamma(1+nu)
        let nu = 0.37;
        let d = caputo_series(&series(&[(1.0, nu)]), nu).unwrap();
        assert_eq!(d.terms().len(), 1);
        assert!((d.terms()[0].exponent).abs() < 1e-12);
        assert!((d.terms()[0].coefficient - gamma_fn(1.0 + nu).unwrap()).abs() < 1e-13);
    }

    #[test]
    fn caputo_of_t() {
        // D^{1/2} t = Gamma(2)/Gamma(1.5) t^{1/2} = 1.1283791671 t^{1/2}
        let d = caputo_series(&series(&[(1.0, 1.0)]), 0.5).unwrap();
        assert_eq!(d.terms().len(), 1);
        assert!((d.terms()[0].coefficient - 1.1283791670955126).abs() < 1e-10);
        assert!((d.terms()[0].exponent - 0.5).abs() < 1e-12);
    }

    #[test]
    fn caputo_rejects_negative_exponents() {
        let s = PowerSeries::new([(1.0, -0.5)]).unwrap();
        assert!(caputo_series(&s, 0.3).is_err());
    }

    #[test]
    fn caputo_small_exponent_gives_negative_output_exponent() {
        let d = caputo_series(&series(&[(1.0, 0.2)]), 0.7).unwrap();
        assert!((d.terms()[0].exponent + 0.5).abs() < 1e-12);
        assert!(d.eval(0.3).is_finite());
    }

    #[test]
    fn rl_of_constant() {
        // omega_{1/2} * 1 = t^{1/2}/Gamma(1.5)
        let r = rl_convolve(0.5, &PowerSeries::constant(1.0)).unwrap();
        assert!((r.terms()[0].coefficient - 1.0 / gamma_fn(1.5).unwrap()).abs() < 1e-13);
        assert!((r.terms()[0].exponent - 0.5).abs() < 1e-15);
    }

    #[test]
    fn omega_semigroup_single_instance() {
        // omega_a * omega_b = omega_{a+b} applied to a sample series
        let (a, b) = (0.3, 0.4);
        let omega_b = series(&[(1.0 / gamma_fn(b).unwrap(), b - 1.0)]);
        let lhs = rl_convolve(a, &omega_b).unwrap();
        let omega_ab = series(&[(1.0 / gamma_fn(a + b).unwrap(), a + b - 1.0)]);
        assert_eq!(lhs.terms().len(), 1);
        assert!((lhs.terms()[0].coefficient - omega_ab.terms()[0].coefficient).abs() < 1e-13);
    }

    #[test]
    fn kernel_convolve_constants() {
        // 1 * 1 = t
        let one = PowerSeries::constant(1.0);
        let c = kernel_convolve(&one, &one);
        assert_eq!(c.terms().len(), 1);
        assert!((c.terms()[0].coefficient - 1.0).abs() < 1e-15);
        assert!((c.terms()[0].exponent - 1.0).abs() < 1e-15);
    }

    #[test]
    fn kernel_convolve_singular_times_linear() {
        // t^{-1/2} * t = B(1/2, 2) t^{3/2} = [Gamma(1/2)Gamma(2)/Gamma(2.5)] t^{3/2};
        // the Beta value is 4/3 (direct integration of v^{-1/2}(1 - v)).
        let k = series(&[(1.0, -0.5)]);
        let s = series(&[(1.0, 1.0)]);
        let c = kernel_convolve(&k, &s);
        let expect = gamma_fn(0.5).unwrap() * gamma_fn(2.0).unwrap() / gamma_fn(2.5).unwrap();
        assert_eq!(c.terms().len(), 1);
        assert!((c.terms()[0].coefficient - expect).abs() < 1e-13);
        assert!((expect - 4.0 / 3.0).abs() < 1e-13);
        assert!((c.terms()[0].exponent - 1.5).abs() < 1e-15);
    }

    #[test]
    fn kernel_convolve_two_terms() {
        // (1 + t) * t^{0.3} has exponents 1.3 and 2.3
        let k = series(&[(1.0, 0.0), (1.0, 1.0)]);
        let s = series(&[(1.0, 0.3)]);
        let c = kernel_convolve(&k, &s);
        assert_eq!(c.terms().len(), 2);
        assert!((c.terms()[0].exponent - 1.3).abs() < 1e-12);
        assert!((c.terms()[1].exponent - 2.3).abs() < 1e-12);
    }

    #[test]
    fn caputo_product_identity_multiplier() {
        let s = series(&[(2.0, 0.4), (1.0, 1.2)]);
        let lhs = caputo_product(&PowerSeries::constant(1.0), &s, 0.25).unwrap();
        let rhs = caputo_series(&s, 0.25).unwrap();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn caputo_product_polynomial_times_constant() {
        // rho = (1+t^2)/4, s = 1: product is (1+t^2)/4, so the derivative is
        // (1/4) D^mu t^2 = (1/4) [Gamma(3)/Gamma(3-mu)] t^{2-mu}, not zero.
        let rho = series(&[(0.25, 0.0), (0.25, 2.0)]);
        let s = PowerSeries::constant(1.0);
        for &mu in &[0.2, 0.5, 0.8] {
            let d = caputo_product(&rho, &s, mu).unwrap();
            assert_eq!(d.terms().len(), 1);
            let expect = 0.25 * gamma_fn(3.0).unwrap() / gamma_fn(3.0 - mu).unwrap();
            assert!((d.terms()[0].coefficient - expect).abs() < 1e-13);
            assert!((d.terms()[0].exponent - (2.0 - mu)).abs() < 1e-12);
        }
    }

    #[test]
    fn caputo_product_scalar_homogeneity() {
        // rho = 1/2, s = t^nu: (1/2) Gamma(1+nu)/Gamma(1+nu-mu) t^{nu-mu}
        let (nu, mu) = (0.9, 0.35);
        let d = caputo_product(&PowerSeries::constant(0.5), &series(&[(1.0, nu)]), mu).unwrap();
        let expect = 0.5 * gamma_fn(1.0 + nu).unwrap() / gamma_fn(1.0 + nu - mu).unwrap();
        assert!((d.terms()[0].coefficient - expect).abs() < 1e-13);
    }

    #[test]
    fn caputo_product_rejects_nonpolynomial() {
        let rho = series(&[(1.0, 0.5)]);
        assert!(caputo_product(&rho, &PowerSeries::constant(1.0), 0.5).is_err());
    }

    #[test]
    fn eval_at_zero() {
        let s = series(&[(3.0, 0.0), (5.0, 0.7)]);
        assert_eq!(s.eval(0.0), 3.0);
        assert_eq!(s.constant_term(), 3.0);
    }
}
