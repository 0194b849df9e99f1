//! Mixed power / shifted-Jacobi design basis for the penalized least-squares
//! reconstruction of the observation, together with its design matrix and
//! the analytic weighted Gram matrices.

use crate::error::FracError;
use crate::series::PowerSeries;
use crate::special::{binomial, gen_binomial};
use nalgebra::DMatrix;

/// Shifted Jacobi polynomial P_m^{(0,-a)}(t / t_k) expanded into monomials
/// of t. The expansion uses the closed form
/// sum_i C(m,i) C(m-a, m-i) (s-1)^{m-i} s^i with s = t / t_k.
pub fn jacobi_shifted(m: usize, a: f64, t_k: f64) -> Result<PowerSeries, FracError> {
    if m > 20 {
        return Err(FracError::config(format!(
            "jacobi_shifted degree {m} exceeds the supported bound 20"
        )));
    }
    if !(a > 0.0 && a < 1.0) {
        return Err(FracError::config(format!(
            "jacobi weight exponent must lie in (0,1), got {a}"
        )));
    }
    if !(t_k > 0.0) {
        return Err(FracError::config("jacobi horizon must be positive"));
    }
    // coefficient of s^p accumulated over i and the binomial expansion of
    // (s-1)^{m-i}
    let mut coeffs = vec![0.0_f64; m + 1];
    for i in 0..=m {
        let f = binomial(m, i) * gen_binomial(m as f64 - a, m - i);
        for l in 0..=(m - i) {
            let sign = if (m - i - l) % 2 == 0 { 1.0 } else { -1.0 };
            coeffs[l + i] += f * binomial(m - i, l) * sign;
        }
    }
    PowerSeries::new(
        coeffs
            .into_iter()
            .enumerate()
            .map(|(p, c)| (c / t_k.powi(p as i32), p as f64)),
    )
}

/// The reconstruction basis of size p: power elements t^{beta_j} followed by
/// shifted Jacobi polynomials of degrees 0 .. p - |beta| - 1, all cached as
/// exact monomial expansions.
#[derive(Debug, Clone)]
pub struct DesignBasis {
    power_exponents: Vec<f64>,
    jacobi_count: usize,
    weight_exponent: f64,
    horizon: f64,
    elements: Vec<PowerSeries>,
}

impl DesignBasis {
    pub fn new(
        power_exponents: Vec<f64>,
        jacobi_count: usize,
        weight_exponent: f64,
        horizon: f64,
    ) -> Result<Self, FracError> {
        if power_exponents.is_empty() && jacobi_count == 0 {
            return Err(FracError::config("empty basis"));
        }
        for w in power_exponents.windows(2) {
            if !(w[0] < w[1]) {
                return Err(FracError::config(
                    "power exponents must be strictly increasing",
                ));
            }
        }
        for &b in &power_exponents {
            if !(b > 0.0 && b <= 1.0) {
                return Err(FracError::config(format!(
                    "power exponents must lie in (0,1], got {b}"
                )));
            }
        }
        if !(weight_exponent > 0.0 && weight_exponent < 1.0) {
            return Err(FracError::config(format!(
                "weight exponent must lie in (0,1), got {weight_exponent}"
            )));
        }
        if !(horizon > 0.0) {
            return Err(FracError::config("basis horizon must be positive"));
        }
        let mut elements = Vec::with_capacity(power_exponents.len() + jacobi_count);
        for &b in &power_exponents {
            elements.push(PowerSeries::monomial(1.0, b)?);
        }
        for m in 0..jacobi_count {
            elements.push(jacobi_shifted(m, weight_exponent, horizon)?);
        }
        Ok(DesignBasis {
            power_exponents,
            jacobi_count,
            weight_exponent,
            horizon,
            elements,
        })
    }

    /// Uniform default guesses beta_i = i / count on (0, 1].
    pub fn uniform_beta(count: usize) -> Vec<f64> {
        (1..=count).map(|i| i as f64 / count as f64).collect()
    }

    pub fn size(&self) -> usize {
        self.elements.len()
    }

    pub fn power_count(&self) -> usize {
        self.power_exponents.len()
    }

    pub fn jacobi_count(&self) -> usize {
        self.jacobi_count
    }

    pub fn weight_exponent(&self) -> f64 {
        self.weight_exponent
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn element(&self, j: usize) -> &PowerSeries {
        &self.elements[j]
    }

    /// Linear combination sum_j q_j e_j as a single series.
    pub fn combine(&self, coefficients: &[f64]) -> PowerSeries {
        let mut acc = PowerSeries::zero();
        for (q, e) in coefficients.iter().zip(&self.elements) {
            if *q != 0.0 {
                acc = acc.add(&e.scale(*q));
            }
        }
        acc
    }

    /// Design matrix E with E[i][j] = e_j(times[i]).
    pub fn design_matrix(&self, times: &[f64]) -> DMatrix<f64> {
        DMatrix::from_fn(times.len(), self.size(), |i, j| {
            self.elements[j].eval(times[i])
        })
    }

    /// Gram matrix of the weighted inner product
    /// H[l][m] = integral of t^{-a} e_l(t) e_m(t) over (0, t_k), evaluated in
    /// closed form through the monomial expansions.
    pub fn gram_matrix(&self) -> Result<DMatrix<f64>, FracError> {
        self.weighted_gram(-self.weight_exponent)
    }

    /// Gram matrix for a general power weight t^w on (0, t_k).
    pub fn weighted_gram(&self, weight: f64) -> Result<DMatrix<f64>, FracError> {
        let p = self.size();
        let mut h = DMatrix::zeros(p, p);
        for l in 0..p {
            for m in l..p {
                let mut acc = 0.0;
                for a in self.elements[l].terms() {
                    for b in self.elements[m].terms() {
                        let e = a.exponent + b.exponent + 1.0 + weight;
                        if e <= 0.0 {
                            return Err(FracError::config(format!(
                                "divergent Gram entry: exponent sum {e} <= 0"
                            )));
                        }
                        acc += a.coefficient * b.coefficient * self.horizon.powf(e) / e;
                    }
                }
                h[(l, m)] = acc;
                h[(m, l)] = acc;
            }
        }
        Ok(h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jacobi_degree_zero_is_one() {
        let p0 = jacobi_shifted(0, 0.99, 0.0021).unwrap();
        assert_eq!(p0.terms().len(), 1);
        assert!((p0.terms()[0].coefficient - 1.0).abs() < 1e-15);
        assert!((p0.terms()[0].exponent).abs() < 1e-15);
    }

    #[test]
    fn jacobi_degree_one_closed_form() {
        // m = 1, a = 0.99, t_k = 1: (2-a) s - (1-a) = 1.01 t - 0.01
        let p1 = jacobi_shifted(1, 0.99, 1.0).unwrap();
        assert_eq!(p1.terms().len(), 2);
        assert!((p1.terms()[0].coefficient + 0.01).abs() < 1e-14);
        assert!((p1.terms()[1].coefficient - 1.01).abs() < 1e-14);
    }

    #[test]
    fn jacobi_value_at_right_endpoint() {
        // P_m(1) = 1 for every degree
        for m in 0..=5 {
            let p = jacobi_shifted(m, 0.7, 0.5).unwrap();
            assert!(
                (p.eval(0.5) - 1.0).abs() < 1e-10,
                "P_{m}(t_k) = {}",
                p.eval(0.5)
            );
        }
    }

    #[test]
    fn jacobi_rejects_large_degree() {
        assert!(jacobi_shifted(21, 0.5, 1.0).is_err());
    }

    #[test]
    fn design_matrix_row_at_zero() {
        // basis: t^{1/2} and one Jacobi (m = 0); at t = 0 the row is [0, 1]
        let basis = DesignBasis::new(vec![0.5], 1, 0.99, 1.0).unwrap();
        let e = basis.design_matrix(&[0.0]);
        assert_eq!(e.nrows(), 1);
        assert!((e[(0, 0)]).abs() < 1e-15);
        assert!((e[(0, 1)] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn design_matrix_power_entry() {
        let basis = DesignBasis::new(vec![0.3], 1, 0.99, 1.0).unwrap();
        let e = basis.design_matrix(&[0.001]);
        assert!((e[(0, 0)] - 0.001f64.powf(0.3)).abs() < 1e-12);
        assert!((0.001f64.powf(0.3) - 0.1258925).abs() < 1e-6);
    }

    #[test]
    fn gram_constant_entry_closed_form() {
        // e_l = e_m = 1 (Jacobi m=0), a = 0.99, t_k = 1 -> 1/0.01 = 100
        let basis = DesignBasis::new(vec![], 1, 0.99, 1.0).unwrap();
        let h = basis.gram_matrix().unwrap();
        assert!((h[(0, 0)] - 100.0).abs() < 1e-9);
    }

    #[test]
    fn gram_is_symmetric() {
        let basis = DesignBasis::new(DesignBasis::uniform_beta(3), 6, 0.99, 0.0021).unwrap();
        let h = basis.gram_matrix().unwrap();
        for l in 0..h.nrows() {
            for m in 0..h.ncols() {
                assert_eq!(h[(l, m)], h[(m, l)]);
            }
        }
    }

    #[test]
    fn gram_jacobi_orthogonality() {
        // off-diagonal Jacobi pairs vanish relative to the matrix scale
        let basis = DesignBasis::new(vec![], 5, 0.99, 1.0).unwrap();
        let h = basis.gram_matrix().unwrap();
        let scale = h.norm();
        for l in 0..5 {
            for m in 0..5 {
                if l != m {
                    assert!(
                        h[(l, m)].abs() < 1e-9 * scale,
                        "H[{l},{m}] = {}",
                        h[(l, m)]
                    );
                }
            }
        }
    }

    #[test]
    fn uniform_beta_grid() {
        let b = DesignBasis::uniform_beta(3);
        assert!((b[0] - 1.0 / 3.0).abs() < 1e-15);
        assert!((b[2] - 1.0).abs() < 1e-15);
    }
}
