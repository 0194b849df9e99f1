//! Shared quadrature oracles for the integration tests. These integrate
//! numerically, independent of the closed-form series arithmetic they are
//! used to check.

#![allow(dead_code)]

/// Adaptive Simpson quadrature for smooth integrands.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64, fm: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(f, a, fa, m, fm, flm);
        let right = simpson(f, m, fm, b, fb, frm);
        if depth == 0 || (left + right - whole).abs() < 15.0 * tol {
            left + right + (left + right - whole) / 15.0
        } else {
            recurse(f, a, fa, m, fm, flm, left, tol / 2.0, depth - 1)
                + recurse(f, m, fm, b, fb, frm, right, tol / 2.0, depth - 1)
        }
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(f, a, fa, b, fb, fm);
    recurse(f, a, fa, b, fb, fm, whole, tol, 50)
}

/// Tanh-sinh (double exponential) quadrature on (a, b); handles integrable
/// endpoint singularities. Abscissas near the endpoints are represented by
/// their distance from the endpoint to avoid cancellation.
pub fn tanh_sinh(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let c = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut best = 0.0;
    let mut prev = f64::INFINITY;
    for level in 0..=11u32 {
        let h = 1.0 / (1u64 << level) as f64;
        let kmax = (4.0 / h).ceil() as i64;
        let mut sum = 0.0;
        for k in 0..=kmax {
            let t = k as f64 * h;
            let u = std::f64::consts::FRAC_PI_2 * t.sinh();
            // distance of the abscissa from the nearer endpoint:
            // 1 - tanh(u) = 2 / (1 + exp(2u)), computed stably
            let dist = c * 2.0 / (1.0 + (2.0 * u).exp());
            if dist <= 0.0 {
                break; // subsequent nodes underflow to the endpoint
            }
            let w = std::f64::consts::FRAC_PI_2 * t.cosh() / u.cosh().powi(2);
            if k == 0 {
                let v = f(mid);
                if v.is_finite() {
                    sum += w * v;
                }
            } else {
                let vl = f(a + dist);
                let vr = f(b - dist);
                if vl.is_finite() {
                    sum += w * vl;
                }
                if vr.is_finite() {
                    sum += w * vr;
                }
            }
        }
        best = c * h * sum;
        if level > 3 && (best - prev).abs() < 1e-13 * (1.0 + best.abs()) {
            return best;
        }
        prev = best;
    }
    best
}

/// Numerical time convolution (k * s)(t) = integral of k(t - tau) s(tau)
/// dtau over (0, t), tolerant of endpoint singularities in either factor.
pub fn convolve_quad(k: &dyn Fn(f64) -> f64, s: &dyn Fn(f64) -> f64, t: f64) -> f64 {
    tanh_sinh(&|tau| k(t - tau) * s(tau), 0.0, t)
}

/// Caputo derivative of order mu at time t by quadrature of the regularized
/// definition: the substitution u = (t - tau)^{1-mu} removes the endpoint
/// singularity of the kernel, giving
/// D^mu f(t) = 1/Gamma(1-mu) * d/dt int ... = 1/Gamma(2-mu) *
/// (smooth integral of f'(tau) du after the substitution).
pub fn caputo_quad(fprime: &dyn Fn(f64) -> f64, mu: f64, t: f64) -> f64 {
    // D^mu f(t) = 1/Gamma(1-mu) int_0^t (t-tau)^{-mu} f'(tau) dtau;
    // substitute u = (t-tau)^{1-mu}: dtau = -u^{mu/(1-mu)} du / (1-mu) ...
    // simpler: tanh-sinh handles the (t-tau)^{-mu} singularity directly.
    let g = gamma(1.0 - mu);
    tanh_sinh(&|tau| (t - tau).powf(-mu) * fprime(tau), 0.0, t) / g
}

/// Fractional integral of order theta at time t:
/// (omega_theta * f)(t) = 1/Gamma(theta) int_0^t (t-tau)^{theta-1} f(tau) dtau,
/// computed with the substitution u = (t-tau)^theta which removes the
/// singularity exactly:
/// = 1/Gamma(theta+1) int_0^{t^theta} f(t - u^{1/theta}) du.
pub fn rl_integral_quad(f: &dyn Fn(f64) -> f64, theta: f64, t: f64) -> f64 {
    let g = gamma(theta + 1.0);
    // the clamp guards against one-ulp overshoot of (t^theta)^{1/theta}
    adaptive_simpson(
        &|u| f((t - u.powf(1.0 / theta)).max(0.0)),
        0.0,
        t.powf(theta),
        1e-13,
    ) / g
}

/// Gamma on the positive axis (Lanczos, independent copy for the oracles).
pub fn gamma(x: f64) -> f64 {
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_59,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_571_6e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        std::f64::consts::PI / ((std::f64::consts::PI * x).sin() * gamma(1.0 - x))
    } else {
        let z = x - 1.0;
        let mut acc = COEF[0];
        for (i, c) in COEF.iter().enumerate().skip(1) {
            acc += c / (z + i as f64);
        }
        let t = z + 7.5;
        (2.0 * std::f64::consts::PI).sqrt() * t.powf(z + 0.5) * (-t).exp() * acc
    }
}
