//! Validation-grade finite-difference solver for the one-dimensional
//! subdiffusion equation with a multi-term Caputo operator and a convolution
//! memory term:
//!
//!   sum_i rho_i(t) D^{nu_i} u - u_xx - a0(t) u - K * (u_xx + b0(t) u) = g.
//!
//! Each Caputo derivative is discretized by the L1 scheme, the memory
//! convolution is evaluated from history with exact kernel integration
//! against piecewise-constant values (lagged, so every step stays a
//! tridiagonal solve), and the homogeneous Neumann condition enters through
//! second-order ghost points. Used to generate observations and to
//! cross-check the analytic benchmarks, not to reproduce any accuracy claim.

use crate::error::FracError;
use crate::problems::Observation;
use crate::series::PowerSeries;
use crate::special::gamma_pos;
use std::sync::Arc;

pub type SpaceTimeFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
pub type SpaceFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Direct-problem setup. All orders and coefficients are known; the operator
/// uses the sum convention sum_i rho_i(t) D^{nu_i} (signed coefficients).
#[derive(Clone)]
pub struct DirectConfig {
    pub domain: (f64, f64),
    /// Number of spatial cells (nodes = nx + 1).
    pub nx: usize,
    pub horizon: f64,
    /// Number of time steps.
    pub nt: usize,
    pub orders: Vec<f64>,
    pub coefficients: Vec<PowerSeries>,
    pub a0: PowerSeries,
    pub b0: PowerSeries,
    pub kernel: Option<PowerSeries>,
    pub forcing: SpaceTimeFn,
    pub initial: SpaceFn,
}

/// Field history and the space-integrated trace.
pub struct DirectSolution {
    pub times: Vec<f64>,
    pub nodes: Vec<f64>,
    /// field[n][i] = u(x_i, t_n).
    pub field: Vec<Vec<f64>>,
    pub psi_trace: Observation,
}

fn validate(cfg: &DirectConfig) -> Result<(), FracError> {
    if cfg.nx < 8 || cfg.nt < 8 {
        return Err(FracError::config("need nx >= 8 and nt >= 8"));
    }
    if !(cfg.domain.1 > cfg.domain.0) {
        return Err(FracError::config("empty spatial interval"));
    }
    if !(cfg.horizon > 0.0) {
        return Err(FracError::config("horizon must be positive"));
    }
    if cfg.orders.len() != cfg.coefficients.len() || cfg.orders.is_empty() {
        return Err(FracError::config("orders and coefficients must align"));
    }
    for &nu in &cfg.orders {
        if !(nu > 0.0 && nu < 1.0) {
            return Err(FracError::config(format!(
                "orders must lie in (0,1), got {nu}"
            )));
        }
    }
    Ok(())
}

/// Antiderivative of the kernel series at t (vanishing at 0); exponents
/// g > -1 integrate to t^{g+1}/(g+1).
fn kernel_antiderivative(kernel: &PowerSeries, t: f64) -> f64 {
    kernel
        .terms()
        .iter()
        .map(|term| term.coefficient * t.powf(term.exponent + 1.0) / (term.exponent + 1.0))
        .sum()
}

fn thomas_solve(
    lower: &[f64],
    diag: &[f64],
    upper: &[f64],
    rhs: &[f64],
) -> Result<Vec<f64>, FracError> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    if diag[0] == 0.0 {
        return Err(FracError::numeric("singular tridiagonal system"));
    }
    c[0] = upper[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let denom = diag[i] - lower[i] * c[i - 1];
        if denom == 0.0 || !denom.is_finite() {
            return Err(FracError::numeric("singular tridiagonal system"));
        }
        c[i] = if i + 1 < n { upper[i] / denom } else { 0.0 };
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / denom;
    }
    let mut x = d;
    for i in (0..n - 1).rev() {
        let next = x[i + 1];
        x[i] -= c[i] * next;
    }
    Ok(x)
}

fn trapezoid(values: &[f64], h: f64) -> f64 {
    let n = values.len();
    h * (0.5 * values[0] + values[1..n - 1].iter().sum::<f64>() + 0.5 * values[n - 1])
}

/// Second-order discrete Laplacian with homogeneous Neumann ghost points.
fn laplacian(u: &[f64], h: f64) -> Vec<f64> {
    let n = u.len();
    let h2 = h * h;
    let mut out = vec![0.0; n];
    out[0] = 2.0 * (u[1] - u[0]) / h2;
    for i in 1..n - 1 {
        out[i] = (u[i - 1] - 2.0 * u[i] + u[i + 1]) / h2;
    }
    out[n - 1] = 2.0 * (u[n - 2] - u[n - 1]) / h2;
    out
}

/// Implicit time stepping of the direct problem.
pub fn solve_direct(cfg: &DirectConfig) -> Result<DirectSolution, FracError> {
    validate(cfg)?;
    let (xl, xr) = cfg.domain;
    let nx = cfg.nx;
    let nt = cfg.nt;
    let h = (xr - xl) / nx as f64;
    let tau = cfg.horizon / nt as f64;
    let nodes: Vec<f64> = (0..=nx).map(|i| xl + i as f64 * h).collect();
    let times: Vec<f64> = (0..=nt).map(|n| n as f64 * tau).collect();

    // L1 weights a_j = (j+1)^{1-nu} - j^{1-nu} per order
    let m = cfg.orders.len();
    let mut l1_weights: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut l1_scale = Vec::with_capacity(m);
    for &nu in &cfg.orders {
        let w: Vec<f64> = (0..nt)
            .map(|j| ((j + 1) as f64).powf(1.0 - nu) - (j as f64).powf(1.0 - nu))
            .collect();
        l1_weights.push(w);
        l1_scale.push(1.0 / (gamma_pos(2.0 - nu) * tau.powf(nu)));
    }

    let u0: Vec<f64> = nodes.iter().map(|&x| (cfg.initial)(x)).collect();
    let mut field = Vec::with_capacity(nt + 1);
    field.push(u0);

    // history of L2 u = u_xx + b0 u, for the lagged memory term
    let mut l2_history: Vec<Vec<f64>> = Vec::with_capacity(nt + 1);
    {
        let u = &field[0];
        let mut l2 = laplacian(u, h);
        let b = cfg.b0.eval(0.0);
        for (v, &ui) in l2.iter_mut().zip(u.iter()) {
            *v += b * ui;
        }
        l2_history.push(l2);
    }

    for n in 1..=nt {
        let t_n = times[n];
        // sum of the implicit L1 prefactors rho_i(t_n) / (Gamma(2-nu_i) tau^{nu_i})
        let mut s_impl = 0.0;
        let mut coeff_n = Vec::with_capacity(m);
        for i in 0..m {
            let c = cfg.coefficients[i].eval(t_n) * l1_scale[i];
            coeff_n.push(c);
            s_impl += c;
        }

        // history part of the L1 sums (moves to the right-hand side)
        let mut hist = vec![0.0; nx + 1];
        for i in 0..m {
            let w = &l1_weights[i];
            let c = coeff_n[i];
            if c == 0.0 {
                continue;
            }
            // D^{nu} u(t_n) ~ c [u^n - sum_{k=1}^{n-1} (w_{n-k-1} - w_{n-k}) u^k - w_{n-1} u^0]
            for k in 1..n {
                let f = c * (w[n - k - 1] - w[n - k]);
                for (hv, &uv) in hist.iter_mut().zip(field[k].iter()) {
                    *hv += f * uv;
                }
            }
            let f0 = c * w[n - 1];
            for (hv, &uv) in hist.iter_mut().zip(field[0].iter()) {
                *hv += f0 * uv;
            }
        }

        // lagged memory term: integral of K(t_n - s) L2u(s) ds with
        // piecewise-constant history and exact kernel subinterval integrals
        let mut memory = vec![0.0; nx + 1];
        if let Some(kernel) = &cfg.kernel {
            for (k, l2) in l2_history.iter().enumerate().take(n) {
                let w = kernel_antiderivative(kernel, t_n - times[k])
                    - kernel_antiderivative(kernel, t_n - times[k + 1]);
                if w == 0.0 {
                    continue;
                }
                for (mv, &lv) in memory.iter_mut().zip(l2.iter()) {
                    *mv += w * lv;
                }
            }
        }

        // assemble (s_impl - a0(t_n)) u - u_xx = g + hist + memory
        let a = cfg.a0.eval(t_n);
        let h2 = h * h;
        let mut lower = vec![0.0; nx + 1];
        let mut diag = vec![0.0; nx + 1];
        let mut upper = vec![0.0; nx + 1];
        let mut rhs = vec![0.0; nx + 1];
        for i in 0..=nx {
            diag[i] = s_impl - a + 2.0 / h2;
            rhs[i] = (cfg.forcing)(nodes[i], t_n) + hist[i] + memory[i];
        }
        upper[0] = -2.0 / h2;
        lower[nx] = -2.0 / h2;
        for i in 1..nx {
            lower[i] = -1.0 / h2;
            upper[i] = -1.0 / h2;
        }
        let u = thomas_solve(&lower, &diag, &upper, &rhs)?;
        if u.iter().any(|v| !v.is_finite()) {
            return Err(FracError::numeric(format!(
                "solution blew up at step {n}"
            )));
        }

        let mut l2 = laplacian(&u, h);
        let b = cfg.b0.eval(t_n);
        for (v, &ui) in l2.iter_mut().zip(u.iter()) {
            *v += b * ui;
        }
        l2_history.push(l2);
        field.push(u);
    }

    let psi_values: Vec<f64> = field.iter().map(|u| trapezoid(u, h)).collect();
    let psi0 = psi_values[0];
    let psi_trace = Observation::new(times.clone(), psi_values, psi0)?;
    Ok(DirectSolution {
        times,
        nodes,
        field,
        psi_trace,
    })
}
