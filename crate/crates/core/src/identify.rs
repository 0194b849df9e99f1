//! Identification of the fractional orders and, optionally, one constant
//! coefficient of a multi-term fractional differential operator from a
//! discrete nonlocal observation.
//!
//! The leading order is recovered from the small-time growth of the fitted
//! observation, the second targeted order from the vanishing rate of an
//! auxiliary function built from the model data, and an unknown constant
//! coefficient from a fractional-integral quotient. Each stage regularizes
//! through the penalized fits of [`crate::regularize`] and selects its
//! parameters by the two-stage quasi-optimality rule.

use crate::basis::DesignBasis;
use crate::error::FracError;
use crate::problems::Observation;
use crate::regularize::{
    quasiopt_select, tikhonov_solve, FitResult, PairPick, QuasiOptTrace, RegularizationGrid,
    SelectOptions,
};
use crate::series::{caputo_series, kernel_convolve, rl_convolve, PowerSeries};

/// Whether coefficients stand outside the Caputo derivatives (type I) or
/// inside them (type II).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FdoType {
    TypeI,
    TypeII,
}

/// Order of one operator term: a known value in (0,1), the unknown leading
/// order, or the unknown targeted secondary order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OrderSpec {
    Known(f64),
    UnknownLead,
    UnknownSecond,
}

/// Coefficient of one operator term: a known polynomial in t, or an unknown
/// constant (only allowed on the targeted term).
#[derive(Debug, Clone, PartialEq)]
pub enum CoeffSpec {
    Known(PowerSeries),
    UnknownConstant,
}

#[derive(Debug, Clone)]
pub struct OperatorTerm {
    pub order: OrderSpec,
    pub coefficient: CoeffSpec,
}

/// The fractional differential operator acting on the observation.
///
/// Sign convention: a two-term operator is the difference form
/// rho_1 D^{nu_1} - rho_2 D^{nu_2} (both stored coefficients as written),
/// while operators with more than two terms are the plain sum over all
/// terms. This mirrors how the two forms are stated for the underlying
/// models, and it is the convention under which a recovered constant
/// coefficient is reported.
#[derive(Debug, Clone)]
pub struct OperatorSpec {
    pub fdo_type: FdoType,
    terms: Vec<OperatorTerm>,
    target_index: usize,
}

impl OperatorSpec {
    /// Validates the term list: term 0 carries the unknown lead with a known,
    /// positive-at-zero coefficient; exactly one term (at `target_index` >= 1)
    /// carries the unknown secondary order; every other order is known and in
    /// (0,1); at most the targeted coefficient may be an unknown constant.
    pub fn new(
        fdo_type: FdoType,
        terms: Vec<OperatorTerm>,
        target_index: usize,
    ) -> Result<Self, FracError> {
        if terms.len() < 2 {
            return Err(FracError::config("operator needs at least two terms"));
        }
        if target_index == 0 || target_index >= terms.len() {
            return Err(FracError::config("target index must point at a non-lead term"));
        }
        for (k, term) in terms.iter().enumerate() {
            match term.order {
                OrderSpec::UnknownLead if k != 0 => {
                    return Err(FracError::config("the unknown lead must be the first term"))
                }
                OrderSpec::UnknownSecond if k != target_index => {
                    return Err(FracError::config(
                        "the unknown secondary order must sit at the target index",
                    ))
                }
                OrderSpec::Known(v) if !(v > 0.0 && v < 1.0) => {
                    return Err(FracError::config(format!(
                        "known orders must lie in (0,1), got {v}"
                    )))
                }
                _ => {}
            }
            if matches!(term.coefficient, CoeffSpec::UnknownConstant) && k != target_index {
                return Err(FracError::config(
                    "an unknown constant coefficient is only allowed on the target term",
                ));
            }
        }
        if !matches!(terms[0].order, OrderSpec::UnknownLead) {
            return Err(FracError::config("the first term must be the unknown lead"));
        }
        if !matches!(terms[target_index].order, OrderSpec::UnknownSecond) {
            return Err(FracError::config("the target term must carry the unknown order"));
        }
        let lead = match &terms[0].coefficient {
            CoeffSpec::Known(s) => s,
            CoeffSpec::UnknownConstant => {
                return Err(FracError::config("the lead coefficient must be known"))
            }
        };
        if !(lead.eval(0.0) > 0.0) {
            return Err(FracError::config(
                "the lead coefficient must be strictly positive at t = 0",
            ));
        }
        Ok(OperatorSpec {
            fdo_type,
            terms,
            target_index,
        })
    }

    pub fn terms(&self) -> &[OperatorTerm] {
        &self.terms
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    pub fn target_index(&self) -> usize {
        self.target_index
    }

    pub fn lead_coefficient(&self) -> &PowerSeries {
        match &self.terms[0].coefficient {
            CoeffSpec::Known(s) => s,
            CoeffSpec::UnknownConstant => unreachable!("validated at construction"),
        }
    }

    pub fn target_coefficient(&self) -> &CoeffSpec {
        &self.terms[self.target_index].coefficient
    }

    pub fn has_unknown_constant(&self) -> bool {
        matches!(self.target_coefficient(), CoeffSpec::UnknownConstant)
    }
}

/// Space-integrated forcing, either in closed form or tabulated with
/// monotone-cubic interpolation.
#[derive(Debug, Clone)]
pub enum SourceTerm {
    Series(PowerSeries),
    Table(TimeTable),
}

impl SourceTerm {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            SourceTerm::Series(s) => s.eval(t),
            SourceTerm::Table(tab) => tab.eval(t),
        }
    }
}

/// Sampled time function with Fritsch-Carlson monotone cubic interpolation.
#[derive(Debug, Clone)]
pub struct TimeTable {
    times: Vec<f64>,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

impl TimeTable {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self, FracError> {
        if times.len() != values.len() || times.len() < 2 {
            return Err(FracError::config("table needs >= 2 aligned samples"));
        }
        for w in times.windows(2) {
            if !(w[0] < w[1]) {
                return Err(FracError::config("table times must be strictly increasing"));
            }
        }
        let n = times.len();
        let mut secants = Vec::with_capacity(n - 1);
        for k in 0..n - 1 {
            secants.push((values[k + 1] - values[k]) / (times[k + 1] - times[k]));
        }
        let mut slopes = vec![0.0; n];
        slopes[0] = secants[0];
        slopes[n - 1] = secants[n - 2];
        for k in 1..n - 1 {
            if secants[k - 1] * secants[k] > 0.0 {
                // harmonic mean keeps the interpolant monotone
                let w1 = 2.0 * (times[k + 1] - times[k]) + (times[k] - times[k - 1]);
                let w2 = (times[k + 1] - times[k]) + 2.0 * (times[k] - times[k - 1]);
                slopes[k] = (w1 + w2) / (w1 / secants[k - 1] + w2 / secants[k]);
            }
        }
        Ok(TimeTable {
            times,
            values,
            slopes,
        })
    }

    pub fn eval(&self, t: f64) -> f64 {
        let n = self.times.len();
        if t <= self.times[0] {
            return self.values[0] + self.slopes[0] * (t - self.times[0]);
        }
        if t >= self.times[n - 1] {
            return self.values[n - 1] + self.slopes[n - 1] * (t - self.times[n - 1]);
        }
        let k = match self
            .times
            .binary_search_by(|probe| probe.total_cmp(&t))
        {
            Ok(k) => return self.values[k.min(n - 1)],
            Err(k) => k - 1,
        };
        let h = self.times[k + 1] - self.times[k];
        let s = (t - self.times[k]) / h;
        let (y0, y1) = (self.values[k], self.values[k + 1]);
        let (m0, m1) = (self.slopes[k] * h, self.slopes[k + 1] * h);
        let s2 = s * s;
        let s3 = s2 * s;
        y0 * (2.0 * s3 - 3.0 * s2 + 1.0)
            + m0 * (s3 - 2.0 * s2 + s)
            + y1 * (-2.0 * s3 + 3.0 * s2)
            + m1 * (s3 - s2)
    }
}

/// Full problem data needed by the identification formulas.
#[derive(Debug, Clone)]
pub struct ModelSpec {
    pub operator: OperatorSpec,
    /// Zeroth-order coefficient of the local elliptic part.
    pub a0: PowerSeries,
    /// Zeroth-order coefficient under the memory convolution.
    pub b0: PowerSeries,
    /// Memory kernel (exponents > -1), if present.
    pub kernel: Option<PowerSeries>,
    /// Space integral of the forcing.
    pub gbar: SourceTerm,
    /// Boundary trace of the Neumann data (zero for homogeneous problems).
    pub boundary_trace: PowerSeries,
    /// Whether the kernel acts on the boundary trace (0 or 1).
    pub d: u8,
    /// Space integral of the initial state.
    pub psi0: f64,
}

impl ModelSpec {
    pub fn validate(&self) -> Result<(), FracError> {
        if self.d > 1 {
            return Err(FracError::config("flag d must be 0 or 1"));
        }
        Ok(())
    }
}

/// Strategy for the second identification step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Strategy {
    /// Direct evaluation of the order-ratio formula at the step-1 point.
    One,
    /// Re-fit with guesses centered on the recovered lead order and select
    /// fresh regularization parameters.
    Two,
    /// Run both; the refit result is the headline value.
    #[default]
    Both,
}

/// Configuration of the reconstruction pipeline. `None` entries are resolved
/// against the observation (start values default to the second-to-last
/// observation time).
#[derive(Debug, Clone)]
pub struct ReconConfig {
    /// Power-element guesses; `None` selects the uniform grid i/3.
    pub beta: Option<Vec<f64>>,
    /// Total basis size (powers + Jacobi elements).
    pub basis_size: usize,
    /// Weight exponent a of the penalty norm.
    pub weight_exponent: f64,
    pub sigma_start: f64,
    pub sigma_ratio: f64,
    pub sigma_count: usize,
    pub tbar_start: Option<f64>,
    pub tbar_ratio: f64,
    pub tbar_count: usize,
    pub sigma_hat_start: f64,
    pub sigma_hat_ratio: f64,
    pub sigma_hat_count: usize,
    pub that_start: Option<f64>,
    pub that_ratio: f64,
    pub that_count: usize,
    /// Ratio shrink factor of the order-ratio formula.
    pub lambda: f64,
    /// Evaluation time of the coefficient formula; defaults to the
    /// second-to-last observation time.
    pub t0: Option<f64>,
    pub strategy: Strategy,
    /// Half-width of the refit guess neighborhood around the recovered lead.
    pub neighborhood: f64,
}

impl Default for ReconConfig {
    fn default() -> Self {
        ReconConfig {
            beta: None,
            basis_size: 9,
            weight_exponent: 0.99,
            sigma_start: 0.5,
            sigma_ratio: 0.5,
            sigma_count: 60,
            tbar_start: None,
            tbar_ratio: 0.5,
            tbar_count: 100,
            sigma_hat_start: 1.0,
            sigma_hat_ratio: 0.5,
            sigma_hat_count: 15,
            that_start: None,
            that_ratio: 0.5,
            that_count: 10,
            lambda: 0.5,
            t0: None,
            strategy: Strategy::Both,
            neighborhood: 0.05,
        }
    }
}

/// Relative tie tolerance of the refit stage's column selection.
const THAT_TIE_REL: f64 = 0.20;
/// Admissibility: fits whose residual exceeds this multiple of the best
/// residual on the grid are dominated and excluded from selection.
const ADMIT_FACTOR: f64 = 4.0;
/// Absolute admissibility floor relative to the data norm: a fit reproducing
/// the data to ten digits counts as converged.
const ADMIT_FLOOR_REL: f64 = 1e-10;
/// Evaluation times below this fraction of the first positive observation
/// time are outside the data-supported range of the fitted expansion.
const SUPPORT_FRACTION: f64 = 0.25;
/// Clip margin for out-of-range secondary orders.
const ORDER_CLIP_MARGIN: f64 = 1e-3;

/// Per-stage outcome recorded on the estimate.
#[derive(Debug, Clone, PartialEq)]
pub enum StageStatus {
    Ok,
    Clipped,
    Skipped,
    Failed(String),
}

impl StageStatus {
    pub fn is_ok(&self) -> bool {
        matches!(self, StageStatus::Ok | StageStatus::Clipped)
    }
}

/// Recovered parameters with the selected regularization points and the full
/// selection traces.
#[derive(Debug, Clone)]
pub struct Estimate {
    pub nu1: f64,
    /// Headline secondary order (strategy two when it ran, else strategy one).
    pub nu_second: f64,
    /// Strategy-one value, when computed.
    pub nu2_bar: Option<f64>,
    /// Strategy-two value, when computed.
    pub nu2_hat: Option<f64>,
    /// Recovered constant coefficient, when the target coefficient was
    /// unknown.
    pub rho: Option<f64>,
    pub sigma_bar: f64,
    pub tbar: f64,
    pub sigma_hat: Option<f64>,
    pub that: Option<f64>,
    pub nu_second_clipped: bool,
    pub step1_status: StageStatus,
    pub step2_status: StageStatus,
    pub step3_status: StageStatus,
    pub step1_trace: QuasiOptTrace,
    pub step2_trace: Option<QuasiOptTrace>,
}

impl Estimate {
    /// Whether the recovered orders satisfy 0 < nu_second < nu1 < 1.
    pub fn orders_valid(&self) -> bool {
        0.0 < self.nu_second && self.nu_second < self.nu1 && self.nu1 < 1.0
    }
}

// ---------------------------------------------------------------------------
// estimator building blocks
// ---------------------------------------------------------------------------

/// Leading-order estimate at a single (fit, tbar) point:
/// ln|psi(tbar) - psi(0)| / ln tbar for type I, with the lead coefficient
/// applied and normalized by its initial value for type II. The difference is
/// anchored at the reconstruction's own initial value, and differences that
/// the fit cannot resolve (below its RMS residual) yield NaN so that the
/// selection excludes them.
pub fn nu1_at(fit: &FitResult, model: &ModelSpec, tbar: f64) -> f64 {
    if !(tbar > 0.0 && tbar < 1.0) {
        return f64::NAN;
    }
    let n = fit.coefficients.len().max(1);
    let rms = fit.residual_norm / (n as f64).sqrt();
    let w = match model.operator.fdo_type {
        FdoType::TypeI => fit.fitted.eval(tbar) - fit.fitted.eval(0.0),
        FdoType::TypeII => {
            let rho1 = model.operator.lead_coefficient();
            let r0 = rho1.eval(0.0);
            (rho1.eval(tbar) * fit.fitted.eval(tbar) - r0 * fit.fitted.eval(0.0)) / r0
        }
    };
    let w = w.abs();
    if w <= rms {
        return f64::NAN;
    }
    w.ln() / tbar.ln()
}

/// The auxiliary integral combination of the model data and a fitted
/// observation: gbar - d (K * trace) + a0 psi + (K * b0 psi) - trace,
/// assembled exactly on the series level (a tabulated gbar contributes
/// pointwise at evaluation).
struct CfunParts {
    series: PowerSeries,
    gbar_table: Option<TimeTable>,
}

impl CfunParts {
    fn build(fitted: &PowerSeries, model: &ModelSpec) -> Result<CfunParts, FracError> {
        let mut series = model.a0.mul(fitted);
        if let Some(kernel) = &model.kernel {
            let inner = model.b0.mul(fitted);
            if !inner.is_zero() {
                series = series.add(&kernel_convolve(kernel, &inner));
            }
            if model.d == 1 && !model.boundary_trace.is_zero() {
                series = series.sub(&kernel_convolve(kernel, &model.boundary_trace));
            }
        }
        series = series.sub(&model.boundary_trace);
        let gbar_table = match &model.gbar {
            SourceTerm::Series(g) => {
                series = series.add(g);
                None
            }
            SourceTerm::Table(t) => Some(t.clone()),
        };
        Ok(CfunParts { series, gbar_table })
    }

    fn eval(&self, t: f64) -> f64 {
        let mut v = self.series.eval(t);
        if let Some(tab) = &self.gbar_table {
            v += tab.eval(t);
        }
        v
    }
}

/// Evaluates the auxiliary combination for a fit at one time.
pub fn cfun_delta(fit: &FitResult, model: &ModelSpec, t: f64) -> Result<f64, FracError> {
    Ok(CfunParts::build(&fit.fitted, model)?.eval(t))
}

/// The order-detection function built from a fitted observation and the
/// recovered leading order. For a known target coefficient the value carries
/// the 1/rho_target factor; for an unknown constant it does not (the variant
/// used to recover the constant itself).
struct FfunParts {
    numerator: PowerSeries,
    /// Sign with which a tabulated gbar enters the numerator.
    gbar_sign: f64,
    gbar_table: Option<TimeTable>,
    divisor: Option<PowerSeries>,
}

impl FfunParts {
    fn build(fitted: &PowerSeries, model: &ModelSpec, nu1d: f64) -> Result<FfunParts, FracError> {
        if !(nu1d > 0.0 && nu1d < 1.0) {
            return Err(FracError::domain(format!(
                "leading order must lie in (0,1), got {nu1d}"
            )));
        }
        let op = &model.operator;
        let cfun = CfunParts::build(fitted, model)?;
        let term_series = |term: &OperatorTerm, order: f64| -> Result<PowerSeries, FracError> {
            let coeff = match &term.coefficient {
                CoeffSpec::Known(c) => c,
                CoeffSpec::UnknownConstant => unreachable!("target term never summed"),
            };
            match op.fdo_type {
                FdoType::TypeI => Ok(coeff.mul(&caputo_series(fitted, order)?)),
                FdoType::TypeII => caputo_series(&coeff.mul(fitted), order),
            }
        };

        let (numerator, gbar_sign) = if op.term_count() == 2 {
            // difference form: F-tilde = rho_1 D^{nu1} psi - cfun (type I) or
            // D^{nu1}(rho_1 psi) - cfun (type II)
            let lead = term_series(&op.terms()[0], nu1d)?;
            (lead.sub(&cfun.series), -1.0)
        } else {
            // sum form: cfun - sum of the non-target terms
            let mut acc = cfun.series.clone();
            for (k, term) in op.terms().iter().enumerate() {
                if k == op.target_index() {
                    continue;
                }
                let order = match term.order {
                    OrderSpec::UnknownLead => nu1d,
                    OrderSpec::Known(v) => v,
                    OrderSpec::UnknownSecond => unreachable!(),
                };
                acc = acc.sub(&term_series(term, order)?);
            }
            (acc, 1.0)
        };
        let divisor = match op.target_coefficient() {
            CoeffSpec::Known(c) => Some(c.clone()),
            CoeffSpec::UnknownConstant => None,
        };
        Ok(FfunParts {
            numerator,
            gbar_sign,
            gbar_table: cfun.gbar_table,
            divisor,
        })
    }

    /// Numerator only (the unknown-constant variant regardless of whether the
    /// target coefficient is known).
    fn eval_numerator(&self, t: f64) -> f64 {
        let mut v = self.numerator.eval(t);
        if let Some(tab) = &self.gbar_table {
            v += self.gbar_sign * tab.eval(t);
        }
        v
    }

    fn eval(&self, t: f64) -> f64 {
        let v = self.eval_numerator(t);
        match &self.divisor {
            Some(d) => {
                let dv = d.eval(t);
                if dv == 0.0 {
                    f64::NAN
                } else {
                    v / dv
                }
            }
            None => v,
        }
    }
}

/// Order-detection function value at one time.
pub fn ffun_delta(
    fit: &FitResult,
    model: &ModelSpec,
    nu1d: f64,
    t: f64,
) -> Result<f64, FracError> {
    let parts = FfunParts::build(&fit.fitted, model, nu1d)?;
    if let Some(d) = &parts.divisor {
        if d.eval(t) == 0.0 {
            return Err(FracError::domain(format!(
                "target coefficient vanishes at t = {t}"
            )));
        }
    }
    Ok(parts.eval(t))
}

fn nu2_from_parts(parts: &FfunParts, nu1d: f64, tbar: f64, lambda: f64) -> f64 {
    let denom = parts.eval(tbar);
    if denom == 0.0 || !denom.is_finite() {
        return f64::NAN;
    }
    let ratio = parts.eval(lambda * tbar) / denom;
    if !ratio.is_finite() || ratio == 0.0 {
        return f64::NAN;
    }
    nu1d - ratio.abs().ln() / lambda.ln()
}

/// Secondary-order estimate nu1d - log_lambda |F(lambda tbar) / F(tbar)|.
/// Zero or non-finite ratios yield NaN for exclusion by the selection.
pub fn nu2_at(fit: &FitResult, model: &ModelSpec, nu1d: f64, tbar: f64, lambda: f64) -> f64 {
    if !(lambda > 0.0 && lambda < 1.0) {
        return f64::NAN;
    }
    match FfunParts::build(&fit.fitted, model, nu1d) {
        Ok(parts) => nu2_from_parts(&parts, nu1d, tbar, lambda),
        Err(_) => f64::NAN,
    }
}

/// Constant-coefficient estimate: the unknown-constant order-detection value
/// at t0 divided by (omega_{nu1d - nu2d} * D^{nu1d} psi)(t0), both on the
/// same fitted expansion.
pub fn rho_at(
    fit: &FitResult,
    model: &ModelSpec,
    nu1d: f64,
    nu2d: f64,
    t0: f64,
) -> Result<f64, FracError> {
    if !(nu2d < nu1d) {
        return Err(FracError::domain(format!(
            "order gap must be positive: nu2 = {nu2d} >= nu1 = {nu1d}"
        )));
    }
    if !(nu2d > 0.0) {
        return Err(FracError::domain("secondary order must be positive"));
    }
    let parts = FfunParts::build(&fit.fitted, model, nu1d)?;
    let numerator = parts.eval_numerator(t0);
    let deriv = caputo_series(&fit.fitted, nu1d)?;
    let denominator = rl_convolve(nu1d - nu2d, &deriv)?.eval(t0);
    if denominator == 0.0 || !denominator.is_finite() {
        return Err(FracError::DegenerateObservation(format!(
            "fractional integral of the fitted derivative vanishes at t0 = {t0}"
        )));
    }
    if numerator == 0.0 {
        return Err(FracError::DegenerateObservation(format!(
            "order-detection function vanishes at t0 = {t0}"
        )));
    }
    Ok(numerator / denominator)
}

// ---------------------------------------------------------------------------
// pipeline
// ---------------------------------------------------------------------------

struct ResolvedConfig {
    beta: Vec<f64>,
    jacobi_count: usize,
    step1: RegularizationGrid,
    step2: RegularizationGrid,
    lambda: f64,
    t0: f64,
    t_support: f64,
    horizon: f64,
}

fn resolve_config(config: &ReconConfig, obs: &Observation) -> Result<ResolvedConfig, FracError> {
    let times = obs.times();
    let n = times.len();
    let beta = config
        .beta
        .clone()
        .unwrap_or_else(|| DesignBasis::uniform_beta(3));
    if config.basis_size <= beta.len() {
        return Err(FracError::config(
            "basis size must exceed the number of power guesses",
        ));
    }
    if n < config.basis_size {
        return Err(FracError::config(format!(
            "observation has {n} points, need at least {}",
            config.basis_size
        )));
    }
    if !(config.lambda > 0.0 && config.lambda < 1.0) {
        return Err(FracError::config("lambda must lie in (0,1)"));
    }
    if !(config.neighborhood > 0.0 && config.neighborhood < 0.5) {
        return Err(FracError::config("neighborhood half-width out of range"));
    }
    let second_last = times[n - 2];
    let step1 = RegularizationGrid {
        sigma_start: config.sigma_start,
        sigma_ratio: config.sigma_ratio,
        sigma_count: config.sigma_count,
        tbar_start: config.tbar_start.unwrap_or(second_last),
        tbar_ratio: config.tbar_ratio,
        tbar_count: config.tbar_count,
    };
    let step2 = RegularizationGrid {
        sigma_start: config.sigma_hat_start,
        sigma_ratio: config.sigma_hat_ratio,
        sigma_count: config.sigma_hat_count,
        tbar_start: config.that_start.unwrap_or(second_last),
        tbar_ratio: config.that_ratio,
        tbar_count: config.that_count,
    };
    step1.validate()?;
    step2.validate()?;
    Ok(ResolvedConfig {
        beta,
        jacobi_count: config.basis_size - config.beta.as_ref().map_or(3, |b| b.len()),
        step1,
        step2,
        lambda: config.lambda,
        t0: config.t0.unwrap_or(second_last),
        t_support: times[1] * SUPPORT_FRACTION,
        horizon: times[n - 1],
    })
}

/// Fits per sigma with the dominated ones masked out.
struct SigmaSweep {
    fits: Vec<FitResult>,
    admissible: Vec<bool>,
}

fn sweep_sigmas(
    basis: &DesignBasis,
    h: &nalgebra::DMatrix<f64>,
    obs: &Observation,
    sigmas: &[f64],
) -> Result<SigmaSweep, FracError> {
    let e = basis.design_matrix(obs.times());
    let y = nalgebra::DVector::from_column_slice(obs.values());
    let mut fits = Vec::with_capacity(sigmas.len());
    for &sigma in sigmas {
        fits.push(tikhonov_solve(&e, h, &y, sigma, basis)?);
    }
    let best = fits
        .iter()
        .map(|f| f.residual_norm)
        .fold(f64::INFINITY, f64::min);
    let threshold = (ADMIT_FACTOR * best).max(ADMIT_FLOOR_REL * y.norm());
    let admissible = fits
        .iter()
        .map(|f| f.residual_norm <= threshold)
        .collect();
    Ok(SigmaSweep { fits, admissible })
}

/// Runs the full two- or three-step identification.
///
/// Step 1 recovers the leading order by quasi-optimality over the
/// (sigma, tbar) grids. Step 2 recovers the targeted secondary order, either
/// directly at the step-1 point (strategy one) or through a refit whose power
/// guesses are centered on the recovered lead (strategy two). Step 3 runs
/// only when the target coefficient is an unknown constant.
pub fn identify_pipeline(
    obs: &Observation,
    model: &ModelSpec,
    config: &ReconConfig,
) -> Result<Estimate, FracError> {
    model.validate()?;
    let rc = resolve_config(config, obs)?;

    // ---- step 1: leading order ----
    let basis = DesignBasis::new(
        rc.beta.clone(),
        rc.jacobi_count,
        config.weight_exponent,
        rc.horizon,
    )?;
    let h = basis.gram_matrix()?;
    let sweep = sweep_sigmas(&basis, &h, obs, &rc.step1.sigmas())?;

    let step1_opts = SelectOptions {
        valid_range: (0.0, 1.0),
        tie_rel: 0.0,
        pick: PairPick::Later,
        sigma_admissible: Some(sweep.admissible.clone()),
    };
    let support = rc.t_support;
    let step1_sel = quasiopt_select(&rc.step1, &step1_opts, |i, _j, _s, tbar| {
        if tbar < support {
            f64::NAN
        } else {
            nu1_at(&sweep.fits[i], model, tbar)
        }
    })?;
    let nu1 = step1_sel.value;
    let step1_fit = &sweep.fits[step1_sel.sigma_index];

    // ---- step 2, strategy one ----
    let run_s1 = matches!(config.strategy, Strategy::One | Strategy::Both);
    let run_s2 = matches!(config.strategy, Strategy::Two | Strategy::Both);
    let nu2_bar = if run_s1 {
        let v = nu2_at(step1_fit, model, nu1, step1_sel.tbar, rc.lambda);
        v.is_finite().then_some(v)
    } else {
        None
    };

    // ---- step 2, strategy two ----
    let mut nu2_hat = None;
    let mut sigma_hat = None;
    let mut that = None;
    let mut step2_trace = None;
    let mut hat_fit: Option<FitResult> = None;
    let mut step2_status = if run_s2 {
        StageStatus::Ok
    } else {
        StageStatus::Skipped
    };
    if run_s2 {
        match strategy_two(obs, model, config, &rc, nu1) {
            Ok((sel, fit)) => {
                nu2_hat = Some(sel.value);
                sigma_hat = Some(sel.sigma);
                that = Some(sel.tbar);
                step2_trace = Some(sel.trace);
                hat_fit = Some(fit);
            }
            Err(err) => {
                step2_status = StageStatus::Failed(err.to_string());
            }
        }
    }

    // headline secondary order with the range policy
    let raw_second = nu2_hat.or(nu2_bar);
    let (nu_second, clipped) = match raw_second {
        Some(v) if v <= 0.0 => (ORDER_CLIP_MARGIN, true),
        Some(v) if v >= nu1 => (nu1 - ORDER_CLIP_MARGIN, true),
        Some(v) => (v, false),
        None => (f64::NAN, false),
    };
    if step2_status == StageStatus::Ok && clipped {
        step2_status = StageStatus::Clipped;
    }
    if step2_status == StageStatus::Ok && raw_second.is_none() {
        step2_status = StageStatus::Failed("no finite secondary-order estimate".into());
    }

    // ---- step 3: unknown constant coefficient ----
    let mut rho = None;
    let step3_status = if !model.operator.has_unknown_constant() {
        StageStatus::Skipped
    } else if !nu_second.is_finite() {
        StageStatus::Failed("no secondary order available".into())
    } else {
        let fit_for_rho = hat_fit.as_ref().unwrap_or(step1_fit);
        match rho_at(fit_for_rho, model, nu1, nu_second, rc.t0) {
            Ok(v) => {
                rho = Some(v);
                StageStatus::Ok
            }
            Err(err) => StageStatus::Failed(err.to_string()),
        }
    };

    Ok(Estimate {
        nu1,
        nu_second,
        nu2_bar,
        nu2_hat,
        rho,
        sigma_bar: step1_sel.sigma,
        tbar: step1_sel.tbar,
        sigma_hat,
        that,
        nu_second_clipped: clipped,
        step1_status: StageStatus::Ok,
        step2_status,
        step3_status,
        step1_trace: step1_sel.trace,
        step2_trace,
    })
}

/// Refit guesses centered on the recovered lead, clipped to (0,1) and
/// deduplicated.
fn hat_guesses(nu1: f64, h: f64) -> Vec<f64> {
    let clip = |v: f64| v.clamp(0.01, 0.99);
    let mut b = vec![clip(nu1 - h), clip(nu1), clip(nu1 + h)];
    b.sort_by(f64::total_cmp);
    b.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    b
}

fn strategy_two(
    obs: &Observation,
    model: &ModelSpec,
    config: &ReconConfig,
    rc: &ResolvedConfig,
    nu1: f64,
) -> Result<(crate::regularize::QuasiOptOutcome, FitResult), FracError> {
    let beta_hat = hat_guesses(nu1, config.neighborhood);
    let jacobi = config.basis_size - beta_hat.len();
    let basis = DesignBasis::new(beta_hat, jacobi, config.weight_exponent, rc.horizon)?;
    // The refit penalty weights by t^{+a}: with the singular weight the whole
    // hat grid over-smooths, while the damped weight makes the grid sweep the
    // transition between penalized and unconstrained fits.
    let h = basis.weighted_gram(config.weight_exponent)?;
    let sweep = sweep_sigmas(&basis, &h, obs, &rc.step2.sigmas())?;

    // every evaluation point of the ratio must be data-supported
    let t_min = obs.times()[1];
    let lambda = rc.lambda;
    let mut parts_cache: Vec<Option<FfunParts>> = (0..sweep.fits.len()).map(|_| None).collect();
    let opts = SelectOptions {
        valid_range: (0.0, nu1),
        tie_rel: THAT_TIE_REL,
        pick: PairPick::Earlier,
        sigma_admissible: Some(sweep.admissible.clone()),
    };
    let sel = quasiopt_select(&rc.step2, &opts, |i, _j, _s, that| {
        if lambda * that < t_min || that > rc.horizon {
            return f64::NAN;
        }
        if parts_cache[i].is_none() {
            parts_cache[i] = FfunParts::build(&sweep.fits[i].fitted, model, nu1).ok();
        }
        match &parts_cache[i] {
            Some(parts) => nu2_from_parts(parts, nu1, that, lambda),
            None => f64::NAN,
        }
    })?;
    let fit = sweep.fits[sel.sigma_index].clone();
    Ok((sel, fit))
}
