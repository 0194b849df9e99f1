//! Built-in analytic benchmark problems, deterministic noise shapes and
//! observation sampling.

use crate::error::FracError;
use crate::identify::{
    CoeffSpec, FdoType, ModelSpec, OperatorSpec, OperatorTerm, OrderSpec, SourceTerm,
};
use crate::series::PowerSeries;
use crate::special::gamma_fn;

/// Discrete nonlocal measurement: times starting at t = 0 and the sampled
/// space integrals, with values[0] equal to the initial integral.
#[derive(Debug, Clone)]
pub struct Observation {
    times: Vec<f64>,
    values: Vec<f64>,
    psi0: f64,
}

impl Observation {
    pub fn new(times: Vec<f64>, values: Vec<f64>, psi0: f64) -> Result<Self, FracError> {
        if times.len() != values.len() || times.len() < 2 {
            return Err(FracError::config(
                "observation needs aligned times and values (>= 2 points)",
            ));
        }
        if times[0] != 0.0 {
            return Err(FracError::config("observation must start at t = 0"));
        }
        for w in times.windows(2) {
            if !(w[0] < w[1]) {
                return Err(FracError::config("observation times must increase strictly"));
            }
        }
        if values[0] != psi0 {
            return Err(FracError::config(
                "the first observation value must equal the initial integral",
            ));
        }
        Ok(Observation {
            times,
            values,
            psi0,
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn psi0(&self) -> f64 {
        self.psi0
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Deterministic noise shape classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseKind {
    /// t |ln t|, vanishing faster than any t^{nu} with nu < 1.
    Ftn,
    /// t^{nu1}, of the exact signal order.
    Stn,
    /// t^{nu1} |ln t|, slightly stronger than the signal order.
    Ttn,
    None,
}

/// Sign applied to the noise shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SignPolicy {
    #[default]
    Plus,
    Minus,
    /// Alternating by sample index (applied during sampling).
    Alternating,
}

#[derive(Debug, Clone)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    pub delta: f64,
    /// Order parameter the second- and third-type shapes depend on.
    pub nu1_for_shape: f64,
    pub sign: SignPolicy,
}

impl NoiseSpec {
    pub fn none() -> Self {
        NoiseSpec {
            kind: NoiseKind::None,
            delta: 0.0,
            nu1_for_shape: 0.5,
            sign: SignPolicy::Plus,
        }
    }
}

/// Noise shape value at one time. For the alternating policy the magnitude is
/// returned; the index-dependent sign is applied by [`sample_observation`].
pub fn noise_g(spec: &NoiseSpec, t: f64) -> Result<f64, FracError> {
    if matches!(spec.kind, NoiseKind::None) {
        return Ok(0.0);
    }
    if !(t > 0.0 && t < 1.0) {
        return Err(FracError::domain(format!(
            "noise shapes are defined for t in (0,1), got {t}"
        )));
    }
    let shape = match spec.kind {
        NoiseKind::Ftn => t * t.ln().abs(),
        NoiseKind::Stn => t.powf(spec.nu1_for_shape),
        NoiseKind::Ttn => t.powf(spec.nu1_for_shape) * t.ln().abs(),
        NoiseKind::None => unreachable!(),
    };
    let signed = match spec.sign {
        SignPolicy::Plus | SignPolicy::Alternating => shape,
        SignPolicy::Minus => -shape,
    };
    Ok(signed)
}

/// Samples a closed-form observation on the given times and perturbs it with
/// the deterministic noise: values[k] = psi(t_k) + delta * G(t_k) for k >= 1,
/// while the initial value stays exact.
pub fn sample_observation(
    psi_true: &PowerSeries,
    times: &[f64],
    noise: &NoiseSpec,
) -> Result<Observation, FracError> {
    if times.is_empty() || times[0] != 0.0 {
        return Err(FracError::config("sampling requires times starting at 0"));
    }
    let psi0 = psi_true.eval(0.0);
    let mut values = Vec::with_capacity(times.len());
    values.push(psi0);
    for (k, &t) in times.iter().enumerate().skip(1) {
        let mut g = noise_g(noise, t)?;
        if matches!(noise.sign, SignPolicy::Alternating) && k % 2 == 0 {
            g = -g;
        }
        values.push(psi_true.eval(t) + noise.delta * g);
    }
    Observation::new(times.to_vec(), values, psi0)
}

/// The observation grid used by the built-in experiments: t_k = k * 1e-4 for
/// k = 0..=21.
pub fn default_times() -> Vec<f64> {
    (0..=21).map(|k| k as f64 * 1e-4).collect()
}

fn gamma(x: f64) -> f64 {
    gamma_fn(x).expect("positive gamma argument")
}

/// First benchmark: two-term difference-form operator with coefficients
/// outside the derivatives, a polynomial memory kernel and a known exact
/// solution. Returns the exact observation psi(t) = (1+t)/30 + t^nu and the
/// model with the target coefficient treated as an unknown constant
/// (true value 1/4).
pub fn example1_truth(nu: f64) -> Result<(PowerSeries, ModelSpec), FracError> {
    example1_with(nu, CoeffSpec::UnknownConstant)
}

/// Same benchmark with the target coefficient known, for two-step runs.
pub fn example1_truth_known_coeff(nu: f64) -> Result<(PowerSeries, ModelSpec), FracError> {
    example1_with(nu, CoeffSpec::Known(PowerSeries::constant(0.25)))
}

fn example1_with(nu: f64, rho2: CoeffSpec) -> Result<(PowerSeries, ModelSpec), FracError> {
    if !(nu > 0.0 && nu < 1.0) {
        return Err(FracError::config("order must lie in (0,1)"));
    }
    let psi = PowerSeries::new([(1.0 / 30.0, 0.0), (1.0 / 30.0, 1.0), (1.0, nu)])?;
    // Space integrals of the three forcing components; the x-integrals reduce
    // to the constants 1/30 (both quartic profiles) and 0 (the Laplacian
    // profile), leaving a closed-form series in t.
    let g1 = PowerSeries::new([
        (gamma(1.0 + nu) / 2.0, 0.0),
        (-gamma(1.0 + nu) / (4.0 * gamma(1.0 + nu / 2.0)), nu / 2.0),
        (1.0 / (60.0 * gamma(2.0 - nu)), 1.0 - nu),
        (-1.0 / (120.0 * gamma(2.0 - nu / 2.0)), 1.0 - nu / 2.0),
    ])?;
    let g2 = PowerSeries::new([(-2.0, nu), (-1.0 / 15.0, 0.0), (-1.0 / 15.0, 1.0)])?;
    let g3 = PowerSeries::new([
        (-1.0 / (30.0 * (1.0 + nu)), 1.0 + nu),
        (-1.0 / (30.0 * (1.0 + nu) * (2.0 + nu)), 2.0 + nu),
        (-1.0 / 900.0, 1.0),
        (-1.0 / 900.0, 2.0),
        (-1.0 / 5400.0, 3.0),
    ])?;
    let gbar = g1.add(&g2).add(&g3);

    let operator = OperatorSpec::new(
        FdoType::TypeI,
        vec![
            OperatorTerm {
                order: OrderSpec::UnknownLead,
                coefficient: CoeffSpec::Known(PowerSeries::constant(0.5)),
            },
            OperatorTerm {
                order: OrderSpec::UnknownSecond,
                coefficient: rho2,
            },
        ],
        1,
    )?;
    let model = ModelSpec {
        operator,
        a0: PowerSeries::constant(2.0),
        b0: PowerSeries::constant(1.0 / 30.0),
        kernel: Some(PowerSeries::new([(1.0, 0.0), (1.0, 1.0)])?),
        gbar: SourceTerm::Series(gbar),
        boundary_trace: PowerSeries::zero(),
        d: 1,
        psi0: 1.0 / 30.0,
    };
    Ok((psi, model))
}

/// Second benchmark: three-term sum-form operator with coefficients inside
/// the derivatives, singular memory kernel t^{-gamma}, known time-dependent
/// target coefficient (1+t^2)/4 at order nu/3 and known middle coefficient
/// -1/4 at order nu/2. The observation is psi(t) = 1/30 + t^nu.
pub fn example2_truth(nu: f64, gamma_k: f64) -> Result<(PowerSeries, ModelSpec), FracError> {
    if !(nu > 0.0 && nu < 1.0) || !(gamma_k > 0.0 && gamma_k < 1.0) {
        return Err(FracError::config("orders must lie in (0,1)"));
    }
    let psi = PowerSeries::new([(1.0 / 30.0, 0.0), (1.0, nu)])?;
    // The x-profile of the third forcing component integrates to zero, so the
    // space-integrated forcing is kernel-independent.
    let g1 = PowerSeries::new([
        (gamma(1.0 + nu) / 2.0, 0.0),
        (-gamma(1.0 + nu) / (4.0 * gamma(1.0 + nu / 2.0)), nu / 2.0),
        (1.0 / (60.0 * gamma(3.0 - nu / 3.0)), 2.0 - nu / 3.0),
        (
            gamma(1.0 + nu) / (4.0 * gamma(1.0 + 2.0 * nu / 3.0)),
            2.0 * nu / 3.0,
        ),
        (
            gamma(3.0 + nu) / (4.0 * gamma(3.0 + 2.0 * nu / 3.0)),
            2.0 + 2.0 * nu / 3.0,
        ),
    ])?;
    let g2 = PowerSeries::new([(-1.0 / 15.0, 0.0), (-2.0, nu)])?;
    let gbar = g1.add(&g2);

    let operator = OperatorSpec::new(
        FdoType::TypeII,
        vec![
            OperatorTerm {
                order: OrderSpec::UnknownLead,
                coefficient: CoeffSpec::Known(PowerSeries::constant(0.5)),
            },
            OperatorTerm {
                order: OrderSpec::Known(nu / 2.0),
                coefficient: CoeffSpec::Known(PowerSeries::constant(-0.25)),
            },
            OperatorTerm {
                order: OrderSpec::UnknownSecond,
                coefficient: CoeffSpec::Known(PowerSeries::new([(0.25, 0.0), (0.25, 2.0)])?),
            },
        ],
        2,
    )?;
    let model = ModelSpec {
        operator,
        a0: PowerSeries::constant(2.0),
        b0: PowerSeries::zero(),
        kernel: Some(PowerSeries::monomial(1.0, -gamma_k)?),
        gbar: SourceTerm::Series(gbar),
        boundary_trace: PowerSeries::zero(),
        d: 1,
        psi0: 1.0 / 30.0,
    };
    Ok((psi, model))
}
