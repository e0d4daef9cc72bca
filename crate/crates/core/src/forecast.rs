//! Exact k-step-ahead conditional distributions of a PLINAR(1) process.
//!
//! Given X_n = x, X_{n+k} = α^k∘x + Z_{n+k}, where Z_{n+k} has an atom
//! α^k at zero plus a three-component geometric mixture weighted by the
//! A_k, B_k, C_k coefficients. The conditional PMF is the binomial
//! convolution of the two parts.

use std::fmt;

use serde::Serialize;
use statrs::function::factorial::ln_binomial;

use crate::error::{Error, Result};
use crate::pl::truncate_support;
use crate::process::{innovation_moments, PlinarParams};

/// Forecast horizon; `Stationary` is the k → ∞ limit (the PL marginal).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Horizon {
    Steps(u32),
    Stationary,
}

impl fmt::Display for Horizon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Horizon::Steps(k) => write!(f, "{k}"),
            Horizon::Stationary => f.write_str("inf"),
        }
    }
}

impl std::str::FromStr for Horizon {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("inf") || s.eq_ignore_ascii_case("infinity") {
            return Ok(Horizon::Stationary);
        }
        match s.parse::<u32>() {
            Ok(k) if k >= 1 => Ok(Horizon::Steps(k)),
            _ => Err(Error::InvalidConfig(format!(
                "horizon must be a positive integer or `inf`, got {s:?}"
            ))),
        }
    }
}

impl Serialize for Horizon {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Horizon::Steps(k) => serializer.serialize_u32(*k),
            Horizon::Stationary => serializer.serialize_str("inf"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AbcCoefficients {
    pub a_k: f64,
    pub b_k: f64,
    pub c_k: f64,
}

fn check_horizon(k: u32) -> Result<()> {
    if k == 0 {
        return Err(Error::invalid("k", 0.0, "horizon must be >= 1"));
    }
    Ok(())
}

pub fn abc_coefficients(k: u32, params: &PlinarParams) -> Result<AbcCoefficients> {
    check_horizon(k)?;
    Ok(coefficients(params.alpha().powi(k as i32), params.theta()))
}

fn coefficients(ak: f64, t: f64) -> AbcCoefficients {
    let d = t * (1.0 - ak) + 1.0;
    let d2 = d * d;
    AbcCoefficients {
        a_k: (t * t * (1.0 - ak).powi(2) + t * (1.0 - ak * ak) + 2.0 * ak) / d2,
        b_k: (1.0 - ak) / d,
        c_k: -ak / d2,
    }
}

/// Law of Z_{n+k} with α^k precomputed.
#[derive(Debug, Clone, Copy)]
struct ZStep {
    ak: f64,
    coef: AbcCoefficients,
    p: f64,
    ln_r: f64,
    c_scale: f64,
    ln_s: f64,
}

impl ZStep {
    fn new(k: u32, params: &PlinarParams) -> Self {
        Self::from_parts(params.alpha().powi(k as i32), params.theta())
    }

    fn from_parts(ak: f64, t: f64) -> Self {
        Self {
            ak,
            coef: coefficients(ak, t),
            p: t / (1.0 + t),
            ln_r: -t.ln_1p(),
            c_scale: (1.0 + t) / (1.0 + t + ak),
            ln_s: ak.ln() - (1.0 + t + ak).ln(),
        }
    }

    fn pmf(&self, z: u64) -> f64 {
        let AbcCoefficients { a_k, b_k, c_k } = self.coef;
        let p = self.p;
        if z == 0 {
            return self.ak + (1.0 - self.ak) * (a_k * p + b_k * p * p + c_k * self.c_scale);
        }
        let zf = z as f64;
        let r_z = (zf * self.ln_r).exp();
        let s_z = if self.ak == 0.0 {
            0.0
        } else {
            (zf * self.ln_s).exp()
        };
        let value = (1.0 - self.ak)
            * (a_k * p * r_z + b_k * (zf + 1.0) * p * p * r_z + c_k * self.c_scale * s_z);
        // negative only through rounding: improper (α, θ) never get here
        value.max(0.0)
    }
}

/// Whether the one-step innovation law is a proper distribution. The
/// negative C term decays faster in z than the positive terms, so checking
/// z = 0 and z = 1 suffices.
pub(crate) fn innovation_law_is_proper(alpha: f64, theta: f64) -> bool {
    let z = ZStep::from_parts(alpha, theta);
    let AbcCoefficients { a_k, b_k, c_k } = z.coef;
    let p = z.p;
    let r = 1.0 / (1.0 + theta);
    let s = alpha / (1.0 + theta + alpha);
    let g0 = alpha + (1.0 - alpha) * (a_k * p + b_k * p * p + c_k * z.c_scale);
    let g1 = a_k * p * r + 2.0 * b_k * p * p * r + c_k * z.c_scale * s;
    g0 >= 0.0 && g1 >= 0.0
}

/// P(Z_{n+k} = z).
pub fn z_step_pmf(z: u64, k: u32, params: &PlinarParams) -> Result<f64> {
    check_horizon(k)?;
    Ok(ZStep::new(k, params).pmf(z))
}

/// Binomial(x, α^k) weights, computed in log space.
fn thinning_weights(x: u64, ak: f64) -> Vec<f64> {
    if ak == 0.0 {
        let mut w = vec![0.0; x as usize + 1];
        w[0] = 1.0;
        return w;
    }
    let (ln_a, ln_b) = (ak.ln(), (-ak).ln_1p());
    (0..=x)
        .map(|j| (ln_binomial(x, j) + j as f64 * ln_a + (x - j) as f64 * ln_b).exp())
        .collect()
}

/// Incremental evaluator of y ↦ P(X_{n+k} = y | X_n = x).
struct ConditionalLaw {
    z: ZStep,
    weights: Vec<f64>,
    z_cache: Vec<f64>,
}

impl ConditionalLaw {
    fn new(k: u32, x: u64, params: &PlinarParams) -> Self {
        let z = ZStep::new(k, params);
        Self {
            weights: thinning_weights(x, z.ak),
            z,
            z_cache: Vec::new(),
        }
    }

    fn pmf(&mut self, y: usize) -> f64 {
        while self.z_cache.len() <= y {
            let next = self.z.pmf(self.z_cache.len() as u64);
            self.z_cache.push(next);
        }
        let top = y.min(self.weights.len() - 1);
        (0..=top)
            .map(|j| self.weights[j] * self.z_cache[y - j])
            .sum()
    }
}

/// P(X_{n+k} = y | X_n = x).
pub fn conditional_pmf(y: u64, k: u32, x: u64, params: &PlinarParams) -> Result<f64> {
    check_horizon(k)?;
    Ok(ConditionalLaw::new(k, x, params).pmf(y as usize))
}

/// Conditional PMF over 0..len.
pub fn conditional_pmf_table(
    k: u32,
    x: u64,
    params: &PlinarParams,
    len: usize,
) -> Result<Vec<f64>> {
    check_horizon(k)?;
    let mut law = ConditionalLaw::new(k, x, params);
    Ok((0..len).map(|y| law.pmf(y)).collect())
}

/// α^k x + (1 − α^k)(θ + 2)/(θ(θ + 1)).
pub fn conditional_mean(k: u32, x: u64, params: &PlinarParams) -> Result<f64> {
    check_horizon(k)?;
    let ak = params.alpha().powi(k as i32);
    Ok(ak * x as f64 + (1.0 - ak) * params.marginal().mean())
}

/// α^k(1 − α^k)x + σ²_ε(1 − α^{2k})/(1 − α²) + μ_ε(1 − α^k)(α − α^k)/(1 − α²).
///
/// The last term is the thinning variance accumulated by the k − 1
/// intermediate innovations; it vanishes at k = 1.
pub fn conditional_variance(k: u32, x: u64, params: &PlinarParams) -> Result<f64> {
    check_horizon(k)?;
    let a = params.alpha();
    let ak = a.powi(k as i32);
    let m = innovation_moments(params);
    let one_minus_a2 = 1.0 - a * a;
    Ok(ak * (1.0 - ak) * x as f64
        + (1.0 - ak * ak) / one_minus_a2 * m.sigma2_eps
        + (1.0 - ak) * (a - ak) / one_minus_a2 * m.mu_eps)
}

/// Truncated conditional law with its point summaries.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ForecastDistribution {
    pub horizon: Horizon,
    pub origin: u64,
    pub pmf: Vec<f64>,
    pub mean: f64,
    pub variance: f64,
    pub median: u64,
    pub mode: u64,
    pub tail_mass: f64,
}

impl ForecastDistribution {
    fn assemble(horizon: Horizon, origin: u64, pmf: Vec<f64>, mean: f64, variance: f64) -> Self {
        let total: f64 = pmf.iter().sum();
        Self {
            horizon,
            origin,
            median: median_of(&pmf),
            mode: mode_of(&pmf),
            tail_mass: (1.0 - total).max(0.0),
            pmf,
            mean,
            variance,
        }
    }

    /// Conditional mean rounded half-up to the nearest integer.
    pub fn mean_rounded(&self) -> u64 {
        round_half_up(self.mean)
    }

    pub fn cdf(&self) -> Vec<f64> {
        self.pmf
            .iter()
            .scan(0.0, |acc, p| {
                *acc += p;
                Some(*acc)
            })
            .collect()
    }

    /// Index of the last tabulated support point (Y*).
    pub fn support_max(&self) -> usize {
        self.pmf.len() - 1
    }
}

/// Smallest y whose cumulative mass reaches one half.
pub fn median_of(pmf: &[f64]) -> u64 {
    let mut acc = 0.0;
    for (y, p) in pmf.iter().enumerate() {
        acc += p;
        if acc >= 0.5 {
            return y as u64;
        }
    }
    pmf.len().saturating_sub(1) as u64
}

/// Smallest maximizing y.
pub fn mode_of(pmf: &[f64]) -> u64 {
    let mut best = 0;
    for (y, p) in pmf.iter().enumerate() {
        if *p > pmf[best] {
            best = y;
        }
    }
    best as u64
}

/// Traditional rounding: halves go up.
pub fn round_half_up(v: f64) -> u64 {
    (v + 0.5).floor().max(0.0) as u64
}

/// k-step forecast distribution given X_n = x, truncated where the cumulative
/// mass first reaches 1 − `tail`.
pub fn forecast_distribution(
    k: u32,
    x: u64,
    params: &PlinarParams,
    tail: f64,
) -> Result<ForecastDistribution> {
    check_horizon(k)?;
    let mut law = ConditionalLaw::new(k, x, params);
    let pmf = truncate_support(tail, |y| law.pmf(y))?;
    Ok(ForecastDistribution::assemble(
        Horizon::Steps(k),
        x,
        pmf,
        conditional_mean(k, x, params)?,
        conditional_variance(k, x, params)?,
    ))
}

/// The k → ∞ limit: the Poisson-Lindley marginal, whatever the origin.
pub fn stationary_distribution(
    x: u64,
    params: &PlinarParams,
    tail: f64,
) -> Result<ForecastDistribution> {
    let pl = params.marginal();
    let pmf = pl.truncated_pmf(tail)?;
    Ok(ForecastDistribution::assemble(
        Horizon::Stationary,
        x,
        pmf,
        pl.mean(),
        pl.variance(),
    ))
}

/// Dispatches on the horizon.
pub fn forecast_at(
    horizon: Horizon,
    x: u64,
    params: &PlinarParams,
    tail: f64,
) -> Result<ForecastDistribution> {
    match horizon {
        Horizon::Steps(k) => forecast_distribution(k, x, params, tail),
        Horizon::Stationary => stationary_distribution(x, params, tail),
    }
}
