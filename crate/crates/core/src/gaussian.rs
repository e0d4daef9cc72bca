//! Gaussian AR(1) forecasts matched to a PLINAR(1) process, and their
//! discretization onto the integers.
//!
//! Both matching schemes set φ = α and share μ_ε. The innovation method
//! copies the innovation variance; the marginal method picks σ²_ε so that the
//! stationary variances agree, which is always at least as large.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::forecast::{median_of, mode_of, round_half_up};
use crate::normal;
use crate::process::{innovation_moments, PlinarParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GaussianMethod {
    Innovation,
    Marginal,
    /// An AR(1) fitted directly to the data.
    Traditional,
}

impl fmt::Display for GaussianMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GaussianMethod::Innovation => "innovation",
            GaussianMethod::Marginal => "marginal",
            GaussianMethod::Traditional => "traditional",
        })
    }
}

impl FromStr for GaussianMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "innovation" => Ok(Self::Innovation),
            "marginal" => Ok(Self::Marginal),
            "traditional" => Ok(Self::Traditional),
            other => Err(Error::InvalidConfig(format!(
                "unknown gaussian method {other:?}"
            ))),
        }
    }
}

/// A Gaussian AR(1): W_t = φ W_{t−1} + ε_t with ε_t ~ N(μ_e, σ²_e).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaussianApprox {
    pub method: GaussianMethod,
    pub phi: f64,
    pub mu_e: f64,
    pub sigma2_e: f64,
}

impl GaussianApprox {
    pub fn new(method: GaussianMethod, phi: f64, mu_e: f64, sigma2_e: f64) -> Result<Self> {
        if !(phi.is_finite() && (0.0..1.0).contains(&phi)) {
            return Err(Error::invalid("phi", phi, "must lie in [0, 1)"));
        }
        if !(sigma2_e.is_finite() && sigma2_e > 0.0) {
            return Err(Error::invalid(
                "sigma2_e",
                sigma2_e,
                "must be finite and > 0",
            ));
        }
        if !mu_e.is_finite() {
            return Err(Error::invalid("mu_e", mu_e, "must be finite"));
        }
        Ok(Self {
            method,
            phi,
            mu_e,
            sigma2_e,
        })
    }

    /// Moment-matched approximation of a PLINAR(1) process.
    pub fn matched(params: &PlinarParams, method: GaussianMethod) -> Result<Self> {
        let (mu_e, sigma2_e) = match method {
            GaussianMethod::Innovation => match_innovation_moments(params),
            GaussianMethod::Marginal => match_marginal_moments(params),
            GaussianMethod::Traditional => {
                return Err(Error::InvalidConfig(
                    "the traditional AR(1) is fitted to data, not matched".into(),
                ))
            }
        };
        Self::new(method, params.alpha(), mu_e, sigma2_e)
    }

    pub fn conditional(&self, k: u32, w: f64) -> Result<(f64, f64)> {
        gaussian_conditional(k, w, self.phi, self.mu_e, self.sigma2_e)
    }

    /// Stationary mean and variance (the k → ∞ limit).
    pub fn stationary(&self) -> (f64, f64) {
        (
            self.mu_e / (1.0 - self.phi),
            self.sigma2_e / (1.0 - self.phi * self.phi),
        )
    }

    /// Point forecasts from the conditional normal at horizon k given W_n = w.
    pub fn point_forecasts(&self, k: u32, w: f64) -> Result<GaussianPointForecasts> {
        let (mean, var) = self.conditional(k, w)?;
        gaussian_point_forecasts(mean, var.sqrt())
    }
}

/// (μ_ε, σ²_ε) of the PLINAR(1) innovation.
pub fn match_innovation_moments(params: &PlinarParams) -> (f64, f64) {
    let m = innovation_moments(params);
    (m.mu_eps, m.sigma2_eps)
}

/// μ_ε as in the innovation method; σ²_ε = (1 − α²)·Var(X_t).
pub fn match_marginal_moments(params: &PlinarParams) -> (f64, f64) {
    let m = innovation_moments(params);
    let a = params.alpha();
    (m.mu_eps, (1.0 - a * a) * params.marginal().variance())
}

/// Marginal-method σ²_ε over innovation-method σ²_ε.
pub fn variance_ratio(params: &PlinarParams) -> f64 {
    match_marginal_moments(params).1 / match_innovation_moments(params).1
}

/// μ = φ^k w + μ_e(1 − φ^k)/(1 − φ),  σ² = σ²_e(1 − φ^{2k})/(1 − φ²).
pub fn gaussian_conditional(
    k: u32,
    w: f64,
    phi: f64,
    mu_e: f64,
    sigma2_e: f64,
) -> Result<(f64, f64)> {
    if k == 0 {
        return Err(Error::invalid("k", 0.0, "horizon must be >= 1"));
    }
    if !(phi.is_finite() && (0.0..1.0).contains(&phi)) {
        return Err(Error::invalid("phi", phi, "must lie in [0, 1)"));
    }
    if !(sigma2_e.is_finite() && sigma2_e > 0.0) {
        return Err(Error::invalid(
            "sigma2_e",
            sigma2_e,
            "must be finite and > 0",
        ));
    }
    let pk = phi.powi(k as i32);
    let mean = pk * w + mu_e * (1.0 - pk) / (1.0 - phi);
    let var = (1.0 - pk * pk) / (1.0 - phi * phi) * sigma2_e;
    Ok((mean, var))
}

/// Integer discretization of N(μ, σ²): q(0) = Φ(−μ/σ) and
/// q(y) = Φ((y−μ)/σ) − Φ((y−1−μ)/σ) for y ≥ 1. The upper tail beyond
/// `y_max` is left out, so the table is a sub-probability.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscretizedPmf {
    pub mu: f64,
    pub sigma: f64,
    pub q: Vec<f64>,
    /// ln q(y); finite even where q(y) underflows.
    pub ln_q: Vec<f64>,
}

impl DiscretizedPmf {
    /// G̃(y) = Φ((y − μ)/σ) for y = 0..=y_max.
    pub fn cdf(&self) -> Vec<f64> {
        (0..self.q.len())
            .map(|y| normal::cdf((y as f64 - self.mu) / self.sigma))
            .collect()
    }

    /// Mass left beyond the table, 1 − Φ((y_max − μ)/σ).
    pub fn upper_tail(&self) -> f64 {
        normal::sf(((self.q.len() - 1) as f64 - self.mu) / self.sigma)
    }
}

pub fn discretize_normal(mu: f64, sigma: f64, y_max: usize) -> Result<DiscretizedPmf> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::invalid("sigma", sigma, "must be finite and > 0"));
    }
    if !mu.is_finite() {
        return Err(Error::invalid("mu", mu, "must be finite"));
    }
    let z = |y: f64| (y - mu) / sigma;
    let ln_q: Vec<f64> = (0..=y_max)
        .map(|y| {
            if y == 0 {
                normal::ln_cdf(z(0.0))
            } else {
                normal::ln_interval(z(y as f64 - 1.0), z(y as f64))
            }
        })
        .collect();
    let q = ln_q.iter().map(|l| l.exp()).collect();
    Ok(DiscretizedPmf { mu, sigma, q, ln_q })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GaussianPointForecasts {
    pub mean_rounded: u64,
    pub median: u64,
    pub mode: u64,
}

/// Rounded mean plus the median and mode of the discretized conditional
/// normal, with the same tie rules as the PLINAR forecasts.
pub fn gaussian_point_forecasts(mean: f64, sigma: f64) -> Result<GaussianPointForecasts> {
    // the discretized law puts everything below zero at y = 0, so its median
    // and mode lie within a few sigma above max(mean, 0)
    let y_max = (mean.max(0.0) + 10.0 * sigma).ceil() as usize + 1;
    let d = discretize_normal(mean, sigma, y_max)?;
    Ok(GaussianPointForecasts {
        mean_rounded: round_half_up(mean),
        median: median_of(&d.q),
        mode: mode_of(&d.q),
    })
}
