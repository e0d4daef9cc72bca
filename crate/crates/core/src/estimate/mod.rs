//! Parameter estimation for PLINAR(1) and for the Gaussian AR(p) baseline.

mod ar;

pub use ar::{
    exact_log_likelihood, fit_gaussian_ar, select_ar_order, ArFit, ArMethod, OrderRow,
    OrderSelection,
};

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::forecast::conditional_pmf;
use crate::optim::{nelder_mead, NelderMeadConfig};
use crate::pl::{theta_from_mean, PoissonLindley};
use crate::process::PlinarParams;
use crate::series::CountSeries;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Estimator {
    #[serde(rename = "CLS")]
    Cls,
    #[serde(rename = "YW")]
    Yw,
    #[serde(rename = "ML")]
    Ml,
}

impl Estimator {
    pub const ALL: [Estimator; 3] = [Estimator::Cls, Estimator::Yw, Estimator::Ml];

    /// The Gaussian AR fitting method that plays the same role.
    pub fn ar_counterpart(self) -> ArMethod {
        match self {
            Estimator::Cls => ArMethod::Ols,
            Estimator::Yw => ArMethod::Yw,
            Estimator::Ml => ArMethod::Mle,
        }
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Estimator::Cls => "CLS",
            Estimator::Yw => "YW",
            Estimator::Ml => "ML",
        })
    }
}

impl FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "cls" => Ok(Estimator::Cls),
            "yw" => Ok(Estimator::Yw),
            "ml" | "mle" => Ok(Estimator::Ml),
            other => Err(Error::InvalidConfig(format!("unknown estimator {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimationResult {
    pub method: Estimator,
    pub alpha_hat: f64,
    pub theta_hat: f64,
    /// Estimated marginal mean (CLS and YW intermediate; implied mean for ML).
    pub mu_hat: f64,
    /// False when α̂ falls outside [0, 1); the estimate is reported as is.
    pub alpha_in_range: bool,
    pub loglik: Option<f64>,
    pub diagnostics: Option<MlDiagnostics>,
}

impl EstimationResult {
    /// The fitted parameters, or an error if α̂ is out of range.
    pub fn params(&self) -> Result<PlinarParams> {
        if !self.alpha_in_range {
            return Err(Error::invalid(
                "alpha_hat",
                self.alpha_hat,
                "estimate outside [0, 1); resolve before forecasting",
            ));
        }
        PlinarParams::new(self.alpha_hat, self.theta_hat)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MlDiagnostics {
    pub converged: bool,
    pub iterations: usize,
    pub evaluations: usize,
    /// α̂ pinned against the edge of [0, 1).
    pub boundary: bool,
    pub starts: Vec<[f64; 2]>,
    /// Log-likelihood reached from each start.
    pub start_logliks: Vec<f64>,
}

fn check_len(series: &CountSeries, min: usize) -> Result<()> {
    if series.len() < min {
        return Err(Error::DegenerateSeries(format!(
            "need at least {min} observations, got {}",
            series.len()
        )));
    }
    Ok(())
}

/// Conditional least squares: regress X_t on X_{t−1}, then invert the mean.
pub fn fit_cls(series: &CountSeries) -> Result<EstimationResult> {
    check_len(series, 3)?;
    let x = series.as_f64();
    let m = (x.len() - 1) as f64;
    let (prev, next) = (&x[..x.len() - 1], &x[1..]);
    let s_prev: f64 = prev.iter().sum();
    let s_next: f64 = next.iter().sum();
    let s_cross: f64 = prev.iter().zip(next).map(|(a, b)| a * b).sum();
    let s_prev2: f64 = prev.iter().map(|a| a * a).sum();
    let denom = m * s_prev2 - s_prev * s_prev;
    if denom == 0.0 {
        return Err(Error::DegenerateSeries(
            "lagged values are constant; CLS slope undefined".into(),
        ));
    }
    let alpha = (m * s_cross - s_next * s_prev) / denom;
    if alpha == 1.0 {
        return Err(Error::DegenerateSeries("CLS slope is exactly 1".into()));
    }
    let mu = (s_next - alpha * s_prev) / (m * (1.0 - alpha));
    if !(mu > 0.0) {
        return Err(Error::InvalidMean(mu));
    }
    Ok(EstimationResult {
        method: Estimator::Cls,
        alpha_hat: alpha,
        theta_hat: theta_from_mean(mu)?,
        mu_hat: mu,
        alpha_in_range: (0.0..1.0).contains(&alpha),
        loglik: None,
        diagnostics: None,
    })
}

/// Yule-Walker: lag-one sample autocorrelation and θ̂ from the sample mean.
pub fn fit_yw(series: &CountSeries) -> Result<EstimationResult> {
    check_len(series, 2)?;
    let x = series.as_f64();
    let mean = series.mean();
    let gamma0: f64 = x.iter().map(|v| (v - mean).powi(2)).sum();
    if gamma0 == 0.0 {
        return Err(Error::DegenerateSeries("sample variance is zero".into()));
    }
    let gamma1: f64 = x.windows(2).map(|w| (w[1] - mean) * (w[0] - mean)).sum();
    let alpha = gamma1 / gamma0;
    Ok(EstimationResult {
        method: Estimator::Yw,
        alpha_hat: alpha,
        theta_hat: theta_from_mean(mean)?,
        mu_hat: mean,
        alpha_in_range: (0.0..1.0).contains(&alpha),
        loglik: None,
        diagnostics: None,
    })
}

/// Exact log-likelihood: ln PL(X_1) + Σ ln P(X_t | X_{t−1}).
pub fn log_likelihood(series: &CountSeries, params: &PlinarParams) -> Result<f64> {
    check_len(series, 1)?;
    Ok(Transitions::new(series).log_likelihood(params))
}

/// Transition counts, so each distinct (x_{t−1}, x_t) pair is evaluated once.
struct Transitions {
    first: u64,
    pairs: BTreeMap<(u64, u64), usize>,
}

impl Transitions {
    fn new(series: &CountSeries) -> Self {
        let v = series.values();
        let mut pairs = BTreeMap::new();
        for w in v.windows(2) {
            *pairs.entry((w[0], w[1])).or_insert(0) += 1;
        }
        Self { first: v[0], pairs }
    }

    fn log_likelihood(&self, params: &PlinarParams) -> f64 {
        let mut ll = PoissonLindley::new(params.theta())
            .expect("validated")
            .ln_pmf(self.first);
        for (&(from, to), &count) in &self.pairs {
            let p = conditional_pmf(to, 1, from, params).expect("k = 1");
            ll += count as f64 * p.ln();
        }
        ll
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlConfig {
    pub simplex: NelderMeadConfig,
    /// Explicit (α, θ) starting points; when empty a default five-point set
    /// is derived from the data.
    pub starts: Vec<(f64, f64)>,
}

impl Default for MlConfig {
    fn default() -> Self {
        Self {
            simplex: NelderMeadConfig {
                step: 0.5,
                f_tol: 1e-8,
                x_tol: 1e-6,
                max_iter: 5_000,
            },
            starts: Vec::new(),
        }
    }
}

/// α on the logit scale and θ on the log scale.
fn to_unconstrained(alpha: f64, theta: f64) -> [f64; 2] {
    [(alpha / (1.0 - alpha)).ln(), theta.ln()]
}

fn to_constrained(u: &[f64]) -> (f64, f64) {
    (1.0 / (1.0 + (-u[0]).exp()), u[1].exp())
}

fn default_starts(series: &CountSeries) -> Result<Vec<(f64, f64)>> {
    let theta = theta_from_mean(series.mean())?;
    let mut starts = vec![(0.1, theta), (0.3, theta), (0.5, theta), (0.7, theta)];
    let yw = fit_yw(series)?;
    starts.push((yw.alpha_hat.clamp(0.02, 0.95), yw.theta_hat));
    Ok(starts)
}

/// Maximum likelihood by multistart Nelder-Mead in (logit α, ln θ).
pub fn fit_ml(series: &CountSeries, config: &MlConfig) -> Result<EstimationResult> {
    check_len(series, 2)?;
    if series.values().iter().all(|&v| v == 0) {
        return Err(Error::DegenerateSeries("all observations are zero".into()));
    }
    let transitions = Transitions::new(series);
    let starts = if config.starts.is_empty() {
        default_starts(series)?
    } else {
        config.starts.clone()
    };

    let objective = |u: &[f64]| {
        let (a, t) = to_constrained(u);
        match PlinarParams::new(a, t) {
            Ok(p) => -transitions.log_likelihood(&p),
            Err(_) => f64::INFINITY,
        }
    };

    let mut best: Option<crate::optim::Minimum> = None;
    let mut start_logliks = Vec::with_capacity(starts.len());
    let mut evaluations = 0;
    for &(a0, t0) in &starts {
        let a0 = a0.clamp(1e-6, 1.0 - 1e-6);
        let t0 = t0.max(1e-6);
        let mut run = nelder_mead(objective, &to_unconstrained(a0, t0), &config.simplex);
        evaluations += run.evaluations;
        // one restart from the optimum guards against a collapsed simplex
        let restart = nelder_mead(objective, &run.x, &config.simplex);
        evaluations += restart.evaluations;
        if restart.fx <= run.fx {
            run = crate::optim::Minimum {
                iterations: run.iterations + restart.iterations,
                ..restart
            };
        }
        start_logliks.push(-run.fx);
        if best.as_ref().is_none_or(|b| run.fx < b.fx) {
            best = Some(run);
        }
    }
    let best = best.expect("at least one start");
    if !best.converged || !best.fx.is_finite() {
        return Err(Error::NonConvergence {
            iterations: best.iterations,
            best: -best.fx,
        });
    }
    let (alpha, theta) = to_constrained(&best.x);
    let pl = PoissonLindley::new(theta)?;
    Ok(EstimationResult {
        method: Estimator::Ml,
        alpha_hat: alpha,
        theta_hat: theta,
        mu_hat: pl.mean(),
        alpha_in_range: (0.0..1.0).contains(&alpha),
        loglik: Some(-best.fx),
        diagnostics: Some(MlDiagnostics {
            converged: best.converged,
            iterations: best.iterations,
            evaluations,
            boundary: !(1e-6..1.0 - 1e-6).contains(&alpha),
            starts: starts.iter().map(|&(a, t)| [a, t]).collect(),
            start_logliks,
        }),
    })
}

/// Runs one estimator with default settings.
pub fn fit(series: &CountSeries, method: Estimator) -> Result<EstimationResult> {
    match method {
        Estimator::Cls => fit_cls(series),
        Estimator::Yw => fit_yw(series),
        Estimator::Ml => fit_ml(series, &MlConfig::default()),
    }
}
