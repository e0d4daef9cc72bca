//! The Poisson-Lindley distribution.
//!
//! PMF θ²(x + θ + 2)/(1 + θ)^{x+3} on x = 0, 1, 2, …, evaluated in log space
//! because (1 + θ)^{x+3} overflows quickly for small θ.

use rand::Rng;
use rand_distr::{Distribution, Exp, Gamma, Poisson};

use crate::error::{Error, Result};
use crate::MAX_SUPPORT;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoissonLindley {
    theta: f64,
}

impl PoissonLindley {
    pub fn new(theta: f64) -> Result<Self> {
        if !(theta.is_finite() && theta > 0.0) {
            return Err(Error::invalid("theta", theta, "must be finite and > 0"));
        }
        Ok(Self { theta })
    }

    /// Inverts the mean map: the unique θ > 0 with mean (θ+2)/(θ(θ+1)) = `mu`.
    pub fn from_mean(mu: f64) -> Result<Self> {
        Self::new(theta_from_mean(mu)?)
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn ln_pmf(&self, x: u64) -> f64 {
        let t = self.theta;
        let x = x as f64;
        2.0 * t.ln() + (x + t + 2.0).ln() - (x + 3.0) * t.ln_1p()
    }

    pub fn pmf(&self, x: u64) -> f64 {
        self.ln_pmf(x).exp()
    }

    /// P(X ≤ x) by forward summation of the PMF.
    pub fn cdf(&self, x: u64) -> f64 {
        let mut acc = NeumaierSum::default();
        for y in 0..=x {
            acc.add(self.pmf(y));
            if acc.value() >= 1.0 {
                return 1.0;
            }
        }
        acc.value()
    }

    pub fn mean(&self) -> f64 {
        let t = self.theta;
        (t + 2.0) / (t * (t + 1.0))
    }

    pub fn variance(&self) -> f64 {
        let t = self.theta;
        (t.powi(3) + 4.0 * t * t + 6.0 * t + 2.0) / (t * t * (t + 1.0).powi(2))
    }

    /// PMF table over 0..=X*, where X* is the smallest x whose cumulative
    /// mass reaches 1 − `tail`.
    pub fn truncated_pmf(&self, tail: f64) -> Result<Vec<f64>> {
        truncate_support(tail, |y| self.pmf(y as u64))
    }

    pub fn truncation_point(&self, tail: f64) -> Result<usize> {
        Ok(self.truncated_pmf(tail)?.len() - 1)
    }

    /// Draws via the mixture representation: a Poisson count whose rate is
    /// Exp(θ) with probability θ/(θ+1) and Gamma(2, θ) otherwise.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let t = self.theta;
        let rate = if rng.random::<f64>() < t / (t + 1.0) {
            Exp::new(t).expect("theta validated").sample(rng)
        } else {
            Gamma::new(2.0, 1.0 / t)
                .expect("theta validated")
                .sample(rng)
        };
        if rate <= 0.0 {
            return 0;
        }
        Poisson::new(rate)
            .expect("positive finite rate")
            .sample(rng) as u64
    }
}

/// θ = (−(μ − 1) + √((μ − 1)² + 8μ)) / (2μ).
pub fn theta_from_mean(mu: f64) -> Result<f64> {
    if !(mu.is_finite() && mu > 0.0) {
        return Err(Error::InvalidMean(mu));
    }
    let b = mu - 1.0;
    let disc = (b * b + 8.0 * mu).sqrt();
    // for μ > 1 the textbook form cancels; use the conjugate
    let theta = if b > 0.0 {
        4.0 / (b + disc)
    } else {
        (-b + disc) / (2.0 * mu)
    };
    Ok(theta)
}

/// Tabulates `pmf(0), pmf(1), …` until the cumulative mass reaches
/// 1 − `tail`.
///
/// Once more than half the mass is in and terms have fallen below
/// 1e-3·ε while decreasing, the remainder is numerically invisible and the
/// table stops there even if rounding kept the running sum below target.
pub fn truncate_support<F>(tail: f64, mut pmf: F) -> Result<Vec<f64>>
where
    F: FnMut(usize) -> f64,
{
    if !(tail > 0.0 && tail < 1.0) {
        return Err(Error::invalid("tail", tail, "must lie in (0, 1)"));
    }
    let target = 1.0 - tail;
    let negligible = 1e-3 * f64::EPSILON;
    let mut table = Vec::new();
    let mut acc = NeumaierSum::default();
    let mut prev = f64::INFINITY;
    for y in 0..MAX_SUPPORT {
        let p = pmf(y);
        if !p.is_finite() || p < 0.0 {
            return Err(Error::invalid(
                "pmf",
                p,
                "table entry must be finite and >= 0",
            ));
        }
        table.push(p);
        acc.add(p);
        if acc.value() >= target || (acc.value() > 0.5 && p < negligible && p <= prev) {
            return Ok(table);
        }
        prev = p;
    }
    Err(Error::TruncationCap {
        tail,
        cap: MAX_SUPPORT,
    })
}

/// Compensated running sum.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.comp
    }
}
