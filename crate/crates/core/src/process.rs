//! The PLINAR(1) process X_t = α∘X_{t−1} + ε_t with Poisson-Lindley marginals.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forecast::{innovation_law_is_proper, z_step_pmf};
use crate::pl::{truncate_support, PoissonLindley};
use crate::series::CountSeries;

/// Thinning probability α ∈ [0, 1) and Poisson-Lindley parameter θ > 0.
///
/// Not every such pair defines a process: for small θ and large α the
/// innovation law implied by the Poisson-Lindley marginal puts negative
/// mass at z = 1 (e.g. α = 0.45, θ = 0.1). Those pairs are rejected.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams")]
pub struct PlinarParams {
    alpha: f64,
    theta: f64,
}

impl PlinarParams {
    pub fn new(alpha: f64, theta: f64) -> Result<Self> {
        if !(alpha.is_finite() && (0.0..1.0).contains(&alpha)) {
            return Err(Error::invalid("alpha", alpha, "must lie in [0, 1)"));
        }
        PoissonLindley::new(theta)?;
        if !innovation_law_is_proper(alpha, theta) {
            return Err(Error::invalid(
                "theta",
                theta,
                "innovation law has negative mass at this (alpha, theta); no PLINAR(1) process exists",
            ));
        }
        Ok(Self { alpha, theta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn marginal(&self) -> PoissonLindley {
        PoissonLindley::new(self.theta).expect("theta validated")
    }
}

#[derive(Deserialize)]
struct RawParams {
    alpha: f64,
    theta: f64,
}

impl TryFrom<RawParams> for PlinarParams {
    type Error = Error;

    fn try_from(raw: RawParams) -> Result<Self> {
        Self::new(raw.alpha, raw.theta)
    }
}

/// Mean and variance of the innovation ε_t.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InnovationMoments {
    pub mu_eps: f64,
    pub sigma2_eps: f64,
}

/// α∘x: a Binomial(x, α) draw.
pub fn binomial_thin<R: Rng + ?Sized>(x: u64, alpha: f64, rng: &mut R) -> Result<u64> {
    if !(alpha.is_finite() && (0.0..=1.0).contains(&alpha)) {
        return Err(Error::invalid("alpha", alpha, "must lie in [0, 1]"));
    }
    if x == 0 || alpha == 0.0 {
        return Ok(0);
    }
    if alpha == 1.0 {
        return Ok(x);
    }
    Ok(Binomial::new(x, alpha)
        .expect("alpha validated")
        .sample(rng))
}

/// P(ε_t = z), the one-step instance of the k-step innovation law.
pub fn innovation_pmf(z: u64, params: &PlinarParams) -> f64 {
    z_step_pmf(z, 1, params).expect("k = 1 is a valid horizon")
}

/// μ_ε = (1−α)(θ+2)/(θ(θ+1)),
/// σ²_ε = (1−α)[θ³+4θ²+6θ+2+α(θ²+4θ+2)]/(θ²(θ+1)²).
pub fn innovation_moments(params: &PlinarParams) -> InnovationMoments {
    let (a, t) = (params.alpha, params.theta);
    let denom = t * t * (t + 1.0).powi(2);
    InnovationMoments {
        mu_eps: (1.0 - a) * (t + 2.0) / (t * (t + 1.0)),
        sigma2_eps: (1.0 - a)
            * (t.powi(3) + 4.0 * t * t + 6.0 * t + 2.0 + a * (t * t + 4.0 * t + 2.0))
            / denom,
    }
}

/// Inverse-CDF sampler over the tabulated innovation law.
#[derive(Debug, Clone)]
pub struct InnovationSampler {
    params: PlinarParams,
    cdf: Vec<f64>,
}

impl InnovationSampler {
    pub fn new(params: PlinarParams) -> Result<Self> {
        let pmf = truncate_support(1e-15, |z| innovation_pmf(z as u64, &params))?;
        let mut acc = 0.0;
        let cdf = pmf
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        Ok(Self { params, cdf })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let u: f64 = rng.random();
        let idx = self.cdf.partition_point(|&c| c <= u);
        if idx < self.cdf.len() {
            return idx as u64;
        }
        // u landed in the truncated tail; continue the inversion term by term
        let mut acc = *self.cdf.last().expect("non-empty table");
        let mut z = self.cdf.len() as u64;
        loop {
            let p = innovation_pmf(z, &self.params);
            acc += p;
            if acc > u || p == 0.0 {
                return z;
            }
            z += 1;
        }
    }
}

/// Simulates `n` values of a stationary path started from X_0 ~ PL(θ),
/// discarding the first `burn_in` values.
pub fn simulate(n: usize, params: &PlinarParams, seed: u64, burn_in: usize) -> Result<CountSeries> {
    if n == 0 {
        return Err(Error::invalid("n", 0.0, "path length must be >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let innovations = InnovationSampler::new(*params)?;
    let mut values = Vec::with_capacity(n);
    let mut x = params.marginal().sample(&mut rng);
    for t in 0..burn_in + n {
        if t > 0 {
            x = binomial_thin(x, params.alpha, &mut rng)? + innovations.sample(&mut rng);
        }
        if t >= burn_in {
            values.push(x);
        }
    }
    Ok(CountSeries::new(values))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(a: f64, t: f64) -> PlinarParams {
        PlinarParams::new(a, t).unwrap()
    }

    #[test]
    fn param_validation() {
        assert!(PlinarParams::new(1.0, 2.0).is_err());
        assert!(PlinarParams::new(-0.1, 2.0).is_err());
        assert!(PlinarParams::new(0.5, 0.0).is_err());
        assert!(PlinarParams::new(0.0, 2.0).is_ok());
    }

    #[test]
    fn improper_innovation_region_is_rejected() {
        // sign of P(ε = 1) from dividing the marginal PGF by the PGF of the
        // thinned marginal, computed independently at 40 digits
        for (a, t, proper) in [
            (0.3, 0.1, true),
            (0.9, 0.2, true),
            (0.45, 0.1, false),
            (0.95, 0.16, false),
            (0.5, 0.05, false),
            (0.2, 0.05, false),
        ] {
            assert_eq!(PlinarParams::new(a, t).is_ok(), proper, "({a}, {t})");
        }
        assert!(serde_json::from_str::<PlinarParams>(r#"{"alpha":0.45,"theta":0.1}"#).is_err());
        let p: PlinarParams = serde_json::from_str(r#"{"alpha":0.3,"theta":2.0}"#).unwrap();
        assert_eq!((p.alpha(), p.theta()), (0.3, 2.0));
    }

    #[test]
    fn thinning_edges() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(binomial_thin(5, 0.0, &mut rng).unwrap(), 0);
        assert_eq!(binomial_thin(5, 1.0, &mut rng).unwrap(), 5);
        assert!(binomial_thin(5, 1.5, &mut rng).is_err());
        for _ in 0..100 {
            assert!(binomial_thin(7, 0.4, &mut rng).unwrap() <= 7);
        }
    }

    #[test]
    fn innovation_is_marginal_without_thinning() {
        let p = params(0.0, 1.7);
        let pl = p.marginal();
        for z in 0..60 {
            assert!((innovation_pmf(z, &p) - pl.pmf(z)).abs() < 1e-15);
        }
        let m = innovation_moments(&p);
        assert!((m.mu_eps - pl.mean()).abs() < 1e-15);
        assert!((m.sigma2_eps - pl.variance()).abs() < 1e-15);
    }

    #[test]
    fn innovation_moment_values() {
        let m = innovation_moments(&params(0.1, 0.5));
        assert!((m.mu_eps - 3.0).abs() < 1e-14);
        // 0.9 * (0.125 + 1 + 3 + 2 + 0.1 * 4.25) / (0.25 * 2.25)
        assert!((m.sigma2_eps - 0.9 * 6.55 / 0.5625).abs() < 1e-12);
        assert!((m.sigma2_eps - 10.48).abs() < 5e-3);
    }

    #[test]
    fn innovation_moments_vanish_as_alpha_approaches_one() {
        let ms: Vec<_> = [0.9, 0.99, 0.999]
            .iter()
            .map(|&a| innovation_moments(&params(a, 2.0)))
            .collect();
        for w in ms.windows(2) {
            assert!(w[1].mu_eps < w[0].mu_eps);
            assert!(w[1].sigma2_eps < w[0].sigma2_eps);
        }
        assert!(ms[2].mu_eps < 1e-3 && ms[2].sigma2_eps < 1e-2);
    }

    #[test]
    fn innovation_grid_normalizes_and_matches_moments() {
        for ai in 1..=19 {
            let a = ai as f64 * 0.05;
            for &t in &[0.1, 0.5, 1.0, 2.0, 5.0, 10.0] {
                // small θ with large α has no valid innovation law
                let Ok(p) = PlinarParams::new(a, t) else {
                    continue;
                };
                let table = truncate_support(1e-15, |z| innovation_pmf(z as u64, &p)).unwrap();
                let mass: f64 = table.iter().sum();
                assert!((mass - 1.0).abs() < 1e-10, "({a}, {t}) mass {mass}");
                let m1: f64 = table.iter().enumerate().map(|(z, q)| z as f64 * q).sum();
                let m2: f64 = table
                    .iter()
                    .enumerate()
                    .map(|(z, q)| (z * z) as f64 * q)
                    .sum();
                let m = innovation_moments(&p);
                assert!((m1 - m.mu_eps).abs() < 1e-8, "({a}, {t}) mean");
                assert!((m2 - m1 * m1 - m.sigma2_eps).abs() < 1e-8, "({a}, {t}) var");
            }
        }
    }

    /// The innovation law written as ε = I·H with P(I = 0) = α and H from the
    /// three-component geometric mixture g(h). The first component must carry
    /// the power h on its geometric factor for the law to be proper; the
    /// variant without it is shown to fail normalization.
    #[test]
    fn mixture_form_of_innovation_law() {
        fn g(h: u64, a: f64, t: f64, exponent_on_first: bool) -> f64 {
            let d = t * (1.0 - a) + 1.0;
            let p = t / (1.0 + t);
            let first_w = (t * t * (1.0 - a).powi(2) + t * (1.0 - a * a) + 2.0 * a) / (d * d);
            let first = if exponent_on_first {
                first_w * p * (1.0 - p).powi(h as i32)
            } else {
                first_w * p * (1.0 - p)
            };
            let second = (1.0 - a) / d * (h as f64 + 1.0) * p * p * (1.0 - p).powi(h as i32);
            let s = (t + 1.0) / (t + 1.0 + a);
            let third = -a / (d * d) * s * (1.0 - s).powi(h as i32);
            first + second + third
        }
        for &(a, t) in &[(0.2297, 2.1671), (0.5, 2.0), (0.9, 0.5)] {
            let p = params(a, t);
            for z in 0..80u64 {
                let via_mixture = if z == 0 {
                    a + (1.0 - a) * g(0, a, t, true)
                } else {
                    (1.0 - a) * g(z, a, t, true)
                };
                assert!((via_mixture - innovation_pmf(z, &p)).abs() < 1e-14);
            }
            let printed_mass: f64 = (0..2000).map(|h| g(h, a, t, false)).sum();
            assert!(!printed_mass.is_finite() || (printed_mass - 1.0).abs() > 1e-3);
        }
    }

    #[test]
    fn simulation_is_deterministic() {
        let p = params(0.5, 2.0);
        let a = simulate(500, &p, 7, 0).unwrap();
        let b = simulate(500, &p, 7, 0).unwrap();
        let c = simulate(500, &p, 8, 0).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(simulate(10, &p, 7, 5).unwrap().len(), 10);
        assert!(simulate(0, &p, 7, 0).is_err());
    }
}
