//! Gaussian AR(p) with intercept, fitted by least squares, Yule-Walker or
//! exact maximum likelihood.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gaussian::{GaussianApprox, GaussianMethod};
use crate::optim::{nelder_mead, NelderMeadConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ArMethod {
    Ols,
    Yw,
    Mle,
}

impl fmt::Display for ArMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ArMethod::Ols => "ols",
            ArMethod::Yw => "yw",
            ArMethod::Mle => "mle",
        })
    }
}

impl FromStr for ArMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ols" | "ls" => Ok(ArMethod::Ols),
            "yw" => Ok(ArMethod::Yw),
            "mle" | "ml" => Ok(ArMethod::Mle),
            other => Err(Error::InvalidConfig(format!("unknown AR method {other:?}"))),
        }
    }
}

/// W_t = c + φ₁W_{t−1} + … + φ_pW_{t−p} + e_t, e_t ~ N(0, σ²).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArFit {
    pub method: ArMethod,
    pub order: usize,
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    /// Process mean c / (1 − Σφ).
    pub mean: f64,
    pub sigma2: f64,
    /// Exact Gaussian log-likelihood at the fitted parameters over all n
    /// observations; the conditional one if the fit is non-stationary.
    pub loglik: f64,
    pub aic: f64,
    pub aicc: f64,
    pub bic: f64,
    pub n: usize,
}

impl ArFit {
    /// The fit as an AR(1) forecaster (order 1 and 0 ≤ φ < 1 only).
    pub fn to_gaussian(&self) -> Result<GaussianApprox> {
        if self.order != 1 {
            return Err(Error::InvalidConfig(format!(
                "forecasting needs an AR(1) fit, got order {}",
                self.order
            )));
        }
        GaussianApprox::new(
            GaussianMethod::Traditional,
            self.coefficients[0],
            self.intercept,
            self.sigma2,
        )
    }
}

pub fn fit_gaussian_ar(series: &[f64], p: usize, method: ArMethod) -> Result<ArFit> {
    if p == 0 {
        return Err(Error::InvalidConfig("AR order must be at least 1".into()));
    }
    let n = series.len();
    if n <= p + 1 {
        return Err(Error::DegenerateSeries(format!(
            "AR({p}) needs more than {} observations, got {n}",
            p + 1
        )));
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    if series.iter().all(|&v| v == mean) {
        return Err(Error::DegenerateSeries("series is constant".into()));
    }
    let (mu, phi, sigma2) = match method {
        ArMethod::Ols => fit_ols(series, p)?,
        ArMethod::Yw => fit_yw(series, p)?,
        ArMethod::Mle => fit_mle(series, p)?,
    };
    let loglik = exact_log_likelihood(series, mu, &phi, sigma2)
        .unwrap_or_else(|_| conditional_part(series, mu, &phi, sigma2));
    let k = (p + 2) as f64;
    let nf = n as f64;
    let aic = -2.0 * loglik + 2.0 * k;
    let aicc = if nf - k - 1.0 > 0.0 {
        aic + 2.0 * k * (k + 1.0) / (nf - k - 1.0)
    } else {
        f64::INFINITY
    };
    Ok(ArFit {
        method,
        order: p,
        intercept: mu * (1.0 - phi.iter().sum::<f64>()),
        coefficients: phi,
        mean: mu,
        sigma2,
        loglik,
        aic,
        aicc,
        bic: -2.0 * loglik + k * nf.ln(),
        n,
    })
}

/// Returns (mean, φ, σ²).
fn fit_ols(x: &[f64], p: usize) -> Result<(f64, Vec<f64>, f64)> {
    let rows = x.len() - p;
    let design = DMatrix::from_fn(rows, p + 1, |i, j| if j == 0 { 1.0 } else { x[p + i - j] });
    let y = DVector::from_iterator(rows, x[p..].iter().copied());
    let xtx = design.transpose() * &design;
    let beta = xtx
        .cholesky()
        .ok_or(Error::SingularDesign)?
        .solve(&(design.transpose() * &y));
    let resid = &y - &design * &beta;
    let dof = rows as f64 - (p + 1) as f64;
    if dof <= 0.0 {
        return Err(Error::DegenerateSeries(
            "no residual degrees of freedom".into(),
        ));
    }
    let sigma2 = resid.norm_squared() / dof;
    if !(sigma2 > 0.0) {
        return Err(Error::DegenerateSeries("zero residual variance".into()));
    }
    let phi: Vec<f64> = beta.iter().skip(1).copied().collect();
    let denom = 1.0 - phi.iter().sum::<f64>();
    if denom == 0.0 {
        return Err(Error::SingularDesign);
    }
    Ok((beta[0] / denom, phi, sigma2))
}

fn autocovariances(x: &[f64], max_lag: usize) -> Vec<f64> {
    let n = x.len();
    let m = x.iter().sum::<f64>() / n as f64;
    (0..=max_lag)
        .map(|h| (h..n).map(|t| (x[t] - m) * (x[t - h] - m)).sum::<f64>() / n as f64)
        .collect()
}

fn toeplitz(c: &[f64], p: usize) -> DMatrix<f64> {
    DMatrix::from_fn(p, p, |i, j| c[i.abs_diff(j)])
}

fn fit_yw(x: &[f64], p: usize) -> Result<(f64, Vec<f64>, f64)> {
    let c = autocovariances(x, p);
    let r = DVector::from_iterator(p, c[1..=p].iter().copied());
    let phi = toeplitz(&c, p)
        .cholesky()
        .ok_or(Error::SingularDesign)?
        .solve(&r);
    let sigma2 = c[0] - phi.dot(&r);
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    Ok((mean, phi.iter().copied().collect(), sigma2))
}

/// Durbin-Levinson map from partial autocorrelations in (−1, 1) to a
/// stationary coefficient vector.
fn pacf_to_phi(r: &[f64]) -> Vec<f64> {
    let mut phi: Vec<f64> = Vec::with_capacity(r.len());
    for (k, &rk) in r.iter().enumerate() {
        let prev = phi.clone();
        for j in 0..k {
            phi[j] = prev[j] - rk * prev[k - 1 - j];
        }
        phi.push(rk);
    }
    phi
}

/// Inverse of [`pacf_to_phi`]; `None` if φ is not stationary.
fn phi_to_pacf(phi: &[f64]) -> Option<Vec<f64>> {
    let p = phi.len();
    let mut cur = phi.to_vec();
    let mut r = vec![0.0; p];
    for k in (0..p).rev() {
        let rk = cur[k];
        if !(rk.abs() < 1.0) {
            return None;
        }
        r[k] = rk;
        let d = 1.0 - rk * rk;
        cur = (0..k).map(|j| (cur[j] + rk * cur[k - 1 - j]) / d).collect();
    }
    Some(r)
}

fn fit_mle(x: &[f64], p: usize) -> Result<(f64, Vec<f64>, f64)> {
    let (mu0, phi0, s0) = fit_yw(x, p)?;
    let pacf0 = phi_to_pacf(&phi0).unwrap_or_else(|| vec![0.0; p]);
    let mut start = Vec::with_capacity(p + 2);
    start.push(mu0);
    start.extend(pacf0.iter().map(|r| r.clamp(-0.99, 0.99).atanh()));
    start.push(s0.max(1e-8).ln());

    let unpack = |u: &[f64]| {
        let r: Vec<f64> = u[1..=p].iter().map(|v| v.tanh()).collect();
        (u[0], pacf_to_phi(&r), u[p + 1].exp())
    };
    let objective = |u: &[f64]| {
        let (mu, phi, s2) = unpack(u);
        exact_log_likelihood(x, mu, &phi, s2).map_or(f64::INFINITY, |ll| -ll)
    };
    let cfg = NelderMeadConfig {
        step: 0.2,
        f_tol: 1e-10,
        x_tol: 1e-8,
        max_iter: 20_000,
    };
    let mut best = nelder_mead(objective, &start, &cfg);
    // restart until the simplex stops finding improvement
    for _ in 0..5 {
        let again = nelder_mead(objective, &best.x, &cfg);
        let improved = best.fx - again.fx > 1e-10;
        best = again;
        if !improved {
            break;
        }
    }
    if !best.converged {
        return Err(Error::NonConvergence {
            iterations: best.iterations,
            best: -best.fx,
        });
    }
    Ok(unpack(&best.x))
}

/// Autocovariances γ₀..γ_p of a stationary AR(p) with innovation variance σ².
fn model_autocovariances(phi: &[f64], sigma2: f64) -> Result<Vec<f64>> {
    let p = phi.len();
    // γ_h − Σ_j φ_j γ_{|h−j|} = σ² 1{h = 0}, h = 0..p
    let mut a = DMatrix::<f64>::identity(p + 1, p + 1);
    for h in 0..=p {
        for (j, &f) in phi.iter().enumerate() {
            a[(h, h.abs_diff(j + 1))] -= f;
        }
    }
    let mut b = DVector::<f64>::zeros(p + 1);
    b[0] = sigma2;
    let gamma = a.lu().solve(&b).ok_or(Error::SingularDesign)?;
    Ok(gamma.iter().copied().collect())
}

/// Exact Gaussian log-likelihood: the stationary joint density of the first
/// p observations times the one-step conditional densities of the rest.
pub fn exact_log_likelihood(x: &[f64], mean: f64, phi: &[f64], sigma2: f64) -> Result<f64> {
    let p = phi.len();
    if x.len() < p || !(sigma2 > 0.0) {
        return Err(Error::invalid("sigma2", sigma2, "must be > 0 with n >= p"));
    }
    if phi_to_pacf(phi).is_none() {
        return Err(Error::invalid(
            "phi",
            phi[0],
            "AR polynomial is not stationary",
        ));
    }
    let gamma = model_autocovariances(phi, sigma2)?;
    let cov = toeplitz(&gamma, p);
    let chol = cov.cholesky().ok_or(Error::SingularDesign)?;
    let d = DVector::from_iterator(p, x[..p].iter().map(|v| v - mean));
    let quad = d.dot(&chol.solve(&d));
    let ln_det = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    let mut ll = -0.5 * (p as f64 * (2.0 * PI).ln() + ln_det + quad);
    ll += conditional_part(x, mean, phi, sigma2);
    Ok(ll)
}

/// Sum of one-step densities given the first p observations.
fn conditional_part(x: &[f64], mean: f64, phi: &[f64], sigma2: f64) -> f64 {
    let p = phi.len();
    let mut ll = 0.0;
    for t in p..x.len() {
        let pred = mean
            + phi
                .iter()
                .enumerate()
                .map(|(j, f)| f * (x[t - 1 - j] - mean))
                .sum::<f64>();
        let e = x[t] - pred;
        ll -= 0.5 * ((2.0 * PI * sigma2).ln() + e * e / sigma2);
    }
    ll
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderRow {
    pub p: usize,
    pub loglik: f64,
    pub aic: f64,
    pub aicc: f64,
    pub bic: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderSelection {
    pub rows: Vec<OrderRow>,
    pub best_aic: usize,
    pub best_aicc: usize,
    pub best_bic: usize,
}

/// Fits AR(1)..AR(p_max) and reports the order minimizing each criterion.
pub fn select_ar_order(series: &[f64], p_max: usize, method: ArMethod) -> Result<OrderSelection> {
    if p_max == 0 {
        return Err(Error::InvalidConfig("p_max must be at least 1".into()));
    }
    let rows = (1..=p_max)
        .map(|p| {
            let f = fit_gaussian_ar(series, p, method)?;
            Ok(OrderRow {
                p,
                loglik: f.loglik,
                aic: f.aic,
                aicc: f.aicc,
                bic: f.bic,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let argmin = |key: fn(&OrderRow) -> f64| {
        rows.iter()
            .min_by(|a, b| key(a).total_cmp(&key(b)))
            .map_or(1, |r| r.p)
    };
    Ok(OrderSelection {
        best_aic: argmin(|r| r.aic),
        best_aicc: argmin(|r| r.aicc),
        best_bic: argmin(|r| r.bic),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::sex_offences;

    #[test]
    fn pacf_roundtrip() {
        let r = [0.4, -0.3, 0.2];
        let phi = pacf_to_phi(&r);
        let back = phi_to_pacf(&phi).unwrap();
        for (a, b) in r.iter().zip(&back) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(phi_to_pacf(&[1.2]).is_none());
    }

    #[test]
    fn ar1_autocovariance() {
        let g = model_autocovariances(&[0.6], 2.0).unwrap();
        assert!((g[0] - 2.0 / 0.64).abs() < 1e-12);
        assert!((g[1] - 0.6 * 2.0 / 0.64).abs() < 1e-12);
    }

    #[test]
    fn order_selection_on_fixture() {
        let x = sex_offences().as_f64();
        let sel = select_ar_order(&x, 3, ArMethod::Mle).unwrap();
        assert_eq!((sel.best_aic, sel.best_aicc, sel.best_bic), (1, 1, 1));
        assert!((sel.rows[0].aic - 409.3019).abs() < 0.01);
        for r in &sel.rows {
            assert!(r.aicc >= r.aic);
        }
    }

    #[test]
    fn ar1_mle_on_first_141() {
        let x = &sex_offences().as_f64()[..141];
        let f = fit_gaussian_ar(x, 1, ArMethod::Mle).unwrap();
        let g = f.to_gaussian().unwrap();
        for (k, want) in [(1, 0.4630), (2, 0.5689), (3, 0.5931)] {
            let (m, _) = g.conditional(k, 0.0).unwrap();
            assert!((m - want).abs() < 5e-4, "k={k}: {m}");
        }
    }

    #[test]
    fn ols_recovers_exact_recursion() {
        // noise-free AR(1) plus a tiny alternating perturbation
        let mut x = vec![3.0];
        for t in 1..60 {
            let e = if t % 2 == 0 { 0.01 } else { -0.01 };
            x.push(1.0 + 0.5 * x[t - 1] + e);
        }
        let f = fit_gaussian_ar(&x, 1, ArMethod::Ols).unwrap();
        assert!((f.coefficients[0] - 0.5).abs() < 0.05);
    }

    #[test]
    fn rejects_short_or_constant() {
        assert!(fit_gaussian_ar(&[1.0, 2.0], 1, ArMethod::Ols).is_err());
        assert!(fit_gaussian_ar(&[1.0; 10], 1, ArMethod::Yw).is_err());
        assert!(fit_gaussian_ar(&[1.0, 2.0, 3.0, 1.0], 0, ArMethod::Yw).is_err());
    }
}
