//! Kullback-Leibler divergence and Kolmogorov distance between the PLINAR(1)
//! one-step conditional law and its two Gaussian approximations.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::forecast::{conditional_pmf_table, forecast_distribution};
use crate::gaussian::{discretize_normal, GaussianApprox, GaussianMethod};
use crate::normal;
use crate::process::PlinarParams;

/// Minimum mass the target table must carry.
const TARGET_MASS: f64 = 1.0 - 1e-10;

/// Both tails beyond the Kolmogorov scan window are below this.
const KOLMOGOROV_TAIL: f64 = 1e-10;

/// KL terms past Y* are summed until they fall below this multiple of the
/// table tail. The log ratio grows quadratically in y, so mass that is
/// negligible for the PMF can still move the divergence by ~1e-9.
const KL_TERM_FLOOR: f64 = 1e-6;

/// Σ p(y) ln(p(y)/q(y)) over indices with p(y) > 0.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DomainMismatch(format!(
            "p has {} entries, q has {}",
            p.len(),
            q.len()
        )));
    }
    let ln_q: Vec<f64> = q.iter().map(|v| v.ln()).collect();
    kl_divergence_ln(p, &ln_q)
}

/// As [`kl_divergence`] with the approximation given as ln q, so entries
/// that underflow in linear space still contribute exactly.
pub fn kl_divergence_ln(p: &[f64], ln_q: &[f64]) -> Result<f64> {
    if p.len() != ln_q.len() {
        return Err(Error::DomainMismatch(format!(
            "p has {} entries, q has {}",
            p.len(),
            ln_q.len()
        )));
    }
    let mass: f64 = p.iter().sum();
    if mass < TARGET_MASS {
        return Err(Error::invalid(
            "p",
            mass,
            "target table must carry mass >= 1 - 1e-10",
        ));
    }
    let mut kl = 0.0;
    for (y, (&pi, &lq)) in p.iter().zip(ln_q).enumerate() {
        if pi <= 0.0 {
            continue;
        }
        if !lq.is_finite() {
            return Err(Error::DegenerateSupport { y });
        }
        kl += pi * (pi.ln() - lq);
    }
    // exact agreement can round to a hair below zero
    Ok(kl.max(0.0))
}

/// max_y |F(y) − G(y)| over a common index range.
pub fn kolmogorov_metric(f: &[f64], g: &[f64]) -> Result<f64> {
    if f.len() != g.len() {
        return Err(Error::DomainMismatch(format!(
            "F has {} entries, G has {}",
            f.len(),
            g.len()
        )));
    }
    Ok(f.iter()
        .zip(g)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
        .min(1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistanceRecord {
    pub alpha: f64,
    pub theta: f64,
    pub x_n: u64,
    pub k: u32,
    /// Last support point of the PLINAR table the KL sum runs over.
    pub support_max: usize,
    pub kl_marginal: f64,
    pub kl_innovation: f64,
    pub kolm_marginal: f64,
    pub kolm_innovation: f64,
}

impl DistanceRecord {
    pub const CSV_HEADER: &'static str =
        "alpha,theta,x_n,k,support_max,kl_marginal,kl_innovation,kolm_marginal,kolm_innovation";

    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{:e},{:e},{:e},{:e}",
            self.alpha,
            self.theta,
            self.x_n,
            self.k,
            self.support_max,
            self.kl_marginal,
            self.kl_innovation,
            self.kolm_marginal,
            self.kolm_innovation
        )
    }
}

/// KL and Kolmogorov distances of both matched approximations from the
/// one-step PLINAR conditional law at X_n = `x_n`.
pub fn distance_record(params: &PlinarParams, x_n: u64, tail: f64) -> Result<DistanceRecord> {
    let target = forecast_distribution(1, x_n, params, tail)?;
    let y_star = target.support_max();

    let mut kl = [0.0; 2];
    let mut kolm = [0.0; 2];
    for (i, method) in [GaussianMethod::Marginal, GaussianMethod::Innovation]
        .into_iter()
        .enumerate()
    {
        let approx = GaussianApprox::matched(params, method)?;
        let (mu, var) = approx.conditional(1, x_n as f64)?;
        let sigma = var.sqrt();
        let q = discretize_normal(mu, sigma, y_star)?;
        kl[i] = kl_divergence_ln(&target.pmf, &q.ln_q)?
            + kl_beyond(params, x_n, y_star, mu, sigma, tail)?;

        // extend the scan until the normal upper tail is also negligible
        let mut y_max = y_star;
        while normal::sf((y_max as f64 - mu) / sigma) >= KOLMOGOROV_TAIL {
            y_max += 1;
        }
        let f = if y_max == y_star {
            target.cdf()
        } else {
            cumulative(&conditional_pmf_table(1, x_n, params, y_max + 1)?)
        };
        let g: Vec<f64> = (0..=y_max)
            .map(|y| normal::cdf((y as f64 - mu) / sigma))
            .collect();
        kolm[i] = kolmogorov_metric(&f, &g)?;
    }
    Ok(DistanceRecord {
        alpha: params.alpha(),
        theta: params.theta(),
        x_n,
        k: 1,
        support_max: y_star,
        kl_marginal: kl[0],
        kl_innovation: kl[1],
        kolm_marginal: kolm[0],
        kolm_innovation: kolm[1],
    })
}

/// Σ_{y > y_star} p(y) ln(p(y)/q(y)), stopped once terms are falling and
/// below `KL_TERM_FLOOR · tail`.
fn kl_beyond(
    params: &PlinarParams,
    x_n: u64,
    y_star: usize,
    mu: f64,
    sigma: f64,
    tail: f64,
) -> Result<f64> {
    let floor = KL_TERM_FLOOR * tail;
    let mut sum = 0.0;
    let mut prev = f64::INFINITY;
    let mut len = 2 * (y_star + 1);
    let mut y = y_star + 1;
    while len <= crate::MAX_SUPPORT {
        let p = conditional_pmf_table(1, x_n, params, len)?;
        while y < len {
            let py = p[y];
            if py <= 0.0 {
                return Ok(sum);
            }
            let ln_q = normal::ln_interval((y as f64 - 1.0 - mu) / sigma, (y as f64 - mu) / sigma);
            if !ln_q.is_finite() {
                return Err(Error::DegenerateSupport { y });
            }
            let term = py * (py.ln() - ln_q);
            sum += term;
            if term.abs() < floor && term.abs() <= prev {
                return Ok(sum);
            }
            prev = term.abs();
            y += 1;
        }
        len *= 2;
    }
    Err(Error::TruncationCap {
        tail,
        cap: crate::MAX_SUPPORT,
    })
}

fn cumulative(pmf: &[f64]) -> Vec<f64> {
    pmf.iter()
        .scan(0.0, |acc, p| {
            *acc += p;
            Some(*acc)
        })
        .collect()
}

/// α = 0.05, 0.06, …, 0.95.
pub fn alpha_grid() -> Vec<f64> {
    (5..=95).map(|i| i as f64 / 100.0).collect()
}

/// θ = 0.05, 0.06, …, 5.00.
pub fn theta_grid() -> Vec<f64> {
    (5..=500).map(|i| i as f64 / 100.0).collect()
}

/// Conditioning values used with each θ: larger origins where the marginal
/// mean is large.
pub fn default_origins_for_theta(theta: f64) -> Vec<u64> {
    if theta < 1.0 {
        vec![0, 15, 30]
    } else {
        vec![0, 2, 5]
    }
}

/// Largest origin for an X_n sweep at θ, chosen from the marginal mean.
pub fn default_xn_max(theta: f64) -> u64 {
    if theta < 1.0 {
        30
    } else {
        5
    }
}

/// Sweep output: one record per valid grid point, plus the (α, θ) pairs
/// skipped because no PLINAR(1) process exists there.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct Sweep {
    pub records: Vec<DistanceRecord>,
    pub skipped: Vec<(f64, f64)>,
}

fn evaluate_grid(points: Vec<(f64, f64, u64)>, tail: f64) -> Result<Sweep> {
    // validate up front so only genuinely improper pairs are skipped
    for &(a, t, _) in &points {
        if !(a.is_finite() && (0.0..1.0).contains(&a)) {
            return Err(Error::invalid("alpha", a, "must lie in [0, 1)"));
        }
        if !(t.is_finite() && t > 0.0) {
            return Err(Error::invalid("theta", t, "must be finite and > 0"));
        }
    }
    let results: Vec<Option<DistanceRecord>> = points
        .par_iter()
        .map(|&(a, t, x)| match PlinarParams::new(a, t) {
            Ok(p) => distance_record(&p, x, tail).map(Some),
            Err(_) => Ok(None),
        })
        .collect::<Result<_>>()?;
    let mut sweep = Sweep::default();
    for (r, &(a, t, _)) in results.into_iter().zip(&points) {
        match r {
            Some(rec) => sweep.records.push(rec),
            None if sweep.skipped.last() != Some(&(a, t)) => sweep.skipped.push((a, t)),
            None => {}
        }
    }
    Ok(sweep)
}

/// One record per (α, x_n) over the α grid, ordered by α then x_n.
pub fn sweep_alpha(theta: f64, origins: &[u64], tail: f64) -> Result<Sweep> {
    let points = alpha_grid()
        .into_iter()
        .flat_map(|a| origins.iter().map(move |&x| (a, theta, x)))
        .collect();
    evaluate_grid(points, tail)
}

/// One record per (θ, x_n) over the θ grid, ordered by θ then x_n.
pub fn sweep_theta(alpha: f64, origins: &[u64], tail: f64) -> Result<Sweep> {
    let points = theta_grid()
        .into_iter()
        .flat_map(|t| origins.iter().map(move |&x| (alpha, t, x)))
        .collect();
    evaluate_grid(points, tail)
}

/// One record per x_n = 0..=x_n_max.
pub fn sweep_xn(alpha: f64, theta: f64, x_n_max: u64, tail: f64) -> Result<Sweep> {
    evaluate_grid((0..=x_n_max).map(|x| (alpha, theta, x)).collect(), tail)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::DEFAULT_TAIL;

    #[test]
    fn identical_tables() {
        let p = [0.2, 0.5, 0.3];
        assert!(kl_divergence(&p, &p).unwrap().abs() < 1e-14);
        let f = cumulative(&p);
        assert_eq!(kolmogorov_metric(&f, &f).unwrap(), 0.0);
    }

    #[test]
    fn point_masses_are_maximally_apart() {
        let f = [1.0, 1.0, 1.0];
        let g = [0.0, 1.0, 1.0];
        assert_eq!(kolmogorov_metric(&f, &g).unwrap(), 1.0);
    }

    #[test]
    fn kl_is_asymmetric() {
        let p = [0.9, 0.1];
        let q = [0.5, 0.5];
        let pq = kl_divergence(&p, &q).unwrap();
        let qp = kl_divergence(&q, &p).unwrap();
        assert!((pq - qp).abs() > 0.1);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            kl_divergence(&[1.0], &[0.5, 0.5]),
            Err(Error::DomainMismatch(_))
        ));
        assert!(matches!(
            kl_divergence(&[0.5, 0.5], &[1.0, 0.0]),
            Err(Error::DegenerateSupport { y: 1 })
        ));
        assert!(matches!(
            kolmogorov_metric(&[1.0], &[0.5, 1.0]),
            Err(Error::DomainMismatch(_))
        ));
    }

    #[test]
    fn grid_sizes() {
        assert_eq!(alpha_grid().len(), 91);
        assert_eq!(theta_grid().len(), 496);
        assert_eq!(*theta_grid().last().unwrap(), 5.0);
        assert_eq!(default_origins_for_theta(0.5), vec![0, 15, 30]);
        assert_eq!(default_origins_for_theta(2.0), vec![0, 2, 5]);
    }

    #[test]
    fn record_bounds() {
        let r = distance_record(&PlinarParams::new(0.5, 2.0).unwrap(), 2, DEFAULT_TAIL).unwrap();
        assert!(r.kl_marginal > 0.0 && r.kl_innovation > 0.0);
        assert!((0.0..=1.0).contains(&r.kolm_marginal));
        assert!((0.0..=1.0).contains(&r.kolm_innovation));
    }

    #[test]
    fn xn_sweep_counts() {
        assert_eq!(
            sweep_xn(0.1, 2.0, 5, DEFAULT_TAIL).unwrap().records.len(),
            6
        );
    }

    #[test]
    fn improper_points_are_skipped() {
        let s = sweep_xn(0.5, 0.05, 3, DEFAULT_TAIL).unwrap();
        assert!(s.records.is_empty());
        assert_eq!(s.skipped, vec![(0.5, 0.05)]);
        assert!(sweep_xn(1.5, 2.0, 3, DEFAULT_TAIL).is_err());
    }
}
