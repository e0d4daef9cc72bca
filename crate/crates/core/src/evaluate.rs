//! Out-of-sample accuracy: fit on a training prefix, forecast the rest from
//! observed origins, score with PRMSE, PMAD and PTP.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimate::{fit, fit_gaussian_ar, ArFit, EstimationResult, Estimator};
use crate::forecast::{forecast_distribution, round_half_up};
use crate::gaussian::{gaussian_point_forecasts, GaussianApprox, GaussianMethod};
use crate::series::CountSeries;
use crate::DEFAULT_TAIL;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Plinar,
    Marginal,
    Innovation,
    Traditional,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [
        ModelKind::Plinar,
        ModelKind::Marginal,
        ModelKind::Innovation,
        ModelKind::Traditional,
    ];
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Plinar => "plinar",
            ModelKind::Marginal => "marginal",
            ModelKind::Innovation => "innovation",
            ModelKind::Traditional => "traditional",
        })
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "plinar" => Ok(ModelKind::Plinar),
            "marginal" => Ok(ModelKind::Marginal),
            "innovation" => Ok(ModelKind::Innovation),
            "traditional" => Ok(ModelKind::Traditional),
            other => Err(Error::InvalidConfig(format!("unknown model {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationConfig {
    pub train_fraction: f64,
    pub k_max: u32,
    pub models: Vec<ModelKind>,
    pub estimators: Vec<Estimator>,
    pub tail: f64,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        Self {
            train_fraction: 0.8,
            k_max: 3,
            models: ModelKind::ALL.to_vec(),
            estimators: Estimator::ALL.to_vec(),
            tail: DEFAULT_TAIL,
        }
    }
}

impl EvaluationConfig {
    /// Training length m = ⌊fraction · n⌋ after checking the split leaves
    /// at least three training points and k_max test points.
    pub fn train_length(&self, n: usize) -> Result<usize> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "train_fraction {} must lie in (0, 1)",
                self.train_fraction
            )));
        }
        if self.k_max == 0 {
            return Err(Error::InvalidConfig("k_max must be at least 1".into()));
        }
        if self.models.is_empty() || self.estimators.is_empty() {
            return Err(Error::InvalidConfig("empty model or estimator set".into()));
        }
        let m = (self.train_fraction * n as f64).floor() as usize;
        if m < 3 || n - m < self.k_max as usize {
            return Err(Error::InvalidConfig(format!(
                "split of {n} observations gives m = {m}; need m >= 3 and n - m >= {}",
                self.k_max
            )));
        }
        Ok(m)
    }
}

/// Forecast of X_t made k steps earlier. `target` is the 1-based index t.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PointForecast {
    pub target: usize,
    pub origin_value: u64,
    pub actual: u64,
    pub mean: f64,
    pub mean_rounded: u64,
    pub median: u64,
    pub mode: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ForecastTable {
    pub estimator: Estimator,
    pub model: ModelKind,
    pub k: u32,
    pub forecasts: Vec<PointForecast>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkippedCell {
    pub estimator: Estimator,
    pub model: ModelKind,
    pub reason: String,
}

/// Estimates from the training prefix, one per estimator.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainingFit {
    pub estimator: Estimator,
    pub plinar: Option<EstimationResult>,
    pub ar1: Option<ArFit>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RollingForecasts {
    pub n: usize,
    pub train_len: usize,
    /// Parameters are fitted once on the training prefix and never refitted.
    pub frozen_parameters: bool,
    pub fits: Vec<TrainingFit>,
    pub tables: Vec<ForecastTable>,
    pub skipped: Vec<SkippedCell>,
}

fn canonical<T: Ord + Copy>(items: &[T]) -> Vec<T> {
    let mut v = items.to_vec();
    v.sort();
    v.dedup();
    v
}

/// Point forecasts given the origin value, for one (model, estimator) cell.
enum Forecaster {
    Plinar(crate::process::PlinarParams),
    Matched(GaussianApprox),
    Traditional(GaussianApprox),
}

impl Forecaster {
    fn point(&self, k: u32, x: u64, tail: f64) -> Result<(f64, u64, u64, u64)> {
        match self {
            Forecaster::Plinar(p) => {
                let d = forecast_distribution(k, x, p, tail)?;
                Ok((d.mean, d.mean_rounded(), d.median, d.mode))
            }
            Forecaster::Matched(g) => {
                let (mean, var) = g.conditional(k, x as f64)?;
                let pf = gaussian_point_forecasts(mean, var.sqrt())?;
                Ok((mean, pf.mean_rounded, pf.median, pf.mode))
            }
            // a plain Gaussian AR(1) is made integer by rounding its mean
            Forecaster::Traditional(g) => {
                let (mean, _) = g.conditional(k, x as f64)?;
                let r = round_half_up(mean);
                Ok((mean, r, r, r))
            }
        }
    }
}

fn forecaster(model: ModelKind, fit: &TrainingFit) -> Result<Forecaster> {
    match model {
        ModelKind::Traditional => {
            let ar = fit.ar1.as_ref().ok_or_else(|| {
                Error::InvalidConfig("no AR(1) fit available for the traditional model".into())
            })?;
            Ok(Forecaster::Traditional(ar.to_gaussian()?))
        }
        _ => {
            let est = fit
                .plinar
                .as_ref()
                .ok_or_else(|| Error::InvalidConfig("no PLINAR(1) fit available".into()))?;
            let params = est.params()?;
            Ok(match model {
                ModelKind::Plinar => Forecaster::Plinar(params),
                ModelKind::Marginal => {
                    Forecaster::Matched(GaussianApprox::matched(&params, GaussianMethod::Marginal)?)
                }
                _ => Forecaster::Matched(GaussianApprox::matched(
                    &params,
                    GaussianMethod::Innovation,
                )?),
            })
        }
    }
}

/// k-step forecasts of every test point for every requested cell.
pub fn rolling_forecasts(
    series: &CountSeries,
    config: &EvaluationConfig,
) -> Result<RollingForecasts> {
    let n = series.len();
    let m = config.train_length(n)?;
    let train = series.prefix(m);
    let train_f64 = train.as_f64();
    let models = canonical(&config.models);
    let needs_plinar = models.iter().any(|&md| md != ModelKind::Traditional);
    let needs_ar = models.contains(&ModelKind::Traditional);

    let mut out = RollingForecasts {
        n,
        train_len: m,
        frozen_parameters: true,
        fits: Vec::new(),
        tables: Vec::new(),
        skipped: Vec::new(),
    };
    let values = series.values();
    for estimator in canonical(&config.estimators) {
        let mut skip = |model, reason: String| {
            out.skipped.push(SkippedCell {
                estimator,
                model,
                reason,
            })
        };
        let mut fit_errors = BTreeMap::new();
        let plinar = if needs_plinar {
            fit(&train, estimator)
                .map_err(|e| fit_errors.insert("plinar", e.to_string()))
                .ok()
        } else {
            None
        };
        let ar1 = if needs_ar {
            fit_gaussian_ar(&train_f64, 1, estimator.ar_counterpart())
                .map_err(|e| fit_errors.insert("ar1", e.to_string()))
                .ok()
        } else {
            None
        };
        let training = TrainingFit {
            estimator,
            plinar,
            ar1,
        };

        for &model in &models {
            let key = if model == ModelKind::Traditional {
                "ar1"
            } else {
                "plinar"
            };
            if let Some(msg) = fit_errors.get(key) {
                skip(model, format!("fit failed: {msg}"));
                continue;
            }
            let f = match forecaster(model, &training) {
                Ok(f) => f,
                Err(e) => {
                    skip(model, e.to_string());
                    continue;
                }
            };
            for k in 1..=config.k_max {
                let mut cache: BTreeMap<u64, (f64, u64, u64, u64)> = BTreeMap::new();
                let mut forecasts = Vec::with_capacity(n - m);
                for t in (m + k as usize)..=n {
                    let x = values[t - 1 - k as usize];
                    let point = match cache.get(&x) {
                        Some(&p) => p,
                        None => {
                            let p = f.point(k, x, config.tail)?;
                            cache.insert(x, p);
                            p
                        }
                    };
                    forecasts.push(PointForecast {
                        target: t,
                        origin_value: x,
                        actual: values[t - 1],
                        mean: point.0,
                        mean_rounded: point.1,
                        median: point.2,
                        mode: point.3,
                    });
                }
                out.tables.push(ForecastTable {
                    estimator,
                    model,
                    k,
                    forecasts,
                });
            }
        }
        out.fits.push(training);
    }
    Ok(out)
}

/// Checks index bounds and returns the target slice X_{m+k..=n}.
fn targets(actuals: &[u64], forecasts: usize, k: u32, m: usize, n: usize) -> Result<&[u64]> {
    if k == 0 || actuals.len() != n || m + k as usize > n {
        return Err(Error::InvalidRange(format!(
            "need 1 <= k and m + k <= n = len(actuals); got k = {k}, m = {m}, n = {n}, len = {}",
            actuals.len()
        )));
    }
    let count = n - m - k as usize + 1;
    if forecasts != count {
        return Err(Error::InvalidRange(format!(
            "{forecasts} forecasts for {count} targets"
        )));
    }
    Ok(&actuals[m + k as usize - 1..])
}

/// √( Σ_{t=m+k}^n (X_t − X̂_t)² / (n − m − k + 1) ); `means[i]` targets
/// t = m + k + i.
pub fn prmse(actuals: &[u64], means: &[f64], k: u32, m: usize, n: usize) -> Result<f64> {
    let x = targets(actuals, means.len(), k, m, n)?;
    let sse: f64 = x
        .iter()
        .zip(means)
        .map(|(&a, f)| (a as f64 - f).powi(2))
        .sum();
    Ok((sse / x.len() as f64).sqrt())
}

/// Σ_{t=m+k}^n |X_t − X̂_t| / (n − m − k + 1).
pub fn pmad(actuals: &[u64], medians: &[f64], k: u32, m: usize, n: usize) -> Result<f64> {
    let x = targets(actuals, medians.len(), k, m, n)?;
    let sad: f64 = x
        .iter()
        .zip(medians)
        .map(|(&a, f)| (a as f64 - f).abs())
        .sum();
    Ok(sad / x.len() as f64)
}

/// Fraction of exact hits over t = m+k..=n. Forecasts must be integers.
pub fn ptp(actuals: &[u64], forecasts: &[f64], k: u32, m: usize, n: usize) -> Result<f64> {
    let x = targets(actuals, forecasts.len(), k, m, n)?;
    let mut hits = 0usize;
    for (&a, &f) in x.iter().zip(forecasts) {
        if !(f >= 0.0 && f.fract() == 0.0) {
            return Err(Error::NonIntegerForecast(f));
        }
        hits += usize::from(a as f64 == f);
    }
    Ok(hits as f64 / x.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccuracyRow {
    pub estimator: Estimator,
    pub model: ModelKind,
    pub k: u32,
    pub targets: usize,
    pub prmse: f64,
    pub pmad: f64,
    pub ptp_median: f64,
    pub ptp_mode: f64,
    pub ptp_mean_rounded: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccuracyReport {
    pub n: usize,
    pub train_len: usize,
    pub config: EvaluationConfig,
    pub fits: Vec<TrainingFit>,
    /// Ordered by estimator, model, then k.
    pub rows: Vec<AccuracyRow>,
    pub skipped: Vec<SkippedCell>,
}

impl AccuracyReport {
    pub fn row(&self, estimator: Estimator, model: ModelKind, k: u32) -> Option<&AccuracyRow> {
        self.rows
            .iter()
            .find(|r| r.estimator == estimator && r.model == model && r.k == k)
    }
}

pub fn full_report(series: &CountSeries, config: &EvaluationConfig) -> Result<AccuracyReport> {
    let rolled = rolling_forecasts(series, config)?;
    let (n, m) = (rolled.n, rolled.train_len);
    let actuals = series.values();
    let mut rows = Vec::with_capacity(rolled.tables.len());
    for table in &rolled.tables {
        let col =
            |f: fn(&PointForecast) -> f64| table.forecasts.iter().map(f).collect::<Vec<f64>>();
        let means = col(|p| p.mean);
        let medians = col(|p| p.median as f64);
        rows.push(AccuracyRow {
            estimator: table.estimator,
            model: table.model,
            k: table.k,
            targets: table.forecasts.len(),
            prmse: prmse(actuals, &means, table.k, m, n)?,
            pmad: pmad(actuals, &medians, table.k, m, n)?,
            ptp_median: ptp(actuals, &medians, table.k, m, n)?,
            ptp_mode: ptp(actuals, &col(|p| p.mode as f64), table.k, m, n)?,
            ptp_mean_rounded: ptp(actuals, &col(|p| p.mean_rounded as f64), table.k, m, n)?,
        });
    }
    Ok(AccuracyReport {
        n,
        train_len: m,
        config: config.clone(),
        fits: rolled.fits,
        rows,
        skipped: rolled.skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::sex_offences;

    #[test]
    fn fixture_split() {
        let c = EvaluationConfig::default();
        assert_eq!(c.train_length(144).unwrap(), 115);
        let bad = EvaluationConfig {
            train_fraction: 0.99,
            ..Default::default()
        };
        assert!(bad.train_length(144).is_err());
        assert!(EvaluationConfig {
            train_fraction: 0.01,
            ..Default::default()
        }
        .train_length(144)
        .is_err());
    }

    #[test]
    fn scores_on_hand_data() {
        let x = [1, 2, 3, 0, 1];
        // m = 2, k = 1 → targets X_3..X_5 = 3, 0, 1
        assert_eq!(prmse(&x, &[3.0, 0.0, 1.0], 1, 2, 5).unwrap(), 0.0);
        assert!(
            (prmse(&x, &[2.0, 0.0, 1.0], 1, 2, 5).unwrap() - (1.0f64 / 3.0).sqrt()).abs() < 1e-15
        );
        assert!((pmad(&x, &[0.0, 0.0, 0.0], 1, 2, 5).unwrap() - 4.0 / 3.0).abs() < 1e-15);
        assert!((ptp(&x, &[3.0, 1.0, 1.0], 1, 2, 5).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!(matches!(
            ptp(&x, &[3.0, 0.5, 1.0], 1, 2, 5),
            Err(Error::NonIntegerForecast(_))
        ));
        assert!(matches!(
            prmse(&x, &[1.0, 2.0], 1, 2, 5),
            Err(Error::InvalidRange(_))
        ));
        assert!(matches!(
            prmse(&x, &[], 4, 2, 5),
            Err(Error::InvalidRange(_))
        ));
    }

    #[test]
    fn target_counts() {
        let r = rolling_forecasts(
            &sex_offences(),
            &EvaluationConfig {
                estimators: vec![Estimator::Cls],
                ..Default::default()
            },
        )
        .unwrap();
        assert!(r.frozen_parameters);
        for t in &r.tables {
            assert_eq!(t.forecasts.len(), 144 - 115 - t.k as usize + 1);
            for f in &t.forecasts {
                assert_eq!(
                    f.origin_value,
                    sex_offences().values()[f.target - 1 - t.k as usize]
                );
            }
        }
    }

    #[test]
    fn constant_zero_test_segment() {
        let mut v: Vec<u64> = (0..40).map(|i| [0, 1, 2, 0, 1][i % 5]).collect();
        v.extend([0; 10]);
        let s = CountSeries::new(v);
        let cfg = EvaluationConfig {
            models: vec![ModelKind::Plinar],
            estimators: vec![Estimator::Yw],
            ..Default::default()
        };
        let r = full_report(&s, &cfg).unwrap();
        for row in &r.rows {
            assert_eq!(row.ptp_median, 1.0);
            assert_eq!(row.pmad, 0.0);
        }
    }

    #[test]
    fn out_of_range_estimate_skips_cell() {
        let s = CountSeries::new((0..50).map(|i| i % 2).collect());
        let cfg = EvaluationConfig {
            models: vec![ModelKind::Plinar, ModelKind::Marginal],
            estimators: vec![Estimator::Cls],
            ..Default::default()
        };
        let r = full_report(&s, &cfg).unwrap();
        assert!(r.rows.is_empty());
        assert_eq!(r.skipped.len(), 2);
    }
}
