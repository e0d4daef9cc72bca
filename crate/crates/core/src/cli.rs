//! Command-line front end. Every command renders to a string that begins
//! with the resolved configuration, so outputs are self-describing.

use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::distances::{
    default_origins_for_theta, sweep_alpha, sweep_theta, sweep_xn, DistanceRecord, Sweep,
};
use crate::estimate::{fit, fit_gaussian_ar, select_ar_order, ArMethod, Estimator};
use crate::evaluate::{full_report, EvaluationConfig, ModelKind};
use crate::forecast::{conditional_pmf_table, forecast_at, round_half_up, Horizon};
use crate::gaussian::{
    discretize_normal, gaussian_point_forecasts, GaussianApprox, GaussianMethod,
};
use crate::process::{simulate, PlinarParams};
use crate::series::{ingest_csv, sex_offences, ColumnSelector, CountSeries};
use crate::DEFAULT_TAIL;

#[derive(Debug, Parser)]
#[command(
    name = "plinar",
    version,
    about = "Poisson-Lindley INAR(1) fitting, forecasting and comparison"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// CSV file with one header row; defaults to the bundled sex-offences series.
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,

    /// Column holding the counts (name or 0-based index); defaults to the last.
    #[arg(long, global = true)]
    pub column: Option<String>,

    /// Write here instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,

    /// Seed for stochastic commands.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Tail mass left beyond every truncated support.
    #[arg(long, global = true, default_value_t = DEFAULT_TAIL)]
    pub tail: f64,

    /// Use only the first N observations of the input.
    #[arg(long, global = true)]
    pub first: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a PLINAR(1) path.
    Simulate(SimulateArgs),
    /// Estimate PLINAR(1) parameters (and optionally select a Gaussian AR order).
    Fit(FitArgs),
    /// Conditional k-step PMFs and point forecasts.
    Forecast(ForecastArgs),
    /// KL and Kolmogorov distances over a parameter grid.
    Sweep(SweepArgs),
    /// Train/test forecast accuracy.
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub alpha: f64,
    #[arg(long)]
    pub theta: f64,
    #[arg(long)]
    pub n: usize,
    /// Initial values to discard.
    #[arg(long, default_value_t = 0)]
    pub burn_in: usize,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long, value_delimiter = ',', default_value = "cls,yw,ml")]
    pub methods: Vec<String>,
    /// Also fit Gaussian AR(1..=P) by exact ML and report AIC, AICc and BIC.
    #[arg(long)]
    pub ar_max: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct ForecastArgs {
    /// Conditioning value X_n.
    #[arg(long)]
    pub xn: u64,
    /// Horizons; `inf` gives the stationary law.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub k: Vec<Horizon>,
    #[arg(long, default_value = "plinar")]
    pub model: ModelKind,
    /// Estimate parameters from the input with this method.
    #[arg(long, conflicts_with_all = ["alpha", "theta"])]
    pub estimates: Option<Estimator>,
    #[arg(long, requires = "theta")]
    pub alpha: Option<f64>,
    #[arg(long, requires = "alpha")]
    pub theta: Option<f64>,
    /// Last support point to print; defaults to the truncation point.
    #[arg(long)]
    pub y_max: Option<usize>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Vary {
    Alpha,
    Theta,
    Xn,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub vary: Vary,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub theta: Option<f64>,
    /// Conditioning values for α and θ sweeps.
    #[arg(long, value_delimiter = ',')]
    pub xn: Option<Vec<u64>>,
    /// Largest X_n for an X_n sweep.
    #[arg(long)]
    pub xn_max: Option<u64>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long, default_value_t = 0.8)]
    pub train_fraction: f64,
    #[arg(long, default_value_t = 3)]
    pub k_max: u32,
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "plinar,marginal,innovation,traditional"
    )]
    pub models: Vec<ModelKind>,
    #[arg(long, value_delimiter = ',', default_value = "cls,yw,ml")]
    pub estimators: Vec<Estimator>,
}

/// Conditioning values for θ sweeps when none are given: the small origins
/// used at large θ and the large ones used at small θ.
const THETA_SWEEP_ORIGINS: [u64; 5] = [0, 2, 5, 15, 30];

fn load_series(g: &GlobalArgs) -> anyhow::Result<CountSeries> {
    let selector = match &g.column {
        Some(c) => c.parse::<ColumnSelector>()?,
        None => ColumnSelector::Last,
    };
    let series = match &g.input {
        Some(path) => {
            ingest_csv(path, &selector).with_context(|| format!("reading {}", path.display()))?
        }
        None => sex_offences(),
    };
    Ok(match g.first {
        Some(0) => bail!("--first must be at least 1"),
        Some(n) => series.prefix(n),
        None => series,
    })
}

fn input_label(g: &GlobalArgs) -> String {
    g.input
        .as_ref()
        .map_or("bundled:sexoffences.csv".to_string(), |p| {
            p.display().to_string()
        })
}

fn check_tail(tail: f64) -> anyhow::Result<()> {
    if !(tail > 0.0 && tail < 1.0) {
        bail!("--tail must lie in (0, 1), got {tail}");
    }
    Ok(())
}

/// Renders the command's output.
pub fn run(cli: &Cli) -> anyhow::Result<String> {
    check_tail(cli.global.tail)?;
    match &cli.command {
        Command::Simulate(a) => cmd_simulate(&cli.global, a),
        Command::Fit(a) => cmd_fit(&cli.global, a),
        Command::Forecast(a) => cmd_forecast(&cli.global, a),
        Command::Sweep(a) => cmd_sweep(&cli.global, a),
        Command::Evaluate(a) => cmd_evaluate(&cli.global, a),
    }
}

fn cmd_simulate(g: &GlobalArgs, a: &SimulateArgs) -> anyhow::Result<String> {
    let Some(seed) = g.seed else {
        bail!("simulate needs an explicit --seed");
    };
    let params = PlinarParams::new(a.alpha, a.theta)?;
    let s = simulate(a.n, &params, seed, a.burn_in)?;
    let mut out = format!(
        "# command=simulate alpha={} theta={} n={} burn_in={} seed={}\nt,count\n",
        a.alpha, a.theta, a.n, a.burn_in, seed
    );
    for (t, v) in s.values().iter().enumerate() {
        writeln!(out, "{},{v}", t + 1)?;
    }
    Ok(out)
}

fn to_json<T: Serialize>(v: &T) -> anyhow::Result<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

fn cmd_fit(g: &GlobalArgs, a: &FitArgs) -> anyhow::Result<String> {
    let series = load_series(g)?;
    let methods = a
        .methods
        .iter()
        .map(|m| m.parse::<Estimator>())
        .collect::<crate::Result<Vec<_>>>()?;
    let mut estimates = Vec::new();
    let mut failures = 0;
    for &m in &methods {
        match fit(&series, m) {
            Ok(r) => estimates.push(serde_json::to_value(r)?),
            Err(e) => {
                failures += 1;
                estimates.push(json!({ "method": m, "error": e.to_string() }));
            }
        }
    }
    let mut results = json!({ "estimates": estimates });
    if let Some(p_max) = a.ar_max {
        results["ar_order_selection"] =
            serde_json::to_value(select_ar_order(&series.as_f64(), p_max, ArMethod::Mle)?)?;
    }
    let summary = series.summary().ok();
    to_json(&json!({
        "config": {
            "command": "fit",
            "input": input_label(g),
            "first": g.first,
            "n": series.len(),
            "methods": methods,
            "ar_max": a.ar_max,
        },
        "results": results,
        "diagnostics": { "summary": summary, "failed_methods": failures },
    }))
}

/// Parameters for the forecasting models and, for the traditional model,
/// the AR(1) fitted to the input.
fn forecast_models(
    g: &GlobalArgs,
    a: &ForecastArgs,
) -> anyhow::Result<(Option<PlinarParams>, Option<GaussianApprox>, Value)> {
    if a.model == ModelKind::Traditional {
        let Some(est) = a.estimates else {
            bail!("--model traditional fits an AR(1) to the input; pass --estimates cls|yw|ml");
        };
        let fit = fit_gaussian_ar(&load_series(g)?.as_f64(), 1, est.ar_counterpart())?;
        let echo = json!({ "estimates": est, "phi": fit.coefficients[0], "intercept": fit.intercept, "sigma2": fit.sigma2 });
        return Ok((None, Some(fit.to_gaussian()?), echo));
    }
    let (params, echo) = match (a.estimates, a.alpha, a.theta) {
        (Some(est), _, _) => {
            let r = fit(&load_series(g)?, est)?;
            let echo = json!({ "estimates": est, "alpha": r.alpha_hat, "theta": r.theta_hat });
            (r.params()?, echo)
        }
        (None, Some(al), Some(th)) => (
            PlinarParams::new(al, th)?,
            json!({ "alpha": al, "theta": th }),
        ),
        _ => bail!("pass --estimates or both --alpha and --theta"),
    };
    let gauss = match a.model {
        ModelKind::Marginal => Some(GaussianApprox::matched(&params, GaussianMethod::Marginal)?),
        ModelKind::Innovation => Some(GaussianApprox::matched(
            &params,
            GaussianMethod::Innovation,
        )?),
        _ => None,
    };
    Ok((Some(params), gauss, echo))
}

#[derive(Debug, Serialize)]
struct ForecastOut {
    horizon: Horizon,
    x_n: u64,
    mean: f64,
    variance: f64,
    mean_rounded: u64,
    median: u64,
    mode: u64,
    pmf: Vec<f64>,
}

fn cmd_forecast(g: &GlobalArgs, a: &ForecastArgs) -> anyhow::Result<String> {
    let (params, gauss, echo) = forecast_models(g, a)?;
    let mut outs = Vec::with_capacity(a.k.len());
    for &h in &a.k {
        let out = match (&gauss, &params) {
            (Some(gm), _) => {
                let (mean, var) = match h {
                    Horizon::Steps(k) => gm.conditional(k, a.xn as f64)?,
                    Horizon::Stationary => gm.stationary(),
                };
                let sigma = var.sqrt();
                let y_max = a
                    .y_max
                    .unwrap_or_else(|| gaussian_support(mean, sigma, g.tail));
                let q = discretize_normal(mean, sigma, y_max)?.q;
                // the traditional model is made integer by rounding its mean
                let (median, mode) = if a.model == ModelKind::Traditional {
                    (round_half_up(mean), round_half_up(mean))
                } else {
                    let pf = gaussian_point_forecasts(mean, sigma)?;
                    (pf.median, pf.mode)
                };
                ForecastOut {
                    horizon: h,
                    x_n: a.xn,
                    mean,
                    variance: var,
                    mean_rounded: round_half_up(mean),
                    median,
                    mode,
                    pmf: q,
                }
            }
            (None, Some(p)) => {
                let d = forecast_at(h, a.xn, p, g.tail)?;
                let pmf = match (a.y_max, h) {
                    (None, _) => d.pmf.clone(),
                    (Some(y), Horizon::Steps(k)) => conditional_pmf_table(k, a.xn, p, y + 1)?,
                    (Some(y), Horizon::Stationary) => {
                        (0..=y as u64).map(|v| p.marginal().pmf(v)).collect()
                    }
                };
                ForecastOut {
                    horizon: h,
                    x_n: a.xn,
                    mean: d.mean,
                    variance: d.variance,
                    mean_rounded: d.mean_rounded(),
                    median: d.median,
                    mode: d.mode,
                    pmf,
                }
            }
            (None, None) => unreachable!("forecast_models returns at least one model"),
        };
        outs.push(out);
    }

    let config = json!({
        "command": "forecast",
        "input": input_label(g),
        "first": g.first,
        "model": a.model,
        "parameters": echo,
        "x_n": a.xn,
        "horizons": a.k,
        "tail": g.tail,
    });
    match a.format {
        Format::Json => to_json(&json!({
            "config": config,
            "results": outs,
            "diagnostics": { "tail": g.tail },
        })),
        Format::Csv => {
            let mut s = format!("# {}\n", serde_json::to_string(&config)?);
            for o in &outs {
                writeln!(
                    s,
                    "# point horizon={} mean={} variance={} mean_rounded={} median={} mode={}",
                    o.horizon, o.mean, o.variance, o.mean_rounded, o.median, o.mode
                )?;
            }
            s.push_str("model,horizon,x_n,y,pmf,cdf\n");
            for o in &outs {
                let mut acc = 0.0;
                for (y, p) in o.pmf.iter().enumerate() {
                    acc += p;
                    writeln!(s, "{},{},{},{y},{p},{acc}", a.model, o.horizon, o.x_n)?;
                }
            }
            Ok(s)
        }
    }
}

/// First y where the normal upper tail drops below `tail`.
fn gaussian_support(mean: f64, sigma: f64, tail: f64) -> usize {
    let mut y = mean.max(0.0).ceil() as usize;
    while crate::normal::sf((y as f64 - mean) / sigma) >= tail {
        y += 1;
    }
    y
}

fn cmd_sweep(g: &GlobalArgs, a: &SweepArgs) -> anyhow::Result<String> {
    let need = |v: Option<f64>, name: &str| {
        v.with_context(|| format!("--vary {:?} needs --{name}", a.vary))
    };
    let (sweep, origins): (Sweep, Vec<u64>) = match a.vary {
        Vary::Alpha => {
            let theta = need(a.theta, "theta")?;
            let origins =
                a.xn.clone()
                    .unwrap_or_else(|| default_origins_for_theta(theta));
            (sweep_alpha(theta, &origins, g.tail)?, origins)
        }
        Vary::Theta => {
            let alpha = need(a.alpha, "alpha")?;
            let origins = a.xn.clone().unwrap_or_else(|| THETA_SWEEP_ORIGINS.to_vec());
            (sweep_theta(alpha, &origins, g.tail)?, origins)
        }
        Vary::Xn => {
            let alpha = need(a.alpha, "alpha")?;
            let theta = need(a.theta, "theta")?;
            let x_max = a
                .xn_max
                .unwrap_or_else(|| crate::distances::default_xn_max(theta));
            (
                sweep_xn(alpha, theta, x_max, g.tail)?,
                (0..=x_max).collect(),
            )
        }
    };
    let mut s = format!(
        "# command=sweep vary={:?} alpha={} theta={} xn={:?} tail={} k=1\n",
        a.vary,
        a.alpha.map_or("grid".into(), |v| v.to_string()),
        a.theta.map_or("grid".into(), |v| v.to_string()),
        origins,
        g.tail
    )
    .to_lowercase();
    for (al, th) in &sweep.skipped {
        writeln!(
            s,
            "# skipped alpha={al} theta={th}: innovation law improper, no PLINAR(1) process"
        )?;
    }
    s.push_str(DistanceRecord::CSV_HEADER);
    s.push('\n');
    for r in &sweep.records {
        s.push_str(&r.to_csv_row());
        s.push('\n');
    }
    Ok(s)
}

fn cmd_evaluate(g: &GlobalArgs, a: &EvaluateArgs) -> anyhow::Result<String> {
    let series = load_series(g)?;
    let config = EvaluationConfig {
        train_fraction: a.train_fraction,
        k_max: a.k_max,
        models: a.models.clone(),
        estimators: a.estimators.clone(),
        tail: g.tail,
    };
    let report = full_report(&series, &config)?;
    to_json(&json!({
        "config": {
            "command": "evaluate",
            "input": input_label(g),
            "first": g.first,
            "n": report.n,
            "evaluation": report.config,
        },
        "results": report.rows,
        "diagnostics": {
            "train_len": report.train_len,
            "fits": report.fits,
            "skipped": report.skipped,
        },
    }))
}
