//! Poisson-Lindley INAR(1) modeling and coherent count forecasting.
//!
//! The crate covers the full pipeline for low-count integer time series:
//!
//! * [`pl`] – the Poisson-Lindley marginal law (PMF, CDF, moments, sampling).
//! * [`process`] – the PLINAR(1) process: binomial thinning, the innovation
//!   law and path simulation.
//! * [`forecast`] – exact k-step-ahead conditional distributions.
//! * [`gaussian`] – moment-matched Gaussian AR(1) approximations and their
//!   integer discretization.
//! * [`distances`] – Kullback-Leibler and Kolmogorov comparisons plus the
//!   parameter sweeps built on them.
//! * [`estimate`] – CLS, Yule-Walker and maximum-likelihood fitting, and the
//!   Gaussian AR(p) fits used for order selection.
//! * [`evaluate`] – the train/test forecast-accuracy harness.
//! * [`cli`] – the command-line front end.

// `!(x > 0.0)` style checks are deliberate: they reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod distances;
pub mod error;
pub mod estimate;
pub mod evaluate;
pub mod forecast;
pub mod gaussian;
pub mod normal;
pub mod optim;
pub mod pl;
pub mod process;
pub mod series;

pub use error::{Error, Result};
pub use forecast::{ForecastDistribution, Horizon};
pub use pl::PoissonLindley;
pub use process::PlinarParams;
pub use series::CountSeries;

/// Default tail mass left beyond the truncation point of every infinite sum.
pub const DEFAULT_TAIL: f64 = 1e-12;

/// Hard cap on the number of support points any truncated table may hold.
pub const MAX_SUPPORT: usize = 1_000_000;
