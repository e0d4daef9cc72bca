//! Standard normal CDF in linear and log space.
//!
//! `erfc` handles the central region and moderate tails. Below
//! [`ASYMPTOTIC_CUTOFF`] the log-CDF switches to the Mills-ratio expansion so
//! that log-probabilities stay finite long after the linear CDF underflows.

use libm::erfc;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

const ASYMPTOTIC_CUTOFF: f64 = -20.0;

/// Φ(z).
pub fn cdf(z: f64) -> f64 {
    0.5 * erfc(-z * FRAC_1_SQRT_2)
}

/// 1 − Φ(z), evaluated without cancellation for large positive z.
pub fn sf(z: f64) -> f64 {
    0.5 * erfc(z * FRAC_1_SQRT_2)
}

/// ln Φ(z), finite for every finite z.
pub fn ln_cdf(z: f64) -> f64 {
    if z.is_nan() {
        return f64::NAN;
    }
    if z == f64::INFINITY {
        return 0.0;
    }
    if z == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if z > 5.0 {
        (-sf(z)).ln_1p()
    } else if z > ASYMPTOTIC_CUTOFF {
        cdf(z).ln()
    } else {
        ln_lower_tail_asymptotic(z)
    }
}

/// ln(1 − Φ(z)).
pub fn ln_sf(z: f64) -> f64 {
    ln_cdf(-z)
}

/// ln Φ(z) for z ≪ 0 via Φ(z) = φ(z)/|z| · Σ (−1)^n (2n−1)!! / z^{2n}.
fn ln_lower_tail_asymptotic(z: f64) -> f64 {
    let z2 = z * z;
    let mut term = 1.0;
    let mut series = 1.0;
    for n in 1..40 {
        let next = -term * (2 * n - 1) as f64 / z2;
        if next.abs() >= term.abs() {
            break;
        }
        term = next;
        series += term;
        if term.abs() < 1e-17 * series.abs() {
            break;
        }
    }
    -0.5 * z2 - (-z).ln() - 0.5 * (2.0 * PI).ln() + series.ln()
}

/// ln(Φ(b) − Φ(a)) for a < b, choosing the tail whose difference does not
/// cancel.
pub fn ln_interval(a: f64, b: f64) -> f64 {
    debug_assert!(a <= b);
    if a == b {
        return f64::NEG_INFINITY;
    }
    if b <= 0.0 {
        let lb = ln_cdf(b);
        lb + ln_one_minus_exp(ln_cdf(a) - lb)
    } else if a >= 0.0 {
        let la = ln_sf(a);
        la + ln_one_minus_exp(ln_sf(b) - la)
    } else {
        // straddles the mode, both tails are at most one half
        (1.0 - sf(b) - cdf(a)).ln()
    }
}

/// ln(1 − e^x) for x ≤ 0.
fn ln_one_minus_exp(x: f64) -> f64 {
    if x > -std::f64::consts::LN_2 {
        (-x.exp_m1()).ln()
    } else {
        (-x.exp()).ln_1p()
    }
}
