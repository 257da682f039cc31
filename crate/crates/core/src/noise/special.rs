//! Normal-distribution helpers that stay finite deep in the left tail.

use statrs::function::erf::erfc;
use std::f64::consts::{LN_2, SQRT_2};

pub(crate) const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Below this argument the asymptotic tail series replaces `erfc`.
const TAIL: f64 = -35.0;

pub(crate) fn std_normal_ln_pdf(t: f64) -> f64 {
    -0.5 * t * t - LN_SQRT_2PI
}

/// `ln Φ(t)` for the standard normal CDF.
pub(crate) fn ln_std_normal_cdf(t: f64) -> f64 {
    if t < TAIL {
        // Φ(t) ≈ φ(t)/(−t) · (1 − 1/t² + 3/t⁴ − 15/t⁶)
        std_normal_ln_pdf(t) - (-t).ln() + tail_series(t).ln()
    } else {
        (erfc(-t / SQRT_2)).ln() - LN_2
    }
}

/// `φ(t)/Φ(t)`, the inverse Mills ratio of the lower tail.
pub(crate) fn normal_pdf_over_cdf(t: f64) -> f64 {
    if t < TAIL {
        -t / tail_series(t)
    } else {
        (std_normal_ln_pdf(t) - ln_std_normal_cdf(t)).exp()
    }
}

fn tail_series(t: f64) -> f64 {
    let u = 1.0 / (t * t);
    1.0 - u + 3.0 * u * u - 15.0 * u * u * u
}

pub(crate) const LN_PI: f64 = 1.144_729_885_849_400_2;
