//! Gaussian special functions evaluated without cancellation in the tails.

use errorfunctions::RealErrorFunctions;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

pub const LN_2: f64 = std::f64::consts::LN_2;
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_7;

pub fn erf(x: f64) -> f64 {
    RealErrorFunctions::erf(x)
}

pub fn erfc(x: f64) -> f64 {
    RealErrorFunctions::erfc(x)
}

/// Scaled complementary error function `exp(x^2) erfc(x)`.
pub fn erfcx(x: f64) -> f64 {
    RealErrorFunctions::erfcx(x)
}

/// Standard normal density.
pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x - LN_SQRT_2PI).exp()
}

pub fn ln_norm_pdf(x: f64) -> f64 {
    -0.5 * x * x - LN_SQRT_2PI
}

/// Standard normal CDF.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// `ln Φ(x)`, accurate for large negative and large positive `x`.
pub fn ln_norm_cdf(x: f64) -> f64 {
    if x >= 0.0 {
        (-0.5 * erfc(x * FRAC_1_SQRT_2)).ln_1p()
    } else {
        (0.5 * erfcx(-x * FRAC_1_SQRT_2)).ln() - 0.5 * x * x
    }
}

/// Inverse Mills ratio `φ(x) / Φ(-x)`.
pub fn inv_mills(x: f64) -> f64 {
    (2.0 / PI).sqrt() / erfcx(x * FRAC_1_SQRT_2)
}

/// `φ(x)/Φ(-x) - x`, the gap between the inverse Mills ratio and its
/// asymptote. Uses the Laplace continued fraction for large `x`.
pub fn inv_mills_gap(x: f64) -> f64 {
    if x < 6.0 {
        return inv_mills(x) - x;
    }
    let mut t = x;
    for k in (2..=80).rev() {
        t = x + k as f64 / t;
    }
    1.0 / t
}

/// `x log2(x)` with the convention `0 log 0 = 0`.
pub fn xlog2x(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.log2()
    }
}

/// `ln(exp(a) + exp(b))`.
pub fn ln_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Binary entropy in bits.
pub fn h2(p: f64) -> f64 {
    -xlog2x(p) - xlog2x(1.0 - p)
}
