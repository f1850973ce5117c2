//! Special functions: digamma, the standard normal CDF/quantile and the
//! F-distribution quantile.
//!
//! The digamma function is evaluated here directly; the error function and
//! regularized incomplete beta come from `statrs`.

use std::f64::consts::{PI, SQRT_2};

use statrs::function::beta::beta_reg;
use statrs::function::erf::{erfc, erfc_inv};

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Below this argument the upward recurrence ψ(x) = ψ(x+1) − 1/x is applied
/// before switching to the asymptotic series.
const ASYMPTOTIC_THRESHOLD: f64 = 12.0;

/// Digamma function ψ(x) = d/dx ln Γ(x).
///
/// Poles (x = 0, −1, −2, …) return NaN. Negative non-integers use the
/// reflection formula.
pub fn digamma(x: f64) -> f64 {
    if x.is_nan() || x == f64::NEG_INFINITY {
        return f64::NAN;
    }
    if x == f64::INFINITY {
        return f64::INFINITY;
    }
    if x <= 0.0 {
        if x == x.floor() {
            return f64::NAN;
        }
        return digamma(1.0 - x) - PI / (PI * x).tan();
    }

    let mut shift = 0.0;
    let mut z = x;
    while z < ASYMPTOTIC_THRESHOLD {
        shift -= 1.0 / z;
        z += 1.0;
    }

    // ln z − 1/(2z) − Σ B₂ₖ / (2k z²ᵏ), through B₁₄.
    let t = 1.0 / (z * z);
    let tail = t
        * (1.0 / 12.0
            - t * (1.0 / 120.0
                - t * (1.0 / 252.0 - t * (1.0 / 240.0 - t * (1.0 / 132.0 - t * (691.0 / 32760.0 - t / 12.0))))));
    shift + z.ln() - 0.5 / z - tail
}

/// Standard normal cumulative distribution Φ(x).
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

/// Standard normal quantile Φ⁻¹(p). Returns ±∞ at p = 0 / 1 and NaN outside [0, 1].
pub fn normal_quantile(p: f64) -> f64 {
    if !(0.0..=1.0).contains(&p) || p.is_nan() {
        return f64::NAN;
    }
    if p == 0.0 {
        return f64::NEG_INFINITY;
    }
    if p == 1.0 {
        return f64::INFINITY;
    }
    -SQRT_2 * erfc_inv(2.0 * p)
}

/// Inverse of the regularized incomplete beta function in x, by bisection.
///
/// Bisection is run to the resolution of f64 on [0, 1] so the result is
/// independent of any starting approximation.
pub fn inv_beta_reg(p: f64, a: f64, b: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&p) && a > 0.0 && b > 0.0);
    if p <= 0.0 {
        return 0.0;
    }
    if p >= 1.0 {
        return 1.0;
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..1100 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if beta_reg(a, b, mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Quantile of the F distribution with (d1, d2) degrees of freedom.
///
/// Uses the Beta(d1/2, d2/2) representation of d1·F / (d1·F + d2).
pub fn f_quantile(p: f64, d1: f64, d2: f64) -> f64 {
    if !(d1 > 0.0 && d2 > 0.0) || !(0.0..=1.0).contains(&p) {
        return f64::NAN;
    }
    let x = inv_beta_reg(p, d1 / 2.0, d2 / 2.0);
    if x >= 1.0 {
        return f64::INFINITY;
    }
    d2 * x / (d1 * (1.0 - x))
}
