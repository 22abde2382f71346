//! Univariate special functions shared by the density code: standard normal
//! and Student-t CDF/pdf/quantile, plus a stable log-gamma difference.

use statrs::function::beta::beta_reg;
use libm::erfc;
use statrs::function::erf::erfc_inv;
use statrs::function::gamma::ln_gamma;
use std::f64::consts::{PI, SQRT_2};

/// ln √(2π)
pub const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

pub fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z - LN_SQRT_2PI).exp()
}

pub fn normal_ln_pdf(z: f64) -> f64 {
    -0.5 * z * z - LN_SQRT_2PI
}

/// Φ(z) through erfc, accurate in both tails.
pub fn normal_cdf(z: f64) -> f64 {
    if z.is_nan() {
        return f64::NAN;
    }
    0.5 * erfc(-z / SQRT_2)
}

/// Φ⁻¹(p) for p in (0, 1); returns ±∞ at the endpoints.
pub fn normal_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    -SQRT_2 * erfc_inv(2.0 * p)
}

/// lnΓ(x + d) − lnΓ(x) for d a non-negative multiple of ½.
///
/// The integer part is accumulated as a sum of logs and the half step uses an
/// asymptotic series for large x, so the result stays accurate when x is huge
/// (Student-t with ν around 10⁶).
pub fn ln_gamma_diff(x: f64, d: f64) -> f64 {
    let twice = (2.0 * d).round();
    debug_assert!((twice - 2.0 * d).abs() < 1e-12 && twice >= 0.0);
    let whole = (twice / 2.0).floor() as usize;
    let half = (twice as usize) % 2 == 1;
    let mut acc = 0.0;
    let mut y = x;
    for _ in 0..whole {
        acc += y.ln();
        y += 1.0;
    }
    if half {
        acc += ln_gamma_half_step(y);
    }
    acc
}

/// lnΓ(x + ½) − lnΓ(x).
fn ln_gamma_half_step(x: f64) -> f64 {
    if x < 20.0 {
        return ln_gamma(x + 0.5) - ln_gamma(x);
    }
    let r = 1.0 / x;
    let r2 = r * r;
    0.5 * x.ln() - r / 8.0 + r * r2 / 192.0 - r * r2 * r2 / 640.0
        + 17.0 * r * r2 * r2 * r2 / 14336.0
}

/// Log-density of the standard Student-t with `nu` degrees of freedom.
/// An infinite `nu` gives the standard normal.
pub fn student_ln_pdf(t: f64, nu: f64) -> f64 {
    if nu.is_infinite() {
        return normal_ln_pdf(t);
    }
    ln_gamma_diff(0.5 * nu, 0.5) - 0.5 * (nu * PI).ln() - 0.5 * (nu + 1.0) * (t * t / nu).ln_1p()
}

pub fn student_pdf(t: f64, nu: f64) -> f64 {
    student_ln_pdf(t, nu).exp()
}

/// CDF of the standard Student-t via the regularized incomplete beta function.
pub fn student_cdf(t: f64, nu: f64) -> f64 {
    if t.is_nan() {
        return f64::NAN;
    }
    if nu.is_infinite() {
        return normal_cdf(t);
    }
    if t.is_infinite() {
        return if t > 0.0 { 1.0 } else { 0.0 };
    }
    let t2 = t * t;
    if t2 < nu {
        // central region: 1/2 ± I_{t²/(ν+t²)}(1/2, ν/2)/2
        let x = t2 / (nu + t2);
        let half_mass = 0.5 * beta_reg(0.5, 0.5 * nu, x);
        if t >= 0.0 {
            0.5 + half_mass
        } else {
            0.5 - half_mass
        }
    } else {
        let x = nu / (nu + t2);
        let tail = 0.5 * beta_reg(0.5 * nu, 0.5, x);
        if t >= 0.0 {
            1.0 - tail
        } else {
            tail
        }
    }
}

/// Ratio pdf(x)/cdf(x) of the standard normal, stable in the left tail.
pub fn normal_hazard_ratio(z: f64) -> f64 {
    if z > -30.0 {
        let c = normal_cdf(z);
        if c > 0.0 {
            return normal_pdf(z) / c;
        }
    }
    // Mills-ratio continued fraction for very negative z: φ/Φ ≈ −z / (1 − 1/z² + 3/z⁴ ...)
    let x = -z;
    let x2 = x * x;
    x / (1.0 - 1.0 / x2 + 3.0 / (x2 * x2) - 15.0 / (x2 * x2 * x2))
}
