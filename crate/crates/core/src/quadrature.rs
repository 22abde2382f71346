//! Globally adaptive Gauss–Kronrod (7/15) quadrature with infinite-range
//! transforms, plus a nested 2-D driver used for normalization checks.

use crate::error::{EgseError, Result};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7]
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-10,
            max_intervals: 4000,
        }
    }
}

impl QuadOptions {
    pub fn with_tol(abs_tol: f64) -> Self {
        Self {
            abs_tol,
            rel_tol: abs_tol,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Quadrature {
    pub value: f64,
    pub abs_error: f64,
    pub intervals: usize,
}

#[derive(Debug)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let sum = f(center - dx) + f(center + dx);
        kronrod += w * sum;
        if j % 2 == 1 {
            gauss += WG[j / 2] * sum;
        }
    }
    let value = kronrod * half;
    let err = ((kronrod - gauss) * half).abs();
    (value, err)
}

/// Integrates `f` over the finite interval [a, b].
pub fn integrate_finite<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, opts: &QuadOptions) -> Result<Quadrature> {
    if a == b {
        return Ok(Quadrature {
            value: 0.0,
            abs_error: 0.0,
            intervals: 0,
        });
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let (v, e) = gk15(&f, lo, hi);
    if !v.is_finite() {
        return Err(EgseError::Numeric(format!(
            "integrand not finite on [{lo}, {hi}]"
        )));
    }
    let mut heap = BinaryHeap::new();
    heap.push(Segment {
        a: lo,
        b: hi,
        value: v,
        error: e,
    });
    let mut total = v;
    let mut total_err = e;
    let mut count = 1;
    loop {
        let tol = opts.abs_tol.max(opts.rel_tol * total.abs());
        if total_err <= tol {
            break;
        }
        if count >= opts.max_intervals {
            return Err(EgseError::Numeric(format!(
                "adaptive quadrature did not converge: achieved error {total_err:.3e} > {tol:.3e}"
            )));
        }
        let seg = heap.pop().expect("heap never empty");
        let mid = 0.5 * (seg.a + seg.b);
        if mid <= seg.a || mid >= seg.b {
            // interval at machine resolution; accept what we have
            heap.push(seg);
            break;
        }
        let (v1, e1) = gk15(&f, seg.a, mid);
        let (v2, e2) = gk15(&f, mid, seg.b);
        total += v1 + v2 - seg.value;
        total_err += e1 + e2 - seg.error;
        heap.push(Segment {
            a: seg.a,
            b: mid,
            value: v1,
            error: e1,
        });
        heap.push(Segment {
            a: mid,
            b: seg.b,
            value: v2,
            error: e2,
        });
        count += 1;
        // resum periodically to limit drift in the running totals
        if count % 64 == 0 {
            total = heap.iter().map(|s| s.value).sum();
            total_err = heap.iter().map(|s| s.error).sum();
        }
    }
    let value: f64 = heap.iter().map(|s| s.value).sum();
    let abs_error: f64 = heap.iter().map(|s| s.error).sum();
    if !value.is_finite() {
        return Err(EgseError::Numeric("quadrature produced a non-finite value".into()));
    }
    Ok(Quadrature {
        value: sign * value,
        abs_error,
        intervals: count,
    })
}

/// Integrates `f` over [a, b] where either end may be infinite.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, opts: &QuadOptions) -> Result<Quadrature> {
    match (a.is_finite(), b.is_finite()) {
        (true, true) => integrate_finite(f, a, b, opts),
        (true, false) => {
            // x = a + t/(1-t)
            integrate_finite(
                |t| {
                    let one_m = 1.0 - t;
                    let x = a + t / one_m;
                    let v = f(x) / (one_m * one_m);
                    if v.is_finite() { v } else { 0.0 }
                },
                0.0,
                1.0,
                opts,
            )
        }
        (false, true) => integrate_finite(
            |t| {
                let one_m = 1.0 - t;
                let x = b - t / one_m;
                let v = f(x) / (one_m * one_m);
                if v.is_finite() { v } else { 0.0 }
            },
            0.0,
            1.0,
            opts,
        ),
        (false, false) => integrate_finite(
            |t| {
                let d = 1.0 - t * t;
                let x = t / d;
                let v = f(x) * (1.0 + t * t) / (d * d);
                if v.is_finite() { v } else { 0.0 }
            },
            -1.0,
            1.0,
            opts,
        ),
    }
}

/// ∫_{xa}^{xb} ∫_{ya}^{yb} f(x, y) dy dx by nested adaptive quadrature.
pub fn integrate_2d<F: Fn(f64, f64) -> f64>(
    f: F,
    (xa, xb): (f64, f64),
    (ya, yb): (f64, f64),
    opts: &QuadOptions,
) -> Result<Quadrature> {
    let inner_opts = QuadOptions {
        abs_tol: opts.abs_tol * 0.1,
        rel_tol: opts.rel_tol * 0.1,
        max_intervals: opts.max_intervals,
    };
    let failure = std::cell::RefCell::new(None);
    let outer = integrate(
        |x| match integrate(|y| f(x, y), ya, yb, &inner_opts) {
            Ok(q) => q.value,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                0.0
            }
        },
        xa,
        xb,
        opts,
    )?;
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(outer)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn polynomial_exact() {
        let q = integrate_finite(|x| x * x, 0.0, 3.0, &QuadOptions::default()).unwrap();
        assert_relative_eq!(q.value, 9.0, epsilon = 1e-13);
    }

    #[test]
    fn gaussian_whole_line() {
        let q = integrate(|x| (-0.5 * x * x).exp(), f64::NEG_INFINITY, f64::INFINITY, &QuadOptions::default()).unwrap();
        assert_relative_eq!(q.value, (2.0 * PI).sqrt(), epsilon = 1e-10);
    }

    #[test]
    fn half_lines() {
        let opts = QuadOptions::default();
        let right = integrate(|x| (-x).exp(), 1.0, f64::INFINITY, &opts).unwrap();
        assert_relative_eq!(right.value, (-1.0f64).exp(), epsilon = 1e-10);
        let left = integrate(|x| 1.0 / (1.0 + x * x), f64::NEG_INFINITY, 0.0, &opts).unwrap();
        assert_relative_eq!(left.value, PI / 2.0, epsilon = 1e-9);
    }

    #[test]
    fn reversed_limits_flip_sign() {
        let q = integrate_finite(|x| x, 2.0, 0.0, &QuadOptions::default()).unwrap();
        assert_relative_eq!(q.value, -2.0, epsilon = 1e-14);
    }

    #[test]
    fn peaked_integrand_converges() {
        let s = 1e-3;
        let q = integrate_finite(|x| (-(x - 0.3) * (x - 0.3) / (2.0 * s * s)).exp(), 0.0, 1.0, &QuadOptions::default()).unwrap();
        assert_relative_eq!(q.value, s * (2.0 * PI).sqrt(), max_relative = 1e-8);
    }

    #[test]
    fn two_dimensional_box() {
        let q = integrate_2d(|x, y| x * y, (0.0, 1.0), (0.0, 2.0), &QuadOptions::with_tol(1e-10)).unwrap();
        assert_relative_eq!(q.value, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn nonconvergence_reports_error() {
        let opts = QuadOptions {
            abs_tol: 1e-15,
            rel_tol: 0.0,
            max_intervals: 3,
        };
        let err = integrate_finite(|x| (1.0 / x).sin(), 1e-6, 1.0, &opts).unwrap_err();
        assert!(matches!(err, EgseError::Numeric(_)));
    }
}
