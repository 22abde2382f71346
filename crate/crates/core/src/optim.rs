//! Unconstrained minimization: BFGS with a strong-Wolfe line search, falling
//! back to Nelder–Mead after repeated line-search failures.

use crate::error::Result;

#[derive(Debug, Clone, Copy)]
pub struct OptimOptions {
    pub max_iter: usize,
    /// Stop when the gradient max-norm falls below this.
    pub grad_tol: f64,
    /// Stop when no coordinate moves by more than step_tol·(1 + |x|).
    pub step_tol: f64,
}

impl Default for OptimOptions {
    fn default() -> Self {
        Self {
            max_iter: 500,
            grad_tol: 1e-6,
            step_tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OptimResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub fallback_used: bool,
    /// Objective after every accepted step, starting with f(x₀).
    pub history: Vec<f64>,
    pub message: String,
}

/// Gradient max-norm tolerated when the optimizer stalls on a tiny step.
const STALL_GRAD_TOL: f64 = 1e-3;

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(x: &[f64], alpha: f64, p: &[f64]) -> Vec<f64> {
    x.iter().zip(p).map(|(a, b)| a + alpha * b).collect()
}

/// Objective evaluation where failures count as +∞.
struct Objective<'a, F> {
    fg: &'a F,
    evals: usize,
}

impl<F: Fn(&[f64]) -> Result<(f64, Vec<f64>)>> Objective<'_, F> {
    fn eval(&mut self, x: &[f64]) -> (f64, Vec<f64>) {
        self.evals += 1;
        match (self.fg)(x) {
            Ok((f, g)) if f.is_finite() && g.iter().all(|v| v.is_finite()) => (f, g),
            _ => (f64::INFINITY, vec![f64::NAN; x.len()]),
        }
    }
}

struct LinePoint {
    alpha: f64,
    f: f64,
    g: Vec<f64>,
}

fn cubic_min(a: f64, fa: f64, da: f64, b: f64, fb: f64, db: f64) -> Option<f64> {
    let d1 = da + db - 3.0 * (fa - fb) / (a - b);
    let disc = d1 * d1 - da * db;
    if disc < 0.0 {
        return None;
    }
    let d2 = (b - a).signum() * disc.sqrt();
    let t = b - (b - a) * (db + d2 - d1) / (db - da + 2.0 * d2);
    t.is_finite().then_some(t)
}

/// Strong-Wolfe line search (Nocedal & Wright, Alg. 3.5/3.6).
fn wolfe_search<F: Fn(&[f64]) -> Result<(f64, Vec<f64>)>>(
    obj: &mut Objective<F>,
    x: &[f64],
    f0: f64,
    g0: &[f64],
    p: &[f64],
    alpha0: f64,
) -> Option<LinePoint> {
    const C1: f64 = 1e-4;
    const C2: f64 = 0.9;
    let d0 = dot(g0, p);
    if !(d0 < 0.0) {
        return None;
    }
    let phi = |obj: &mut Objective<F>, a: f64| {
        let (f, g) = obj.eval(&axpy(x, a, p));
        let d = if f.is_finite() { dot(&g, p) } else { f64::NAN };
        (f, g, d)
    };

    let zoom = |obj: &mut Objective<F>, mut lo: (f64, f64, f64), mut hi: (f64, f64, f64)| -> Option<LinePoint> {
        // (alpha, f, derivative)
        for _ in 0..40 {
            let (a_lo, a_hi) = (lo.0, hi.0);
            let mut a = if hi.1.is_finite() && hi.2.is_finite() {
                cubic_min(lo.0, lo.1, lo.2, hi.0, hi.1, hi.2).unwrap_or(0.5 * (a_lo + a_hi))
            } else {
                0.5 * (a_lo + a_hi)
            };
            let (left, right) = if a_lo < a_hi { (a_lo, a_hi) } else { (a_hi, a_lo) };
            let margin = 0.1 * (right - left);
            if !(a > left + margin && a < right - margin) {
                a = 0.5 * (a_lo + a_hi);
            }
            if (right - left) < 1e-16 * right.max(1.0) {
                return None;
            }
            let (f, g, d) = phi(obj, a);
            if !f.is_finite() || f > f0 + C1 * a * d0 || f >= lo.1 {
                hi = (a, f, d);
            } else {
                if d.abs() <= -C2 * d0 {
                    return Some(LinePoint { alpha: a, f, g });
                }
                if d * (hi.0 - lo.0) >= 0.0 {
                    hi = lo;
                }
                lo = (a, f, d);
            }
        }
        // accept the best sufficient-decrease point found
        (lo.0 > 0.0).then(|| {
            let (f, g) = obj.eval(&axpy(x, lo.0, p));
            LinePoint { alpha: lo.0, f, g }
        })
    };

    let mut prev = (0.0, f0, d0);
    let mut a = alpha0;
    for i in 0..30 {
        let (f, g, d) = phi(obj, a);
        if !f.is_finite() {
            // shrink into the region where the objective is defined
            return zoom(obj, prev, (a, f, d));
        }
        if f > f0 + C1 * a * d0 || (i > 0 && f >= prev.1) {
            return zoom(obj, prev, (a, f, d));
        }
        if d.abs() <= -C2 * d0 {
            return Some(LinePoint { alpha: a, f, g });
        }
        if d >= 0.0 {
            return zoom(obj, (a, f, d), prev);
        }
        prev = (a, f, d);
        a *= 2.0;
    }
    None
}

/// Minimizes a smooth function given its value and gradient.
pub fn minimize<F>(fg: F, x0: &[f64], opts: &OptimOptions) -> Result<OptimResult>
where
    F: Fn(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    let n = x0.len();
    let (mut f, mut g) = fg(x0)?;
    let mut obj = Objective { fg: &fg, evals: 1 };
    let mut x = x0.to_vec();
    let mut h = identity(n);
    let mut fresh_h = true;
    let mut history = vec![f];
    let mut failures = 0usize;
    let mut fallback_used = false;
    let mut iterations = 0;
    let mut stalled = false;
    let mut message = String::from("iteration limit reached");

    while iterations < opts.max_iter {
        if max_abs(&g) <= opts.grad_tol {
            message = "gradient tolerance reached".into();
            break;
        }
        iterations += 1;
        let mut p: Vec<f64> = (0..n).map(|i| -dot(&h[i], &g)).collect();
        if !(dot(&p, &g) < 0.0) {
            h = identity(n);
            fresh_h = true;
            p = g.iter().map(|v| -v).collect();
        }
        let alpha0 = if fresh_h { (1.0 / max_abs(&p)).min(1.0) } else { 1.0 };
        match wolfe_search(&mut obj, &x, f, &g, &p, alpha0) {
            Some(pt) => {
                failures = 0;
                let s: Vec<f64> = p.iter().map(|v| pt.alpha * v).collect();
                let y: Vec<f64> = pt.g.iter().zip(&g).map(|(a, b)| a - b).collect();
                let x_new = axpy(&x, 1.0, &s);
                let small_step = s.iter().zip(&x_new).all(|(si, xi)| si.abs() <= opts.step_tol * (1.0 + xi.abs()));
                x = x_new;
                f = pt.f;
                g = pt.g;
                history.push(f);
                let sy = dot(&s, &y);
                if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
                    if fresh_h {
                        let scale = sy / dot(&y, &y);
                        h = identity(n);
                        for (i, row) in h.iter_mut().enumerate() {
                            row[i] = scale;
                        }
                        fresh_h = false;
                    }
                    bfgs_update(&mut h, &s, &y, sy);
                }
                if small_step {
                    stalled = true;
                    message = "step tolerance reached".into();
                    break;
                }
            }
            None => {
                failures += 1;
                h = identity(n);
                fresh_h = true;
                if failures >= 3 {
                    fallback_used = true;
                    let (xn, fn_) = nelder_mead(&mut obj, &x, f, 200 * n.max(1));
                    if fn_ < f {
                        let (fe, ge) = obj.eval(&xn);
                        if fe.is_finite() && fe <= f {
                            x = xn;
                            f = fe;
                            g = ge;
                            history.push(f);
                            failures = 0;
                            continue;
                        }
                    }
                    stalled = true;
                    message = "line search failed and simplex fallback made no progress".into();
                    break;
                }
            }
        }
    }
    let grad_norm = max_abs(&g);
    let converged = grad_norm <= opts.grad_tol || (stalled && grad_norm <= STALL_GRAD_TOL);
    if grad_norm <= opts.grad_tol {
        message = "gradient tolerance reached".into();
    }
    Ok(OptimResult {
        x,
        f,
        grad_norm,
        iterations,
        converged,
        fallback_used,
        history,
        message,
    })
}

fn identity(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect()
}

/// H ← (I − ρsyᵀ) H (I − ρysᵀ) + ρssᵀ with ρ = 1/(sᵀy).
fn bfgs_update(h: &mut [Vec<f64>], s: &[f64], y: &[f64], sy: f64) {
    let n = s.len();
    let rho = 1.0 / sy;
    let hy: Vec<f64> = (0..n).map(|i| dot(&h[i], y)).collect();
    let yhy = dot(y, &hy);
    for i in 0..n {
        for j in 0..n {
            h[i][j] += -rho * (hy[i] * s[j] + s[i] * hy[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
        }
    }
}

/// Derivative-free Nelder–Mead from x0; returns the best vertex.
fn nelder_mead<F: Fn(&[f64]) -> Result<(f64, Vec<f64>)>>(
    obj: &mut Objective<F>,
    x0: &[f64],
    f0: f64,
    max_evals: usize,
) -> (Vec<f64>, f64) {
    let n = x0.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = vec![(x0.to_vec(), f0)];
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += 0.05 * v[i].abs().max(0.1);
        let fv = obj.eval(&v).0;
        simplex.push((v, fv));
    }
    let start = obj.evals;
    while obj.evals - start < max_evals {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (best, worst) = (simplex[0].1, simplex[n].1);
        if (worst - best).abs() <= 1e-12 * (1.0 + best.abs()) {
            break;
        }
        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|v| v.0[j]).sum::<f64>() / n as f64)
            .collect();
        let toward = |t: f64| -> Vec<f64> { centroid.iter().zip(&simplex[n].0).map(|(c, w)| c + t * (w - c)).collect() };
        let xr = toward(-1.0);
        let fr = obj.eval(&xr).0;
        if fr < simplex[0].1 {
            let xe = toward(-2.0);
            let fe = obj.eval(&xe).0;
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            let (xc, fc) = if fr < worst {
                let xc = toward(-0.5);
                let fc = obj.eval(&xc).0;
                (xc, fc)
            } else {
                let xc = toward(0.5);
                let fc = obj.eval(&xc).0;
                (xc, fc)
            };
            if fc < worst.min(fr) {
                simplex[n] = (xc, fc);
            } else {
                let best_x = simplex[0].0.clone();
                for v in simplex.iter_mut().skip(1) {
                    let shrunk: Vec<f64> = best_x.iter().zip(&v.0).map(|(b, x)| b + 0.5 * (x - b)).collect();
                    let fs = obj.eval(&shrunk).0;
                    *v = (shrunk, fs);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    simplex.swap_remove(0)
}
