//! Limited-memory BFGS with a bracketing line search.
//!
//! Steps are accepted on the weak Wolfe conditions, or on the approximate
//! Wolfe conditions of Hager and Zhang once the objective decrease is at the
//! level of its rounding noise. Objectives signal infeasible points (for
//! example superluminal iterates) by returning `None`; the line search then
//! shrinks the step.

use std::collections::VecDeque;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct LbfgsOptions {
    pub memory: usize,
    /// Stop when the Euclidean gradient norm drops below this.
    pub gtol: f64,
    pub max_iter: usize,
    pub max_line_search: usize,
    /// Sufficient-decrease constant.
    pub c1: f64,
    /// Curvature constant.
    pub sigma: f64,
    /// Approximate-Wolfe constant `δ`, with `(2δ-1)φ'(0) ≥ φ'(α)`.
    pub delta: f64,
    /// Relative rounding level of the objective.
    pub f_noise: f64,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        Self {
            memory: 12,
            gtol: 1e-8,
            max_iter: 20_000,
            max_line_search: 40,
            c1: 1e-4,
            sigma: 0.9,
            delta: 0.1,
            f_noise: 1e-13,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LbfgsResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    /// Set when a line search found no decrease; `x` is the last accepted point.
    pub stalled: bool,
    /// Objective value after each accepted step, starting with the initial one.
    pub history: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Minimizes `f`, which returns the value and gradient, or `None` at
/// infeasible points. `x0` must be feasible.
pub fn minimize<F>(mut f: F, x0: Vec<f64>, opts: &LbfgsOptions) -> Result<LbfgsResult>
where
    F: FnMut(&[f64]) -> Result<Option<(f64, Vec<f64>)>>,
{
    let n = x0.len();
    let mut x = x0;
    let (mut fx, mut g) = f(&x)?
        .ok_or_else(|| Error::LineSearchFailure("initial point is infeasible".into()))?;
    let mut evaluations = 1;
    let mut history = vec![fx];
    let mut mem: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut iterations = 0;
    let mut gn = norm(&g);
    let mut stalled = false;
    while gn > opts.gtol && iterations < opts.max_iter {
        // two-loop recursion
        let mut d: Vec<f64> = g.iter().map(|v| -v).collect();
        let mut alphas = Vec::with_capacity(mem.len());
        for (s, y, rho) in mem.iter().rev() {
            let a = rho * dot(s, &d);
            for i in 0..n {
                d[i] -= a * y[i];
            }
            alphas.push(a);
        }
        let gamma = mem.back().map_or(1.0, |(s, y, _)| dot(s, y) / dot(y, y));
        for v in d.iter_mut() {
            *v *= gamma;
        }
        for ((s, y, rho), a) in mem.iter().zip(alphas.into_iter().rev()) {
            let b = rho * dot(y, &d);
            for i in 0..n {
                d[i] += (a - b) * s[i];
            }
        }
        let mut dphi0 = dot(&g, &d);
        if !(dphi0 < 0.0) {
            mem.clear();
            d = g.iter().map(|v| -v).collect();
            dphi0 = -gn * gn;
        }
        let first = mem.is_empty();
        let mut alpha = if first { (1.0 / gn).min(1.0) } else { 1.0 };
        let (mut lo, mut dphi_lo) = (0.0, dphi0);
        let mut hi = f64::INFINITY;
        let noise = opts.f_noise * fx.abs().max(1.0);
        let mut accepted = None;
        let mut best: Option<(f64, Vec<f64>, f64, Vec<f64>)> = None;
        for _ in 0..opts.max_line_search {
            let xt: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + alpha * b).collect();
            evaluations += 1;
            let Some((ft, gt)) = f(&xt)? else {
                hi = alpha;
                alpha = lo + 0.25 * (alpha - lo);
                continue;
            };
            let dphi = dot(&gt, &d);
            let armijo = ft <= fx + opts.c1 * alpha * dphi0;
            let curvature = dphi >= opts.sigma * dphi0;
            let approx = ft <= fx + noise
                && (2.0 * opts.delta - 1.0) * dphi0 >= dphi
                && curvature;
            if (armijo && curvature) || approx {
                accepted = Some((xt, ft, gt));
                break;
            }
            if ft < fx && best.as_ref().map_or(true, |b| ft < b.0) {
                best = Some((ft, xt.clone(), alpha, gt.clone()));
            }
            if !armijo || dphi > 0.0 {
                hi = alpha;
                // secant on φ' between lo and alpha when it brackets a root
                let cand = if dphi > 0.0 && dphi_lo < 0.0 {
                    lo - dphi_lo * (alpha - lo) / (dphi - dphi_lo)
                } else {
                    0.5 * (lo + alpha)
                };
                let w = alpha - lo;
                alpha = cand.clamp(lo + 0.1 * w, alpha - 0.1 * w);
            } else {
                lo = alpha;
                dphi_lo = dphi;
                alpha = if hi.is_finite() { 0.5 * (lo + hi) } else { 4.0 * alpha };
            }
        }
        let (xn, fnew, gnew) = match accepted {
            Some(a) => a,
            None => match best {
                Some((ft, xt, _, gt)) => (xt, ft, gt),
                None => {
                    stalled = true;
                    break;
                }
            },
        };
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gnew.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-300 && sy > 1e-12 * norm(&s) * norm(&y) {
            if mem.len() == opts.memory {
                mem.pop_front();
            }
            mem.push_back((s, y, 1.0 / sy));
        }
        x = xn;
        fx = fnew;
        g = gnew;
        gn = norm(&g);
        history.push(fx);
        iterations += 1;
    }
    Ok(LbfgsResult {
        x,
        f: fx,
        grad_norm: gn,
        iterations,
        evaluations,
        converged: gn <= opts.gtol,
        stalled,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosenbrock(x: &[f64]) -> Result<Option<(f64, Vec<f64>)>> {
        let mut f = 0.0;
        let mut g = vec![0.0; x.len()];
        for i in 0..x.len() - 1 {
            let a = x[i + 1] - x[i] * x[i];
            let b = 1.0 - x[i];
            f += 100.0 * a * a + b * b;
            g[i] += -400.0 * x[i] * a - 2.0 * b;
            g[i + 1] += 200.0 * a;
        }
        Ok(Some((f, g)))
    }

    #[test]
    fn solves_rosenbrock() {
        let r = minimize(rosenbrock, vec![-1.2, 1.0, -0.5, 0.8], &LbfgsOptions::default()).unwrap();
        assert!(r.converged);
        for v in &r.x {
            assert!((v - 1.0).abs() < 1e-7);
        }
        let noise = 1e-13;
        assert!(r.history.windows(2).all(|w| w[1] <= w[0] + noise));
    }

    #[test]
    fn quadratic_with_infeasible_region() {
        // minimum at 2 but x > 2.5 is infeasible
        let f = |x: &[f64]| -> Result<Option<(f64, Vec<f64>)>> {
            if x[0] > 2.5 {
                return Ok(None);
            }
            Ok(Some(((x[0] - 2.0).powi(2), vec![2.0 * (x[0] - 2.0)])))
        };
        let r = minimize(f, vec![-100.0], &LbfgsOptions::default()).unwrap();
        assert!((r.x[0] - 2.0).abs() < 1e-8);
    }

    #[test]
    fn inconsistent_gradient_stalls() {
        // the reported gradient points uphill, so no step can decrease f
        let f = |x: &[f64]| -> Result<Option<(f64, Vec<f64>)>> {
            Ok(Some((x[0] * x[0] + 1.0, vec![-2.0 * x[0] - 1.0])))
        };
        let r = minimize(f, vec![1.0], &LbfgsOptions::default()).unwrap();
        assert!(r.stalled && !r.converged);
        assert_eq!(r.x, vec![1.0]);
        assert_eq!(r.iterations, 0);
    }
}
