//! Limited-memory BFGS with a strong Wolfe line search.

use std::collections::VecDeque;

use crate::estimation::ExitStatus;
use crate::scalar::Scalar;
use crate::spec::Tolerances;

/// A smooth function to minimize. `eval` returns the value and writes the
/// gradient; a non-finite value marks `x` as infeasible.
pub trait Objective<T> {
    fn dim(&self) -> usize;
    fn eval(&mut self, x: &[T], grad: &mut [T]) -> T;
}

impl<T, F: FnMut(&[T], &mut [T]) -> T> Objective<T> for (usize, F) {
    fn dim(&self) -> usize {
        self.0
    }

    fn eval(&mut self, x: &[T], grad: &mut [T]) -> T {
        (self.1)(x, grad)
    }
}

const MEMORY: usize = 10;
const ARMIJO_C1: f64 = 1e-4;
const WOLFE_C2: f64 = 0.9;
const MAX_LINE_EVALS: usize = 60;
const MAX_STEP: f64 = 1e10;
const DIVERGENCE_BOUND: f64 = 1e8;

#[derive(Clone, Debug, PartialEq)]
pub struct Minimum<T> {
    pub x: Vec<T>,
    pub value: T,
    pub gradient: Vec<T>,
    pub iterations: usize,
    pub status: ExitStatus,
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |s, (&x, &y)| s + x * y)
}

fn norm<T: Scalar>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

fn norm_inf<T: Scalar>(a: &[T]) -> T {
    a.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
}

fn all_finite<T: Scalar>(a: &[T]) -> bool {
    a.iter().all(|x| x.is_finite())
}

/// Two-loop recursion: returns `-H g`.
fn direction<T: Scalar>(g: &[T], pairs: &VecDeque<(Vec<T>, Vec<T>, T)>) -> Vec<T> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(pairs.len());
    for (s, y, rho) in pairs.iter().rev() {
        let a = *rho * dot(s, &q);
        for (qi, &yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        alphas.push(a);
    }
    if let Some((s, y, _)) = pairs.back() {
        let gamma = dot(s, y) / dot(y, y);
        q.iter_mut().for_each(|v| *v *= gamma);
    }
    for ((s, y, rho), a) in pairs.iter().zip(alphas.into_iter().rev()) {
        let b = *rho * dot(y, &q);
        for (qi, &si) in q.iter_mut().zip(s) {
            *qi += (a - b) * si;
        }
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}

struct Step<T> {
    x: Vec<T>,
    f: T,
    g: Vec<T>,
}

/// Strong Wolfe line search: expand until the minimum is bracketed, then
/// bisect. Infeasible trial points shrink the step. `None` means no
/// acceptable step exists at working precision.
fn line_search<T: Scalar, O: Objective<T>>(
    obj: &mut O,
    x: &[T],
    f: T,
    slope: T,
    p: &[T],
    alpha0: T,
) -> Option<Step<T>> {
    let c1 = T::lit(ARMIJO_C1);
    let c2 = T::lit(WOLFE_C2);
    let half = T::lit(0.5);
    let mut g = vec![T::zero(); x.len()];
    let mut eval = |alpha: T, g: &mut [T]| -> Option<(Vec<T>, T, T)> {
        let xn: Vec<T> = x.iter().zip(p).map(|(&xi, &pi)| xi + alpha * pi).collect();
        let fa = obj.eval(&xn, g);
        if fa.is_finite() && all_finite(g) {
            let d = dot(g, p);
            Some((xn, fa, d))
        } else {
            None
        }
    };
    let moved = |alpha: T| x.iter().zip(p).any(|(&xi, &pi)| xi + alpha * pi != xi);

    // best Armijo point seen, returned if the curvature test never passes
    let mut fallback: Option<Step<T>> = None;
    let keep = |xn: &[T], fa: T, g: &[T], fallback: &mut Option<Step<T>>| {
        if fallback.as_ref().map_or(true, |s| fa < s.f) {
            *fallback = Some(Step { x: xn.to_vec(), f: fa, g: g.to_vec() });
        }
    };

    // bracketing phase
    let (mut lo, mut f_lo) = (T::zero(), f);
    let mut hi: Option<T> = None;
    let mut alpha = alpha0;
    let mut evals = 0;
    while evals < MAX_LINE_EVALS {
        if !moved(alpha) {
            return fallback;
        }
        evals += 1;
        match eval(alpha, &mut g) {
            None => {
                if lo > T::zero() {
                    hi = Some(alpha);
                    break;
                }
                alpha *= half;
            }
            Some((xn, fa, da)) => {
                if fa > f + c1 * alpha * slope || (lo > T::zero() && fa >= f_lo) {
                    hi = Some(alpha);
                    break;
                }
                keep(&xn, fa, &g, &mut fallback);
                if da.abs() <= -c2 * slope {
                    return Some(Step { x: xn, f: fa, g: g.clone() });
                }
                if da >= T::zero() {
                    hi = Some(lo);
                    lo = alpha;
                    f_lo = fa;
                    break;
                }
                lo = alpha;
                f_lo = fa;
                alpha = alpha * T::lit(2.0);
                if alpha > T::lit(MAX_STEP) {
                    return fallback;
                }
            }
        }
    }
    let mut hi = hi?;

    // zoom between lo (satisfies Armijo) and hi
    while evals < MAX_LINE_EVALS {
        let trial = lo + (hi - lo) * half;
        if !moved(trial) || trial == lo || trial == hi {
            return fallback;
        }
        evals += 1;
        match eval(trial, &mut g) {
            None => hi = trial,
            Some((xn, fa, da)) => {
                if fa > f + c1 * trial * slope || fa >= f_lo {
                    hi = trial;
                } else {
                    keep(&xn, fa, &g, &mut fallback);
                    if da.abs() <= -c2 * slope {
                        return Some(Step { x: xn, f: fa, g: g.clone() });
                    }
                    if da * (hi - lo) >= T::zero() {
                        hi = lo;
                    }
                    lo = trial;
                    f_lo = fa;
                }
            }
        }
    }
    fallback
}

/// Minimizes `obj` from `x0`.
pub fn minimize<T: Scalar, O: Objective<T>>(
    obj: &mut O,
    x0: &[T],
    tol: &Tolerances,
    max_iterations: usize,
) -> Minimum<T> {
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut g = vec![T::zero(); n];
    let mut f = obj.eval(&x, &mut g);
    let finish = |x: Vec<T>, f: T, g: Vec<T>, iterations: usize, status: ExitStatus| Minimum {
        x,
        value: f,
        gradient: g,
        iterations,
        status,
    };
    if !f.is_finite() || !all_finite(&g) {
        return finish(x, f, g, 0, ExitStatus::EvaluationFailure);
    }
    let ftol_abs = T::lit(tol.ftol_abs);
    let ftol_rel = T::lit(tol.ftol_rel);
    let xtol_abs = T::lit(tol.xtol_abs);
    let xtol_rel = T::lit(tol.xtol_rel);
    let mut pairs: VecDeque<(Vec<T>, Vec<T>, T)> = VecDeque::with_capacity(MEMORY);

    for iter in 1..=max_iterations {
        if norm_inf(&g) == T::zero() {
            return finish(x, f, g, iter - 1, ExitStatus::FtolReached);
        }
        let mut step = None;
        // quasi-Newton direction first, then one steepest-descent fallback
        for attempt in 0..2 {
            if attempt == 1 && pairs.is_empty() {
                break;
            }
            if attempt == 1 {
                pairs.clear();
            }
            let mut p = direction(&g, &pairs);
            let mut slope = dot(&g, &p);
            if !(slope < T::zero()) || !all_finite(&p) {
                pairs.clear();
                p = g.iter().map(|&v| -v).collect();
                slope = dot(&g, &p);
            }
            let alpha0 = if pairs.is_empty() {
                T::one().min(T::one() / norm(&g))
            } else {
                T::one()
            };
            step = line_search(obj, &x, f, slope, &p, alpha0);
            if step.is_some() {
                break;
            }
        }
        let Some(Step { x: xn, f: fnew, g: gn }) = step else {
            // no descent possible from here: the objective is flat at
            // working precision
            return finish(x, f, g, iter - 1, ExitStatus::FtolReached);
        };

        let s: Vec<T> = xn.iter().zip(&x).map(|(&a, &b)| a - b).collect();
        let y: Vec<T> = gn.iter().zip(&g).map(|(&a, &b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > T::epsilon() * norm(&s) * norm(&y) {
            if pairs.len() == MEMORY {
                pairs.pop_front();
            }
            pairs.push_back((s.clone(), y, T::one() / sy));
        }
        let df = (f - fnew).abs();
        let dx = norm(&s);
        x = xn;
        f = fnew;
        g = gn;

        if norm_inf(&x) > T::lit(DIVERGENCE_BOUND) {
            return finish(x, f, g, iter, ExitStatus::Diverged);
        }
        if df <= ftol_abs || df <= ftol_rel * f.abs() {
            return finish(x, f, g, iter, ExitStatus::FtolReached);
        }
        if dx <= xtol_abs || dx <= xtol_rel * norm(&x) {
            return finish(x, f, g, iter, ExitStatus::XtolReached);
        }
    }
    finish(x, f, g, max_iterations, ExitStatus::MaxIterations)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad() -> (usize, impl FnMut(&[f64], &mut [f64]) -> f64) {
        (1, |x: &[f64], g: &mut [f64]| {
            g[0] = 2.0 * (x[0] - 3.0);
            (x[0] - 3.0).powi(2)
        })
    }

    #[test]
    fn one_dimensional_quadratic() {
        let mut obj = quad();
        let m = minimize(&mut obj, &[0.0], &Tolerances::default(), 100);
        assert!((m.x[0] - 3.0).abs() < 1e-6, "{:?}", m);
        assert!(m.status.is_success());
    }

    #[test]
    fn rosenbrock() {
        let mut obj = (2, |x: &[f64], g: &mut [f64]| {
            let (a, b) = (x[0], x[1]);
            g[0] = -2.0 * (1.0 - a) - 400.0 * a * (b - a * a);
            g[1] = 200.0 * (b - a * a);
            (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2)
        });
        let m = minimize(&mut obj, &[-1.2, 1.0], &Tolerances::default(), 2000);
        assert!((m.x[0] - 1.0).abs() < 1e-4 && (m.x[1] - 1.0).abs() < 1e-4, "{:?}", m);
    }

    #[test]
    fn nan_objective_is_evaluation_failure() {
        let mut obj = (2, |_: &[f64], g: &mut [f64]| {
            g.iter_mut().for_each(|v| *v = f64::NAN);
            f64::NAN
        });
        let m = minimize(&mut obj, &[0.0, 0.0], &Tolerances::default(), 100);
        assert_eq!(m.status, ExitStatus::EvaluationFailure);
        assert_eq!(m.iterations, 0);
    }

    #[test]
    fn infeasible_region_is_backtracked_out_of() {
        // log barrier: infinite for x <= 0
        let mut obj = (1, |x: &[f64], g: &mut [f64]| {
            if x[0] <= 0.0 {
                g[0] = f64::NAN;
                return f64::INFINITY;
            }
            g[0] = 1.0 - 1.0 / x[0];
            x[0] - x[0].ln()
        });
        let m = minimize(&mut obj, &[5.0], &Tolerances::default(), 200);
        assert!((m.x[0] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn unbounded_objective_diverges() {
        // infimum at +inf; quasi-Newton steps grow geometrically
        let mut obj = (1, |x: &[f64], g: &mut [f64]| {
            g[0] = -1.0 / (x[0] * x[0]);
            1.0 / x[0]
        });
        let m = minimize(&mut obj, &[1.0], &Tolerances::default(), 10_000);
        assert_eq!(m.status, ExitStatus::Diverged);
    }

    #[test]
    fn iteration_cap() {
        let mut obj = quad();
        let m = minimize(&mut obj, &[100.0], &Tolerances::default(), 1);
        assert_eq!(m.status, ExitStatus::MaxIterations);
        assert_eq!(m.iterations, 1);
    }

    #[test]
    fn works_in_single_precision() {
        let mut obj = (1, |x: &[f32], g: &mut [f32]| {
            g[0] = 2.0 * (x[0] - 3.0);
            (x[0] - 3.0) * (x[0] - 3.0)
        });
        let m = minimize(&mut obj, &[0.0_f32], &Tolerances::default(), 100);
        assert!((m.x[0] - 3.0).abs() < 1e-3);
    }
}
