//! Limited-memory BFGS minimizer with a backtracking Armijo line search.
//!
//! Every accepted iterate satisfies the sufficient-decrease condition, so the
//! recorded objective values are strictly decreasing.

use std::collections::VecDeque;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LbfgsConfig {
    /// Number of correction pairs kept.
    pub memory: usize,
    /// Stop when the max-norm of the gradient falls below this.
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for LbfgsConfig {
    fn default() -> Self {
        LbfgsConfig {
            memory: 10,
            tol: 1e-4,
            max_iters: 500,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Iterate {
    pub iteration: usize,
    pub value: f64,
    pub grad_max_norm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Converged,
    MaxIterations,
    /// The line search could not decrease the objective any further.
    LineSearchFailed,
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad: Vec<f64>,
    pub iterations: usize,
    pub stop: StopReason,
}

impl Minimum {
    pub fn converged(&self) -> bool {
        self.stop == StopReason::Converged
    }
}

/// Objective or gradient evaluated to a non-finite value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NonFinite {
    pub iteration: usize,
    pub what: &'static str,
}

const ARMIJO_C1: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 60;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn check(value: f64, grad: &[f64], iteration: usize) -> Result<(), NonFinite> {
    if !value.is_finite() {
        return Err(NonFinite { iteration, what: "objective" });
    }
    if grad.iter().any(|g| !g.is_finite()) {
        return Err(NonFinite { iteration, what: "gradient" });
    }
    Ok(())
}

/// Two-loop recursion: returns `-H g` for the current inverse-Hessian
/// approximation.
fn search_direction(grad: &[f64], history: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q = grad.to_vec();
    let mut alphas = Vec::with_capacity(history.len());
    for (s, y, rho) in history.iter().rev() {
        let a = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        alphas.push(a);
    }
    let gamma = match history.back() {
        Some((s, y, _)) => dot(s, y) / dot(y, y),
        None => 1.0 / dot(grad, grad).sqrt().max(1.0),
    };
    for qi in q.iter_mut() {
        *qi *= gamma;
    }
    for ((s, y, rho), a) in history.iter().zip(alphas.iter().rev()) {
        let b = rho * dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (a - b) * si;
        }
    }
    for qi in q.iter_mut() {
        *qi = -*qi;
    }
    q
}

/// Minimizes `objective`, which returns the value and gradient at a point.
///
/// `on_iterate` sees iteration 0 (the start point) and every accepted step.
pub fn minimize<F, C>(mut objective: F, x0: Vec<f64>, config: &LbfgsConfig, mut on_iterate: C) -> Result<Minimum, NonFinite>
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
    C: FnMut(Iterate),
{
    let mut x = x0;
    let (mut fx, mut g) = objective(&x);
    check(fx, &g, 0)?;
    on_iterate(Iterate {
        iteration: 0,
        value: fx,
        grad_max_norm: max_norm(&g),
    });

    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(config.memory);
    let mut iterations = 0;
    let mut stop = StopReason::MaxIterations;

    loop {
        if max_norm(&g) < config.tol {
            stop = StopReason::Converged;
            break;
        }
        if iterations >= config.max_iters {
            break;
        }

        let mut dir = search_direction(&g, &history);
        let mut slope = dot(&dir, &g);
        if slope.is_nan() || slope >= 0.0 {
            // not a descent direction; restart from steepest descent
            history.clear();
            dir = search_direction(&g, &history);
            slope = dot(&dir, &g);
        }

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let trial: Vec<f64> = x.iter().zip(&dir).map(|(xi, di)| xi + step * di).collect();
            let (ft, gt) = objective(&trial);
            check(ft, &gt, iterations + 1)?;
            if ft <= fx + ARMIJO_C1 * step * slope {
                accepted = Some((trial, ft, gt));
                break;
            }
            // minimizer of the quadratic through f(0), f'(0) and f(step), kept in [0.1, 0.5] * step
            let denom = 2.0 * (ft - fx - slope * step);
            let quad = if denom > 0.0 { -slope * step * step / denom } else { 0.5 * step };
            step = quad.clamp(0.1 * step, 0.5 * step);
        }
        let Some((x_new, f_new, g_new)) = accepted else {
            stop = StopReason::LineSearchFailed;
            break;
        };

        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > f64::EPSILON * dot(&y, &y) {
            if history.len() == config.memory {
                history.pop_front();
            }
            history.push_back((s, y, 1.0 / sy));
        }

        x = x_new;
        fx = f_new;
        g = g_new;
        iterations += 1;
        on_iterate(Iterate {
            iteration: iterations,
            value: fx,
            grad_max_norm: max_norm(&g),
        });
    }

    Ok(Minimum {
        x,
        value: fx,
        grad: g,
        iterations,
        stop,
    })
}
