//! Limited-memory BFGS with a strong-Wolfe line search.
//!
//! Deterministic by construction: no randomness, fixed evaluation order, and
//! all reductions go through the crate's pairwise primitives.

use std::collections::VecDeque;

use crate::util::{axpy, dot, max_abs};

#[derive(Debug, Clone)]
pub struct LbfgsOptions {
    pub memory: usize,
    pub max_iterations: usize,
    /// Relative gradient criterion: stop when
    /// ‖g‖_∞ · max(1, ‖x‖_∞) ≤ rtol · max(|f|, f_floor).
    pub grad_rtol: f64,
    pub f_floor: f64,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        LbfgsOptions { memory: 12, max_iterations: 2000, grad_rtol: 1e-9, f_floor: 1e-300 }
    }
}

#[derive(Debug, Clone)]
pub struct LbfgsOutcome {
    pub x: Vec<f64>,
    pub fx: f64,
    pub grad_inf_norm: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    /// The line search could not resolve further progress in f64.
    pub stalled: bool,
    /// Accepted merit values, one per iterate (monotone nonincreasing).
    pub merit_history: Vec<f64>,
}

struct Pair {
    s: Vec<f64>,
    y: Vec<f64>,
    rho: f64,
}

/// Minimises `f` starting from `x0`. The closure writes the gradient into its
/// second argument and returns the value. `precond` applies an SPD metric
/// inverse M⁻¹ used as the initial Hessian approximation.
pub fn minimize<F>(
    x0: Vec<f64>,
    mut eval: F,
    opts: &LbfgsOptions,
    precond: Option<&dyn Fn(&[f64], &mut [f64])>,
) -> LbfgsOutcome
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let n = x0.len();
    let mut x = x0;
    let mut g = vec![0.0; n];
    let mut fx = eval(&x, &mut g);
    let mut evaluations = 1usize;
    let mut history: VecDeque<Pair> = VecDeque::new();
    let mut merit_history = vec![fx];

    // gradient threshold anchored at the initial value scale (the value at
    // the minimum may vanish)
    let reference = fx.abs().max(opts.f_floor);
    let converged_at = |_fx: f64, g: &[f64], x: &[f64]| {
        max_abs(g) * max_abs(x).max(1.0) <= opts.grad_rtol * reference
    };

    let mut iterations = 0usize;
    let mut stalled = false;
    let mut converged = converged_at(fx, &g, &x);
    while !converged && iterations < opts.max_iterations {
        // two-loop recursion
        let mut d: Vec<f64> = g.iter().map(|v| -v).collect();
        let mut alphas = Vec::with_capacity(history.len());
        for pair in history.iter().rev() {
            let a = pair.rho * dot(&pair.s, &d);
            axpy(-a, &pair.y, &mut d);
            alphas.push(a);
        }
        match precond {
            Some(apply) => {
                let mut md = vec![0.0; n];
                apply(&d, &mut md);
                // scale the metric so that it matches the curvature seen in
                // the most recent pair: gamma = s'y / (y' M^{-1} y)
                if let Some(last) = history.back() {
                    let mut my = vec![0.0; n];
                    apply(&last.y, &mut my);
                    let denom = dot(&last.y, &my);
                    if denom > 0.0 {
                        let gamma = dot(&last.s, &last.y) / denom;
                        for v in &mut md {
                            *v *= gamma;
                        }
                    }
                }
                d = md;
            }
            None => {
                if let Some(last) = history.back() {
                    let gamma = dot(&last.s, &last.y) / dot(&last.y, &last.y);
                    for v in &mut d {
                        *v *= gamma;
                    }
                }
            }
        }
        for (pair, &a) in history.iter().zip(alphas.iter().rev()) {
            let b = pair.rho * dot(&pair.y, &d);
            axpy(a - b, &pair.s, &mut d);
        }

        let mut dg = dot(&g, &d);
        if !(dg < 0.0) {
            // not a descent direction: drop the history, fall back to -g
            history.clear();
            d = g.iter().map(|v| -v).collect();
            dg = dot(&g, &d);
            if !(dg < 0.0) {
                break; // gradient is exactly zero
            }
        }

        let init_step =
            if history.is_empty() { (1.0 / max_abs(&d).max(1e-300)).min(1.0) } else { 1.0 };
        match wolfe_search(&x, fx, &d, dg, init_step, &mut eval, &mut evaluations) {
            Some(acc) => {
                let s: Vec<f64> = acc.x.iter().zip(&x).map(|(a, b)| a - b).collect();
                let y: Vec<f64> = acc.g.iter().zip(&g).map(|(a, b)| a - b).collect();
                let sy = dot(&s, &y);
                if sy > 1e-30 * dot(&y, &y).max(1e-300) {
                    if history.len() >= opts.memory {
                        history.pop_front();
                    }
                    history.push_back(Pair { rho: 1.0 / sy, s, y });
                }
                x = acc.x;
                g = acc.g;
                fx = acc.f;
                merit_history.push(fx);
            }
            None => {
                stalled = true;
                break; // line search stalled at numerical precision
            }
        }
        iterations += 1;
        converged = converged_at(fx, &g, &x);
    }

    LbfgsOutcome {
        grad_inf_norm: max_abs(&g),
        x,
        fx,
        iterations,
        evaluations,
        converged,
        stalled,
        merit_history,
    }
}

struct Accepted {
    x: Vec<f64>,
    g: Vec<f64>,
    f: f64,
}

struct Trial {
    alpha: f64,
    f: f64,
    dphi: f64,
    x: Vec<f64>,
    g: Vec<f64>,
}

const WOLFE_C1: f64 = 1e-4;
const WOLFE_C2: f64 = 0.9;
const MAX_LINE_EVALS: usize = 48;
const MAX_STEP: f64 = 1e12;

/// Strong-Wolfe line search (bracket + zoom, Nocedal & Wright alg. 3.5/3.6).
fn wolfe_search<F>(
    x: &[f64],
    f0: f64,
    d: &[f64],
    dg0: f64,
    init_step: f64,
    eval: &mut F,
    evaluations: &mut usize,
) -> Option<Accepted>
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let mut probe = |alpha: f64| -> Trial {
        let mut xt = x.to_vec();
        axpy(alpha, d, &mut xt);
        let mut gt = vec![0.0; x.len()];
        let f = eval(&xt, &mut gt);
        *evaluations += 1;
        Trial { alpha, f, dphi: dot(&gt, d), x: xt, g: gt }
    };

    let mut budget = MAX_LINE_EVALS;
    let mut prev_alpha = 0.0;
    let mut prev_f = f0;
    let mut prev_dphi = dg0;
    let mut alpha = init_step.min(MAX_STEP);
    let mut first = true;

    loop {
        if budget == 0 {
            return None;
        }
        budget -= 1;
        let t = probe(alpha);
        if !t.f.is_finite() || t.f > f0 + WOLFE_C1 * t.alpha * dg0 || (!first && t.f >= prev_f) {
            // bracketed: [prev_alpha, alpha] contains a Wolfe point
            let f_hi = if t.f.is_finite() { t.f } else { f64::MAX };
            return zoom(prev_alpha, prev_f, prev_dphi, t.alpha, f_hi, f0, dg0, probe, budget);
        }
        if t.dphi.abs() <= -WOLFE_C2 * dg0 {
            return Some(Accepted { x: t.x, g: t.g, f: t.f });
        }
        if t.dphi >= 0.0 {
            return zoom(t.alpha, t.f, t.dphi, prev_alpha, prev_f, f0, dg0, probe, budget);
        }
        prev_alpha = t.alpha;
        prev_f = t.f;
        prev_dphi = t.dphi;
        if alpha >= MAX_STEP {
            return Some(Accepted { x: t.x, g: t.g, f: t.f });
        }
        alpha = (alpha * 2.0).min(MAX_STEP);
        first = false;
    }
}

/// `lo` always satisfies the sufficient-decrease condition; `hi` brackets it.
#[allow(clippy::too_many_arguments)]
fn zoom<P>(
    mut lo: f64,
    mut f_lo: f64,
    mut dphi_lo: f64,
    mut hi: f64,
    mut f_hi: f64,
    f0: f64,
    dg0: f64,
    mut probe: P,
    mut budget: usize,
) -> Option<Accepted>
where
    P: FnMut(f64) -> Trial,
{
    let mut best: Option<Accepted> = None;
    while budget > 0 {
        budget -= 1;
        if (hi - lo).abs() <= 1e-16 * lo.abs().max(1.0) {
            return best;
        }
        // quadratic fit through (lo, f_lo, dphi_lo) and (hi, f_hi),
        // safeguarded to the middle of the bracket
        let span = hi - lo;
        let denom = f_hi - f_lo - dphi_lo * span;
        let mut alpha = if denom.abs() > 1e-300 && f_hi.is_finite() {
            lo - 0.5 * dphi_lo * span * span / denom
        } else {
            lo + 0.5 * span
        };
        let (a, b) = if lo < hi { (lo, hi) } else { (hi, lo) };
        let guard = 0.1 * span.abs();
        if !alpha.is_finite() || alpha <= a + guard || alpha >= b - guard {
            alpha = lo + 0.5 * span;
        }
        let t = probe(alpha);
        if !t.f.is_finite() || t.f > f0 + WOLFE_C1 * t.alpha * dg0 || t.f >= f_lo {
            hi = t.alpha;
            f_hi = if t.f.is_finite() { t.f } else { f64::MAX };
        } else {
            if t.dphi.abs() <= -WOLFE_C2 * dg0 {
                return Some(Accepted { x: t.x, g: t.g, f: t.f });
            }
            if t.dphi * (hi - lo) >= 0.0 {
                hi = lo;
                f_hi = f_lo;
            }
            lo = t.alpha;
            f_lo = t.f;
            dphi_lo = t.dphi;
            best = Some(Accepted { x: t.x, g: t.g, f: t.f });
        }
    }
    best
}
