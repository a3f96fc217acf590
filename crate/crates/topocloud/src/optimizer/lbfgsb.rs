//! Limited-memory BFGS with gradient projection for box bounds and a
//! strong-Wolfe line search.
//!
//! Coordinates active at a bound (with the gradient pushing outward) are
//! frozen out of the quasi-Newton direction; the step length is capped at
//! the first bound hit along the direction. A failed line search restarts
//! from steepest descent; a second failure terminates the run.

use super::{inf_norm, Bounds, EvalResult, OptError, OptTrace, Termination};
use std::collections::VecDeque;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LbfgsbSettings {
    pub memory: usize,
    /// Convergence threshold on the projected-gradient infinity norm.
    pub tolerance: f64,
    pub wolfe_c1: f64,
    pub wolfe_c2: f64,
    pub max_line_search: usize,
}

impl Default for LbfgsbSettings {
    fn default() -> Self {
        LbfgsbSettings {
            memory: 10,
            tolerance: 1e-8,
            wolfe_c1: 1e-4,
            wolfe_c2: 0.9,
            max_line_search: 25,
        }
    }
}

/// Projected gradient `P(x - g) - x`; its infinity norm is the
/// first-order optimality measure for box constraints.
fn projected_gradient(x: &[f64], g: &[f64], bounds: Option<&Bounds>) -> Vec<f64> {
    match bounds {
        None => g.iter().map(|v| -v).collect(),
        Some(b) => x
            .iter()
            .zip(g)
            .enumerate()
            .map(|(i, (&xi, &gi))| (xi - gi).clamp(b.lower[i], b.upper[i]) - xi)
            .collect(),
    }
}

fn active_set(x: &[f64], g: &[f64], bounds: Option<&Bounds>) -> Vec<bool> {
    match bounds {
        None => vec![false; x.len()],
        Some(b) => x
            .iter()
            .zip(g)
            .enumerate()
            .map(|(i, (&xi, &gi))| {
                let eps = 1e-12 * (1.0 + xi.abs());
                (xi <= b.lower[i] + eps && gi > 0.0) || (xi >= b.upper[i] - eps && gi < 0.0)
            })
            .collect(),
    }
}

/// Largest feasible step along `d` before leaving the box.
fn max_feasible_step(x: &[f64], d: &[f64], bounds: Option<&Bounds>) -> f64 {
    let Some(b) = bounds else { return f64::INFINITY };
    let mut alpha = f64::INFINITY;
    for i in 0..x.len() {
        if d[i] > 0.0 {
            alpha = alpha.min((b.upper[i] - x[i]) / d[i]);
        } else if d[i] < 0.0 {
            alpha = alpha.min((b.lower[i] - x[i]) / d[i]);
        }
    }
    alpha.max(0.0)
}

struct History {
    pairs: VecDeque<(Vec<f64>, Vec<f64>, f64)>,
    memory: usize,
}

impl History {
    fn new(memory: usize) -> History {
        History { pairs: VecDeque::new(), memory }
    }

    fn push(&mut self, s: Vec<f64>, y: Vec<f64>) {
        let sy: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
        let s_norm: f64 = s.iter().map(|v| v * v).sum::<f64>().sqrt();
        let y_norm: f64 = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if sy > 1e-10 * s_norm * y_norm {
            if self.pairs.len() == self.memory {
                self.pairs.pop_front();
            }
            self.pairs.push_back((s, y, 1.0 / sy));
        }
    }

    /// Two-loop recursion for `-H g`, with masked coordinates zeroed.
    fn direction(&self, grad: &[f64], mask: &[bool]) -> Vec<f64> {
        let n = grad.len();
        let mut q: Vec<f64> = grad
            .iter()
            .enumerate()
            .map(|(i, &g)| if mask[i] { 0.0 } else { g })
            .collect();
        let mut alphas = Vec::with_capacity(self.pairs.len());
        for (s, y, rho) in self.pairs.iter().rev() {
            let alpha = rho * s.iter().zip(&q).map(|(a, b)| a * b).sum::<f64>();
            for i in 0..n {
                q[i] -= alpha * y[i];
            }
            alphas.push(alpha);
        }
        if let Some((s, y, _)) = self.pairs.back() {
            let sy: f64 = s.iter().zip(y).map(|(a, b)| a * b).sum();
            let yy: f64 = y.iter().map(|v| v * v).sum();
            if yy > 0.0 {
                let gamma = sy / yy;
                for v in q.iter_mut() {
                    *v *= gamma;
                }
            }
        }
        for ((s, y, rho), alpha) in self.pairs.iter().zip(alphas.into_iter().rev()) {
            let beta = rho * y.iter().zip(&q).map(|(a, b)| a * b).sum::<f64>();
            for i in 0..n {
                q[i] += s[i] * (alpha - beta);
            }
        }
        for i in 0..n {
            if mask[i] {
                q[i] = 0.0;
            }
            q[i] = -q[i];
        }
        q
    }
}

/// Box-constrained limited-memory BFGS. Terminates when the projected
/// gradient drops below the tolerance, the budget is exhausted, or the line
/// search stalls twice in a row.
pub fn lbfgsb<F>(
    mut eval: F,
    x0: Vec<f64>,
    bounds: Option<&Bounds>,
    settings: &LbfgsbSettings,
    max_iters: usize,
    beta_tag: f64,
) -> Result<OptTrace, OptError>
where
    F: FnMut(&[f64]) -> EvalResult,
{
    let started = std::time::Instant::now();
    let n = x0.len();
    if let Some(b) = bounds {
        b.validate(n)?;
    }
    let mut x = x0;
    if let Some(b) = bounds {
        b.clamp(&mut x);
    }
    let mut trace = OptTrace::new(&x);
    if max_iters == 0 {
        trace.termination = Termination::Budget;
        return Ok(trace);
    }

    let finite = |l: f64, g: &[f64]| l.is_finite() && g.iter().all(|v| v.is_finite());
    let (mut loss, mut grad) = match eval(&x) {
        Ok((l, g)) if finite(l, &g) => (l, g),
        _ => {
            trace.termination = Termination::NonFinite;
            trace.evaluations = 1;
            return Ok(trace);
        }
    };
    trace.evaluations = 1;
    trace.record(0, loss, inf_norm(&grad), 0.0, beta_tag, started, &x);

    let mut history = History::new(settings.memory.max(1));
    let mut consecutive_failures = 0usize;
    for it in 1..=max_iters {
        let pg = projected_gradient(&x, &grad, bounds);
        if inf_norm(&pg) <= settings.tolerance {
            trace.termination = Termination::Converged;
            return Ok(trace);
        }
        let mask = active_set(&x, &grad, bounds);
        let mut d = history.direction(&grad, &mask);
        let mut slope: f64 = d.iter().zip(&grad).map(|(a, b)| a * b).sum();
        if !(slope < 0.0) {
            history = History::new(settings.memory.max(1));
            d = grad
                .iter()
                .zip(&mask)
                .map(|(&g, &m)| if m { 0.0 } else { -g })
                .collect();
            slope = d.iter().zip(&grad).map(|(a, b)| a * b).sum();
            if !(slope < 0.0) {
                // All descent directions are blocked by the bounds.
                trace.termination = Termination::Converged;
                return Ok(trace);
            }
        }

        let alpha_max = max_feasible_step(&x, &d, bounds);
        let search = strong_wolfe(
            &mut eval,
            &x,
            loss,
            &grad,
            &d,
            slope,
            alpha_max,
            settings,
            &mut trace.evaluations,
        );
        match search {
            Some((alpha, f_new, g_new)) => {
                consecutive_failures = 0;
                let mut x_new: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + alpha * b).collect();
                if let Some(b) = bounds {
                    b.clamp(&mut x_new);
                }
                let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
                let y: Vec<f64> = g_new.iter().zip(&grad).map(|(a, b)| a - b).collect();
                let step_norm = s.iter().map(|v| v * v).sum::<f64>().sqrt();
                history.push(s, y);
                x = x_new;
                loss = f_new;
                grad = g_new;
                trace.record(it, loss, inf_norm(&grad), step_norm, beta_tag, started, &x);
            }
            None => {
                consecutive_failures += 1;
                history = History::new(settings.memory.max(1));
                if consecutive_failures >= 2 {
                    trace.termination = Termination::LineSearchStall;
                    return Ok(trace);
                }
            }
        }
    }
    trace.termination = Termination::Budget;
    Ok(trace)
}

/// Strong-Wolfe line search (bracket and zoom). Returns the accepted step
/// with its loss and gradient, or `None` on failure.
#[allow(clippy::too_many_arguments)]
fn strong_wolfe<F>(
    eval: &mut F,
    x: &[f64],
    f0: f64,
    g0: &[f64],
    d: &[f64],
    slope0: f64,
    alpha_max: f64,
    settings: &LbfgsbSettings,
    evaluations: &mut usize,
) -> Option<(f64, f64, Vec<f64>)>
where
    F: FnMut(&[f64]) -> EvalResult,
{
    let _ = g0;
    let mut probe = |alpha: f64, evals: &mut usize| -> Option<(f64, Vec<f64>, f64)> {
        let xt: Vec<f64> = x.iter().zip(d).map(|(a, b)| a + alpha * b).collect();
        *evals += 1;
        match eval(&xt) {
            Ok((f, g)) if f.is_finite() && g.iter().all(|v| v.is_finite()) => {
                let slope = g.iter().zip(d).map(|(a, b)| a * b).sum();
                Some((f, g, slope))
            }
            _ => None,
        }
    };

    let c1 = settings.wolfe_c1;
    let c2 = settings.wolfe_c2;
    let cap = if alpha_max.is_finite() { alpha_max } else { 1e10 };
    if cap <= 0.0 {
        return None;
    }
    let mut alpha_prev = 0.0;
    let mut f_prev = f0;
    let mut slope_prev = slope0;
    let mut alpha = 1.0f64.min(cap);

    let mut bracket: Option<(f64, f64, f64, f64, f64, f64)> = None;
    for _ in 0..settings.max_line_search {
        let Some((f, g, slope)) = probe(alpha, evaluations) else {
            // Invalid trial: shrink towards the last good point.
            alpha = 0.5 * (alpha_prev + alpha);
            if alpha <= 1e-16 {
                return None;
            }
            continue;
        };
        if f > f0 + c1 * alpha * slope0 || f >= f_prev && alpha_prev > 0.0 {
            bracket = Some((alpha_prev, f_prev, slope_prev, alpha, f, slope));
            break;
        }
        if slope.abs() <= -c2 * slope0 {
            return Some((alpha, f, g));
        }
        if slope >= 0.0 {
            bracket = Some((alpha, f, slope, alpha_prev, f_prev, slope_prev));
            break;
        }
        if (alpha - cap).abs() < 1e-15 {
            // Hit the feasible cap while still descending: accept it.
            return Some((alpha, f, g));
        }
        alpha_prev = alpha;
        f_prev = f;
        slope_prev = slope;
        alpha = (2.0 * alpha).min(cap);
    }

    let (mut lo, mut f_lo, mut slope_lo, mut hi, mut f_hi, _slope_hi) = bracket?;
    for _ in 0..settings.max_line_search {
        // Bisection keeps the zoom robust for any interval shape.
        let mid = 0.5 * (lo + hi);
        let Some((f, g, slope)) = probe(mid, evaluations) else { return None };
        if f > f0 + c1 * mid * slope0 || f >= f_lo {
            hi = mid;
            f_hi = f;
        } else {
            if slope.abs() <= -c2 * slope0 {
                return Some((mid, f, g));
            }
            if slope * (hi - lo) >= 0.0 {
                hi = lo;
                f_hi = f_lo;
            }
            lo = mid;
            f_lo = f;
            slope_lo = slope;
        }
        let _ = (f_hi, slope_lo);
        if (hi - lo).abs() < 1e-16 {
            break;
        }
    }
    None
}
