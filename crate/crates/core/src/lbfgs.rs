//! Limited-memory BFGS with a strong-Wolfe line search.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerOptions {
    /// Accepted steps per optimization (line-search probes not counted).
    pub max_iterations: usize,
    /// Stop once one accepted step lowers the cost by less than this.
    pub convergence_threshold: f64,
    pub history_size: usize,
    /// Sufficient-decrease constant.
    pub c1: f64,
    /// Curvature constant.
    pub c2: f64,
    pub max_line_search: usize,
    /// Standard deviation of the random initial parameters.
    pub init_sigma: f64,
    pub seed: u64,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self {
            max_iterations: 10_000,
            convergence_threshold: 1e-9,
            history_size: 10,
            c1: 1e-4,
            c2: 0.9,
            max_line_search: 30,
            init_sigma: 0.1,
            seed: 0,
        }
    }
}

impl OptimizerOptions {
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, reason: &str| Err(Error::Config { field: field.into(), reason: reason.into() });
        if !(self.c1 > 0.0 && self.c1 < self.c2 && self.c2 < 1.0) {
            return bad("c1/c2", "need 0 < c1 < c2 < 1");
        }
        if !(self.convergence_threshold > 0.0) {
            return bad("convergence_threshold", "must be positive");
        }
        if self.history_size == 0 {
            return bad("history_size", "must be at least 1");
        }
        if self.max_iterations == 0 {
            return bad("max_iterations", "must be at least 1");
        }
        if self.max_line_search < 2 {
            return bad("max_line_search", "must be at least 2");
        }
        if !(self.init_sigma >= 0.0 && self.init_sigma.is_finite()) {
            return bad("init_sigma", "must be finite and nonnegative");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Converged,
    MaxIterations,
    GradientVanished,
    /// Neither the line search nor a steepest-descent fallback made progress.
    Stalled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LbfgsReport {
    pub x: Vec<f64>,
    pub f: f64,
    pub gradient_norm: f64,
    pub iterations: usize,
    /// Objective evaluations, including the initial point.
    pub evaluations: usize,
    /// Cost at the start and after every accepted step.
    pub trace: Vec<f64>,
    /// Steps taken by the steepest-descent fallback.
    pub fallback_steps: usize,
    pub stop: StopReason,
}

struct Probe {
    a: f64,
    f: f64,
    df: f64,
    g: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(x: &[f64], a: f64, d: &[f64]) -> Vec<f64> {
    x.iter().zip(d).map(|(xi, di)| xi + a * di).collect()
}

/// Minimizer of the cubic through `(a0, f0, d0)` and `(a1, f1, d1)`, kept
/// inside the middle 80% of the bracket; bisection when the cubic degenerates.
fn cubic_step(lo: &Probe, hi: &Probe) -> f64 {
    let (a0, a1) = (lo.a, hi.a);
    let d1 = lo.df + hi.df - 3.0 * (lo.f - hi.f) / (a0 - a1);
    let disc = d1 * d1 - lo.df * hi.df;
    let mid = 0.5 * (a0 + a1);
    let a = if disc >= 0.0 {
        let d2 = (a1 - a0).signum() * disc.sqrt();
        let a = a1 - (a1 - a0) * (hi.df + d2 - d1) / (hi.df - lo.df + 2.0 * d2);
        if a.is_finite() { a } else { mid }
    } else {
        mid
    };
    let (l, h) = (a0.min(a1), a0.max(a1));
    let margin = 0.1 * (h - l);
    a.clamp(l + margin, h - margin)
}

struct Evaluator<F> {
    f: F,
    evaluations: usize,
}

impl<F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>> Evaluator<F> {
    fn eval(&mut self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.evaluations += 1;
        let (f, g) = (self.f)(x)?;
        if f.is_nan() || g.iter().any(|v| v.is_nan()) {
            return Err(Error::Optimizer(format!("objective returned NaN after {} evaluations", self.evaluations)));
        }
        Ok((f, g))
    }

    fn probe(&mut self, x: &[f64], d: &[f64], a: f64) -> Result<Probe> {
        let (f, g) = self.eval(&axpy(x, a, d))?;
        let df = dot(&g, d);
        Ok(Probe { a, f, df, g })
    }
}

/// Strong-Wolfe line search along `d` from `x`. `None` when no acceptable
/// step is found.
fn line_search<F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>>(
    ev: &mut Evaluator<F>,
    x: &[f64],
    f0: f64,
    df0: f64,
    d: &[f64],
    a0: f64,
    opts: &OptimizerOptions,
) -> Result<Option<Probe>> {
    let start = Probe { a: 0.0, f: f0, df: df0, g: Vec::new() };
    let armijo = |p: &Probe| p.f <= f0 + opts.c1 * p.a * df0;
    let curvature = |p: &Probe| p.df.abs() <= -opts.c2 * df0;

    let mut prev = start;
    let mut a = a0;
    let mut budget = opts.max_line_search;
    let (mut lo, mut hi) = loop {
        if budget == 0 {
            return Ok(None);
        }
        budget -= 1;
        let p = ev.probe(x, d, a)?;
        if !armijo(&p) || (prev.a > 0.0 && p.f >= prev.f) {
            break (prev, p);
        }
        if curvature(&p) {
            return Ok(Some(p));
        }
        if p.df >= 0.0 {
            break (p, prev);
        }
        a = 2.0 * p.a;
        prev = p;
    };

    while budget > 0 {
        budget -= 1;
        if (hi.a - lo.a).abs() <= 1e-16 * lo.a.abs().max(1.0) {
            break;
        }
        let p = ev.probe(x, d, cubic_step(&lo, &hi))?;
        if !armijo(&p) || p.f >= lo.f {
            hi = p;
        } else {
            if curvature(&p) {
                return Ok(Some(p));
            }
            if p.df * (hi.a - lo.a) >= 0.0 {
                hi = lo;
            }
            lo = p;
        }
    }
    // a bracket end with sufficient decrease is still an acceptable step
    Ok((lo.a > 0.0 && lo.f < f0).then_some(lo))
}

/// `-H g` from the two-loop recursion.
fn direction(g: &[f64], memory: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(memory.len());
    for (s, y, rho) in memory.iter().rev() {
        let a = rho * dot(s, &q);
        q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
        alphas.push(a);
    }
    if let Some((s, y, _)) = memory.back() {
        let scale = dot(s, y) / dot(y, y);
        q.iter_mut().for_each(|qi| *qi *= scale);
    }
    for ((s, y, rho), a) in memory.iter().zip(alphas.iter().rev()) {
        let b = rho * dot(y, &q);
        q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
    }
    q.iter_mut().for_each(|qi| *qi = -*qi);
    q
}

/// Minimizes `f`, which returns the cost and its gradient.
pub fn lbfgs_minimize<F>(f: F, x0: &[f64], opts: &OptimizerOptions) -> Result<LbfgsReport>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    opts.validate()?;
    let mut ev = Evaluator { f, evaluations: 0 };
    let mut x = x0.to_vec();
    let (mut fx, mut g) = ev.eval(&x)?;
    let mut trace = vec![fx];
    let mut memory: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(opts.history_size);
    let mut fallback_steps = 0;
    let mut iterations = 0;
    let mut stop = StopReason::MaxIterations;

    while iterations < opts.max_iterations {
        let gnorm = norm(&g);
        if gnorm == 0.0 || gnorm < 1e-14 * fx.abs().max(1.0) {
            stop = StopReason::GradientVanished;
            break;
        }
        let mut d = direction(&g, &memory);
        let mut df0 = dot(&g, &d);
        if !(df0 < 0.0) {
            memory.clear();
            d = g.iter().map(|v| -v).collect();
            df0 = -gnorm * gnorm;
        }
        let a0 = if memory.is_empty() { (1.0 / gnorm).min(1.0) } else { 1.0 };
        let step = match line_search(&mut ev, &x, fx, df0, &d, a0, opts)? {
            Some(p) => p,
            None => {
                log::debug!("line search failed at iteration {iterations}; steepest-descent fallback");
                memory.clear();
                match steepest_fallback(&mut ev, &x, fx, &g, opts)? {
                    Some(p) => {
                        fallback_steps += 1;
                        // record the step along -g so (s, y) stays consistent
                        d = g.iter().map(|v| -v).collect();
                        p
                    }
                    None => {
                        stop = StopReason::Stalled;
                        break;
                    }
                }
            }
        };
        let x_new = axpy(&x, step.a, &d);
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = step.g.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * norm(&s) * norm(&y) {
            if memory.len() == opts.history_size {
                memory.pop_front();
            }
            memory.push_back((s, y, 1.0 / sy));
        }
        let improvement = fx - step.f;
        x = x_new;
        fx = step.f;
        g = step.g;
        iterations += 1;
        trace.push(fx);
        log::trace!("iteration {iterations}: cost {fx:.12e}, step {:.3e}", step.a);
        if improvement < opts.convergence_threshold {
            stop = StopReason::Converged;
            break;
        }
    }

    Ok(LbfgsReport {
        gradient_norm: norm(&g),
        x,
        f: fx,
        iterations,
        evaluations: ev.evaluations,
        trace,
        fallback_steps,
        stop,
    })
}

/// Backtracking along `-g` until the sufficient-decrease condition holds.
fn steepest_fallback<F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>>(
    ev: &mut Evaluator<F>,
    x: &[f64],
    f0: f64,
    g: &[f64],
    opts: &OptimizerOptions,
) -> Result<Option<Probe>> {
    let d: Vec<f64> = g.iter().map(|v| -v).collect();
    let gg = dot(g, g);
    let mut a = (1.0 / gg.sqrt()).min(1.0);
    for _ in 0..2 * opts.max_line_search {
        let p = ev.probe(x, &d, a)?;
        if p.f <= f0 - opts.c1 * a * gg && p.f < f0 {
            return Ok(Some(p));
        }
        a *= 0.5;
    }
    Ok(None)
}
