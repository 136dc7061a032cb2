use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LbfgsOptions {
    pub memory: usize,
    pub c1: f64,
    pub c2: f64,
    pub max_iterations: usize,
    /// Stop when `|grad| <= grad_tol (1 + |J|)`.
    pub grad_tol: f64,
    /// Objective evaluations allowed per line search.
    pub max_line_evaluations: usize,
    /// Total objective evaluations allowed; `None` means unlimited.
    pub max_evaluations: Option<usize>,
    /// Largest parameter change (max norm) tried on the first iteration,
    /// before any curvature information exists.
    pub first_step: f64,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        Self {
            memory: 10,
            c1: 1e-4,
            c2: 0.9,
            max_iterations: 500,
            grad_tol: 1e-8,
            max_line_evaluations: 30,
            max_evaluations: None,
            first_step: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    GradientTolerance,
    MaxIterations,
    EvaluationBudget,
    LineSearchFailure,
}

#[derive(Debug, Clone)]
pub struct LbfgsResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub gradient: Vec<f64>,
    /// Accepted iterates, starting with the initial point.
    pub history: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    pub iterations: usize,
    pub evaluations: usize,
    pub termination: Termination,
}

impl LbfgsResult {
    pub fn converged(&self) -> bool {
        self.termination == Termination::GradientTolerance
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(x: &[f64], alpha: f64, p: &[f64]) -> Vec<f64> {
    x.iter().zip(p).map(|(a, b)| a + alpha * b).collect()
}

struct Point {
    alpha: f64,
    x: Vec<f64>,
    f: f64,
    g: Vec<f64>,
    slope: f64,
}

struct Counter<'a, F> {
    f: &'a mut F,
    count: usize,
}

impl<F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>> Counter<'_, F> {
    /// Failed or non-finite evaluations count as `+inf`.
    fn eval(&mut self, x: &[f64], p: &[f64], alpha: f64) -> Point {
        self.count += 1;
        let xa = axpy(x, alpha, p);
        match (self.f)(&xa) {
            Ok((f, g)) if f.is_finite() && g.iter().all(|v| v.is_finite()) => {
                let slope = dot(&g, p);
                Point { alpha, x: xa, f, g, slope }
            }
            Ok(_) | Err(_) => Point { alpha, x: xa, f: f64::INFINITY, g: vec![], slope: f64::NAN },
        }
    }
}

/// Minimizer of the cubic through two points with slopes, when it lies in
/// the safeguarded interior of `[lo, hi]`; bisection otherwise.
fn interpolate(a: &Point, b: &Point) -> f64 {
    let (lo, hi) = if a.alpha < b.alpha { (a.alpha, b.alpha) } else { (b.alpha, a.alpha) };
    let mid = 0.5 * (lo + hi);
    if !(a.f.is_finite() && b.f.is_finite() && a.slope.is_finite() && b.slope.is_finite()) {
        return mid;
    }
    let d1 = a.slope + b.slope - 3.0 * (a.f - b.f) / (a.alpha - b.alpha);
    let disc = d1 * d1 - a.slope * b.slope;
    if disc < 0.0 {
        return mid;
    }
    let d2 = (b.alpha - a.alpha).signum() * disc.sqrt();
    let t = b.alpha - (b.alpha - a.alpha) * (b.slope + d2 - d1) / (b.slope - a.slope + 2.0 * d2);
    let margin = 0.1 * (hi - lo);
    if t.is_finite() && t > lo + margin && t < hi - margin {
        t
    } else {
        mid
    }
}

/// Strong Wolfe line search along `p`, bracketing then zooming with cubic
/// interpolation. Returns the accepted point or `None`.
fn line_search<F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>>(
    fc: &mut Counter<'_, F>,
    start: &Point,
    p: &[f64],
    alpha0: f64,
    opts: &LbfgsOptions,
) -> (Option<Point>, Option<Point>) {
    let (f0, s0) = (start.f, start.slope);
    let armijo = |pt: &Point| pt.f <= f0 + opts.c1 * pt.alpha * s0;
    let curvature = |pt: &Point| pt.slope.abs() <= -opts.c2 * s0;
    let mut best: Option<Point> = None;
    let keep = |best: &mut Option<Point>, pt: &Point| {
        if pt.f < f0 && best.as_ref().is_none_or(|b| pt.f < b.f) {
            *best = Some(Point { alpha: pt.alpha, x: pt.x.clone(), f: pt.f, g: pt.g.clone(), slope: pt.slope });
        }
    };
    let mut prev = Point { alpha: 0.0, x: start.x.clone(), f: f0, g: start.g.clone(), slope: s0 };
    let mut alpha = alpha0;
    let mut used = 0;
    let (mut lo, mut hi);
    loop {
        if used >= opts.max_line_evaluations {
            return (None, best);
        }
        used += 1;
        let cur = fc.eval(&start.x, p, alpha);
        keep(&mut best, &cur);
        if !armijo(&cur) || (used > 1 && cur.f >= prev.f) {
            lo = prev;
            hi = cur;
            break;
        }
        if curvature(&cur) {
            return (Some(cur), best);
        }
        if cur.slope >= 0.0 {
            lo = cur;
            hi = prev;
            break;
        }
        alpha *= 2.0;
        prev = cur;
    }
    loop {
        if used >= opts.max_line_evaluations || (hi.alpha - lo.alpha).abs() <= 1e-16 * lo.alpha.abs().max(1e-300) {
            return (None, best);
        }
        used += 1;
        let a = interpolate(&lo, &hi);
        let cur = fc.eval(&start.x, p, a);
        keep(&mut best, &cur);
        if !armijo(&cur) || cur.f >= lo.f {
            hi = cur;
        } else {
            if curvature(&cur) {
                return (Some(cur), best);
            }
            if cur.slope * (hi.alpha - lo.alpha) >= 0.0 {
                hi = lo;
            }
            lo = cur;
        }
    }
}

/// Limited-memory BFGS with a strong Wolfe line search. `f` returns the
/// objective and its gradient; failed evaluations during the line search are
/// treated as `+inf`, a failure at the initial point is returned as an error.
pub fn minimize<F>(mut f: F, x0: &[f64], opts: &LbfgsOptions) -> Result<LbfgsResult>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    let (f0, g0) = f(x0)?;
    let mut fc = Counter { f: &mut f, count: 1 };
    let mut cur = Point { alpha: 0.0, x: x0.to_vec(), f: f0, slope: 0.0, g: g0 };
    let mut history = vec![cur.x.clone()];
    let mut values = vec![cur.f];
    let mut pairs: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut iterations = 0;
    let termination = loop {
        if norm(&cur.g) <= opts.grad_tol * (1.0 + cur.f.abs()) {
            break Termination::GradientTolerance;
        }
        if iterations >= opts.max_iterations {
            break Termination::MaxIterations;
        }
        if opts.max_evaluations.is_some_and(|m| fc.count >= m) {
            break Termination::EvaluationBudget;
        }
        // Two-loop recursion.
        let mut q = cur.g.clone();
        let mut alphas = Vec::with_capacity(pairs.len());
        for (s, y, rho) in pairs.iter().rev() {
            let a = rho * dot(s, &q);
            q = axpy(&q, -a, y);
            alphas.push(a);
        }
        if let Some((s, y, _)) = pairs.back() {
            let gamma = dot(s, y) / dot(y, y);
            q.iter_mut().for_each(|v| *v *= gamma);
        }
        for ((s, y, rho), a) in pairs.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(y, &q);
            q = axpy(&q, a - b, s);
        }
        let mut p: Vec<f64> = q.iter().map(|v| -v).collect();
        let mut slope = dot(&p, &cur.g);
        if !(slope < 0.0) {
            pairs.clear();
            p = cur.g.iter().map(|v| -v).collect();
            slope = -dot(&cur.g, &cur.g);
        }
        let alpha0 = if pairs.is_empty() {
            let pmax = p.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            (opts.first_step / pmax).min(1.0)
        } else {
            1.0
        };
        cur.slope = slope;
        let (accepted, best) = line_search(&mut fc, &cur, &p, alpha0, opts);
        let next = match accepted {
            Some(pt) => pt,
            None => {
                if let Some(b) = best.filter(|b| !b.g.is_empty()) {
                    history.push(b.x.clone());
                    values.push(b.f);
                    iterations += 1;
                    cur = b;
                }
                break Termination::LineSearchFailure;
            }
        };
        let s: Vec<f64> = next.x.iter().zip(&cur.x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = next.g.iter().zip(&cur.g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * norm(&s) * norm(&y) {
            if pairs.len() == opts.memory {
                pairs.pop_front();
            }
            pairs.push_back((s, y, 1.0 / sy));
        }
        cur = next;
        iterations += 1;
        history.push(cur.x.clone());
        values.push(cur.f);
    };
    let evaluations = fc.count;
    Ok(LbfgsResult { x: cur.x, value: cur.f, gradient: cur.g, history, values, iterations, evaluations, termination })
}
