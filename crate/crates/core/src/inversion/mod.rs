//! Outer-loop solvers: L-BFGS over the coefficient parameters, the direct
//! linear method for affine operators, and one-parameter landscape scans.

mod direct;
mod landscape;
mod lbfgs;

pub use direct::{direct_method, DirectSolution, EquationSelection, RANK_TOL};
pub use landscape::{grid_argmin, grid_local_minima, landscape_scan, linspace, Curve, LandscapeScan};
pub use lbfgs::{minimize, LbfgsOptions, LbfgsResult, Termination};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg::{frobenius, CMat};
use crate::models::DiscreteModel;
use crate::objective::{evaluate, gradient, MetricMode, ObjectiveConfig, Penalty};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InversionReport {
    pub theta_history: Vec<Vec<f64>>,
    pub objective_history: Vec<f64>,
    pub final_theta: Vec<f64>,
    /// `|E|_F / |D|_F` at the final parameters.
    pub data_fit: f64,
    pub converged: bool,
    pub termination: Termination,
    pub iterations: usize,
    pub evaluations: usize,
    pub rho: Penalty,
    pub mode: MetricMode,
    pub options: LbfgsOptions,
}

/// Objective and adjoint gradient of `cfg` at `theta`.
pub fn objective_and_gradient(
    model: &dyn DiscreteModel,
    data: &CMat,
    cfg: &ObjectiveConfig,
    theta: &[f64],
) -> Result<(f64, Vec<f64>)> {
    let sys = model.system(theta, true)?;
    let ev = evaluate(&sys, data, cfg)?;
    let g = gradient(&sys, cfg, &ev)?;
    Ok((ev.value, g))
}

/// Minimize `cfg`'s objective over the model parameters with L-BFGS.
/// Coefficient bounds are enforced by the model at every evaluation.
pub fn invert(
    model: &dyn DiscreteModel,
    data: &CMat,
    cfg: &ObjectiveConfig,
    theta0: &[f64],
    opts: &LbfgsOptions,
) -> Result<InversionReport> {
    cfg.validate()?;
    let r = minimize(|t: &[f64]| objective_and_gradient(model, data, cfg, t), theta0, opts)?;
    let sys = model.system(&r.x, false)?;
    let st = sys.states()?;
    let e = data - sys.predicted_data(&st);
    let dn = frobenius(data);
    let data_fit = if dn == 0.0 { frobenius(&e) } else { frobenius(&e) / dn };
    log::info!(
        "{} rho={}: {} iterations, {} evaluations, J={:e}, fit={:e}, {:?}",
        cfg.mode,
        cfg.rho,
        r.iterations,
        r.evaluations,
        r.value,
        data_fit,
        r.termination
    );
    Ok(InversionReport {
        converged: r.converged(),
        theta_history: r.history,
        objective_history: r.values,
        final_theta: r.x,
        data_fit,
        termination: r.termination,
        iterations: r.iterations,
        evaluations: r.evaluations,
        rho: cfg.rho,
        mode: cfg.mode,
        options: opts.clone(),
    })
}
