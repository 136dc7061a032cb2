use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::io::fmt_f64;
use crate::linalg::CMat;
use crate::models::ForwardMap;
use crate::objective::{objective_value, MetricMode, ObjectiveConfig, Penalty};

/// Objective values along a one-parameter grid for one metric configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Curve {
    pub rho: Penalty,
    pub mode: MetricMode,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LandscapeScan {
    pub theta_grid: Vec<f64>,
    pub curves: Vec<Curve>,
}

impl LandscapeScan {
    /// Rows `theta,rho,mode,J`, curve by curve.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("theta,rho,mode,J\n");
        for c in &self.curves {
            for (t, v) in self.theta_grid.iter().zip(&c.values) {
                out.push_str(&format!("{},{},{},{}\n", fmt_f64(*t), c.rho, c.mode, fmt_f64(*v)));
            }
        }
        out
    }

    pub fn curve(&self, rho: Penalty, mode: MetricMode) -> Option<&Curve> {
        self.curves.iter().find(|c| c.rho == rho && c.mode == mode)
    }
}

/// Evaluate every configuration at every grid point of a one-parameter
/// family. The forward problem is solved once per grid point.
pub fn landscape_scan(
    model: &dyn ForwardMap,
    data: &CMat,
    theta_grid: &[f64],
    configs: &[ObjectiveConfig],
) -> Result<LandscapeScan> {
    let need_gram = configs.iter().any(|c| c.needs_model_gram());
    let rows: Vec<Vec<f64>> = theta_grid
        .par_iter()
        .map(|&t| {
            let p = model.predict(&[t], need_gram)?;
            let e = data - &p.data;
            configs.iter().map(|cfg| objective_value(&e, p.gram.as_ref(), cfg)).collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let curves = configs
        .iter()
        .enumerate()
        .map(|(k, cfg)| Curve { rho: cfg.rho, mode: cfg.mode, values: rows.iter().map(|r| r[k]).collect() })
        .collect();
    Ok(LandscapeScan { theta_grid: theta_grid.to_vec(), curves })
}

/// Interior grid points strictly below both neighbours.
pub fn grid_local_minima(values: &[f64]) -> Vec<usize> {
    (1..values.len().saturating_sub(1)).filter(|&i| values[i] < values[i - 1] && values[i] < values[i + 1]).collect()
}

/// Index of the smallest value (first one on ties).
pub fn grid_argmin(values: &[f64]) -> Option<usize> {
    values.iter().enumerate().filter(|(_, v)| !v.is_nan()).min_by(|a, b| a.1.total_cmp(b.1)).map(|(i, _)| i)
}

/// `n` equally spaced points from `a` to `b` inclusive.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![a],
        _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
    }
}
