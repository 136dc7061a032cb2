//! Penalty objectives, the representer inner solve, adjoint gradients and
//! residual projection diagnostics.

mod gradient;
mod projection;

pub use gradient::gradient;
pub use projection::{orthonormalize, projection_pde_residual, projection_solution_residual, SolutionProjection};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::galerkin::{DiscreteSystem, States};
use crate::linalg::{
    frobenius, hermitian_defect, hermitian_eigenvalues, identity, real_half_trace, weighted_trace_form, CMat,
    HermitianFactorization,
};

/// Penalty parameter: a finite positive value or one of the two limits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PenaltyRepr", into = "PenaltyRepr")]
pub enum Penalty {
    Finite(f64),
    /// `rho -> infinity`: the conventional least-squares misfit.
    Infinite,
    /// `rho -> 0` after scaling by `1/rho`.
    ZeroLimit,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum PenaltyRepr {
    Number(f64),
    Text(String),
}

impl TryFrom<PenaltyRepr> for Penalty {
    type Error = String;
    fn try_from(r: PenaltyRepr) -> std::result::Result<Self, String> {
        match r {
            PenaltyRepr::Number(v) => Penalty::finite(v).map_err(|e| e.to_string()),
            PenaltyRepr::Text(s) => s.parse().map_err(|e: Error| e.to_string()),
        }
    }
}

impl From<Penalty> for PenaltyRepr {
    fn from(p: Penalty) -> Self {
        match p {
            Penalty::Finite(v) => PenaltyRepr::Number(v),
            other => PenaltyRepr::Text(other.to_string()),
        }
    }
}

impl Penalty {
    pub fn finite(rho: f64) -> Result<Self> {
        if rho > 0.0 && rho.is_finite() {
            Ok(Penalty::Finite(rho))
        } else {
            Err(Error::Config(format!("penalty must be positive and finite, got {rho}")))
        }
    }
}

impl fmt::Display for Penalty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Penalty::Finite(v) => write!(f, "{v:?}"),
            Penalty::Infinite => f.write_str("inf"),
            Penalty::ZeroLimit => f.write_str("zero"),
        }
    }
}

impl FromStr for Penalty {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "infty" => Ok(Penalty::Infinite),
            "0" | "zero" | "zero_limit" => Ok(Penalty::ZeroLimit),
            t => {
                let v: f64 = t.parse().map_err(|_| Error::Config(format!("invalid penalty `{s}`")))?;
                Penalty::finite(v)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricMode {
    Conventional,
    Variable,
    DataDriven,
}

impl fmt::Display for MetricMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MetricMode::Conventional => "conventional",
            MetricMode::Variable => "variable",
            MetricMode::DataDriven => "data_driven",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveConfig {
    pub rho: Penalty,
    pub mode: MetricMode,
    pub data_gram: Option<CMat>,
    /// Include the derivative of `G(c)` in variable-metric gradients.
    pub differentiate_gram: bool,
}

impl ObjectiveConfig {
    pub fn conventional() -> Self {
        Self { rho: Penalty::Infinite, mode: MetricMode::Conventional, data_gram: None, differentiate_gram: true }
    }

    pub fn variable(rho: Penalty) -> Self {
        Self { rho, mode: MetricMode::Variable, data_gram: None, differentiate_gram: true }
    }

    pub fn data_driven(rho: Penalty, gram: CMat) -> Result<Self> {
        let cfg = Self { rho, mode: MetricMode::DataDriven, data_gram: Some(gram), differentiate_gram: false };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn frozen(mut self) -> Self {
        self.differentiate_gram = false;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if let Penalty::Finite(r) = self.rho {
            Penalty::finite(r)?;
        }
        if self.mode == MetricMode::DataDriven {
            let g = self
                .data_gram
                .as_ref()
                .ok_or_else(|| Error::MissingInput("data-driven metric needs a data Gram matrix".into()))?;
            let defect = hermitian_defect(g);
            if defect > 1e-8 {
                return Err(Error::NotHermitian { defect, tol: 1e-8 });
            }
            let ev = hermitian_eigenvalues(g);
            let lo = ev.first().copied().unwrap_or(0.0);
            let hi = ev.last().copied().unwrap_or(0.0).abs();
            if lo < -1e-10 * hi.max(1.0) {
                return Err(Error::NotPositiveDefinite { index: 0, pivot: lo });
            }
        }
        Ok(())
    }

    /// Whether evaluation needs the model Gram matrix.
    pub fn needs_model_gram(&self) -> bool {
        self.mode == MetricMode::Variable && self.rho != Penalty::Infinite
    }

    /// Whether the metric weight changes with the coefficient in the gradient.
    pub fn gram_varies(&self) -> bool {
        self.needs_model_gram() && self.differentiate_gram
    }

    fn uses_identity(&self) -> bool {
        self.mode == MetricMode::Conventional || self.rho == Penalty::Infinite
    }
}

/// Coefficients of the optimal auxiliary sources in the adjoint-state basis.
#[derive(Debug, Clone)]
pub struct RepresenterSolution {
    pub alpha: CMat,
    pub objective_value: f64,
}

/// Solve `(G + rho I) alpha_j = e_j` and evaluate the inner penalty objective
/// `sum_j 1/2 |G alpha_j - e_j|^2 + rho/2 alpha_j* G alpha_j`.
pub fn representer_coefficients(g: &CMat, e: &CMat, rho: f64) -> Result<RepresenterSolution> {
    if !(rho > 0.0) {
        return Err(Error::Config(format!("representer solve needs rho > 0, got {rho}")));
    }
    if g.nrows() != e.nrows() {
        return Err(Error::DimensionMismatch(format!("G is {}x{}, E has {} rows", g.nrows(), g.ncols(), e.nrows())));
    }
    let shifted = g + identity(g.nrows()).scale(rho);
    let alpha = HermitianFactorization::new(&shifted)?.solve(e)?;
    let ga = g * &alpha;
    let misfit = 0.5 * frobenius(&(&ga - e)).powi(2);
    let penalty = rho * real_half_trace(&alpha, &ga)?;
    Ok(RepresenterSolution { alpha, objective_value: misfit + penalty })
}

/// `1/2 trace(E* (I + G/rho)^{-1} E)`.
pub fn objective_rho(e: &CMat, g: &CMat, rho: f64) -> Result<f64> {
    let w = identity(g.nrows()) + g.unscale(rho);
    weighted_trace_form(e, &w)
}

/// `1/2 |E|_F^2`.
pub fn objective_infty(e: &CMat) -> f64 {
    0.5 * frobenius(e).powi(2)
}

/// `1/2 trace(E* G^{-1} E)`.
pub fn objective_zero(e: &CMat, g: &CMat) -> Result<f64> {
    weighted_trace_form(e, g)
}

/// Objective value and weighted residual `Y = W^{-1} E` for a given metric.
pub fn weighted_residual(e: &CMat, gram: Option<&CMat>, rho: Penalty) -> Result<(f64, CMat)> {
    match (rho, gram) {
        (Penalty::Infinite, _) | (_, None) => Ok((objective_infty(e), e.clone())),
        (Penalty::Finite(r), Some(g)) => {
            let w = identity(g.nrows()) + g.unscale(r);
            let y = HermitianFactorization::new(&w)?.solve(e)?;
            Ok((real_half_trace(e, &y)?, y))
        }
        (Penalty::ZeroLimit, Some(g)) => {
            let y = HermitianFactorization::new(g)?.solve(e)?;
            Ok((real_half_trace(e, &y)?, y))
        }
    }
}

/// Objective value for a residual and (model or data) Gram under `cfg`.
pub fn objective_value(e: &CMat, model_gram: Option<&CMat>, cfg: &ObjectiveConfig) -> Result<f64> {
    Ok(weighted_residual(e, metric_gram(model_gram, cfg)?, cfg.rho)?.0)
}

fn metric_gram<'a>(model_gram: Option<&'a CMat>, cfg: &'a ObjectiveConfig) -> Result<Option<&'a CMat>> {
    if cfg.uses_identity() {
        return Ok(None);
    }
    match cfg.mode {
        MetricMode::Variable => model_gram
            .map(Some)
            .ok_or_else(|| Error::MissingInput("variable metric needs the model Gram matrix".into())),
        MetricMode::DataDriven => cfg
            .data_gram
            .as_ref()
            .map(Some)
            .ok_or_else(|| Error::MissingInput("data-driven metric needs a data Gram matrix".into())),
        MetricMode::Conventional => Ok(None),
    }
}

/// Everything computed while evaluating the objective at one parameter value.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub value: f64,
    pub residual: CMat,
    pub predicted: CMat,
    pub gram: Option<CMat>,
    /// `W^{-1} E` for the active metric weight `W`.
    pub weighted: CMat,
    pub states: States,
}

impl Evaluation {
    /// `|E|_F / |D|_F`.
    pub fn relative_misfit(&self, data: &CMat) -> f64 {
        let d = frobenius(data);
        if d == 0.0 {
            frobenius(&self.residual)
        } else {
            frobenius(&self.residual) / d
        }
    }
}

pub fn evaluate(sys: &DiscreteSystem, data: &CMat, cfg: &ObjectiveConfig) -> Result<Evaluation> {
    if data.nrows() != sys.n_sources() || data.ncols() != sys.n_sources() {
        return Err(Error::DimensionMismatch(format!(
            "data is {}x{}, model has {} sources",
            data.nrows(),
            data.ncols(),
            sys.n_sources()
        )));
    }
    let states = sys.states()?;
    let predicted = sys.predicted_data(&states);
    let residual = data - &predicted;
    let gram = if cfg.needs_model_gram() { Some(sys.gram(&states)?) } else { None };
    let (value, weighted) = weighted_residual(&residual, metric_gram(gram.as_ref(), cfg)?, cfg.rho)?;
    Ok(Evaluation { value, residual, predicted, gram, weighted, states })
}
