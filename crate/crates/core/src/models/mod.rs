//! Forward models for the case studies. Each builds the discrete system
//! `(K, R, F)` at a parameter value, optionally with parameter derivatives.

pub mod elliptic1d;
mod fem2d;
pub mod helmholtz1d;
pub mod poisson2d;
pub mod schrodinger2d;
pub mod seismic2d;

pub use elliptic1d::Elliptic1D;
pub use helmholtz1d::{helmholtz1d_analytic, Helmholtz1D, HelmholtzAnalytic};
pub use poisson2d::Poisson2D;
pub use schrodinger2d::Schrodinger2D;
pub use seismic2d::{Seismic2D, VelocityGrid};

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::galerkin::DiscreteSystem;
use crate::linalg::{frobenius, CMat, C64};

/// Parameterized discrete forward model.
pub trait DiscreteModel: Send + Sync {
    fn n_params(&self) -> usize;
    fn n_sources(&self) -> usize;
    /// Assemble `(K, R, F)` at `theta`; derivatives are filled when `derivs` is set.
    fn system(&self, theta: &[f64], derivs: bool) -> Result<DiscreteSystem>;
}

/// Predicted data and, on request, the model Gram matrix.
#[derive(Debug, Clone)]
pub struct Prediction {
    pub data: CMat,
    pub gram: Option<CMat>,
}

/// Anything that maps parameters to predicted data and a Gram matrix.
pub trait ForwardMap: Send + Sync {
    fn n_params(&self) -> usize;
    fn predict(&self, theta: &[f64], gram: bool) -> Result<Prediction>;
}

impl<T: DiscreteModel + ?Sized> ForwardMap for T {
    fn n_params(&self) -> usize {
        DiscreteModel::n_params(self)
    }

    fn predict(&self, theta: &[f64], gram: bool) -> Result<Prediction> {
        let sys = self.system(theta, false)?;
        let st = sys.states()?;
        let data = sys.predicted_data(&st);
        let gram = if gram { Some(sys.gram(&st)?) } else { None };
        Ok(Prediction { data, gram })
    }
}

pub(crate) fn check_theta(theta: &[f64], n: usize) -> Result<()> {
    if theta.len() != n {
        return Err(Error::DimensionMismatch(format!("expected {n} parameters, got {}", theta.len())));
    }
    if theta.iter().any(|t| !t.is_finite()) {
        return Err(Error::QuadratureFailure("non-finite parameter"));
    }
    Ok(())
}

/// Measured data at one or more spectral values (wavenumber or shift).
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSet {
    pub spectral: Vec<f64>,
    pub data: Vec<CMat>,
    /// Boundary traces `b_i = u_i(1)` per spectral value.
    pub traces: Option<Vec<Vec<C64>>>,
}

impl MeasurementSet {
    pub fn single(data: CMat) -> Self {
        Self { spectral: vec![0.0], data: vec![data], traces: None }
    }

    pub fn n_sources(&self) -> usize {
        self.data.first().map(|d| d.nrows()).unwrap_or(0)
    }
}

/// How synthetic data are generated from the true coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Synthesis {
    /// Same discretization as the inversion.
    Consistent,
    /// Mesh refined twice in every direction.
    Refined,
    /// Closed-form solution where the model has one.
    Analytic,
}

/// Add complex Gaussian noise with standard deviation `level * |D|_F / n`
/// per entry (real and imaginary parts each get half the variance).
pub fn add_noise<R: Rng>(d: &CMat, level: f64, rng: &mut R) -> Result<CMat> {
    if level == 0.0 {
        return Ok(d.clone());
    }
    if !(level > 0.0) {
        return Err(Error::Config(format!("noise level must be nonnegative, got {level}")));
    }
    let sigma = level * frobenius(d) / d.nrows().max(1) as f64 / std::f64::consts::SQRT_2;
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::Config(e.to_string()))?;
    Ok(d.map(|z| z + C64::new(normal.sample(rng), normal.sample(rng))))
}

/// `n` points equally spaced along the square `[m, 1-m]^2`, offset by half
/// a spacing from the lower-left corner, counter-clockwise.
pub fn ring_centers(n: usize, margin: f64) -> Vec<[f64; 2]> {
    let side = 1.0 - 2.0 * margin;
    let perimeter = 4.0 * side;
    (0..n)
        .map(|i| {
            let s = (i as f64 + 0.5) * perimeter / n as f64;
            let edge = ((s / side).floor() as usize).min(3);
            let t = s - edge as f64 * side;
            match edge {
                0 => [margin + t, margin],
                1 => [1.0 - margin, margin + t],
                2 => [1.0 - margin - t, 1.0 - margin],
                _ => [margin, 1.0 - margin - t],
            }
        })
        .collect()
}
