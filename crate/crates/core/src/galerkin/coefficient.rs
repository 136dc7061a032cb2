use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Closed-form scalar functions on `[0,1]` or `[0,1]^2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScalarField {
    Constant {
        value: f64,
    },
    /// `scale * sum_d sin^2(k x_d)`.
    SinSquared {
        k: f64,
        #[serde(default = "one")]
        scale: f64,
    },
    /// `scale * sin^2(k x_axis)`.
    SinSquaredAxis {
        k: f64,
        axis: usize,
        #[serde(default = "one")]
        scale: f64,
    },
    /// `sin^2 x1 + sin^2 x2 + sin^2(10 x1) + sin^2(10 x2)`.
    PoissonBase,
    /// `amplitude * exp(-|x - center|^2 / width^2)`.
    Bump {
        center: Vec<f64>,
        width: f64,
        amplitude: f64,
    },
    /// `value` on the box `[lo, hi)` (closed at 1), zero elsewhere.
    Indicator {
        lo: Vec<f64>,
        hi: Vec<f64>,
        #[serde(default = "one")]
        value: f64,
    },
    /// `start + slope * x_axis`.
    Linear {
        start: f64,
        slope: f64,
        axis: usize,
    },
    Sum {
        terms: Vec<ScalarField>,
    },
}

fn one() -> f64 {
    1.0
}

impl ScalarField {
    pub fn constant(value: f64) -> Self {
        ScalarField::Constant { value }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            ScalarField::Constant { value } => *value,
            ScalarField::SinSquared { k, scale } => scale * x.iter().map(|&xi| (k * xi).sin().powi(2)).sum::<f64>(),
            ScalarField::SinSquaredAxis { k, axis, scale } => scale * (k * x[*axis]).sin().powi(2),
            ScalarField::PoissonBase => {
                x[0].sin().powi(2) + x[1].sin().powi(2) + (10.0 * x[0]).sin().powi(2) + (10.0 * x[1]).sin().powi(2)
            }
            ScalarField::Bump { center, width, amplitude } => {
                let r2: f64 = x.iter().zip(center).map(|(a, b)| (a - b).powi(2)).sum();
                amplitude * (-r2 / (width * width)).exp()
            }
            ScalarField::Indicator { lo, hi, value } => {
                let inside =
                    x.iter().zip(lo.iter().zip(hi)).all(|(&xi, (&l, &h))| xi >= l && (xi < h || (h >= 1.0 && xi <= h)));
                if inside {
                    *value
                } else {
                    0.0
                }
            }
            ScalarField::Linear { start, slope, axis } => start + slope * x[*axis],
            ScalarField::Sum { terms } => terms.iter().map(|t| t.eval(x)).sum(),
        }
    }

    /// Piecewise-constant basis of `m` equal cells on `[0,1]`.
    pub fn cells_1d(m: usize) -> Vec<ScalarField> {
        (0..m)
            .map(|k| ScalarField::Indicator {
                lo: vec![k as f64 / m as f64],
                hi: vec![(k + 1) as f64 / m as f64],
                value: 1.0,
            })
            .collect()
    }
}

/// `c(x; theta) = base(x) + sum_k theta_k psi_k(x)`, optionally clamped to `[lower, upper]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientField {
    pub base: ScalarField,
    pub basis: Vec<ScalarField>,
    pub theta: Vec<f64>,
    #[serde(default)]
    pub bounds: Option<(f64, f64)>,
}

impl CoefficientField {
    pub fn new(base: ScalarField, basis: Vec<ScalarField>, theta: Vec<f64>) -> Self {
        Self { base, basis, theta, bounds: None }
    }

    pub fn constant(value: f64) -> Self {
        Self::new(ScalarField::constant(value), Vec::new(), Vec::new())
    }

    pub fn with_bounds(mut self, lower: f64, upper: f64) -> Self {
        self.bounds = Some((lower, upper));
        self
    }

    pub fn with_theta(&self, theta: &[f64]) -> Result<Self> {
        if theta.len() != self.basis.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} parameters for {} basis functions",
                theta.len(),
                self.basis.len()
            )));
        }
        Ok(Self { theta: theta.to_vec(), ..self.clone() })
    }

    pub fn n_params(&self) -> usize {
        self.basis.len()
    }

    fn raw(&self, x: &[f64]) -> f64 {
        self.base.eval(x) + self.theta.iter().zip(&self.basis).map(|(t, p)| t * p.eval(x)).sum::<f64>()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let v = self.raw(x);
        match self.bounds {
            Some((lo, hi)) => v.clamp(lo, hi),
            None => v,
        }
    }

    /// `dc/dtheta_k` at `x`; zero where the clamp is active.
    pub fn derivative(&self, k: usize, x: &[f64]) -> f64 {
        if let Some((lo, hi)) = self.bounds {
            let v = self.raw(x);
            if v < lo || v > hi {
                return 0.0;
            }
        }
        self.basis[k].eval(x)
    }

    /// Evaluate with the positivity check applied at assembly points.
    pub fn eval_checked(&self, x: &[f64]) -> Result<f64> {
        let v = self.eval(x);
        if !v.is_finite() {
            return Err(Error::QuadratureFailure("non-finite coefficient value"));
        }
        if v <= 0.0 {
            return Err(Error::CoefficientNotPositive { value: v, location: x.to_vec() });
        }
        Ok(v)
    }

    /// Evaluate without sign restriction (potentials may vanish).
    pub fn eval_finite(&self, x: &[f64]) -> Result<f64> {
        let v = self.eval(x);
        if !v.is_finite() {
            return Err(Error::QuadratureFailure("non-finite coefficient value"));
        }
        Ok(v)
    }
}
