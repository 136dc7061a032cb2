//! Experiment configuration files (TOML). Every table rejects unknown keys.

use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::datadriven::ELLIPTIC_SYMMETRY_TOL;
use crate::error::{Error, Result};
use crate::galerkin::{BasisMode, CoefficientField, InnerProductMode};
use crate::inversion::{EquationSelection, LbfgsOptions};
use crate::linalg::{CMat, C64};
use crate::models::seismic2d::{layered_velocity, linear_velocity};
use crate::models::{
    DiscreteModel, Elliptic1D, ForwardMap, Helmholtz1D, HelmholtzAnalytic, Poisson2D, Schrodinger2D, Seismic2D,
    Synthesis, VelocityGrid,
};
use crate::objective::{MetricMode, ObjectiveConfig, Penalty};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    Elliptic1d {
        n_sources: usize,
        #[serde(default = "default_cells_per_gap")]
        cells_per_gap: usize,
        inner: InnerProductMode,
        coefficient: CoefficientField,
    },
    Poisson2d {
        #[serde(default = "default_mesh")]
        mesh: usize,
        n_sources: usize,
        inner: InnerProductMode,
        basis: BasisMode,
        coefficient: CoefficientField,
    },
    /// Constant sound speed; the single parameter is `c`. Without
    /// `cells_per_gap` the closed-form solution is used.
    Helmholtz1d {
        n_sources: usize,
        k: f64,
        #[serde(default)]
        cells_per_gap: Option<usize>,
    },
    /// Potential `sum_k theta_k (sin^2(k x1) + sin^2(k x2))`, `k = 1..=n_potentials`.
    Schrodinger2d {
        #[serde(default = "default_mesh")]
        mesh: usize,
        n_sources: usize,
        source_width: f64,
        n_potentials: usize,
        lambda: f64,
        basis: BasisMode,
    },
    Seismic2d {
        grid: Seismic2D,
        truth: VelocityModel,
        start: VelocityModel,
    },
}

fn default_cells_per_gap() -> usize {
    16
}

fn default_mesh() -> usize {
    Poisson2D::DEFAULT_MESH
}

/// Velocity as a function of `(x, z)`, in km/s over km.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum VelocityModel {
    Layered,
    Constant {
        value: f64,
    },
    /// Linear in depth from `top` to `bottom` at depth `depth`, constant below.
    Linear {
        top: f64,
        bottom: f64,
        depth: f64,
    },
    /// Grid CSV (`nx,ny,dx,dy` header); nearest-node lookup.
    File {
        path: PathBuf,
    },
}

impl VelocityModel {
    pub fn sampler(&self) -> Result<Box<dyn Fn(f64, f64) -> f64>> {
        Ok(match self {
            VelocityModel::Layered => Box::new(layered_velocity),
            VelocityModel::Constant { value } => {
                let v = *value;
                Box::new(move |_, _| v)
            }
            VelocityModel::Linear { top, bottom, depth } => Box::new(linear_velocity(*top, *bottom, *depth)),
            VelocityModel::File { path } => {
                let g = VelocityGrid::read_csv(BufReader::new(fs::File::open(path)?))?;
                if g.values.iter().any(|v| !(*v > 0.0)) {
                    return Err(Error::Config(format!("{}: velocities must be positive", path.display())));
                }
                Box::new(move |x, z| {
                    let ix = ((x / g.dx).round().max(0.0) as usize).min(g.nx - 1);
                    let iz = ((z / g.dy).round().max(0.0) as usize).min(g.ny - 1);
                    g.get(ix, iz)
                })
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectiveSpec {
    #[serde(default = "default_rho")]
    pub rho: Penalty,
    pub mode: MetricMode,
    #[serde(default = "yes")]
    pub differentiate_gram: bool,
}

fn default_rho() -> Penalty {
    Penalty::Finite(1.0)
}

fn yes() -> bool {
    true
}

impl ObjectiveSpec {
    /// Objective configuration; `data_gram` is required for the data-driven mode.
    pub fn build(&self, data_gram: Option<&CMat>) -> Result<ObjectiveConfig> {
        let cfg = match self.mode {
            MetricMode::Conventional => ObjectiveConfig::conventional(),
            MetricMode::Variable => ObjectiveConfig::variable(self.rho),
            MetricMode::DataDriven => {
                let g = data_gram.ok_or_else(|| Error::MissingInput("data-driven metric needs a data Gram".into()))?;
                ObjectiveConfig::data_driven(self.rho, g.clone())?
            }
        };
        Ok(if self.differentiate_gram { cfg } else { cfg.frozen() })
    }

    /// `{mode}_rho{rho}`, used in output file names.
    pub fn label(&self) -> String {
        match self.mode {
            MetricMode::Conventional => "conventional".into(),
            mode => format!("{mode}_rho{}", self.rho),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LandscapeSpec {
    pub start: f64,
    pub end: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DirectSpec {
    #[serde(default)]
    pub selection: EquationSelection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataGramSpec {
    /// Allowed relative symmetry defect of the data for the transpose rule.
    #[serde(default = "default_symmetry_tol")]
    pub symmetry_tol: f64,
    /// Finite-difference steps examined by `gramcheck`.
    #[serde(default)]
    pub steps: Vec<f64>,
}

fn default_symmetry_tol() -> f64 {
    ELLIPTIC_SYMMETRY_TOL
}

impl Default for DataGramSpec {
    fn default() -> Self {
        Self { symmetry_tol: default_symmetry_tol(), steps: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    pub model: ModelSpec,
    /// True parameters; defaults to the model's own (coefficient `theta`,
    /// `c = 1`, seeded random potentials, or the truth velocity).
    #[serde(default)]
    pub truth: Option<Vec<f64>>,
    /// Starting parameters for `invert`.
    #[serde(default)]
    pub initial: Option<Vec<f64>>,
    #[serde(default = "default_synthesis")]
    pub synthesis: Synthesis,
    /// Relative complex Gaussian noise level.
    #[serde(default)]
    pub noise: f64,
    /// Step `h` of the spectral grid `{s - h, s, s + h}` around the model's
    /// wavenumber or shift; data are produced at all three values.
    #[serde(default)]
    pub spectral_step: Option<f64>,
    #[serde(default = "default_objectives")]
    pub objectives: Vec<ObjectiveSpec>,
    #[serde(default)]
    pub landscape: Option<LandscapeSpec>,
    #[serde(default)]
    pub optimizer: LbfgsOptions,
    #[serde(default)]
    pub direct: DirectSpec,
    #[serde(default)]
    pub data_gram: DataGramSpec,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_synthesis() -> Synthesis {
    Synthesis::Consistent
}

fn default_objectives() -> Vec<ObjectiveSpec> {
    vec![ObjectiveSpec { rho: default_rho(), mode: MetricMode::Variable, differentiate_gram: true }]
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return Err(Error::Config(format!("noise must be nonnegative, got {}", self.noise)));
        }
        if let Some(h) = self.spectral_step {
            if !(h > 0.0 && h.is_finite()) {
                return Err(Error::Config(format!("spectral_step must be positive, got {h}")));
            }
        }
        if self.objectives.is_empty() {
            return Err(Error::Config("at least one objective is required".into()));
        }
        for o in &self.objectives {
            if let Penalty::Finite(r) = o.rho {
                Penalty::finite(r)?;
            }
        }
        if let Some(l) = &self.landscape {
            if l.points == 0 || !l.start.is_finite() || !l.end.is_finite() {
                return Err(Error::Config("landscape needs finite bounds and at least one point".into()));
            }
        }
        let n_sources = match &self.model {
            ModelSpec::Elliptic1d { n_sources, cells_per_gap, .. } => {
                if *cells_per_gap == 0 {
                    return Err(Error::Config("cells_per_gap must be positive".into()));
                }
                *n_sources
            }
            ModelSpec::Poisson2d { n_sources, mesh, .. } | ModelSpec::Schrodinger2d { n_sources, mesh, .. } => {
                if *mesh < 2 {
                    return Err(Error::Config("mesh must have at least 2 cells per side".into()));
                }
                *n_sources
            }
            ModelSpec::Helmholtz1d { n_sources, k, cells_per_gap } => {
                if !(*k > 0.0) || *cells_per_gap == Some(0) {
                    return Err(Error::Config("helmholtz1d needs k > 0 and positive cells_per_gap".into()));
                }
                *n_sources
            }
            ModelSpec::Seismic2d { grid, .. } => grid.sources.len(),
        };
        if n_sources == 0 {
            return Err(Error::Config("at least one source is required".into()));
        }
        Ok(())
    }

    pub fn problem(&self) -> Result<Problem> {
        Problem::build(&self.model)
    }

    /// Tag used in metadata and reports.
    pub fn model_kind(&self) -> &'static str {
        match self.model {
            ModelSpec::Elliptic1d { .. } => "elliptic1d",
            ModelSpec::Poisson2d { .. } => "poisson2d",
            ModelSpec::Helmholtz1d { .. } => "helmholtz1d",
            ModelSpec::Schrodinger2d { .. } => "schrodinger2d",
            ModelSpec::Seismic2d { .. } => "seismic2d",
        }
    }
}

/// A constructed forward model together with its default truth and start.
pub enum Problem {
    Elliptic(Elliptic1D),
    Poisson(Poisson2D),
    HelmholtzAnalytic(HelmholtzAnalytic),
    Helmholtz(Helmholtz1D),
    Schrodinger(Schrodinger2D),
    Seismic { model: Seismic2D, truth: Vec<f64>, start: Vec<f64> },
}

impl Problem {
    pub fn build(spec: &ModelSpec) -> Result<Self> {
        Ok(match spec {
            ModelSpec::Elliptic1d { n_sources, cells_per_gap, inner, coefficient } => {
                Problem::Elliptic(Elliptic1D::new(*n_sources, *cells_per_gap, coefficient.clone(), *inner))
            }
            ModelSpec::Poisson2d { mesh, n_sources, inner, basis, coefficient } => {
                Problem::Poisson(Poisson2D::ring(*mesh, *n_sources, coefficient.clone(), *inner, *basis)?)
            }
            ModelSpec::Helmholtz1d { n_sources, k, cells_per_gap: None } => {
                Problem::HelmholtzAnalytic(HelmholtzAnalytic::new(*n_sources, *k))
            }
            ModelSpec::Helmholtz1d { n_sources, k, cells_per_gap: Some(m) } => {
                Problem::Helmholtz(Helmholtz1D::constant_speed(*n_sources, *m, *k))
            }
            ModelSpec::Schrodinger2d { mesh, n_sources, source_width, n_potentials, lambda, basis } => {
                Problem::Schrodinger(Schrodinger2D::ring(
                    *mesh,
                    *n_sources,
                    *source_width,
                    Schrodinger2D::potential_family(*n_potentials),
                    *lambda,
                    *basis,
                )?)
            }
            ModelSpec::Seismic2d { grid, truth, start } => {
                let truth = grid.params_from_velocity(truth.sampler()?);
                let start = grid.params_from_velocity(start.sampler()?);
                Problem::Seismic { model: grid.clone(), truth, start }
            }
        })
    }

    pub fn forward(&self) -> &dyn ForwardMap {
        match self {
            Problem::Elliptic(m) => m,
            Problem::Poisson(m) => m,
            Problem::HelmholtzAnalytic(m) => m,
            Problem::Helmholtz(m) => m,
            Problem::Schrodinger(m) => m,
            Problem::Seismic { model, .. } => model,
        }
    }

    /// The assembled discrete model, when the problem has one.
    pub fn discrete(&self) -> Option<&dyn DiscreteModel> {
        match self {
            Problem::Elliptic(m) => Some(m),
            Problem::Poisson(m) => Some(m),
            Problem::HelmholtzAnalytic(_) => None,
            Problem::Helmholtz(m) => Some(m),
            Problem::Schrodinger(m) => Some(m),
            Problem::Seismic { model, .. } => Some(model),
        }
    }

    pub fn n_params(&self) -> usize {
        self.forward().n_params()
    }

    pub fn default_truth(&self, seed: u64) -> Vec<f64> {
        match self {
            Problem::Elliptic(m) => m.coeff.theta.clone(),
            Problem::Poisson(m) => m.coeff.theta.clone(),
            Problem::HelmholtzAnalytic(_) | Problem::Helmholtz(_) => vec![1.0],
            Problem::Schrodinger(m) => Schrodinger2D::random_coefficients(m.coeff.n_params(), seed),
            Problem::Seismic { truth, .. } => truth.clone(),
        }
    }

    pub fn default_start(&self) -> Option<Vec<f64>> {
        match self {
            Problem::Seismic { start, .. } => Some(start.clone()),
            _ => None,
        }
    }

    /// The wavenumber (Helmholtz) or spectral shift (Schrodinger).
    pub fn spectral_value(&self) -> Option<f64> {
        match self {
            Problem::HelmholtzAnalytic(m) => Some(m.k),
            Problem::Helmholtz(m) => Some(m.k),
            Problem::Schrodinger(m) => Some(m.lambda),
            _ => None,
        }
    }

    pub fn at_spectral(&self, s: f64) -> Result<Self> {
        Ok(match self {
            Problem::HelmholtzAnalytic(m) => Problem::HelmholtzAnalytic(m.with_k(s)),
            Problem::Helmholtz(m) => Problem::Helmholtz(m.with_k(s)),
            Problem::Schrodinger(m) => Problem::Schrodinger(m.with_lambda(s)),
            _ => return Err(Error::Config("this model has no spectral parameter".into())),
        })
    }

    pub fn synthesize(&self, theta: &[f64], how: Synthesis) -> Result<CMat> {
        let unsupported = || Error::Config(format!("synthesis `{how:?}` is not available for this model"));
        match (self, how) {
            (Problem::Elliptic(m), _) => m.synthesize(theta, how),
            (Problem::Poisson(_), Synthesis::Analytic) => Err(unsupported()),
            (Problem::Poisson(m), _) => m.synthesize(theta, how),
            (Problem::HelmholtzAnalytic(m), _) => Ok(m.predict(theta, false)?.data),
            (Problem::Helmholtz(m), Synthesis::Analytic) => {
                Ok(HelmholtzAnalytic::new(m.n_sources, m.k).predict(theta, false)?.data)
            }
            (Problem::Helmholtz(m), Synthesis::Refined) => {
                let fine = Helmholtz1D { cells_per_gap: 2 * m.cells_per_gap, ..m.clone() };
                Ok(fine.predict(theta, false)?.data)
            }
            (Problem::Schrodinger(m), Synthesis::Refined) => {
                let fine = Schrodinger2D::new(
                    m.mesh().refined(),
                    m.centers.clone(),
                    m.source_width,
                    m.coeff.clone(),
                    m.lambda,
                    m.basis,
                    m.inner,
                )?;
                Ok(fine.predict(theta, false)?.data)
            }
            (Problem::Seismic { model, .. }, Synthesis::Refined) => Ok(model.refined().predict(theta, false)?.data),
            (_, Synthesis::Analytic) => Err(unsupported()),
            (p, Synthesis::Consistent) => Ok(p.forward().predict(theta, false)?.data),
        }
    }

    /// Boundary traces `u_i(1)` for the Helmholtz models.
    pub fn traces(&self, theta: &[f64], how: Synthesis) -> Result<Option<Vec<C64>>> {
        Ok(match self {
            Problem::HelmholtzAnalytic(m) => Some(m.traces(theta[0])),
            Problem::Helmholtz(m) if how == Synthesis::Analytic => {
                Some(HelmholtzAnalytic::new(m.n_sources, m.k).traces(theta[0]))
            }
            Problem::Helmholtz(m) if how == Synthesis::Refined => {
                Some(Helmholtz1D { cells_per_gap: 2 * m.cells_per_gap, ..m.clone() }.traces(theta)?)
            }
            Problem::Helmholtz(m) => Some(m.traces(theta)?),
            _ => None,
        })
    }

    /// Mesh description for metadata.
    pub fn mesh_info(&self) -> serde_json::Value {
        use serde_json::json;
        match self {
            Problem::Elliptic(m) => json!({"cells": m.mesh().cells, "domain": [0.0, 1.0]}),
            Problem::Poisson(m) => serde_json::to_value(m.mesh()).unwrap_or_default(),
            Problem::HelmholtzAnalytic(_) => json!({"closed_form": true, "domain": [0.0, 1.0]}),
            Problem::Helmholtz(m) => json!({"cells": m.mesh().cells, "domain": [0.0, 1.0]}),
            Problem::Schrodinger(m) => serde_json::to_value(m.mesh()).unwrap_or_default(),
            Problem::Seismic { model, .. } => json!({
                "nx": model.nx, "nz": model.nz, "h": model.h, "npml": model.npml,
                "parameter_grid": model.param_dims(),
            }),
        }
    }

    pub fn units(&self) -> &'static str {
        match self {
            Problem::Seismic { .. } => "length km, velocity km/s, frequency Hz, parameters s^2/km^2",
            _ => "nondimensional",
        }
    }
}
