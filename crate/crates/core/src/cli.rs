//! Command-line runner: synthesize data, scan landscapes, invert, run the
//! direct method and check data-driven Gram estimates. Every command writes
//! its artifacts plus a `metadata.json` into the output directory.

use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::config::{ExperimentConfig, Problem};
use crate::datadriven::{elliptic_gram_with_tolerance, helmholtz_gram_from_data, schrodinger_gram_from_data, DataGram};
use crate::error::{Error, Result};
use crate::galerkin::relative_difference;
use crate::inversion::{direct_method, invert, landscape_scan, linspace, InversionReport};
use crate::io::{fmt_f64, values_to_csv, vector_to_csv, write_atomic, write_json, write_matrix};
use crate::linalg::{symmetry_defect, CMat};
use crate::models::{add_noise, MeasurementSet};
use crate::objective::{MetricMode, ObjectiveConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Write synthetic data matrices (and boundary traces) as CSV.
    Synthesize,
    /// Objective values along a one-parameter grid.
    Landscape,
    /// L-BFGS inversion for each configured objective.
    Invert,
    /// Linear recovery of affine coefficients from data.
    Direct,
    /// Compare data-driven Gram estimates with the model Gram at the truth.
    Gramcheck,
}

#[derive(Debug, Parser)]
#[command(name = "pdeinv", version, about = "Variable-metric least squares for PDE inverse problems")]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,
    /// Experiment configuration (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; overrides `output_dir` in the configuration.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Random seed; overrides `seed` in the configuration.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads.
    #[arg(long, env = "PDEINV_THREADS")]
    pub threads: Option<usize>,
}

/// Parse arguments, run, and return the process exit code.
pub fn main() -> i32 {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    let mut cfg = ExperimentConfig::load(&cli.config)?;
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::Config("--threads must be positive".into()));
        }
        // Fails only if a pool already exists, in which case it is reused.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    run_command(cli.command, &cfg)
}

pub fn run_command(command: Command, cfg: &ExperimentConfig) -> Result<()> {
    match command {
        Command::Synthesize => cmd_synthesize(cfg),
        Command::Landscape => cmd_landscape(cfg),
        Command::Invert => cmd_invert(cfg),
        Command::Direct => cmd_direct(cfg),
        Command::Gramcheck => cmd_gramcheck(cfg),
    }
}

/// Problem, true parameters and measurements described by `cfg`.
pub struct Setup {
    pub problem: Problem,
    pub truth: Vec<f64>,
    pub measurements: MeasurementSet,
}

impl Setup {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self> {
        let problem = cfg.problem()?;
        let truth = cfg.truth.clone().unwrap_or_else(|| problem.default_truth(cfg.seed));
        if truth.len() != problem.n_params() {
            return Err(Error::Config(format!(
                "truth has {} entries, model has {} parameters",
                truth.len(),
                problem.n_params()
            )));
        }
        let measurements = synthesize_measurements(cfg, &problem, &truth)?;
        Ok(Self { problem, truth, measurements })
    }

    /// Data at the model's own spectral value.
    pub fn data(&self) -> &CMat {
        let m = &self.measurements;
        &m.data[m.data.len() / 2]
    }
}

/// Data at every spectral value of the configured grid, with noise drawn
/// from the configured seed.
pub fn synthesize_measurements(cfg: &ExperimentConfig, problem: &Problem, truth: &[f64]) -> Result<MeasurementSet> {
    let center = problem.spectral_value();
    let values: Vec<Option<f64>> = match (cfg.spectral_step, center) {
        (Some(h), Some(s)) => vec![Some(s - h), Some(s), Some(s + h)],
        (Some(_), None) => return Err(Error::Config(format!("{} has no spectral parameter", cfg.model_kind()))),
        (None, c) => vec![c],
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut data = Vec::new();
    let mut traces = Vec::new();
    for s in &values {
        let p;
        let here = match s {
            Some(s) => {
                p = problem.at_spectral(*s)?;
                &p
            }
            None => problem,
        };
        data.push(add_noise(&here.synthesize(truth, cfg.synthesis)?, cfg.noise, &mut rng)?);
        if let Some(b) = here.traces(truth, cfg.synthesis)? {
            traces.push(b);
        }
    }
    Ok(MeasurementSet {
        spectral: values.iter().map(|s| s.unwrap_or(0.0)).collect(),
        data,
        traces: if traces.is_empty() { None } else { Some(traces) },
    })
}

/// Data-driven Gram estimate appropriate to the model: the transpose rule for
/// the elliptic-type and seismic models, spectral differences otherwise.
pub fn estimate_data_gram(cfg: &ExperimentConfig, setup: &Setup) -> Result<DataGram> {
    let ms = &setup.measurements;
    let need_grid = || Error::MissingInput(format!("{} data Gram needs `spectral_step`", cfg.model_kind()));
    match &setup.problem {
        Problem::Elliptic(_) | Problem::Poisson(_) | Problem::Seismic { .. } => {
            elliptic_gram_with_tolerance(setup.data(), cfg.data_gram.symmetry_tol)
        }
        Problem::HelmholtzAnalytic(_) | Problem::Helmholtz(_) => {
            let h = cfg.spectral_step.ok_or_else(need_grid)?;
            let b = ms.traces.as_ref().ok_or_else(need_grid)?;
            helmholtz_gram_from_data(
                [&ms.data[0], &ms.data[1], &ms.data[2]],
                [&b[0], &b[1], &b[2]],
                ms.spectral[1],
                h,
                setup.truth[0],
            )
        }
        Problem::Schrodinger(_) => {
            let h = cfg.spectral_step.ok_or_else(need_grid)?;
            schrodinger_gram_from_data(Some(&ms.data[0]), &ms.data[1], &ms.data[2], ms.spectral[1], h)
        }
    }
}

/// Objective configurations for every configured objective; the data Gram
/// is estimated once if any of them needs it.
pub fn objective_configs(cfg: &ExperimentConfig, setup: &Setup) -> Result<Vec<ObjectiveConfig>> {
    let gram = if cfg.objectives.iter().any(|o| o.mode == MetricMode::DataDriven) {
        Some(estimate_data_gram(cfg, setup)?.gram)
    } else {
        None
    };
    cfg.objectives.iter().map(|o| o.build(gram.as_ref())).collect()
}

fn metadata(cfg: &ExperimentConfig, setup: &Setup, command: &str, files: &[String]) -> serde_json::Value {
    json!({
        "command": command,
        "model": cfg.model_kind(),
        "seed": cfg.seed,
        "noise": cfg.noise,
        "synthesis": cfg.synthesis,
        "mesh": setup.problem.mesh_info(),
        "units": setup.problem.units(),
        "n_sources": setup.measurements.n_sources(),
        "n_params": setup.problem.n_params(),
        "spectral": setup.measurements.spectral,
        "truth": setup.truth,
        "files": files,
        "version": env!("CARGO_PKG_VERSION"),
    })
}

fn out(cfg: &ExperimentConfig, name: &str) -> PathBuf {
    cfg.output_dir.join(name)
}

fn write_grid(path: &Path, grid: &crate::models::VelocityGrid) -> Result<()> {
    let mut buf = Vec::new();
    grid.write_csv(&mut buf)?;
    write_atomic(path, &buf)
}

fn finish(cfg: &ExperimentConfig, setup: &Setup, command: &str, files: Vec<String>) -> Result<()> {
    write_json(&out(cfg, "metadata.json"), &metadata(cfg, setup, command, &files))
}

pub fn cmd_synthesize(cfg: &ExperimentConfig) -> Result<()> {
    let setup = Setup::new(cfg)?;
    let ms = &setup.measurements;
    let self_adjoint = matches!(setup.problem, Problem::Elliptic(_) | Problem::Poisson(_) | Problem::Schrodinger(_));
    if self_adjoint && cfg.noise == 0.0 {
        for d in &ms.data {
            let defect = symmetry_defect(d);
            if defect > 1e-8 {
                return Err(Error::Invariant(format!("data of a self-adjoint model are asymmetric ({defect:e})")));
            }
        }
    }
    let single = ms.data.len() == 1;
    let mut files = Vec::new();
    for (i, d) in ms.data.iter().enumerate() {
        let name = if single { "data.csv".to_string() } else { format!("data_{i}.csv") };
        write_matrix(&out(cfg, &name), d)?;
        files.push(name);
    }
    if let Some(traces) = &ms.traces {
        for (i, b) in traces.iter().enumerate() {
            let name = if single { "traces.csv".to_string() } else { format!("traces_{i}.csv") };
            write_atomic(&out(cfg, &name), vector_to_csv(b).as_bytes())?;
            files.push(name);
        }
    }
    if let Problem::Seismic { model, .. } = &setup.problem {
        write_grid(&out(cfg, "velocity_true.csv"), &model.velocity_from_params(&setup.truth))?;
        files.push("velocity_true.csv".into());
    }
    finish(cfg, &setup, "synthesize", files)
}

pub fn cmd_landscape(cfg: &ExperimentConfig) -> Result<()> {
    let spec = cfg.landscape.as_ref().ok_or_else(|| Error::Config("landscape needs a [landscape] table".into()))?;
    let setup = Setup::new(cfg)?;
    if setup.problem.n_params() != 1 {
        return Err(Error::Config(format!("landscape needs one parameter, model has {}", setup.problem.n_params())));
    }
    let configs = objective_configs(cfg, &setup)?;
    let grid = linspace(spec.start, spec.end, spec.points);
    let scan = landscape_scan(setup.problem.forward(), setup.data(), &grid, &configs)?;
    for c in &scan.curves {
        if let Some(v) = c.values.iter().find(|v| !(**v >= 0.0)) {
            return Err(Error::Invariant(format!("objective {} ({}, rho {}) is negative or NaN", v, c.mode, c.rho)));
        }
    }
    write_atomic(&out(cfg, "landscape.csv"), scan.to_csv().as_bytes())?;
    finish(cfg, &setup, "landscape", vec!["landscape.csv".into()])
}

#[derive(Serialize)]
struct InvertOutput<'a> {
    label: String,
    parameter_error: f64,
    #[serde(flatten)]
    report: &'a InversionReport,
}

pub fn cmd_invert(cfg: &ExperimentConfig) -> Result<()> {
    let setup = Setup::new(cfg)?;
    let model = setup
        .problem
        .discrete()
        .ok_or_else(|| Error::Config("invert needs a discretized model (set cells_per_gap)".into()))?;
    let start = cfg
        .initial
        .clone()
        .or_else(|| setup.problem.default_start())
        .ok_or_else(|| Error::Config("invert needs `initial` parameters".into()))?;
    if start.len() != setup.problem.n_params() {
        return Err(Error::Config(format!(
            "initial has {} entries, model has {} parameters",
            start.len(),
            setup.problem.n_params()
        )));
    }
    let configs = objective_configs(cfg, &setup)?;
    let tn = setup.truth.iter().map(|t| t * t).sum::<f64>().sqrt();
    let mut summary = String::from("label,mode,rho,data_fit,parameter_error,iterations,evaluations,converged\n");
    let mut files = Vec::new();
    for (spec, oc) in cfg.objectives.iter().zip(&configs) {
        let report = invert(model, setup.data(), oc, &start, &cfg.optimizer)?;
        for w in report.objective_history.windows(2) {
            if w[1] > w[0] + 1e-12 * w[0].abs().max(f64::MIN_POSITIVE) {
                return Err(Error::Invariant(format!("accepted step increased the objective: {} -> {}", w[0], w[1])));
            }
        }
        let diff = report.final_theta.iter().zip(&setup.truth).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let parameter_error = if tn > 0.0 { diff / tn } else { diff };
        let label = spec.label();
        summary.push_str(&format!(
            "{label},{},{},{},{},{},{},{}\n",
            spec.mode,
            spec.rho,
            fmt_f64(report.data_fit),
            fmt_f64(parameter_error),
            report.iterations,
            report.evaluations,
            report.converged
        ));
        let name = format!("report_{label}.json");
        write_json(&out(cfg, &name), &InvertOutput { label: label.clone(), parameter_error, report: &report })?;
        files.push(name);
        let name = format!("coefficients_{label}.csv");
        write_atomic(&out(cfg, &name), values_to_csv(&report.final_theta).as_bytes())?;
        files.push(name);
        if let Problem::Seismic { model, .. } = &setup.problem {
            let name = format!("velocity_{label}.csv");
            write_grid(&out(cfg, &name), &model.velocity_from_params(&report.final_theta))?;
            files.push(name);
        }
    }
    write_atomic(&out(cfg, "summary.csv"), summary.as_bytes())?;
    files.push("summary.csv".into());
    finish(cfg, &setup, "invert", files)
}

pub fn cmd_direct(cfg: &ExperimentConfig) -> Result<()> {
    let setup = Setup::new(cfg)?;
    let Problem::Schrodinger(model) = &setup.problem else {
        return Err(Error::Config("the direct method needs an affine model (schrodinger2d)".into()));
    };
    let sys = model.galerkin(&vec![0.0; model.coeff.n_params()])?;
    let sol = direct_method(setup.data(), &sys, model.lambda, &cfg.direct.selection)?;
    let max_error = sol.coefficients.iter().zip(&setup.truth).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    write_atomic(&out(cfg, "coefficients.csv"), values_to_csv(&sol.coefficients).as_bytes())?;
    write_json(
        &out(cfg, "direct.json"),
        &json!({
            "coefficients": sol.coefficients,
            "truth": setup.truth,
            "max_error": max_error,
            "residual": sol.residual,
            "rank": sol.rank,
            "singular_values": sol.singular_values,
            "selection": cfg.direct.selection,
        }),
    )?;
    finish(cfg, &setup, "direct", vec!["coefficients.csv".into(), "direct.json".into()])
}

#[derive(Debug, Serialize)]
struct GramCheckEntry {
    step: Option<f64>,
    relative_error: f64,
    clipped: usize,
    raw_min_eigenvalue: f64,
    raw_defect: f64,
}

pub fn cmd_gramcheck(cfg: &ExperimentConfig) -> Result<()> {
    let setup = Setup::new(cfg)?;
    let spectral = setup.problem.spectral_value().is_some();
    let steps: Vec<Option<f64>> = if !spectral {
        vec![None]
    } else if !cfg.data_gram.steps.is_empty() {
        cfg.data_gram.steps.iter().map(|&h| Some(h)).collect()
    } else {
        vec![Some(
            cfg.spectral_step
                .ok_or_else(|| Error::MissingInput("gramcheck needs `spectral_step` or `data_gram.steps`".into()))?,
        )]
    };
    let g = setup
        .problem
        .forward()
        .predict(&setup.truth, true)?
        .gram
        .ok_or_else(|| Error::MissingInput("model provides no Gram matrix".into()))?;
    let mut entries = Vec::new();
    for step in &steps {
        let est = match step {
            None => estimate_data_gram(cfg, &setup)?,
            Some(h) => {
                let c = ExperimentConfig { spectral_step: Some(*h), ..cfg.clone() };
                estimate_data_gram(&c, &Setup::new(&c)?)?
            }
        };
        entries.push(GramCheckEntry {
            step: *step,
            relative_error: relative_difference(&est.gram, &g),
            clipped: est.clipped,
            raw_min_eigenvalue: est.raw_min_eigenvalue,
            raw_defect: est.raw_defect,
        });
    }
    let ratios: Vec<f64> = entries.windows(2).map(|w| w[0].relative_error / w[1].relative_error).collect();
    write_json(
        &out(cfg, "gramcheck.json"),
        &json!({ "model": cfg.model_kind(), "entries": entries, "ratios": ratios }),
    )?;
    finish(cfg, &setup, "gramcheck", vec!["gramcheck.json".into()])
}
