use pdeinv::galerkin::{BasisMode, CoefficientField, InnerProductMode, ScalarField};
use pdeinv::models::seismic2d::{layered_velocity, linear_velocity, Seismic2D, SeismicInner, TopBoundary};
use pdeinv::models::{DiscreteModel, Elliptic1D, ForwardMap, Helmholtz1D, Poisson2D, Schrodinger2D};
use pdeinv::objective::{evaluate, gradient, MetricMode, ObjectiveConfig, Penalty};

fn objective(model: &dyn DiscreteModel, data: &pdeinv::linalg::CMat, cfg: &ObjectiveConfig, theta: &[f64]) -> f64 {
    evaluate(&model.system(theta, false).unwrap(), data, cfg).unwrap().value
}

/// Central differences against the adjoint gradient, along each coordinate
/// and along one mixed direction.
fn check(model: &dyn DiscreteModel, truth: &[f64], theta: &[f64], cfg: &ObjectiveConfig, tol: f64) {
    let data = model.predict(truth, false).unwrap().data;
    let sys = model.system(theta, true).unwrap();
    let ev = evaluate(&sys, &data, cfg).unwrap();
    let g = gradient(&sys, cfg, &ev).unwrap();
    // A frozen metric differentiates the objective with the weight held at `theta`.
    let fixed;
    let cfg_fd = if cfg.mode == MetricMode::Variable && !cfg.differentiate_gram {
        fixed = ObjectiveConfig::data_driven(cfg.rho, ev.gram.clone().unwrap()).unwrap();
        &fixed
    } else {
        cfg
    };
    assert_eq!(g.len(), theta.len());
    let scale = g.iter().map(|x| x.abs()).fold(0.0, f64::max);
    assert!(scale > 0.0);
    let mut dirs: Vec<Vec<f64>> =
        (0..theta.len().min(6)).map(|k| (0..theta.len()).map(|j| if j == k { 1.0 } else { 0.0 }).collect()).collect();
    dirs.push((0..theta.len()).map(|j| ((j * 7 + 3) % 5) as f64 - 2.0).collect());
    for dir in dirs {
        let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
        let step = 1e-6 * (1.0 + theta.iter().map(|t| t.abs()).fold(0.0, f64::max));
        let plus: Vec<f64> = theta.iter().zip(&dir).map(|(t, d)| t + step * d / norm).collect();
        let minus: Vec<f64> = theta.iter().zip(&dir).map(|(t, d)| t - step * d / norm).collect();
        let fd = (objective(model, &data, cfg_fd, &plus) - objective(model, &data, cfg_fd, &minus)) / (2.0 * step);
        let an: f64 = g.iter().zip(&dir).map(|(a, d)| a * d / norm).sum();
        assert!(
            (fd - an).abs() <= tol * scale,
            "mode {:?} rho {}: fd {fd:e} adjoint {an:e} scale {scale:e}",
            cfg.mode,
            cfg.rho
        );
    }
}

fn configs(model: &dyn DiscreteModel, truth: &[f64]) -> Vec<ObjectiveConfig> {
    let g = model.predict(truth, true).unwrap().gram.unwrap();
    let scale = g.norm();
    vec![
        ObjectiveConfig::conventional(),
        ObjectiveConfig::variable(Penalty::Finite(0.05 * scale)),
        ObjectiveConfig::variable(Penalty::Finite(3.0 * scale)),
        ObjectiveConfig::variable(Penalty::ZeroLimit),
        ObjectiveConfig::variable(Penalty::Finite(0.5 * scale)).frozen(),
        ObjectiveConfig::data_driven(Penalty::Finite(0.2 * scale), g).unwrap(),
    ]
}

#[test]
fn elliptic_1d_gradients() {
    let coeff = CoefficientField::new(ScalarField::constant(1.0), ScalarField::cells_1d(4), vec![0.0; 4]);
    let truth = [0.3, -0.2, 0.5, 0.1];
    let theta = [0.0, 0.1, 0.2, -0.1];
    for inner in [InnerProductMode::CoefficientIndependent, InnerProductMode::CoefficientDependent] {
        let model = Elliptic1D::new(5, 8, coeff.clone(), inner);
        for cfg in configs(&model, &truth) {
            check(&model, &truth, &theta, &cfg, 1e-5);
        }
    }
}

#[test]
fn poisson_2d_gradients_in_every_basis() {
    let coeff = CoefficientField::new(
        ScalarField::constant(1.0),
        vec![
            ScalarField::SinSquaredAxis { k: 2.0, axis: 0, scale: 1.0 },
            ScalarField::SinSquaredAxis { k: 3.0, axis: 1, scale: 1.0 },
        ],
        vec![0.0; 2],
    );
    let truth = [0.4, 0.2];
    let theta = [0.1, 0.5];
    for (inner, basis) in [
        (InnerProductMode::CoefficientIndependent, BasisMode::Full),
        (InnerProductMode::CoefficientDependent, BasisMode::Full),
        (InnerProductMode::CoefficientIndependent, BasisMode::Span),
        (InnerProductMode::CoefficientDependent, BasisMode::Span),
    ] {
        let model = Poisson2D::ring(10, 6, coeff.clone(), inner, basis).unwrap();
        for cfg in configs(&model, &truth) {
            check(&model, &truth, &theta, &cfg, 1e-5);
        }
    }
}

#[test]
fn schrodinger_2d_gradients() {
    let coeff = Schrodinger2D::potential_family(3);
    let truth = [0.7, 0.2, 0.5];
    let theta = [0.3, 0.4, 0.1];
    for basis in [BasisMode::Full, BasisMode::Span] {
        let model = Schrodinger2D::ring(10, 6, 3.0, coeff.clone(), 2.0, basis).unwrap();
        for cfg in configs(&model, &truth) {
            check(&model, &truth, &theta, &cfg, 1e-5);
        }
    }
}

#[test]
fn helmholtz_1d_gradients() {
    let coeff = CoefficientField::new(ScalarField::constant(1.0), ScalarField::cells_1d(3), vec![0.0; 3]);
    let model = Helmholtz1D::new(4, 16, 9.0, coeff);
    let truth = [0.1, -0.1, 0.2];
    let theta = [0.0, 0.05, 0.1];
    for cfg in configs(&model, &truth) {
        check(&model, &truth, &theta, &cfg, 1e-5);
    }
}

#[test]
fn seismic_gradients() {
    let model = Seismic2D {
        nx: 16,
        nz: 8,
        h: 0.1,
        npml: 6,
        frequency: 2.0,
        top: TopBoundary::Free,
        inner: SeismicInner::Laplacian,
        stride: 4,
        sources: (0..4).map(|i| [0.2 + 0.4 * i as f64, 0.2]).collect(),
        source_width: 0.1,
        velocity_bounds: (1.0, 5.0),
        pml_velocity: 2.0,
    };
    let truth = model.params_from_velocity(layered_velocity);
    let theta = model.params_from_velocity(linear_velocity(1.6, 3.0, 0.8));
    for cfg in configs(&model, &truth) {
        check(&model, &truth, &theta, &cfg, 1e-5);
    }
}
