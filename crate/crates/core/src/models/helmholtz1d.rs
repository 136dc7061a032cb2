use crate::error::{Error, Result};
use crate::galerkin::{assemble_1d, Boundary1D, CoefficientField, DiscreteSystem, Form, Mesh1D, ScalarField};
use crate::linalg::{CMat, SysMatrix, Triplets, C64};
use crate::quadrature::gauss_on;

use super::{check_theta, DiscreteModel, ForwardMap, Prediction};

/// Closed-form solution of `-u'' - (k/c)^2 u = delta(x - x_i)` on `(0, 1)` with
/// `u(0) = 0` and `u'(1) - i (k/c) u(1) = 0`, for constant `c`.
pub fn helmholtz1d_analytic(x: f64, xi: f64, k: f64, c: f64) -> C64 {
    let kappa = k / c;
    if x <= xi {
        C64::from_polar(1.0, kappa * xi) * ((kappa * x).sin() / kappa)
    } else {
        C64::from_polar(1.0, kappa * x) * ((kappa * xi).sin() / kappa)
    }
}

fn analytic_derivative(x: f64, xi: f64, kappa: f64) -> C64 {
    if x <= xi {
        C64::from_polar(1.0, kappa * xi) * (kappa * x).cos()
    } else {
        C64::from_polar(1.0, kappa * x) * C64::new(0.0, (kappa * xi).sin())
    }
}

fn positions(n: usize) -> Vec<f64> {
    (1..=n).map(|i| i as f64 / (n + 1) as f64).collect()
}

/// Constant sound speed model evaluated in closed form; the single parameter
/// is the speed `c`.
#[derive(Debug, Clone)]
pub struct HelmholtzAnalytic {
    pub n_sources: usize,
    pub k: f64,
}

impl HelmholtzAnalytic {
    pub fn new(n_sources: usize, k: f64) -> Self {
        Self { n_sources, k }
    }

    pub fn with_k(&self, k: f64) -> Self {
        Self { k, ..self.clone() }
    }

    pub fn positions(&self) -> Vec<f64> {
        positions(self.n_sources)
    }

    fn speed(theta: &[f64]) -> Result<f64> {
        check_theta(theta, 1)?;
        if theta[0] <= 0.0 {
            return Err(Error::CoefficientNotPositive { value: theta[0], location: vec![] });
        }
        Ok(theta[0])
    }

    /// `d_ij = conj(u_j(x_i))`.
    pub fn data(&self, c: f64) -> CMat {
        let x = self.positions();
        CMat::from_fn(self.n_sources, self.n_sources, |i, j| helmholtz1d_analytic(x[i], x[j], self.k, c).conj())
    }

    /// Boundary traces `b_i = u_i(1)`.
    pub fn traces(&self, c: f64) -> Vec<C64> {
        self.positions().iter().map(|&xi| helmholtz1d_analytic(1.0, xi, self.k, c)).collect()
    }

    /// `g_ij = int_0^1 conj(u_i') u_j'`.
    pub fn gram(&self, c: f64) -> CMat {
        let x = self.positions();
        let kappa = self.k / c;
        let mut breaks = vec![0.0];
        breaks.extend(&x);
        breaks.push(1.0);
        let mut rule = Vec::new();
        for w in breaks.windows(2) {
            for piece in 0..4 {
                let a = w[0] + (w[1] - w[0]) * piece as f64 / 4.0;
                let b = w[0] + (w[1] - w[0]) * (piece + 1) as f64 / 4.0;
                rule.extend(gauss_on(a, b, 16));
            }
        }
        let n = self.n_sources;
        let mut g = CMat::zeros(n, n);
        for (xq, wq) in rule {
            let du: Vec<C64> = x.iter().map(|&xi| analytic_derivative(xq, xi, kappa)).collect();
            for i in 0..n {
                for j in 0..n {
                    g[(i, j)] += du[i].conj() * du[j] * wq;
                }
            }
        }
        g
    }
}

impl ForwardMap for HelmholtzAnalytic {
    fn n_params(&self) -> usize {
        1
    }

    fn predict(&self, theta: &[f64], gram: bool) -> Result<Prediction> {
        let c = Self::speed(theta)?;
        Ok(Prediction { data: self.data(c), gram: if gram { Some(self.gram(c)) } else { None } })
    }
}

/// Finite-element discretization of the same problem with a variable speed
/// `c(x; theta)`: `K = S - k^2 M_{c^-2} - i (k / c(1)) e_N e_N^T`, inner
/// product `int u' v'`, point sources at mesh nodes.
#[derive(Debug, Clone)]
pub struct Helmholtz1D {
    pub n_sources: usize,
    pub cells_per_gap: usize,
    pub k: f64,
    pub coeff: CoefficientField,
}

impl Helmholtz1D {
    pub fn new(n_sources: usize, cells_per_gap: usize, k: f64, coeff: CoefficientField) -> Self {
        Self { n_sources, cells_per_gap, k, coeff }
    }

    /// Single-parameter constant speed `c = theta`.
    pub fn constant_speed(n_sources: usize, cells_per_gap: usize, k: f64) -> Self {
        Self::new(
            n_sources,
            cells_per_gap,
            k,
            CoefficientField::new(ScalarField::constant(0.0), vec![ScalarField::constant(1.0)], vec![1.0]),
        )
    }

    pub fn with_k(&self, k: f64) -> Self {
        Self { k, ..self.clone() }
    }

    pub fn mesh(&self) -> Mesh1D {
        Mesh1D::new((self.n_sources + 1) * self.cells_per_gap, Boundary1D::LeftOnly)
    }

    pub fn positions(&self) -> Vec<f64> {
        positions(self.n_sources)
    }

    /// Forward states evaluated at `x = 1`.
    pub fn traces(&self, theta: &[f64]) -> Result<Vec<C64>> {
        let sys = self.system(theta, false)?;
        let st = sys.states()?;
        let last = self.mesh().n_dofs() - 1;
        Ok((0..self.n_sources).map(|i| st.u[(last, i)]).collect())
    }
}

impl DiscreteModel for Helmholtz1D {
    fn n_params(&self) -> usize {
        self.coeff.n_params()
    }

    fn n_sources(&self) -> usize {
        self.n_sources
    }

    fn system(&self, theta: &[f64], derivs: bool) -> Result<DiscreteSystem> {
        check_theta(theta, self.coeff.n_params())?;
        let field = self.coeff.with_theta(theta)?;
        let mesh = self.mesh();
        let n = mesh.n_dofs();
        let k2 = self.k * self.k;
        let c1 = field.eval_checked(&[1.0])?;
        let stiff = assemble_1d(&mesh, Form::Stiffness, &|_| Ok(1.0))?;
        let mass = assemble_1d(&mesh, Form::Mass, &|x| Ok(field.eval_checked(&[x])?.powi(-2)))?;
        let mut t = Triplets::new(n, n);
        for &(r, c, v) in stiff.entries() {
            t.push(r, c, v);
        }
        for &(r, c, v) in mass.entries() {
            t.push(r, c, -v * k2);
        }
        t.push(n - 1, n - 1, C64::new(0.0, -self.k / c1));
        let mut f = CMat::zeros(n, self.n_sources);
        for i in 0..self.n_sources {
            f[(mesh.dof((i + 1) * self.cells_per_gap).unwrap(), i)] = C64::new(1.0, 0.0);
        }
        let mut sys = DiscreteSystem::new(SysMatrix::Sparse(t.to_csr()), SysMatrix::Sparse(stiff.to_csr()), f)?;
        if derivs {
            sys.operator_derivs = (0..field.n_params())
                .map(|p| {
                    let dm = assemble_1d(&mesh, Form::Mass, &|x| {
                        Ok(2.0 * k2 * field.derivative(p, &[x]) * field.eval_checked(&[x])?.powi(-3))
                    })?;
                    let mut t = Triplets::new(n, n);
                    for &(r, c, v) in dm.entries() {
                        t.push(r, c, v);
                    }
                    t.push(n - 1, n - 1, C64::new(0.0, self.k * field.derivative(p, &[1.0]) / (c1 * c1)));
                    Ok(SysMatrix::Sparse(t.to_csr()))
                })
                .collect::<Result<Vec<_>>>()?;
        }
        Ok(sys)
    }
}
