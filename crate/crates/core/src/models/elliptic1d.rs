use crate::error::Result;
use crate::galerkin::{
    assemble_1d, AssembledSystem, Boundary1D, CoefficientField, DiscreteSystem, Form, InnerProductMode, Mesh1D,
};
use crate::linalg::{CMat, SysMatrix, C64};
use crate::quadrature::gauss_on;

use super::{check_theta, DiscreteModel, Synthesis};

/// `-(c u')' = delta(x - x_i)` on `(0, 1)` with homogeneous Dirichlet ends and
/// point sources at `x_i = i / (n + 1)`, discretized with hat functions on a
/// mesh whose nodes include every source.
#[derive(Debug, Clone)]
pub struct Elliptic1D {
    pub n_sources: usize,
    pub cells_per_gap: usize,
    pub coeff: CoefficientField,
    pub inner: InnerProductMode,
}

impl Elliptic1D {
    pub fn new(n_sources: usize, cells_per_gap: usize, coeff: CoefficientField, inner: InnerProductMode) -> Self {
        Self { n_sources, cells_per_gap, coeff, inner }
    }

    pub fn mesh(&self) -> Mesh1D {
        Mesh1D::new((self.n_sources + 1) * self.cells_per_gap, Boundary1D::Both)
    }

    pub fn positions(&self) -> Vec<f64> {
        (1..=self.n_sources).map(|i| i as f64 / (self.n_sources + 1) as f64).collect()
    }

    pub fn refined(&self) -> Self {
        Self { cells_per_gap: 2 * self.cells_per_gap, ..self.clone() }
    }

    fn sources(&self, mesh: &Mesh1D) -> CMat {
        let mut f = CMat::zeros(mesh.n_dofs(), self.n_sources);
        for i in 0..self.n_sources {
            let node = (i + 1) * self.cells_per_gap;
            f[(mesh.dof(node).unwrap(), i)] = C64::new(1.0, 0.0);
        }
        f
    }

    /// Full finite-element Galerkin system: `M` is the inner-product matrix
    /// and `A` the stiffness matrix on the hat basis.
    pub fn galerkin(&self, theta: &[f64]) -> Result<AssembledSystem> {
        let sys = self.system(theta, false)?;
        AssembledSystem::new(sys.inner.to_dense(), sys.operator.to_dense(), self.inner)
    }

    /// Exact data `d_ij = G(x_i, x_j)` from the Green's function
    /// `S(min)(L - S(max)) / L` with `S(x) = int_0^x 1/c`.
    pub fn analytic_data(&self, theta: &[f64]) -> Result<CMat> {
        check_theta(theta, self.coeff.n_params())?;
        let field = self.coeff.with_theta(theta)?;
        let mesh = self.mesh();
        let sub = 4;
        let fine = mesh.cells * sub;
        let mut cumulative = vec![0.0; fine + 1];
        for cell in 0..fine {
            let (a, b) = (cell as f64 / fine as f64, (cell + 1) as f64 / fine as f64);
            let mut s = 0.0;
            for (x, w) in gauss_on(a, b, 8) {
                s += w / field.eval_checked(&[x])?;
            }
            cumulative[cell + 1] = cumulative[cell] + s;
        }
        let total = cumulative[fine];
        let s_at: Vec<f64> = (1..=self.n_sources).map(|i| cumulative[i * self.cells_per_gap * sub]).collect();
        Ok(CMat::from_fn(self.n_sources, self.n_sources, |i, j| {
            let (lo, hi) = if s_at[i] <= s_at[j] { (s_at[i], s_at[j]) } else { (s_at[j], s_at[i]) };
            C64::new(lo * (total - hi) / total, 0.0)
        }))
    }

    pub fn synthesize(&self, theta: &[f64], how: Synthesis) -> Result<CMat> {
        match how {
            Synthesis::Consistent => Ok(super::ForwardMap::predict(self, theta, false)?.data),
            Synthesis::Refined => Ok(super::ForwardMap::predict(&self.refined(), theta, false)?.data),
            Synthesis::Analytic => self.analytic_data(theta),
        }
    }
}

impl DiscreteModel for Elliptic1D {
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
        let k = assemble_1d(&mesh, Form::Stiffness, &|x| field.eval_checked(&[x]))?.to_csr();
        let r = match self.inner {
            InnerProductMode::CoefficientDependent => k.clone(),
            InnerProductMode::CoefficientIndependent => assemble_1d(&mesh, Form::Stiffness, &|_| Ok(1.0))?.to_csr(),
        };
        let mut sys = DiscreteSystem::new(SysMatrix::Sparse(k), SysMatrix::Sparse(r), self.sources(&mesh))?;
        if derivs {
            let dk = (0..field.n_params())
                .map(|p| {
                    Ok(SysMatrix::Sparse(
                        assemble_1d(&mesh, Form::Stiffness, &|x| Ok(field.derivative(p, &[x])))?.to_csr(),
                    ))
                })
                .collect::<Result<Vec<_>>>()?;
            if self.inner == InnerProductMode::CoefficientDependent {
                sys.inner_derivs = Some(dk.clone());
            }
            sys.operator_derivs = dk;
        }
        Ok(sys)
    }
}
