use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::galerkin::{
    AssembledSystem, BasisMode, CoefficientField, DiscreteSystem, InnerProductMode, Mesh2D, ScalarField, SpanBasis,
};
use crate::linalg::{CMat, CsrMatrix, SysMatrix};

use super::fem2d::Fem2D;
use super::{check_theta, ring_centers, DiscreteModel};

/// `-lap u + c u - lambda u = f_i` on the unit square with homogeneous
/// Dirichlet boundary, Gaussian sources `exp(-a |x - x_i|^2)` and potential
/// `c = sum_k c_k psi_k`.
///
/// The span basis uses representers under `int grad u . grad v`. In the full
/// space the inner product is `int grad u . grad v + c u v` when coefficient
/// dependent and `int grad u . grad v` otherwise.
#[derive(Debug, Clone)]
pub struct Schrodinger2D {
    pub coeff: CoefficientField,
    pub lambda: f64,
    pub basis: BasisMode,
    pub inner: InnerProductMode,
    pub centers: Vec<[f64; 2]>,
    pub source_width: f64,
    fem: Fem2D,
    unit_mass: CsrMatrix,
    span: Option<(SpanBasis, CMat)>,
}

impl Schrodinger2D {
    pub fn new(
        mesh: Mesh2D,
        centers: Vec<[f64; 2]>,
        source_width: f64,
        coeff: CoefficientField,
        lambda: f64,
        basis: BasisMode,
        inner: InnerProductMode,
    ) -> Result<Self> {
        let fem = Fem2D::new(mesh, &centers, source_width)?;
        let unit_mass = fem.mass(&|_| Ok(1.0))?;
        let span = if basis == BasisMode::Span {
            let sb = SpanBasis::new(&SysMatrix::Sparse(fem.stiffness.clone()), &fem.loads)?;
            let m = fem.loads.transpose() * &sb.p;
            Some((sb, m))
        } else {
            None
        };
        Ok(Self { coeff, lambda, basis, inner, centers, source_width, fem, unit_mass, span })
    }

    /// Ring of `n` sources at margin 0.1 on an `mesh_n x mesh_n` grid.
    pub fn ring(
        mesh_n: usize,
        n: usize,
        source_width: f64,
        coeff: CoefficientField,
        lambda: f64,
        basis: BasisMode,
    ) -> Result<Self> {
        Self::new(
            Mesh2D::unit_square(mesh_n),
            ring_centers(n, 0.1),
            source_width,
            coeff,
            lambda,
            basis,
            InnerProductMode::CoefficientDependent,
        )
    }

    /// `psi_k = sin^2(k x1) + sin^2(k x2)` for `k = 1..=n`, zero base.
    pub fn potential_family(n: usize) -> CoefficientField {
        CoefficientField::new(
            ScalarField::constant(0.0),
            (1..=n).map(|k| ScalarField::SinSquared { k: k as f64, scale: 1.0 }).collect(),
            vec![0.0; n],
        )
    }

    /// Reference coefficients drawn uniformly from `[0, 1)`.
    pub fn random_coefficients(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.random_range(0.0..1.0)).collect()
    }

    pub fn with_lambda(&self, lambda: f64) -> Self {
        Self { lambda, ..self.clone() }
    }

    pub fn mesh(&self) -> Mesh2D {
        self.fem.mesh
    }

    fn potential_mass(&self, field: &CoefficientField) -> Result<CsrMatrix> {
        self.fem.mass(&|x| field.eval_finite(x))
    }

    /// Span-of-sources Galerkin system with `S` and `H` attached.
    pub fn galerkin(&self, theta: &[f64]) -> Result<AssembledSystem> {
        let owned;
        let this = if self.span.is_some() {
            self
        } else {
            owned = Self::new(
                self.fem.mesh,
                self.centers.clone(),
                self.source_width,
                self.coeff.clone(),
                self.lambda,
                BasisMode::Span,
                self.inner,
            )?;
            &owned
        };
        let (sb, m) = this.span.as_ref().expect("span basis");
        let sys = this.system(theta, false)?;
        let mut out =
            AssembledSystem::new(m.clone(), sys.operator.to_dense(), InnerProductMode::CoefficientIndependent)?;
        out.s = Some(sb.project(&SysMatrix::Sparse(this.unit_mass.clone()))?);
        let h = this
            .coeff
            .basis
            .iter()
            .map(|psi| Ok(sb.project(&SysMatrix::Sparse(this.fem.mass(&|x| Ok(psi.eval(x)))?))?.map(|z| z.re)))
            .collect::<Result<Vec<_>>>()?;
        out.h = Some(h);
        Ok(out)
    }
}

impl DiscreteModel for Schrodinger2D {
    fn n_params(&self) -> usize {
        self.coeff.n_params()
    }

    fn n_sources(&self) -> usize {
        self.centers.len()
    }

    fn system(&self, theta: &[f64], derivs: bool) -> Result<DiscreteSystem> {
        check_theta(theta, self.coeff.n_params())?;
        let field = self.coeff.with_theta(theta)?;
        let mc = self.potential_mass(&field)?;
        let dmc = if derivs {
            (0..field.n_params()).map(|k| self.fem.mass(&|x| Ok(field.derivative(k, x)))).collect::<Result<Vec<_>>>()?
        } else {
            Vec::new()
        };
        match &self.span {
            Some((sb, m)) => {
                let a = m + sb.project(&SysMatrix::Sparse(mc))?
                    - sb.project(&SysMatrix::Sparse(self.unit_mass.clone()))?.scale(self.lambda);
                let mut sys = DiscreteSystem::new(SysMatrix::Dense(a), SysMatrix::Dense(m.clone()), m.clone())?;
                sys.operator_derivs = dmc
                    .into_iter()
                    .map(|d| Ok(SysMatrix::Dense(sb.project(&SysMatrix::Sparse(d))?)))
                    .collect::<Result<Vec<_>>>()?;
                Ok(sys)
            }
            None => {
                let mut r = self.fem.stiffness.clone();
                if self.inner == InnerProductMode::CoefficientDependent {
                    r = add(&r, &mc, 1.0);
                }
                let k = add(&add(&self.fem.stiffness, &mc, 1.0), &self.unit_mass, -self.lambda);
                let mut sys = DiscreteSystem::new(SysMatrix::Sparse(k), SysMatrix::Sparse(r), self.fem.loads.clone())?;
                let dk: Vec<SysMatrix> = dmc.into_iter().map(SysMatrix::Sparse).collect();
                if derivs && self.inner == InnerProductMode::CoefficientDependent {
                    sys.inner_derivs = Some(dk.clone());
                }
                sys.operator_derivs = dk;
                Ok(sys)
            }
        }
    }
}

fn add(a: &CsrMatrix, b: &CsrMatrix, scale: f64) -> CsrMatrix {
    let mut t = crate::linalg::Triplets::new(a.nrows(), a.ncols());
    for (r, c, v) in a.iter() {
        t.push(r, c, v);
    }
    for (r, c, v) in b.iter() {
        t.push(r, c, v * scale);
    }
    t.to_csr()
}
