use crate::error::Result;
use crate::galerkin::{
    AssembledSystem, BasisMode, CoefficientField, DiscreteSystem, InnerProductMode, Mesh2D, ScalarField, SpanBasis,
};
use crate::linalg::{CMat, SysMatrix};

use super::fem2d::Fem2D;
use super::{check_theta, ring_centers, DiscreteModel, Synthesis};

/// `-div(c grad u) = f_i` on the unit square with homogeneous Dirichlet
/// boundary and Gaussian sources `exp(-20 |x - x_i|^2)`.
#[derive(Debug, Clone)]
pub struct Poisson2D {
    pub coeff: CoefficientField,
    pub inner: InnerProductMode,
    pub basis: BasisMode,
    pub centers: Vec<[f64; 2]>,
    pub source_width: f64,
    fem: Fem2D,
    /// Representers for the coefficient-independent span basis.
    span: Option<(SpanBasis, CMat)>,
}

impl Poisson2D {
    pub const DEFAULT_MESH: usize = 64;
    pub const SOURCE_WIDTH: f64 = 20.0;

    pub fn new(
        mesh: Mesh2D,
        centers: Vec<[f64; 2]>,
        coeff: CoefficientField,
        inner: InnerProductMode,
        basis: BasisMode,
    ) -> Result<Self> {
        let fem = Fem2D::new(mesh, &centers, Self::SOURCE_WIDTH)?;
        let span = if basis == BasisMode::Span && inner == InnerProductMode::CoefficientIndependent {
            let sb = SpanBasis::new(&SysMatrix::Sparse(fem.stiffness.clone()), &fem.loads)?;
            let m = fem.loads.transpose() * &sb.p;
            SpanBasis::check_independent(&m)?;
            Some((sb, m))
        } else {
            None
        };
        Ok(Self { coeff, inner, basis, centers, source_width: Self::SOURCE_WIDTH, fem, span })
    }

    /// Ring of `n` sources at margin 0.1 on an `mesh_n x mesh_n` grid.
    pub fn ring(
        mesh_n: usize,
        n: usize,
        coeff: CoefficientField,
        inner: InnerProductMode,
        basis: BasisMode,
    ) -> Result<Self> {
        Self::new(Mesh2D::unit_square(mesh_n), ring_centers(n, 0.1), coeff, inner, basis)
    }

    /// `sin^2 x1 + sin^2 x2 + (1 + 100 theta) sin^2(10 x1) + sin^2(10 x2)`.
    pub fn landscape_family() -> CoefficientField {
        CoefficientField::new(
            ScalarField::PoissonBase,
            vec![ScalarField::SinSquaredAxis { k: 10.0, axis: 0, scale: 100.0 }],
            vec![0.0],
        )
    }

    pub fn mesh(&self) -> Mesh2D {
        self.fem.mesh
    }

    pub fn refined(&self) -> Result<Self> {
        Self::new(self.fem.mesh.refined(), self.centers.clone(), self.coeff.clone(), self.inner, self.basis)
    }

    pub fn synthesize(&self, theta: &[f64], how: Synthesis) -> Result<CMat> {
        match how {
            Synthesis::Refined => Ok(super::ForwardMap::predict(&self.refined()?, theta, false)?.data),
            _ => Ok(super::ForwardMap::predict(self, theta, false)?.data),
        }
    }

    /// Span-of-sources Galerkin matrices `M` and `A(c)`.
    pub fn galerkin(&self, theta: &[f64]) -> Result<AssembledSystem> {
        let sys = if self.basis == BasisMode::Span {
            self.system(theta, false)?
        } else {
            Self::new(self.fem.mesh, self.centers.clone(), self.coeff.clone(), self.inner, BasisMode::Span)?
                .system(theta, false)?
        };
        AssembledSystem::new(sys.inner.to_dense(), sys.operator.to_dense(), self.inner)
    }
}

impl DiscreteModel for Poisson2D {
    fn n_params(&self) -> usize {
        self.coeff.n_params()
    }

    fn n_sources(&self) -> usize {
        self.centers.len()
    }

    fn system(&self, theta: &[f64], derivs: bool) -> Result<DiscreteSystem> {
        check_theta(theta, self.coeff.n_params())?;
        let field = self.coeff.with_theta(theta)?;
        let sc = SysMatrix::Sparse(self.fem.stiffness(&|x| field.eval_checked(x))?);
        let dsc = if derivs {
            (0..field.n_params())
                .map(|k| Ok(SysMatrix::Sparse(self.fem.stiffness(&|x| Ok(field.derivative(k, x)))?)))
                .collect::<Result<Vec<_>>>()?
        } else {
            Vec::new()
        };
        match (self.basis, self.inner) {
            (BasisMode::Full, inner) => {
                let dependent = inner == InnerProductMode::CoefficientDependent;
                let r = if dependent { sc.clone() } else { SysMatrix::Sparse(self.fem.stiffness.clone()) };
                let mut sys = DiscreteSystem::new(sc, r, self.fem.loads.clone())?;
                if dependent && derivs {
                    sys.inner_derivs = Some(dsc.clone());
                }
                sys.operator_derivs = dsc;
                Ok(sys)
            }
            (BasisMode::Span, InnerProductMode::CoefficientIndependent) => {
                let (sb, m) = self.span.as_ref().expect("span basis built at construction");
                let k = sb.project(&sc)?;
                let mut sys = DiscreteSystem::new(SysMatrix::Dense(k), SysMatrix::Dense(m.clone()), m.clone())?;
                sys.operator_derivs =
                    dsc.iter().map(|d| Ok(SysMatrix::Dense(sb.project(d)?))).collect::<Result<Vec<_>>>()?;
                Ok(sys)
            }
            (BasisMode::Span, InnerProductMode::CoefficientDependent) => {
                // Representers depend on c: M(c) = F^T S_c^{-1} F serves as operator,
                // inner product and loads at once.
                let sb = SpanBasis::new(&sc, &self.fem.loads)?;
                let m = self.fem.loads.transpose() * &sb.p;
                let mut sys = DiscreteSystem::new(SysMatrix::Dense(m.clone()), SysMatrix::Dense(m.clone()), m)?;
                if derivs {
                    let dm = dsc.iter().map(|d| Ok(-sb.project(d)?)).collect::<Result<Vec<CMat>>>()?;
                    sys.operator_derivs = dm.iter().cloned().map(SysMatrix::Dense).collect();
                    sys.inner_derivs = Some(dm.iter().cloned().map(SysMatrix::Dense).collect());
                    sys.source_derivs = Some(dm);
                }
                Ok(sys)
            }
        }
    }
}
