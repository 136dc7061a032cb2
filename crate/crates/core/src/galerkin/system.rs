use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{frobenius, hermitian_defect, symmetry_defect, BandedLu, CMat, RMat, SysMatrix};

/// Whether the inner product used to build `M` depends on the coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InnerProductMode {
    CoefficientIndependent,
    CoefficientDependent,
}

/// Trial space: the full finite-element space or the span of the source
/// representers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisMode {
    Full,
    Span,
}

/// Galerkin matrices on an `n`-dimensional trial space.
///
/// `m[(i,j)] = <p_i, p_j>`, `a[(i,j)] = conj(a_c(p_j, p_i))`,
/// `s[(i,j)] = <p_i, p_j>_{L2}` and `h[k][(i,j)] = <psi_k p_i, p_j>_{L2}`.
#[derive(Debug, Clone)]
pub struct AssembledSystem {
    pub m: CMat,
    pub a: CMat,
    pub s: Option<CMat>,
    pub h: Option<Vec<RMat>>,
    pub inner_product: InnerProductMode,
}

impl AssembledSystem {
    pub fn new(m: CMat, a: CMat, inner_product: InnerProductMode) -> Result<Self> {
        if !m.is_square() || m.shape() != a.shape() {
            return Err(Error::DimensionMismatch(format!(
                "M is {}x{}, A is {}x{}",
                m.nrows(),
                m.ncols(),
                a.nrows(),
                a.ncols()
            )));
        }
        if m.iter().chain(a.iter()).any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::QuadratureFailure("non-finite Galerkin matrix"));
        }
        Ok(Self { m, a, s: None, h: None, inner_product })
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    /// `max |M - M*| / max |M|`.
    pub fn mass_defect(&self) -> f64 {
        hermitian_defect(&self.m)
    }

    /// `max |A - A^T| / max |A|`.
    pub fn operator_symmetry_defect(&self) -> f64 {
        symmetry_defect(&self.a)
    }

    fn lu(&self) -> Result<BandedLu> {
        BandedLu::from_dense(&self.a)
    }

    /// Coefficients `U` with `sum_k a_c(p_k, p_i) U_kj = M_ji`, i.e. `conj(A) U = M^T`.
    pub fn forward_solve(&self) -> Result<CMat> {
        let rhs = self.m.transpose().map(|z| z.conj());
        let x = self.lu()?.solve(&rhs)?;
        Ok(x.map(|z| z.conj()))
    }

    /// Coefficients `W` with `sum_k conj(a_c(p_i, p_k)) W_kj = M_ji`, i.e. `A^T W = M^T`.
    pub fn adjoint_solve(&self) -> Result<CMat> {
        self.lu()?.solve_transpose(&self.m.transpose())
    }

    /// `M A^{-1} M`.
    pub fn predicted_data(&self) -> Result<CMat> {
        Ok(&self.m * self.lu()?.solve(&self.m)?)
    }

    /// `E = D - M A^{-1} M`.
    pub fn residual_matrix(&self, d: &CMat) -> Result<CMat> {
        if d.shape() != self.m.shape() {
            return Err(Error::DimensionMismatch(format!(
                "data is {}x{}, system is {}x{}",
                d.nrows(),
                d.ncols(),
                self.dim(),
                self.dim()
            )));
        }
        Ok(d - self.predicted_data()?)
    }

    /// `G = M A^{-1} M A^{-*} M`.
    pub fn gram_variable(&self) -> Result<CMat> {
        let lu = self.lu()?;
        let x = lu.solve_adjoint(&self.m)?; // A^{-*} M
        let y = lu.solve(&(&self.m * x))?; // A^{-1} M A^{-*} M
        Ok(&self.m * y)
    }
}

/// `G = conj(W)* M conj(W) = W^T M conj(W)` from adjoint state coefficients.
pub fn gram_from_states(w: &CMat, m: &CMat) -> Result<CMat> {
    if w.nrows() != m.nrows() || !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "states have {} rows, inner-product matrix is {}x{}",
            w.nrows(),
            m.nrows(),
            m.ncols()
        )));
    }
    let wc = w.map(|z| z.conj());
    Ok(w.transpose() * m * wc)
}

/// Discrete forward model at one parameter value: operator `K`, real
/// symmetric positive-definite inner product `R` and real loads `F`.
///
/// States are `U = K^{-1} F` and `V = K^{-T} F`; predicted data are
/// `F^T conj(U)` and the Gram matrix is `V* R V`. Derivatives with respect to
/// each parameter are stored when requested.
#[derive(Debug, Clone)]
pub struct DiscreteSystem {
    pub operator: SysMatrix,
    pub inner: SysMatrix,
    pub sources: CMat,
    pub operator_derivs: Vec<SysMatrix>,
    pub inner_derivs: Option<Vec<SysMatrix>>,
    pub source_derivs: Option<Vec<CMat>>,
}

/// Forward and adjoint states of a [`DiscreteSystem`].
#[derive(Debug, Clone)]
pub struct States {
    pub lu: BandedLu,
    pub u: CMat,
    pub v: CMat,
}

impl DiscreteSystem {
    pub fn new(operator: SysMatrix, inner: SysMatrix, sources: CMat) -> Result<Self> {
        let n = operator.dim();
        if inner.dim() != n || sources.nrows() != n {
            return Err(Error::DimensionMismatch(format!(
                "operator {n}, inner product {}, sources {} rows",
                inner.dim(),
                sources.nrows()
            )));
        }
        Ok(Self { operator, inner, sources, operator_derivs: Vec::new(), inner_derivs: None, source_derivs: None })
    }

    /// Galerkin form of an [`AssembledSystem`]: `K = conj(A)`, `R = F = M`.
    pub fn from_galerkin(sys: &AssembledSystem) -> Result<Self> {
        let k = sys.a.map(|z| z.conj());
        Self::new(SysMatrix::Dense(k), SysMatrix::Dense(sys.m.clone()), sys.m.clone())
    }

    pub fn dim(&self) -> usize {
        self.operator.dim()
    }

    pub fn n_sources(&self) -> usize {
        self.sources.ncols()
    }

    pub fn n_params(&self) -> usize {
        self.operator_derivs.len()
    }

    pub fn states(&self) -> Result<States> {
        let lu = self.operator.factor()?;
        let u = lu.solve(&self.sources)?;
        let v = lu.solve_transpose(&self.sources)?;
        Ok(States { lu, u, v })
    }

    pub fn predicted_data(&self, st: &States) -> CMat {
        self.sources.transpose() * st.u.map(|z| z.conj())
    }

    pub fn gram(&self, st: &States) -> Result<CMat> {
        let rv = self.inner.mul(&st.v)?;
        let g = st.v.adjoint() * rv;
        Ok((&g + g.adjoint()).scale(0.5))
    }
}

/// Relative Frobenius distance `|a - b| / |b|`.
pub fn relative_difference(a: &CMat, b: &CMat) -> f64 {
    let denom = frobenius(b);
    if denom == 0.0 {
        frobenius(a)
    } else {
        frobenius(&(a - b)) / denom
    }
}
