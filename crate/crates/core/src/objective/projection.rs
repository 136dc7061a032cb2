use crate::error::{Error, Result};
use crate::galerkin::{DiscreteSystem, States};
use crate::linalg::{hermitian_part, real_half_trace, CMat, HermitianFactorization, SysMatrix, C64};

/// Breakdown threshold for Gram-Schmidt, relative to the input vector norm.
pub const ORTHONORMALIZE_TOL: f64 = 1e-10;

fn inner(r: &SysMatrix, a: &CMat, b: &CMat) -> Result<C64> {
    Ok((a.adjoint() * r.mul(b)?)[(0, 0)])
}

fn col(m: &CMat, j: usize) -> CMat {
    m.columns(j, 1).into_owned()
}

/// Modified Gram-Schmidt of the columns of `p` in the `R` inner product.
/// Returns `T` such that the columns of `p T` are orthonormal.
pub fn orthonormalize(r: &SysMatrix, p: &CMat) -> Result<CMat> {
    let n = p.ncols();
    let mut q = p.clone();
    let mut t = CMat::identity(n, n);
    for j in 0..n {
        let mut v = col(&q, j);
        let start = inner(r, &v, &v)?.re.sqrt();
        let mut tj = col(&t, j);
        for i in 0..j {
            let qi = col(&q, i);
            let c = inner(r, &qi, &v)?;
            v -= &qi * c;
            tj -= col(&t, i) * c;
        }
        let norm = inner(r, &v, &v)?.re.sqrt();
        if !(norm > ORTHONORMALIZE_TOL * start) {
            return Err(Error::NotOrthonormalizable { index: j, norm });
        }
        q.set_column(j, &v.unscale(norm).column(0));
        t.set_column(j, &tj.unscale(norm).column(0));
    }
    Ok(t)
}

/// Result of projecting the solution residual on the source representers.
#[derive(Debug, Clone)]
pub struct SolutionProjection {
    /// `1/2 sum_j |Pi (u_j - u_true_j)|^2` with orthonormalized representers.
    pub value: f64,
    /// Change of source basis that orthonormalizes the representers.
    pub transform: CMat,
}

/// Projection of the solution residual onto the span of the orthonormalized
/// Riesz representers `p_i = R^{-1} f_i`. The states are recombined with the
/// same transform, so the value equals the conventional misfit of the
/// transformed data `T^T E T`.
pub fn projection_solution_residual(
    sys: &DiscreteSystem,
    states: &States,
    u_true: &CMat,
) -> Result<SolutionProjection> {
    if u_true.shape() != states.u.shape() {
        return Err(Error::DimensionMismatch(format!(
            "true states are {}x{}, model states {}x{}",
            u_true.nrows(),
            u_true.ncols(),
            states.u.nrows(),
            states.u.ncols()
        )));
    }
    let p = sys.inner.factor()?.solve(&sys.sources)?;
    let t = orthonormalize(&sys.inner, &p)?;
    let q = &p * &t;
    let delta = (&states.u - u_true) * &t;
    let coeffs = q.adjoint() * sys.inner.mul(&delta)?;
    let value = 0.5 * coeffs.iter().map(|z| z.norm_sqr()).sum::<f64>();
    Ok(SolutionProjection { value, transform: t })
}

/// Projection of the Riesz representer of the PDE residual
/// `K u_true_j - f_j` onto the span of the adjoint states `conj(V)`.
pub fn projection_pde_residual(sys: &DiscreteSystem, states: &States, u_true: &CMat) -> Result<f64> {
    if u_true.shape() != states.v.shape() {
        return Err(Error::DimensionMismatch(format!(
            "true states are {}x{}, adjoint states {}x{}",
            u_true.nrows(),
            u_true.ncols(),
            states.v.nrows(),
            states.v.ncols()
        )));
    }
    let r_lu = sys.inner.factor()?;
    let residual = sys.operator.mul(u_true)? - &sys.sources;
    let s = r_lu.solve(&residual)?;
    let w = states.v.map(|z| z.conj());
    let rw = sys.inner.mul(&w)?;
    let b = rw.adjoint() * &s;
    let gw = hermitian_part(&(w.adjoint() * &rw));
    let x = HermitianFactorization::new(&gw)?.solve(&b)?;
    real_half_trace(&b, &x)
}
