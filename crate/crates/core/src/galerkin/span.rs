use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigenvalues, CMat, SysMatrix};

/// Span-of-sources basis: `p_i = R^{-1} f_i` on a full finite-element space.
#[derive(Debug, Clone)]
pub struct SpanBasis {
    /// Nodal coefficients of each `p_i`, one column per source.
    pub p: CMat,
}

impl SpanBasis {
    /// Riesz representers of the load functionals `f_i` under the
    /// inner-product matrix `riesz`.
    pub fn new(riesz: &SysMatrix, loads: &CMat) -> Result<Self> {
        let p = riesz.factor()?.solve(loads)?;
        Ok(Self { p })
    }

    pub fn dim(&self) -> usize {
        self.p.ncols()
    }

    /// `P^T X P` for a full-space matrix `X`.
    pub fn project(&self, x: &SysMatrix) -> Result<CMat> {
        Ok(self.p.transpose() * x.mul(&self.p)?)
    }

    /// Check that `M` is numerically positive definite.
    pub fn check_independent(m: &CMat) -> Result<()> {
        let ev = hermitian_eigenvalues(m);
        let (lo, hi) = (ev[0], *ev.last().unwrap());
        if !(lo > 1e-12 * hi) {
            return Err(Error::NotPositiveDefinite { index: 0, pivot: lo });
        }
        Ok(())
    }
}
