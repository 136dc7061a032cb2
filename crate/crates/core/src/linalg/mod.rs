//! Dense and banded complex linear algebra shared by every other module.
//!
//! Hermitian positive-definite matrices (Gram matrices, `G + rho I`, mass
//! matrices) go through [`HermitianFactorization`]; general square systems
//! such as Helmholtz operators go through the pivoted [`BandedLu`], which
//! also covers dense matrices by taking the full bandwidth.

mod banded;
mod sparse;

pub use banded::BandedLu;
pub use sparse::{CsrMatrix, SysMatrix, Triplets};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
pub use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub type CMat = DMatrix<C64>;
pub type RMat = DMatrix<f64>;

/// Relative tolerance used to decide whether a matrix is Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-12;

pub fn max_abs(x: &CMat) -> f64 {
    x.iter().fold(0.0, |m, z| m.max(z.norm()))
}

pub fn frobenius(x: &CMat) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `max |X - X*| / max |X|`, zero for the zero matrix.
pub fn hermitian_defect(x: &CMat) -> f64 {
    if !x.is_square() {
        return f64::INFINITY;
    }
    let scale = max_abs(x);
    if scale == 0.0 {
        return 0.0;
    }
    let n = x.nrows();
    let mut defect: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            defect = defect.max((x[(i, j)] - x[(j, i)].conj()).norm());
        }
    }
    defect / scale
}

/// Same measure as [`hermitian_defect`] but for plain (non-conjugated) symmetry.
pub fn symmetry_defect(x: &CMat) -> f64 {
    if !x.is_square() {
        return f64::INFINITY;
    }
    let scale = max_abs(x);
    if scale == 0.0 {
        return 0.0;
    }
    let n = x.nrows();
    let mut defect: f64 = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            defect = defect.max((x[(i, j)] - x[(j, i)]).norm());
        }
    }
    defect / scale
}

/// `(X + X*) / 2`.
pub fn hermitian_part(x: &CMat) -> CMat {
    (x + x.adjoint()).scale(0.5)
}

pub fn to_complex(x: &RMat) -> CMat {
    x.map(|v| C64::new(v, 0.0))
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// Cholesky factorization `X = L L*` of a Hermitian positive-definite matrix.
#[derive(Debug, Clone)]
pub struct HermitianFactorization {
    l: CMat,
}

impl HermitianFactorization {
    pub fn new(x: &CMat) -> Result<Self> {
        Self::with_tolerance(x, HERMITIAN_TOL)
    }

    /// Factor `x`, rejecting it when its Hermitian defect exceeds `tol`.
    /// Only the lower triangle is read once the check passes.
    pub fn with_tolerance(x: &CMat, tol: f64) -> Result<Self> {
        if !x.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "Hermitian factorization of a {}x{} matrix",
                x.nrows(),
                x.ncols()
            )));
        }
        let defect = hermitian_defect(x);
        if defect > tol {
            return Err(Error::NotHermitian { defect, tol });
        }
        let n = x.nrows();
        let mut l = CMat::zeros(n, n);
        for j in 0..n {
            let mut d = x[(j, j)].re;
            for k in 0..j {
                d -= l[(j, k)].norm_sqr();
            }
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::NotPositiveDefinite { index: j, pivot: d });
            }
            let djj = d.sqrt();
            l[(j, j)] = C64::new(djj, 0.0);
            for i in (j + 1)..n {
                let mut s = x[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)].conj();
                }
                l[(i, j)] = s / djj;
            }
        }
        Ok(Self { l })
    }

    pub fn dim(&self) -> usize {
        self.l.nrows()
    }

    pub fn lower(&self) -> &CMat {
        &self.l
    }

    pub fn solve(&self, b: &CMat) -> Result<CMat> {
        let n = self.dim();
        if b.nrows() != n {
            return Err(Error::DimensionMismatch(format!("right-hand side has {} rows, factor is {n}x{n}", b.nrows())));
        }
        let mut y = b.clone();
        for col in 0..y.ncols() {
            // L y = b
            for i in 0..n {
                let mut s = y[(i, col)];
                for k in 0..i {
                    s -= self.l[(i, k)] * y[(k, col)];
                }
                y[(i, col)] = s / self.l[(i, i)];
            }
            // L* x = y
            for i in (0..n).rev() {
                let mut s = y[(i, col)];
                for k in (i + 1)..n {
                    s -= self.l[(k, i)].conj() * y[(k, col)];
                }
                y[(i, col)] = s / self.l[(i, i)];
            }
        }
        Ok(y)
    }

    pub fn solve_vec(&self, b: &DVector<C64>) -> Result<DVector<C64>> {
        let m = CMat::from_column_slice(b.len(), 1, b.as_slice());
        let x = self.solve(&m)?;
        Ok(DVector::from_column_slice(x.as_slice()))
    }

    /// `log det X`.
    pub fn log_det(&self) -> f64 {
        2.0 * (0..self.dim()).map(|i| self.l[(i, i)].re.ln()).sum::<f64>()
    }
}

/// Solve `X Y = B` for Hermitian positive-definite `X`.
pub fn hermitian_solve(x: &CMat, b: &CMat) -> Result<CMat> {
    HermitianFactorization::new(x)?.solve(b)
}

/// `trace(A* B)` without forming the product.
pub fn trace_adjoint_product(a: &CMat, b: &CMat) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// `1/2 trace(E* W^{-1} E)` for Hermitian positive-definite `W`.
///
/// The trace is real for Hermitian `W`; an imaginary residue larger than
/// `1e-12` of the magnitude is reported as a Hermitian defect.
pub fn weighted_trace_form(e: &CMat, w: &CMat) -> Result<f64> {
    if w.nrows() != e.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "weight is {}x{}, residual has {} rows",
            w.nrows(),
            w.ncols(),
            e.nrows()
        )));
    }
    let f = HermitianFactorization::new(w)?;
    let y = f.solve(e)?;
    real_half_trace(e, &y)
}

/// `1/2 trace(E* Y)` checked for a vanishing imaginary part.
pub(crate) fn real_half_trace(e: &CMat, y: &CMat) -> Result<f64> {
    let t = trace_adjoint_product(e, y);
    let scale = frobenius(e) * frobenius(y);
    if t.im.abs() > 1e-12 * scale.max(f64::MIN_POSITIVE) && t.im.abs() > 1e-300 {
        return Err(Error::NotHermitian { defect: t.im.abs() / scale, tol: 1e-12 });
    }
    Ok(0.5 * t.re)
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
pub fn hermitian_eigen(x: &CMat) -> (Vec<f64>, CMat) {
    let eig = SymmetricEigen::new(hermitian_part(x));
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMat::zeros(x.nrows(), x.ncols());
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

pub fn hermitian_eigenvalues(x: &CMat) -> Vec<f64> {
    hermitian_eigen(x).0
}

/// Clip negative eigenvalues of the Hermitian part of `x` to zero.
/// Returns the floored matrix and the number of eigenvalues clipped.
pub fn floor_psd(x: &CMat) -> (CMat, usize) {
    let (values, vectors) = hermitian_eigen(x);
    let clipped = values.iter().filter(|&&v| v < 0.0).count();
    if clipped == 0 {
        return (hermitian_part(x), 0);
    }
    let d =
        CMat::from_diagonal(&DVector::from_iterator(values.len(), values.iter().map(|&v| C64::new(v.max(0.0), 0.0))));
    let out = &vectors * d * vectors.adjoint();
    (hermitian_part(&out), clipped)
}

/// General square solve `X Y = B` by partially pivoted LU.
pub fn lu_solve(x: &CMat, b: &CMat) -> Result<CMat> {
    BandedLu::from_dense(x)?.solve(b)
}

/// `X^{-1}` by partially pivoted LU.
pub fn inverse(x: &CMat) -> Result<CMat> {
    lu_solve(x, &identity(x.nrows()))
}
