//! Gram matrices at the true coefficient estimated from measurements alone.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{floor_psd, frobenius, hermitian_eigenvalues, hermitian_part, symmetry_defect, CMat, C64};

/// Relative asymmetry tolerated in elliptic data before the transpose rule is refused.
pub const ELLIPTIC_SYMMETRY_TOL: f64 = 1e-8;
/// Largest relative Hermitian defect accepted from a finite-difference estimate.
pub const STEP_DEFECT_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Difference {
    Central,
    Forward,
}

/// How a [`DataGram`] was obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum Provenance {
    Elliptic,
    Helmholtz {
        k: f64,
        step: f64,
        c_boundary: f64,
    },
    Schrodinger {
        lambda: f64,
        step: f64,
        difference: Difference,
    },
    /// Loaded from a file; the original provenance is not tracked.
    Imported,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataGram {
    /// Hermitian, eigenvalue-floored estimate.
    pub gram: CMat,
    pub provenance: Provenance,
    /// Relative Hermitian defect of the raw estimate.
    pub raw_defect: f64,
    /// Smallest eigenvalue of the Hermitian part before flooring.
    pub raw_min_eigenvalue: f64,
    /// Number of eigenvalues clipped to zero.
    pub clipped: usize,
}

impl DataGram {
    fn finish(raw: CMat, provenance: Provenance) -> Self {
        let norm = frobenius(&raw);
        let raw_defect = if norm == 0.0 { 0.0 } else { frobenius(&(&raw - raw.adjoint())) / norm };
        let herm = hermitian_part(&raw);
        let raw_min_eigenvalue = hermitian_eigenvalues(&herm).first().copied().unwrap_or(0.0);
        let (gram, clipped) = floor_psd(&herm);
        if clipped > 0 {
            log::info!("data Gram: clipped {clipped} negative eigenvalues (min {raw_min_eigenvalue:e})");
        }
        Self { gram, provenance, raw_defect, raw_min_eigenvalue, clipped }
    }

    /// Wrap an externally supplied matrix; it is symmetrized and floored.
    pub fn imported(g: CMat) -> Self {
        Self::finish(g, Provenance::Imported)
    }

    fn check_step(self) -> Result<Self> {
        if self.raw_defect > STEP_DEFECT_TOL {
            return Err(Error::StepTooLarge { defect: self.raw_defect, tol: STEP_DEFECT_TOL });
        }
        Ok(self)
    }
}

fn same_shape(mats: &[&CMat]) -> Result<usize> {
    let n = mats[0].nrows();
    if mats.iter().any(|m| m.nrows() != n || m.ncols() != n) {
        return Err(Error::DimensionMismatch("data matrices must be square and of equal size".into()));
    }
    Ok(n)
}

/// Transpose rule for elliptic problems whose inner product is the energy
/// form: `G = D^T`.
pub fn elliptic_gram_from_data(d: &CMat) -> Result<DataGram> {
    elliptic_gram_with_tolerance(d, ELLIPTIC_SYMMETRY_TOL)
}

pub fn elliptic_gram_with_tolerance(d: &CMat, tol: f64) -> Result<DataGram> {
    same_shape(&[d])?;
    let defect = symmetry_defect(d);
    if defect > tol {
        return Err(Error::AsymmetricData { defect, tol });
    }
    Ok(DataGram::finish(d.transpose(), Provenance::Elliptic))
}

/// Helmholtz estimate from data and boundary traces at `k - h`, `k`, `k + h`:
/// `g_ij = Re(d_ij + k/2 d'_ij) + i k^2 / (2 c(1)) (conj(b'_i) b_j - conj(b_i) b'_j)`
/// with central differences in `k`.
pub fn helmholtz_gram_from_data(d: [&CMat; 3], b: [&[C64]; 3], k: f64, h: f64, c_boundary: f64) -> Result<DataGram> {
    let n = same_shape(&d)?;
    if b.iter().any(|t| t.len() != n) {
        return Err(Error::DimensionMismatch(format!("boundary traces must have {n} entries")));
    }
    if !(h > 0.0) || !(c_boundary > 0.0) {
        return Err(Error::Config("step and boundary speed must be positive".into()));
    }
    let dd = (d[2] - d[0]).unscale(2.0 * h);
    let db: Vec<C64> = (0..n).map(|i| (b[2][i] - b[0][i]) / (2.0 * h)).collect();
    let bc = b[1];
    let scale = C64::new(0.0, k * k / (2.0 * c_boundary));
    let raw = CMat::from_fn(n, n, |i, j| {
        let re = (d[1][(i, j)] + dd[(i, j)] * (0.5 * k)).re;
        C64::new(re, 0.0) + scale * (db[i].conj() * bc[j] - bc[i].conj() * db[j])
    });
    DataGram::finish(raw, Provenance::Helmholtz { k, step: h, c_boundary }).check_step()
}

/// Schrodinger estimate `g = d + lambda d'` with `d'` from data at
/// `lambda +- h` (central) or `lambda, lambda + h` (forward).
pub fn schrodinger_gram_from_data(
    d_minus: Option<&CMat>,
    d: &CMat,
    d_plus: &CMat,
    lambda: f64,
    h: f64,
) -> Result<DataGram> {
    if !(h > 0.0) {
        return Err(Error::Config("step must be positive".into()));
    }
    let (deriv, difference) = match d_minus {
        Some(dm) => {
            same_shape(&[d, d_plus, dm])?;
            ((d_plus - dm).unscale(2.0 * h), Difference::Central)
        }
        None => {
            same_shape(&[d, d_plus])?;
            ((d_plus - d).unscale(h), Difference::Forward)
        }
    };
    let raw = d + deriv.scale(lambda);
    DataGram::finish(raw, Provenance::Schrodinger { lambda, step: h, difference }).check_step()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::galerkin::{relative_difference, CoefficientField, InnerProductMode};
    use crate::linalg::identity;
    use crate::models::{Elliptic1D, ForwardMap, HelmholtzAnalytic};

    #[test]
    fn identity_data() {
        let g = elliptic_gram_from_data(&identity(4)).unwrap();
        assert_eq!(g.gram, identity(4));
        assert_eq!(g.clipped, 0);
    }

    #[test]
    fn asymmetric_data_rejected() {
        let mut d = identity(3);
        d[(0, 1)] = C64::new(0.1, 0.0);
        assert!(matches!(elliptic_gram_from_data(&d), Err(Error::AsymmetricData { .. })));
    }

    #[test]
    fn elliptic_transpose_rule_matches_model_gram() {
        let model = Elliptic1D::new(3, 16, CoefficientField::constant(1.0), InnerProductMode::CoefficientDependent);
        let p = model.predict(&[], true).unwrap();
        let g = elliptic_gram_from_data(&p.data).unwrap();
        assert!(relative_difference(&g.gram, &p.gram.unwrap()) <= 1e-6);
    }

    #[test]
    fn helmholtz_boundary_term_vanishes_without_traces() {
        let d = HelmholtzAnalytic::new(3, 10.0);
        let zero = vec![C64::new(0.0, 0.0); 3];
        let (a, b, c) = (d.data(0.99), d.data(1.0), d.data(1.01));
        let g = helmholtz_gram_from_data([&a, &b, &c], [&zero, &zero, &zero], 10.0, 0.1, 1.0).unwrap();
        let expect = CMat::from_fn(3, 3, |i, j| C64::new((b[(i, j)] + (c[(i, j)] - a[(i, j)]) * 25.0).re, 0.0));
        let (floored, _) = floor_psd(&hermitian_part(&expect));
        assert!(relative_difference(&g.gram, &floored) < 1e-14);
    }

    #[test]
    fn schrodinger_at_zero_shift_is_data() {
        let d = CMat::from_fn(3, 3, |i, j| C64::new(1.0 / (1.0 + i as f64 + j as f64), 0.0));
        let other = d.scale(2.0);
        let g = schrodinger_gram_from_data(None, &d, &other, 0.0, 0.1).unwrap();
        assert!(relative_difference(&g.gram, &d) < 1e-14);
    }

    #[test]
    fn zero_residual_gives_zero_objective() {
        use crate::objective::{objective_rho, objective_zero};
        let g = DataGram::imported(CMat::from_fn(3, 3, |i, j| C64::new(if i == j { 2.0 } else { 0.5 }, 0.0)));
        let e = CMat::zeros(3, 3);
        assert_eq!(objective_rho(&e, &g.gram, 1.0).unwrap(), 0.0);
        assert_eq!(objective_zero(&e, &g.gram).unwrap(), 0.0);
    }
}
