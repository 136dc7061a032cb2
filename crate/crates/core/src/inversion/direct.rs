use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::galerkin::AssembledSystem;
use crate::linalg::{lu_solve, CMat};

/// Which entries of `A(c) = M D^{-1} M` enter the least-squares system.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EquationSelection {
    /// Column `j` (zero-based), rows `0..n_params`: square when the data are real.
    Column { j: usize },
    /// All `n^2` entries.
    Full,
    /// Explicit `(i, j)` pairs.
    Entries { pairs: Vec<(usize, usize)> },
}

impl Default for EquationSelection {
    fn default() -> Self {
        Self::Column { j: 0 }
    }
}

/// Relative singular-value cutoff for the data matrix and the least-squares rank.
pub const RANK_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct DirectSolution {
    pub coefficients: Vec<f64>,
    /// Relative residual of the stacked least-squares system.
    pub residual: f64,
    pub rank: usize,
    pub singular_values: Vec<f64>,
}

/// Recover the coefficients of an affinely parameterized operator
/// `A(c) = M - lambda S + sum_k c_k H_k` from data through
/// `sum_k c_k H_k = M D^{-1} M - M + lambda S`, stacking real and imaginary
/// parts of the selected entries into one real least-squares problem.
pub fn direct_method(
    d: &CMat,
    sys: &AssembledSystem,
    lambda: f64,
    select: &EquationSelection,
) -> Result<DirectSolution> {
    let n = sys.dim();
    if d.shape() != (n, n) {
        return Err(Error::DimensionMismatch(format!("data is {}x{}, system is {n}x{n}", d.nrows(), d.ncols())));
    }
    let h = sys.h.as_ref().ok_or_else(|| Error::MissingInput("direct method needs the H matrices".into()))?;
    let s = sys.s.as_ref().ok_or_else(|| Error::MissingInput("direct method needs the L2 Gram matrix S".into()))?;
    let np = h.len();
    let sv = d.clone().svd(false, false).singular_values;
    let smax = sv.max();
    if !(smax > 0.0) || sv.min() <= RANK_TOL * smax {
        return Err(Error::SingularData);
    }
    let x = lu_solve(d, &sys.m).map_err(|_| Error::SingularData)?;
    let rhs = &sys.m * x - &sys.m + s.scale(lambda);
    let pairs: Vec<(usize, usize)> = match select {
        EquationSelection::Column { j } => {
            if *j >= n || np > n {
                return Err(Error::Config(format!("column {j} with {np} rows does not fit {n} sources")));
            }
            (0..np).map(|i| (i, *j)).collect()
        }
        EquationSelection::Full => (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).collect(),
        EquationSelection::Entries { pairs } => {
            if pairs.iter().any(|&(i, j)| i >= n || j >= n) {
                return Err(Error::Config("equation index out of range".into()));
            }
            pairs.clone()
        }
    };
    // Imaginary rows vanish identically for real data; keep them only when informative.
    let complex = pairs.iter().any(|&(i, j)| rhs[(i, j)].im != 0.0);
    let rows = if complex { 2 * pairs.len() } else { pairs.len() };
    let mut a = DMatrix::<f64>::zeros(rows, np);
    let mut b = DVector::<f64>::zeros(rows);
    for (r, &(i, j)) in pairs.iter().enumerate() {
        for k in 0..np {
            a[(r, k)] = h[k][(i, j)];
        }
        b[r] = rhs[(i, j)].re;
        if complex {
            b[pairs.len() + r] = rhs[(i, j)].im;
        }
    }
    let svd = a.clone().svd(true, true);
    let amax = svd.singular_values.max();
    let cutoff = RANK_TOL * amax * rows.max(np) as f64;
    let rank = svd.singular_values.iter().filter(|&&v| v > cutoff).count();
    if rank < np {
        return Err(Error::RankDeficient { rank, expected: np });
    }
    let c = svd.solve(&b, cutoff).map_err(|e| Error::Parse(e.to_string()))?;
    let resid = (&a * &c - &b).norm() / b.norm().max(f64::MIN_POSITIVE);
    Ok(DirectSolution {
        coefficients: c.iter().copied().collect(),
        residual: resid,
        rank,
        singular_values: svd.singular_values.iter().copied().collect(),
    })
}
