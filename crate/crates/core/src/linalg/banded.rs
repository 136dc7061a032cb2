use rayon::prelude::*;

use super::{CMat, CsrMatrix, C64};
use crate::error::{Error, Result};

/// LU factorization with partial pivoting of a banded square matrix.
///
/// Row `r` stores columns `r - kl ..= r + kl + ku`; the extra `kl`
/// super-diagonals absorb fill-in from row interchanges. Multipliers are
/// kept in place and never permuted after the step that produced them.
#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<C64>,
    piv: Vec<usize>,
}

impl BandedLu {
    fn empty(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self { n, kl, ku, width, data: vec![C64::new(0.0, 0.0); n * width], piv: (0..n).collect() }
    }

    #[inline]
    fn idx(&self, r: usize, c: usize) -> usize {
        debug_assert!(c + self.kl >= r && c + self.kl - r < self.width);
        r * self.width + c + self.kl - r
    }

    pub fn from_dense(a: &CMat) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::DimensionMismatch(format!("LU of a {}x{} matrix", a.nrows(), a.ncols())));
        }
        let n = a.nrows();
        let k = n.saturating_sub(1);
        let mut lu = Self::empty(n, k, k);
        for r in 0..n {
            for c in 0..n {
                let i = lu.idx(r, c);
                lu.data[i] = a[(r, c)];
            }
        }
        lu.factor()?;
        Ok(lu)
    }

    pub fn from_csr(a: &CsrMatrix) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::DimensionMismatch(format!("LU of a {}x{} matrix", a.nrows(), a.ncols())));
        }
        let (kl, ku) = a.bandwidths();
        let mut lu = Self::empty(a.nrows(), kl, ku);
        for (r, c, v) in a.iter() {
            let i = lu.idx(r, c);
            lu.data[i] += v;
        }
        lu.factor()?;
        Ok(lu)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    fn factor(&mut self) -> Result<()> {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = self.data[self.idx(k, k)].norm();
            for r in (k + 1)..=last {
                let v = self.data[self.idx(r, k)].norm();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if !(best > 0.0) || !best.is_finite() {
                return Err(Error::SingularSystem(k));
            }
            self.piv[k] = p;
            let cend = (k + kl + ku).min(n - 1);
            if p != k {
                for c in k..=cend {
                    let (a, b) = (self.idx(k, c), self.idx(p, c));
                    self.data.swap(a, b);
                }
            }
            let pivot = self.data[self.idx(k, k)];
            for r in (k + 1)..=last {
                let ir = self.idx(r, k);
                if self.data[ir] == C64::new(0.0, 0.0) {
                    continue;
                }
                let l = self.data[ir] / pivot;
                self.data[ir] = l;
                for c in (k + 1)..=cend {
                    let u = self.data[self.idx(k, c)];
                    let i = self.idx(r, c);
                    self.data[i] -= l * u;
                }
            }
        }
        Ok(())
    }

    fn solve_in_place(&self, b: &mut [C64]) {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        for k in 0..n {
            let p = self.piv[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            for r in (k + 1)..=(k + kl).min(n - 1) {
                b[r] -= self.data[self.idx(r, k)] * bk;
            }
        }
        for k in (0..n).rev() {
            let mut s = b[k];
            for c in (k + 1)..=(k + kl + ku).min(n - 1) {
                s -= self.data[self.idx(k, c)] * b[c];
            }
            b[k] = s / self.data[self.idx(k, k)];
        }
    }

    fn solve_transpose_in_place(&self, b: &mut [C64]) {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        for k in 0..n {
            let mut s = b[k];
            for r in k.saturating_sub(kl + ku)..k {
                s -= self.data[self.idx(r, k)] * b[r];
            }
            b[k] = s / self.data[self.idx(k, k)];
        }
        for k in (0..n).rev() {
            let mut s = b[k];
            for r in (k + 1)..=(k + kl).min(n - 1) {
                s -= self.data[self.idx(r, k)] * b[r];
            }
            b[k] = s;
            let p = self.piv[k];
            if p != k {
                b.swap(k, p);
            }
        }
    }

    fn check_rhs(&self, b: &CMat) -> Result<()> {
        if b.nrows() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "right-hand side has {} rows, system has {}",
                b.nrows(),
                self.n
            )));
        }
        Ok(())
    }

    fn solve_columns(&self, b: &CMat, transpose: bool) -> Result<CMat> {
        self.check_rhs(b)?;
        let mut x = b.clone();
        let n = self.n;
        if n == 0 {
            return Ok(x);
        }
        x.as_mut_slice().par_chunks_mut(n).for_each(|col| {
            if transpose {
                self.solve_transpose_in_place(col)
            } else {
                self.solve_in_place(col)
            }
        });
        Ok(x)
    }

    /// Solve `A X = B`.
    pub fn solve(&self, b: &CMat) -> Result<CMat> {
        self.solve_columns(b, false)
    }

    /// Solve `A^T X = B` (plain transpose, no conjugation).
    pub fn solve_transpose(&self, b: &CMat) -> Result<CMat> {
        self.solve_columns(b, true)
    }

    /// Solve `A* X = B`.
    pub fn solve_adjoint(&self, b: &CMat) -> Result<CMat> {
        let x = self.solve_transpose(&b.map(|z| z.conj()))?;
        Ok(x.map(|z| z.conj()))
    }
}
