use rayon::prelude::*;

use super::{BandedLu, CMat, C64};
use crate::error::{Error, Result};

/// Coordinate-format accumulator; duplicate entries are summed on conversion.
#[derive(Debug, Clone, Default)]
pub struct Triplets {
    nrows: usize,
    ncols: usize,
    entries: Vec<(usize, usize, C64)>,
}

impl Triplets {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Self { nrows, ncols, entries: Vec::new() }
    }

    pub fn push(&mut self, r: usize, c: usize, v: C64) {
        debug_assert!(r < self.nrows && c < self.ncols);
        self.entries.push((r, c, v));
    }

    pub fn push_real(&mut self, r: usize, c: usize, v: f64) {
        self.push(r, c, C64::new(v, 0.0));
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[(usize, usize, C64)] {
        &self.entries
    }

    pub fn to_csr(&self) -> CsrMatrix {
        let mut sorted = self.entries.clone();
        sorted.sort_by_key(|&(r, c, _)| (r, c));
        let mut indptr = vec![0usize; self.nrows + 1];
        let mut indices = Vec::with_capacity(sorted.len());
        let mut values: Vec<C64> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in sorted {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(c);
                values.push(v);
                indptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..self.nrows {
            indptr[r + 1] += indptr[r];
        }
        CsrMatrix { nrows: self.nrows, ncols: self.ncols, indptr, indices, values }
    }
}

/// Compressed sparse row complex matrix.
#[derive(Debug, Clone)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<C64>,
}

impl CsrMatrix {
    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.nrows)
            .flat_map(move |r| (self.indptr[r]..self.indptr[r + 1]).map(move |k| (r, self.indices[k], self.values[k])))
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        let row = &self.indices[self.indptr[r]..self.indptr[r + 1]];
        match row.binary_search(&c) {
            Ok(k) => self.values[self.indptr[r] + k],
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    /// Lower and upper bandwidths.
    pub fn bandwidths(&self) -> (usize, usize) {
        self.iter().fold((0, 0), |(kl, ku), (r, c, _)| if r > c { (kl.max(r - c), ku) } else { (kl, ku.max(c - r)) })
    }

    pub fn to_dense(&self) -> CMat {
        let mut out = CMat::zeros(self.nrows, self.ncols);
        for (r, c, v) in self.iter() {
            out[(r, c)] += v;
        }
        out
    }

    /// `self * x`.
    pub fn mul(&self, x: &CMat) -> Result<CMat> {
        if x.nrows() != self.ncols {
            return Err(Error::DimensionMismatch(format!(
                "sparse product {}x{} times {}x{}",
                self.nrows,
                self.ncols,
                x.nrows(),
                x.ncols()
            )));
        }
        let mut out = CMat::zeros(self.nrows, x.ncols());
        let n = self.nrows;
        if n == 0 {
            return Ok(out);
        }
        out.as_mut_slice().par_chunks_mut(n).zip(x.as_slice().par_chunks(self.ncols.max(1))).for_each(|(dst, src)| {
            for r in 0..n {
                let mut s = C64::new(0.0, 0.0);
                for k in self.indptr[r]..self.indptr[r + 1] {
                    s += self.values[k] * src[self.indices[k]];
                }
                dst[r] = s;
            }
        });
        Ok(out)
    }

    /// `sum_j a_j^T self b_j` over paired columns, without conjugation.
    pub fn bilinear_columns(&self, a: &CMat, b: &CMat) -> C64 {
        let mut s = C64::new(0.0, 0.0);
        for j in 0..a.ncols() {
            for (r, c, v) in self.iter() {
                s += a[(r, j)] * v * b[(c, j)];
            }
        }
        s
    }

    pub fn map_values(&self, f: impl Fn(C64) -> C64) -> Self {
        Self { values: self.values.iter().map(|&v| f(v)).collect(), ..self.clone() }
    }
}

/// A system or inner-product matrix in either sparse or dense storage.
#[derive(Debug, Clone)]
pub enum SysMatrix {
    Sparse(CsrMatrix),
    Dense(CMat),
}

impl SysMatrix {
    pub fn dim(&self) -> usize {
        match self {
            SysMatrix::Sparse(s) => s.nrows(),
            SysMatrix::Dense(d) => d.nrows(),
        }
    }

    pub fn factor(&self) -> Result<BandedLu> {
        match self {
            SysMatrix::Sparse(s) => BandedLu::from_csr(s),
            SysMatrix::Dense(d) => BandedLu::from_dense(d),
        }
    }

    pub fn mul(&self, x: &CMat) -> Result<CMat> {
        match self {
            SysMatrix::Sparse(s) => s.mul(x),
            SysMatrix::Dense(d) => {
                if d.ncols() != x.nrows() {
                    return Err(Error::DimensionMismatch(format!(
                        "product {}x{} times {}x{}",
                        d.nrows(),
                        d.ncols(),
                        x.nrows(),
                        x.ncols()
                    )));
                }
                Ok(d * x)
            }
        }
    }

    /// `sum_j a_j^T self b_j`.
    pub fn bilinear_columns(&self, a: &CMat, b: &CMat) -> C64 {
        match self {
            SysMatrix::Sparse(s) => s.bilinear_columns(a, b),
            SysMatrix::Dense(d) => (a.transpose() * d * b).trace(),
        }
    }

    pub fn to_dense(&self) -> CMat {
        match self {
            SysMatrix::Sparse(s) => s.to_dense(),
            SysMatrix::Dense(d) => d.clone(),
        }
    }
}
