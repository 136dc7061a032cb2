//! CSV and JSON artifacts. Floats are written with 17 significant digits so
//! every value round-trips exactly; files are written to a temporary name and
//! renamed into place.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{CMat, C64};

/// Full round-trip formatting of a float.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Write `contents` to `path` through a temporary sibling and a rename.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// Matrix as rows `i,j,re,im` (zero-based indices) under that header.
pub fn matrix_to_csv(m: &CMat) -> String {
    let mut out = String::from("i,j,re,im\n");
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let z = m[(i, j)];
            out.push_str(&format!("{i},{j},{},{}\n", fmt_f64(z.re), fmt_f64(z.im)));
        }
    }
    out
}

pub fn matrix_from_csv<R: BufRead>(r: R) -> Result<CMat> {
    let mut entries = Vec::new();
    let (mut rows, mut cols) = (0, 0);
    for (n, line) in r.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if n == 0 {
            if line != "i,j,re,im" {
                return Err(Error::Parse(format!("unexpected matrix header `{line}`")));
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != 4 {
            return Err(Error::Parse(format!("line {}: expected 4 fields", n + 1)));
        }
        let idx = |s: &str| s.parse::<usize>().map_err(|e| Error::Parse(format!("line {}: {e}", n + 1)));
        let val = |s: &str| s.parse::<f64>().map_err(|e| Error::Parse(format!("line {}: {e}", n + 1)));
        let (i, j) = (idx(f[0])?, idx(f[1])?);
        rows = rows.max(i + 1);
        cols = cols.max(j + 1);
        entries.push((i, j, C64::new(val(f[2])?, val(f[3])?)));
    }
    if entries.len() != rows * cols {
        return Err(Error::Parse(format!("{} entries for a {rows}x{cols} matrix", entries.len())));
    }
    let mut m = CMat::zeros(rows, cols);
    for (i, j, z) in entries {
        m[(i, j)] = z;
    }
    Ok(m)
}

pub fn write_matrix(path: &Path, m: &CMat) -> Result<()> {
    write_atomic(path, matrix_to_csv(m).as_bytes())
}

pub fn read_matrix(path: &Path) -> Result<CMat> {
    matrix_from_csv(BufReader::new(fs::File::open(path)?))
}

/// Complex vector as rows `i,re,im`.
pub fn vector_to_csv(v: &[C64]) -> String {
    let mut out = String::from("i,re,im\n");
    for (i, z) in v.iter().enumerate() {
        out.push_str(&format!("{i},{},{}\n", fmt_f64(z.re), fmt_f64(z.im)));
    }
    out
}

/// Real vector as rows `k,value`.
pub fn values_to_csv(v: &[f64]) -> String {
    let mut out = String::from("k,value\n");
    for (k, x) in v.iter().enumerate() {
        out.push_str(&format!("{k},{}\n", fmt_f64(*x)));
    }
    out
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Parse(e.to_string()))?;
    s.push('\n');
    write_atomic(path, s.as_bytes())
}
