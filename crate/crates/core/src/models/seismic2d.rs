use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::galerkin::DiscreteSystem;
use crate::linalg::{CMat, SysMatrix, Triplets, C64};

use super::{check_theta, DiscreteModel};

/// Velocity (or any scalar) on a regular grid; `values[iz * nx + ix]`.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityGrid {
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub dy: f64,
    pub values: Vec<f64>,
}

impl VelocityGrid {
    pub fn from_fn(nx: usize, ny: usize, dx: f64, dy: f64, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(nx * ny);
        for iy in 0..ny {
            for ix in 0..nx {
                values.push(f(ix as f64 * dx, iy as f64 * dy));
            }
        }
        Self { nx, ny, dx, dy, values }
    }

    pub fn get(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.nx + ix]
    }

    /// CSV with a `nx,ny,dx,dy` header line, its values, then one grid row per line.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "nx,ny,dx,dy")?;
        writeln!(w, "{},{},{:.17e},{:.17e}", self.nx, self.ny, self.dx, self.dy)?;
        for iy in 0..self.ny {
            let row: Vec<String> = (0..self.nx).map(|ix| format!("{:.17e}", self.get(ix, iy))).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let mut next = || -> Result<String> {
            lines.next().ok_or_else(|| Error::Parse("truncated grid file".into()))?.map_err(Error::from)
        };
        let header = next()?;
        if header.trim() != "nx,ny,dx,dy" {
            return Err(Error::Parse(format!("unexpected grid header `{header}`")));
        }
        let meta = next()?;
        let parts: Vec<&str> = meta.split(',').map(str::trim).collect();
        if parts.len() != 4 {
            return Err(Error::Parse("grid metadata needs four fields".into()));
        }
        let pu = |s: &str| s.parse::<usize>().map_err(|e| Error::Parse(format!("`{s}`: {e}")));
        let pf = |s: &str| s.parse::<f64>().map_err(|e| Error::Parse(format!("`{s}`: {e}")));
        let (nx, ny, dx, dy) = (pu(parts[0])?, pu(parts[1])?, pf(parts[2])?, pf(parts[3])?);
        let mut values = Vec::with_capacity(nx * ny);
        for _ in 0..ny {
            let line = next()?;
            let row = line.split(',').map(|s| pf(s.trim())).collect::<Result<Vec<_>>>()?;
            if row.len() != nx {
                return Err(Error::Parse(format!("grid row has {} values, expected {nx}", row.len())));
            }
            values.extend(row);
        }
        Ok(Self { nx, ny, dx, dy, values })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TopBoundary {
    /// Pressure-free surface, `u = 0` at depth zero.
    Free,
    Absorbing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeismicInner {
    /// Five-point Laplacian with Dirichlet closure on the extended grid.
    Laplacian,
    /// Nodal identity scaled by the cell area.
    Mass,
}

/// Frequency-domain acoustic Helmholtz equation
/// `-div(A grad u) - omega^2 s_x s_z m u = f` on a rectangle of depth
/// `nz h` and width `nx h`, with quadratic-profile PML stretching
/// `s = 1 + i sigma / omega` in the symmetric form (`A = diag(s_z/s_x, s_x/s_z)`).
/// The equation is multiplied through by `h^2`.
///
/// Parameters are squared slowness `m = 1/v^2` on a coarse grid (every
/// `stride` nodes) bilinearly interpolated to the physical nodes; PML nodes
/// copy the nearest physical value. Sources and receivers coincide and are
/// normalized Gaussians of fixed physical width, so data converge under
/// refinement despite the logarithmic singularity of point sources.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Seismic2D {
    pub nx: usize,
    pub nz: usize,
    pub h: f64,
    pub npml: usize,
    pub frequency: f64,
    pub top: TopBoundary,
    pub inner: SeismicInner,
    pub stride: usize,
    /// Source / receiver positions `(x, z)`.
    pub sources: Vec<[f64; 2]>,
    /// Standard deviation of the Gaussian source profile.
    pub source_width: f64,
    /// Admissible velocity range; parameters are clamped to the matching slowness range.
    pub velocity_bounds: (f64, f64),
    /// Reference velocity used to scale the PML damping.
    pub pml_velocity: f64,
}

impl Seismic2D {
    /// `1.5 x 5` domain, `h = 0.05`, 31 sources at depth 0.1 from `x = 0.25` to `4.75`.
    pub fn demo(frequency: f64) -> Self {
        let (nx, nz) = (100, 30);
        let sources = (0..31).map(|i| [0.25 + 0.15 * i as f64, 0.1]).collect();
        Self {
            nx,
            nz,
            h: 0.05,
            npml: 20,
            frequency,
            top: TopBoundary::Free,
            inner: SeismicInner::Laplacian,
            stride: 2,
            sources,
            source_width: 0.06,
            velocity_bounds: (1.4, 5.0),
            pml_velocity: 3.0,
        }
    }

    pub fn omega(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.frequency
    }

    /// Same physical domain and acquisition at half the spacing.
    pub fn refined(&self) -> Self {
        Self {
            nx: 2 * self.nx,
            nz: 2 * self.nz,
            h: 0.5 * self.h,
            npml: 2 * self.npml,
            stride: 2 * self.stride,
            ..self.clone()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.stride == 0 || !self.nx.is_multiple_of(self.stride) || !self.nz.is_multiple_of(self.stride) {
            return Err(Error::Config(format!(
                "parameter stride {} must divide the grid {}x{}",
                self.stride, self.nx, self.nz
            )));
        }
        let (w, d) = (self.nx as f64 * self.h, self.nz as f64 * self.h);
        if self.sources.iter().any(|s| !(0.0..=w).contains(&s[0]) || !(0.0..=d).contains(&s[1])) {
            return Err(Error::Config("source outside the physical domain".into()));
        }
        if !(self.source_width > 0.0) {
            return Err(Error::Config("source width must be positive".into()));
        }
        Ok(())
    }

    fn pml_top(&self) -> usize {
        match self.top {
            TopBoundary::Free => 0,
            TopBoundary::Absorbing => self.npml,
        }
    }

    /// Extended grid extents (nodes `0..=ex`, `0..=ez`).
    fn extents(&self) -> (usize, usize) {
        (self.nx + 2 * self.npml, self.nz + self.npml + self.pml_top())
    }

    pub fn n_unknowns(&self) -> usize {
        let (ex, ez) = self.extents();
        (ex - 1) * (ez - 1)
    }

    fn unknown(&self, ix: usize, iz: usize) -> Option<usize> {
        let (ex, ez) = self.extents();
        if ix == 0 || iz == 0 || ix >= ex || iz >= ez {
            None
        } else {
            Some((ix - 1) * (ez - 1) + (iz - 1))
        }
    }

    pub fn param_dims(&self) -> (usize, usize) {
        (self.nx / self.stride + 1, self.nz / self.stride + 1)
    }

    /// Parameter grid as a [`VelocityGrid`] geometry (values left empty).
    pub fn param_grid(&self, values: Vec<f64>) -> VelocityGrid {
        let (px, pz) = self.param_dims();
        let d = self.h * self.stride as f64;
        VelocityGrid { nx: px, ny: pz, dx: d, dy: d, values }
    }

    /// Slowness-squared parameters sampled from a velocity function of `(x, z)`.
    pub fn params_from_velocity(&self, v: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        let (px, pz) = self.param_dims();
        let d = self.h * self.stride as f64;
        let mut out = Vec::with_capacity(px * pz);
        for iz in 0..pz {
            for ix in 0..px {
                out.push(v(ix as f64 * d, iz as f64 * d).powi(-2));
            }
        }
        out
    }

    pub fn velocity_from_params(&self, theta: &[f64]) -> VelocityGrid {
        self.param_grid(theta.iter().map(|m| m.max(f64::MIN_POSITIVE).powf(-0.5)).collect())
    }

    fn slowness_bounds(&self) -> (f64, f64) {
        let (vlo, vhi) = self.velocity_bounds;
        (vhi.powi(-2), vlo.powi(-2))
    }

    /// Coarse-grid weights of the physical node nearest to extended node `(ix, iz)`.
    fn weights(&self, ix: usize, iz: usize) -> Vec<(usize, f64)> {
        let px = (ix as i64 - self.npml as i64).clamp(0, self.nx as i64) as usize;
        let pz = (iz as i64 - self.pml_top() as i64).clamp(0, self.nz as i64) as usize;
        let s = self.stride;
        let (ncx, _) = self.param_dims();
        let (cx, cz) = ((px / s).min(self.nx / s - 1), (pz / s).min(self.nz / s - 1));
        let (tx, tz) = ((px - cx * s) as f64 / s as f64, (pz - cz * s) as f64 / s as f64);
        let mut w = Vec::with_capacity(4);
        for (dz, wz) in [(0, 1.0 - tz), (1, tz)] {
            for (dx, wx) in [(0, 1.0 - tx), (1, tx)] {
                let weight = wx * wz;
                if weight != 0.0 {
                    w.push(((cz + dz) * ncx + cx + dx, weight));
                }
            }
        }
        w
    }

    fn stretch(&self, coord: f64, lo_pml: bool, extent: f64) -> C64 {
        let len = self.npml as f64 * self.h;
        if len == 0.0 {
            return C64::new(1.0, 0.0);
        }
        let d = if coord < 0.0 && lo_pml {
            -coord
        } else if coord > extent {
            coord - extent
        } else {
            0.0
        };
        let sigma0 = 1.5 * self.pml_velocity * 1000f64.ln() / len;
        C64::new(1.0, sigma0 * (d / len).powi(2) / self.omega())
    }

    fn sx(&self, ix2: f64) -> C64 {
        self.stretch((ix2 - self.npml as f64) * self.h, true, self.nx as f64 * self.h)
    }

    fn sz(&self, iz2: f64) -> C64 {
        self.stretch(
            (iz2 - self.pml_top() as f64) * self.h,
            self.top == TopBoundary::Absorbing,
            self.nz as f64 * self.h,
        )
    }

    fn sources_matrix(&self) -> CMat {
        let mut f = CMat::zeros(self.n_unknowns(), self.sources.len());
        let sig = self.source_width;
        let reach = (4.0 * sig / self.h).ceil() as i64;
        let scale = self.h * self.h / (2.0 * std::f64::consts::PI * sig * sig);
        for (j, s) in self.sources.iter().enumerate() {
            let (cx, cz) = ((s[0] / self.h).round() as i64, (s[1] / self.h).round() as i64);
            for ix in cx - reach..=cx + reach {
                for iz in cz - reach..=cz + reach {
                    if ix < 0 || iz < 0 || ix > self.nx as i64 || iz > self.nz as i64 {
                        continue;
                    }
                    let Some(d) = self.physical_unknown(ix as usize, iz as usize) else { continue };
                    let r2 = (ix as f64 * self.h - s[0]).powi(2) + (iz as f64 * self.h - s[1]).powi(2);
                    f[(d, j)] = C64::new(scale * (-0.5 * r2 / (sig * sig)).exp(), 0.0);
                }
            }
        }
        f
    }

    fn inner_matrix(&self) -> SysMatrix {
        let n = self.n_unknowns();
        let (ex, ez) = self.extents();
        let mut t = Triplets::new(n, n);
        for ix in 1..ex {
            for iz in 1..ez {
                let d = self.unknown(ix, iz).unwrap();
                match self.inner {
                    SeismicInner::Mass => t.push_real(d, d, self.h * self.h),
                    SeismicInner::Laplacian => {
                        t.push_real(d, d, 4.0);
                        for (jx, jz) in [(ix - 1, iz), (ix + 1, iz), (ix, iz - 1), (ix, iz + 1)] {
                            if let Some(e) = self.unknown(jx, jz) {
                                t.push_real(d, e, -1.0);
                            }
                        }
                    }
                }
            }
        }
        SysMatrix::Sparse(t.to_csr())
    }

    /// Field of one source on the extended grid, for inspection.
    pub fn wavefield(&self, theta: &[f64], source: usize) -> Result<Vec<C64>> {
        let sys = self.system(theta, false)?;
        let u = sys.operator.factor()?.solve(&sys.sources.columns(source, 1).into_owned())?;
        Ok(u.as_slice().to_vec())
    }

    /// Unknown index of the extended-grid node matching physical node `(ix, iz)`.
    pub fn physical_unknown(&self, ix: usize, iz: usize) -> Option<usize> {
        self.unknown(ix + self.npml, iz + self.pml_top())
    }
}

impl DiscreteModel for Seismic2D {
    fn n_params(&self) -> usize {
        let (px, pz) = self.param_dims();
        px * pz
    }

    fn n_sources(&self) -> usize {
        self.sources.len()
    }

    fn system(&self, theta: &[f64], derivs: bool) -> Result<DiscreteSystem> {
        self.validate()?;
        check_theta(theta, DiscreteModel::n_params(self))?;
        let (lo, hi) = self.slowness_bounds();
        let m: Vec<f64> = theta.iter().map(|t| t.clamp(lo, hi)).collect();
        let active: Vec<bool> = theta.iter().map(|t| (lo..=hi).contains(t)).collect();
        let n = self.n_unknowns();
        let (ex, ez) = self.extents();
        let w2 = self.omega().powi(2) * self.h * self.h;
        let node_weights: Vec<Vec<Vec<(usize, f64)>>> =
            (0..=ex).map(|ix| (0..=ez).map(|iz| self.weights(ix, iz)).collect()).collect();
        let node_m = |ix: usize, iz: usize| -> f64 { node_weights[ix][iz].iter().map(|&(p, w)| w * m[p]).sum() };
        // Two-point rule at +-sqrt(2/3) on each axis: cancels the leading
        // dispersion error of bilinear elements.
        let q = (2.0f64 / 3.0).sqrt();
        let pts = [0.5 * (1.0 - q), 0.5 * (1.0 + q)];
        let corners = [(0, 0), (1, 0), (0, 1), (1, 1)];
        let mut t = Triplets::new(n, n);
        let mut dt: Vec<Triplets> =
            if derivs { (0..theta.len()).map(|_| Triplets::new(n, n)).collect() } else { Vec::new() };
        for cx in 0..ex {
            for cz in 0..ez {
                let ids: Vec<Option<usize>> = corners.iter().map(|&(dx, dz)| self.unknown(cx + dx, cz + dz)).collect();
                if ids.iter().all(Option::is_none) {
                    continue;
                }
                let cm: Vec<f64> = corners.iter().map(|&(dx, dz)| node_m(cx + dx, cz + dz)).collect();
                let mut local = [[C64::new(0.0, 0.0); 4]; 4];
                let mut dlocal: Vec<(usize, [[C64; 4]; 4])> = Vec::new();
                for &xi in &pts {
                    for &zeta in &pts {
                        let sx = self.sx(cx as f64 + xi);
                        let sz = self.sz(cz as f64 + zeta);
                        let (a, b) = (sz / sx, sx / sz);
                        let mass = sx * sz * (0.25 * w2);
                        let phi: Vec<f64> = corners
                            .iter()
                            .map(|&(dx, dz)| {
                                (if dx == 1 { xi } else { 1.0 - xi }) * (if dz == 1 { zeta } else { 1.0 - zeta })
                            })
                            .collect();
                        let grad: Vec<(f64, f64)> = corners
                            .iter()
                            .map(|&(dx, dz)| {
                                let gx = if dx == 1 { 1.0 } else { -1.0 } * if dz == 1 { zeta } else { 1.0 - zeta };
                                let gz = if dz == 1 { 1.0 } else { -1.0 } * if dx == 1 { xi } else { 1.0 - xi };
                                (gx, gz)
                            })
                            .collect();
                        let mq: f64 = phi.iter().zip(&cm).map(|(p, v)| p * v).sum();
                        for k in 0..4 {
                            for l in 0..4 {
                                local[k][l] += (a * (grad[k].0 * grad[l].0) + b * (grad[k].1 * grad[l].1)) * 0.25
                                    - mass * (mq * phi[k] * phi[l]);
                            }
                        }
                        if derivs {
                            for (c, &(dx, dz)) in corners.iter().enumerate() {
                                for &(p, w) in &node_weights[cx + dx][cz + dz] {
                                    if !active[p] {
                                        continue;
                                    }
                                    let slot = match dlocal.iter().position(|e| e.0 == p) {
                                        Some(i) => i,
                                        None => {
                                            dlocal.push((p, [[C64::new(0.0, 0.0); 4]; 4]));
                                            dlocal.len() - 1
                                        }
                                    };
                                    for k in 0..4 {
                                        for l in 0..4 {
                                            dlocal[slot].1[k][l] -= mass * (w * phi[c] * phi[k] * phi[l]);
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
                for k in 0..4 {
                    let Some(r) = ids[k] else { continue };
                    for l in 0..4 {
                        let Some(c) = ids[l] else { continue };
                        t.push(r, c, local[k][l]);
                        for (p, dm) in &dlocal {
                            dt[*p].push(r, c, dm[k][l]);
                        }
                    }
                }
            }
        }
        let mut sys = DiscreteSystem::new(SysMatrix::Sparse(t.to_csr()), self.inner_matrix(), self.sources_matrix())?;
        sys.operator_derivs = dt.into_iter().map(|t| SysMatrix::Sparse(t.to_csr())).collect();
        Ok(sys)
    }
}

/// Layered model with dipping interfaces and a fast lens, loosely shaped like
/// a marine section; depth `z` increases downward.
pub fn layered_velocity(x: f64, z: f64) -> f64 {
    let interfaces = [
        0.25 + 0.03 * x,
        0.55 + 0.08 * (1.3 * x).sin() + 0.02 * x,
        0.85 - 0.04 * x + 0.06 * (0.9 * x + 1.0).sin(),
        1.15 + 0.05 * x - 0.1 * ((x - 2.5) / 1.2).powi(2).min(1.0),
    ];
    let speeds = [1.6, 2.0, 2.5, 2.9, 3.4];
    let layer = interfaces.iter().filter(|&&zi| z > zi).count();
    let lens = 0.8 * (-((x - 3.3).powi(2) / 0.18 + (z - 0.95).powi(2) / 0.02)).exp();
    speeds[layer] + lens
}

/// Velocity increasing linearly with depth from `top` to `bottom` over `depth`.
pub fn linear_velocity(top: f64, bottom: f64, depth: f64) -> impl Fn(f64, f64) -> f64 {
    move |_x, z| top + (bottom - top) * (z / depth).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::galerkin::relative_difference;
    use crate::linalg::max_abs;
    use crate::models::ForwardMap;

    fn small() -> Seismic2D {
        Seismic2D {
            nx: 40,
            nz: 16,
            h: 0.05,
            npml: 10,
            frequency: 3.0,
            top: TopBoundary::Free,
            inner: SeismicInner::Laplacian,
            stride: 2,
            sources: (0..7).map(|i| [0.25 + 0.25 * i as f64, 0.1]).collect(),
            source_width: 0.04,
            velocity_bounds: (1.0, 5.0),
            pml_velocity: 2.0,
        }
    }

    #[test]
    fn reciprocity() {
        let m = small();
        let theta = m.params_from_velocity(layered_velocity);
        let d = m.predict(&theta, false).unwrap().data;
        assert!(max_abs(&(&d - d.transpose())) <= 1e-8 * max_abs(&d));
    }

    #[test]
    fn homogeneous_field_decays_away_from_source() {
        let mut m = small();
        m.top = TopBoundary::Absorbing;
        m.sources = vec![[1.0, 0.4]];
        let theta = m.params_from_velocity(|_, _| 2.0);
        let u = m.wavefield(&theta, 0).unwrap();
        let amp = |r: usize| {
            let a = u[m.physical_unknown(20 + r, 8).unwrap()].norm();
            let b = u[m.physical_unknown(20 - r, 8).unwrap()].norm();
            0.5 * (a + b)
        };
        let samples: Vec<f64> = [3, 6, 10, 15, 19].iter().map(|&r| amp(r)).collect();
        for w in samples.windows(2) {
            assert!(w[1] < w[0], "{samples:?}");
        }
    }

    #[test]
    fn parameter_interpolation_reproduces_constants() {
        let m = small();
        for ix in 0..(m.nx + 2 * m.npml + 1) {
            for iz in 0..(m.nz + m.npml + 1) {
                let s: f64 = m.weights(ix, iz).iter().map(|w| w.1).sum();
                assert!((s - 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn grid_csv_round_trip() {
        let g = VelocityGrid::from_fn(4, 3, 0.1, 0.2, |x, z| 1.5 + x + 2.0 * z);
        let mut buf = Vec::new();
        g.write_csv(&mut buf).unwrap();
        let back = VelocityGrid::read_csv(std::io::Cursor::new(buf)).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn refinement_changes_data_little() {
        let m = small();
        let f = m.refined();
        let dc = m.predict(&m.params_from_velocity(|_, _| 2.5), false).unwrap().data;
        let df = f.predict(&f.params_from_velocity(|_, _| 2.5), false).unwrap().data;
        assert!(relative_difference(&dc, &df) < 0.05, "{}", relative_difference(&dc, &df));
    }
}
