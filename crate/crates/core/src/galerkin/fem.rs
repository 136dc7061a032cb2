//! First-order Lagrange assembly on [`Mesh1D`] and [`Mesh2D`].

use crate::error::{Error, Result};
use crate::linalg::{CMat, Triplets};
use crate::quadrature::{gauss_on, triangle_degree4, POINTS_PER_CELL};

use super::mesh::{Mesh1D, Mesh2D};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Form {
    /// `int w grad(phi_a) . grad(phi_b)`
    Stiffness,
    /// `int w phi_a phi_b`
    Mass,
}

fn check(v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::QuadratureFailure("non-finite matrix entry"))
    }
}

pub fn assemble_1d(mesh: &Mesh1D, form: Form, weight: &dyn Fn(f64) -> Result<f64>) -> Result<Triplets> {
    let n = mesh.n_dofs();
    let mut t = Triplets::new(n, n);
    let h = mesh.h();
    for cell in 0..mesh.cells {
        let (x0, x1) = (mesh.node(cell), mesh.node(cell + 1));
        let mut local = [[0.0f64; 2]; 2];
        for (x, w) in gauss_on(x0, x1, POINTS_PER_CELL) {
            let c = weight(x)?;
            match form {
                Form::Stiffness => {
                    let g = [-1.0 / h, 1.0 / h];
                    for a in 0..2 {
                        for b in 0..2 {
                            local[a][b] += w * c * g[a] * g[b];
                        }
                    }
                }
                Form::Mass => {
                    let s = (x - x0) / h;
                    let phi = [1.0 - s, s];
                    for a in 0..2 {
                        for b in 0..2 {
                            local[a][b] += w * c * phi[a] * phi[b];
                        }
                    }
                }
            }
        }
        let dofs = [mesh.dof(cell), mesh.dof(cell + 1)];
        for a in 0..2 {
            for b in 0..2 {
                if let (Some(da), Some(db)) = (dofs[a], dofs[b]) {
                    t.push_real(da, db, check(local[a.min(b)][a.max(b)])?);
                }
            }
        }
    }
    Ok(t)
}

struct Element {
    dofs: [Option<usize>; 3],
    verts: [[f64; 2]; 3],
    grads: [[f64; 2]; 3],
    area: f64,
}

fn elements(mesh: &Mesh2D) -> impl Iterator<Item = Element> + '_ {
    mesh.triangles().map(move |tri| {
        let verts = tri.map(|(i, j)| mesh.point(i, j));
        let dofs = tri.map(|(i, j)| mesh.dof(i, j));
        let [p0, p1, p2] = verts;
        let det = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
        let grads = [
            [(p1[1] - p2[1]) / det, (p2[0] - p1[0]) / det],
            [(p2[1] - p0[1]) / det, (p0[0] - p2[0]) / det],
            [(p0[1] - p1[1]) / det, (p1[0] - p0[0]) / det],
        ];
        Element { dofs, verts, grads, area: 0.5 * det.abs() }
    })
}

fn bary_point(verts: &[[f64; 2]; 3], l: &[f64; 3]) -> [f64; 2] {
    [
        l[0] * verts[0][0] + l[1] * verts[1][0] + l[2] * verts[2][0],
        l[0] * verts[0][1] + l[1] * verts[1][1] + l[2] * verts[2][1],
    ]
}

pub fn assemble_2d(mesh: &Mesh2D, form: Form, weight: &dyn Fn(&[f64]) -> Result<f64>) -> Result<Triplets> {
    let n = mesh.n_dofs();
    let mut t = Triplets::new(n, n);
    let rule = triangle_degree4();
    for el in elements(mesh) {
        let mut local = [[0.0f64; 3]; 3];
        match form {
            Form::Stiffness => {
                let mut integral = 0.0;
                for (l, w) in &rule {
                    integral += w * weight(&bary_point(&el.verts, l))?;
                }
                integral *= el.area;
                for a in 0..3 {
                    for b in a..3 {
                        let g = el.grads[a][0] * el.grads[b][0] + el.grads[a][1] * el.grads[b][1];
                        local[a][b] = integral * g;
                    }
                }
            }
            Form::Mass => {
                for (l, w) in &rule {
                    let c = weight(&bary_point(&el.verts, l))? * w * el.area;
                    for a in 0..3 {
                        for b in a..3 {
                            local[a][b] += c * l[a] * l[b];
                        }
                    }
                }
            }
        }
        for a in 0..3 {
            for b in 0..3 {
                if let (Some(da), Some(db)) = (el.dofs[a], el.dofs[b]) {
                    t.push_real(da, db, check(local[a.min(b)][a.max(b)])?);
                }
            }
        }
    }
    Ok(t)
}

/// Load vectors `int f_i phi_a` for each source function, one column per source.
pub fn loads_2d(mesh: &Mesh2D, sources: &[&dyn Fn(&[f64]) -> f64]) -> Result<CMat> {
    let n = mesh.n_dofs();
    let mut out = CMat::zeros(n, sources.len());
    let rule = triangle_degree4();
    for el in elements(mesh) {
        for (l, w) in &rule {
            let p = bary_point(&el.verts, l);
            for (s, f) in sources.iter().enumerate() {
                let v = f(&p) * w * el.area;
                for a in 0..3 {
                    if let Some(d) = el.dofs[a] {
                        out[(d, s)].re += v * l[a];
                    }
                }
            }
        }
    }
    if out.iter().any(|z| !z.re.is_finite()) {
        return Err(Error::QuadratureFailure("non-finite load entry"));
    }
    Ok(out)
}
