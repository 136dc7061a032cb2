use serde::{Deserialize, Serialize};

/// Which ends of the unit interval carry a homogeneous Dirichlet condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary1D {
    Both,
    LeftOnly,
}

/// Uniform mesh of `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mesh1D {
    pub cells: usize,
    pub boundary: Boundary1D,
}

impl Mesh1D {
    pub fn new(cells: usize, boundary: Boundary1D) -> Self {
        assert!(cells >= 2, "mesh needs at least two cells");
        Self { cells, boundary }
    }

    pub fn h(&self) -> f64 {
        1.0 / self.cells as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        j as f64 * self.h()
    }

    pub fn n_dofs(&self) -> usize {
        match self.boundary {
            Boundary1D::Both => self.cells - 1,
            Boundary1D::LeftOnly => self.cells,
        }
    }

    /// Degree of freedom carried by node `j`, if any.
    pub fn dof(&self, j: usize) -> Option<usize> {
        if j == 0 || j > self.cells || (j == self.cells && self.boundary == Boundary1D::Both) {
            None
        } else {
            Some(j - 1)
        }
    }

    pub fn dof_position(&self, d: usize) -> f64 {
        self.node(d + 1)
    }
}

/// Structured triangulation of `[0, lx] x [0, ly]`, each square cut along
/// its lower-left to upper-right diagonal; Dirichlet on the whole boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mesh2D {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
}

impl Mesh2D {
    pub fn unit_square(n: usize) -> Self {
        Self { nx: n, ny: n, lx: 1.0, ly: 1.0 }
    }

    pub fn hx(&self) -> f64 {
        self.lx / self.nx as f64
    }

    pub fn hy(&self) -> f64 {
        self.ly / self.ny as f64
    }

    pub fn n_dofs(&self) -> usize {
        (self.nx - 1) * (self.ny - 1)
    }

    pub fn point(&self, i: usize, j: usize) -> [f64; 2] {
        [i as f64 * self.hx(), j as f64 * self.hy()]
    }

    pub fn dof(&self, i: usize, j: usize) -> Option<usize> {
        if i == 0 || j == 0 || i >= self.nx || j >= self.ny {
            None
        } else {
            Some((j - 1) * (self.nx - 1) + (i - 1))
        }
    }

    pub fn dof_point(&self, d: usize) -> [f64; 2] {
        let i = d % (self.nx - 1) + 1;
        let j = d / (self.nx - 1) + 1;
        self.point(i, j)
    }

    /// Node index pairs of every triangle, counter-clockwise.
    pub fn triangles(&self) -> impl Iterator<Item = [(usize, usize); 3]> + '_ {
        (0..self.ny).flat_map(move |j| {
            (0..self.nx).flat_map(move |i| [[(i, j), (i + 1, j), (i + 1, j + 1)], [(i, j), (i + 1, j + 1), (i, j + 1)]])
        })
    }

    /// Twice as fine in each direction.
    pub fn refined(&self) -> Self {
        Self { nx: 2 * self.nx, ny: 2 * self.ny, ..*self }
    }
}
