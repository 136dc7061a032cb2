use crate::error::Result;
use crate::galerkin::{assemble_2d, loads_2d, Form, Mesh2D};
use crate::linalg::{CMat, CsrMatrix};

/// Shared pieces of the 2D first-order finite-element models: Gaussian
/// source loads and the unweighted stiffness matrix.
#[derive(Debug, Clone)]
pub(crate) struct Fem2D {
    pub mesh: Mesh2D,
    pub loads: CMat,
    pub stiffness: CsrMatrix,
}

impl Fem2D {
    /// Sources `exp(-width |x - center|^2)`.
    pub fn new(mesh: Mesh2D, centers: &[[f64; 2]], width: f64) -> Result<Self> {
        let fs: Vec<Box<dyn Fn(&[f64]) -> f64>> = centers
            .iter()
            .map(|&c| -> Box<dyn Fn(&[f64]) -> f64> {
                Box::new(move |x: &[f64]| (-width * ((x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2))).exp())
            })
            .collect();
        let refs: Vec<&dyn Fn(&[f64]) -> f64> = fs.iter().map(|f| f.as_ref()).collect();
        let loads = loads_2d(&mesh, &refs)?;
        let stiffness = assemble_2d(&mesh, Form::Stiffness, &|_| Ok(1.0))?.to_csr();
        Ok(Self { mesh, loads, stiffness })
    }

    pub fn stiffness(&self, w: &dyn Fn(&[f64]) -> Result<f64>) -> Result<CsrMatrix> {
        Ok(assemble_2d(&self.mesh, Form::Stiffness, w)?.to_csr())
    }

    pub fn mass(&self, w: &dyn Fn(&[f64]) -> Result<f64>) -> Result<CsrMatrix> {
        Ok(assemble_2d(&self.mesh, Form::Mass, w)?.to_csr())
    }
}
