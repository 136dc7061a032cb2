//! Weak-form machinery: meshes, coefficient fields, first-order Lagrange
//! assembly, the span-of-sources basis, and the Galerkin systems that feed
//! the objective.

pub mod coefficient;
pub mod fem;
pub mod mesh;
pub mod span;
pub mod system;

pub use coefficient::{CoefficientField, ScalarField};
pub use fem::{assemble_1d, assemble_2d, loads_2d, Form};
pub use mesh::{Boundary1D, Mesh1D, Mesh2D};
pub use span::SpanBasis;
pub use system::{
    gram_from_states, relative_difference, AssembledSystem, BasisMode, DiscreteSystem, InnerProductMode, States,
};
