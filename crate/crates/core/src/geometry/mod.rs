//! Geodesic polar discretisation of H^2 and H^3, fields and operators.

mod field;
mod grid;
mod modes;
mod ops;

pub(crate) use field::same_grid;
pub use field::{ScalarField, State, TensorField, VectorField};
pub use grid::{build_grid, build_grid_with, Grid, ManifoldGrid};
pub use modes::ModeOps;
pub(crate) use ops::vector_from_modes;
pub use ops::{
    bochner_laplacian, curl, curl_adjoint, div_tensor, div_vector, ebin_marsden, grad_scalar, laplace_beltrami,
};
