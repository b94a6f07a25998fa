//! Grids, fields, finite-difference operators, norms and snapshot IO.

mod field;
mod grid;
mod norms;
pub mod ops;
pub mod snapshot;
pub mod spectral;

pub use field::{DirectorField, ScalarField, TensorField2, VectorField2};
pub use grid::{Dir, DomainKind, GridSpec};
pub use norms::{h1_semi_sq_values, l2_sq_values, l4_pow4_values, norms, vector_norms, Norms};
pub use ops::{
    advective_derivative, divergence, ericksen_stress, gradient, inner, inner_vec, integrate,
    laplacian, tensor_divergence, vector_laplacian,
};
