//! Galerkin velocity space spanned by Lame eigenfunctions, and the momentum
//! step on it.

mod basis;
pub mod cache;
pub mod eigen;
mod forcing;
mod mass;
mod momentum;

pub use basis::{
    box_lame_matrix, build_basis, build_basis_cached, BasisKind, FourierLabel, GalerkinBasis, GalerkinCoeffs,
    ModeFamily, CACHE_ENV,
};
pub use forcing::{
    elastic_force, forcing_field, viscous_field, ElasticForm, ForcingOptions, ForcingTerms, PressureForm, Transport,
};
pub use mass::{MassOperator, ModeMatrix};
pub use momentum::{momentum_step, Coupling, MomentumConfig, MomentumSolver, MomentumUpdate};
