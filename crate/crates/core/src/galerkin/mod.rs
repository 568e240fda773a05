//! Problem description, the split Galerkin basis and the energy functional.

mod basis;
mod catalog;
mod functional;
mod problem;

pub(crate) use basis::sine_mode;
pub use basis::{default_quad_order, CoefficientVector, GalerkinBasis, ORTHOGONALITY_TOL};
pub use catalog::{Growth, Nonlinearity, ScalarFn, UnknownNonlinearity, CATALOG};
pub use functional::{energy, gradient, hessian};
pub use problem::{Forcing, ForcingScale, ProblemSpec};
