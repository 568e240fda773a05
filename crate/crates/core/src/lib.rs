//! Numerical toolkit for second-order impulsive two-point boundary value
//! problems
//!
//! ```text
//! -u'' = f(x, u)                     on (0,1) \ {x_1, ..., x_m}
//! u(0) = u(1) = 0
//! u'(x_j+) = u'(x_j-) - ı_j(u(x_j))  at each interior node
//! ```
//!
//! The crate splits `H¹₀(0,1)` into the span `M` of the point-evaluation
//! representers and its impulse-free complement `N`, and builds on that split:
//! resonance and Morse-index analysis at zero, nontriviality certificates, a
//! Galerkin critical-point solver and an independent shooting oracle.

pub mod app;
pub mod error;
pub mod galerkin;
pub mod mesh;
pub mod quadrature;
pub mod resonance;
pub mod shooting;
pub mod solver;
pub mod spectral;

pub use error::{Error, Result};
pub use galerkin::{CoefficientVector, GalerkinBasis, Nonlinearity, ProblemSpec};
pub use mesh::ImpulseMesh;
