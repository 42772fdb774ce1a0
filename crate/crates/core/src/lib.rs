//! Parametric finite element solver for the gradient flow of the two-phase
//! Canham–Helfrich–Evans energy of axisymmetric biomembranes.
//!
//! All numerical code is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the scalar to `f64`.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod assembly;
pub mod assumptions;
pub mod driver;
pub mod error;
pub mod functionals;
pub mod linalg;
pub mod mesh;
pub mod newton;
pub mod scalar;
pub mod shapes;
pub mod vec2;
pub mod verification;

pub use assumptions::{validate_assumptions, Assumption, AssumptionReport};
pub use error::{Error, Result};
pub use scalar::Real;
pub use vec2::Vec2;

pub type Point = vec2::Vec2<f64>;
pub type Mesh = mesh::TwoPhaseMesh<f64>;
pub type Curve = mesh::PhaseCurve<f64>;
pub type Params = functionals::PhysicalParams<f64>;
