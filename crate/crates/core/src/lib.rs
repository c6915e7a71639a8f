//! Steady monoenergetic radiative transfer with discrete ordinates and
//! upwind discontinuous Galerkin in space, accelerated by diffusion and
//! reduced-order synthetic corrections.
//!
//! Numerical code is generic over [`Real`] (`f32` or `f64`); the `*64`
//! aliases fix the usual double-precision instantiation.

pub mod dense;
pub mod dg;
pub mod dsa;
pub mod error;
pub mod mesh;
pub mod problem;
pub mod quadrature;
pub mod rom;
pub mod scalar;
pub mod solvers;
pub mod sparse;
pub mod system;

pub use dense::{DenseMatrix, LuFactors};
pub use dg::DgSpace;
pub use error::{Error, Result};
pub use mesh::{Geometry, Mesh};
pub use problem::{CrossSectionTerm, ProblemDefinition, Side};
pub use quadrature::AngularQuadrature;
pub use scalar::Real;
pub use system::{AssemblyOptions, TransportSystem};

pub type Mesh64 = Mesh<f64>;
pub type Quadrature64 = AngularQuadrature<f64>;
pub type Problem64 = ProblemDefinition<f64>;
pub type System64 = TransportSystem<f64>;
