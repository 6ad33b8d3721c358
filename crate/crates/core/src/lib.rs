//! Variational two-body electrodynamics with state-dependent light-cone
//! delays.
//!
//! The crate evaluates the action functional of two opposite point charges
//! (charge -1 for particle one, +1 for particle two, `c = 1`), the partial
//! Lagrangians with their momenta and Legendre transforms, Euler-Lagrange
//! and corner residuals, and solves the boundary-value problem by direct
//! minimization of the action or by shooting.
//!
//! Numerical kernels are generic over [`Real`]; the aliases below fix the
//! scalar to `f64`.

pub mod action;
pub mod error;
pub mod fourspace;
pub mod io;
pub mod lagrangian;
pub mod lightcone;
pub mod poly;
pub mod quadrature;
pub mod scalar;
pub mod solver;
pub mod trajectory;
pub mod vec3;

pub use error::{Error, Result};
pub use lightcone::{ConeSign, LightConeOptions, LightConeSolution};
pub use scalar::Real;
pub use trajectory::{
    BoundaryData, BoundaryTimes, HermitePath, Node, Particle, Perturbation, Side, Trajectory,
    Worldline,
};
pub use vec3::Vec3;

pub type Vec3f = Vec3<f64>;
pub type TrajectoryF64 = Trajectory<f64>;
pub type BoundaryDataF64 = BoundaryData<f64>;
pub type LightConeSolutionF64 = LightConeSolution<f64>;
pub type LagrangianEvalF64 = lagrangian::LagrangianEval<f64>;
pub type ActionBreakdownF64 = action::ActionBreakdown<f64>;
