//! Sub-luminal trajectories with velocities of bounded variation.
//!
//! A trajectory is an absolutely continuous path stored as cubic Hermite
//! segments. Velocities may jump only at nodes, so within a segment the
//! velocity is a quadratic polynomial and the path has bounded variation.

mod boundary;
mod hermite;
mod sewing;

pub use boundary::{BoundaryData, BoundaryTimes};
pub use hermite::{check_subluminal, HermitePath, Node, Perturbation, Trajectory};
pub use sewing::{build_sewing_grid, SewingGrid};

use crate::error::Result;
use crate::scalar::Real;
use crate::vec3::Vec3;

/// One-sided limit selector at velocity-jump nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

/// Particle label: `One` carries charge -1, `Two` carries charge +1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Particle {
    One,
    Two,
}

impl Particle {
    pub fn other(self) -> Self {
        match self {
            Particle::One => Particle::Two,
            Particle::Two => Particle::One,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Particle::One => 0,
            Particle::Two => 1,
        }
    }
}

/// A path `t -> x(t)` that the light-cone and Lagrangian layers can query.
pub trait Worldline<T: Real>: Send + Sync {
    /// Closed time interval on which the path is defined.
    fn span(&self) -> (T, T);

    fn position(&self, t: T) -> Result<Vec3<T>>;

    fn velocity(&self, t: T, side: Side) -> Result<Vec3<T>>;

    fn acceleration(&self, t: T, side: Side) -> Result<Vec3<T>>;

    /// Interior times where velocity or acceleration may be discontinuous.
    fn breakpoints(&self) -> Vec<T>;

    /// Upper bound on the speed, used to size root brackets.
    fn speed_bound(&self) -> T;

    /// The breakpoint closest to `t` if it lies within `tol`.
    fn breakpoint_near(&self, t: T, tol: T) -> Option<T> {
        self.breakpoints()
            .into_iter()
            .filter(|b| (*b - t).abs() <= tol)
            .min_by(|a, b| (*a - t).abs().partial_cmp(&(*b - t).abs()).unwrap())
    }
}

impl<T: Real, W: Worldline<T> + ?Sized> Worldline<T> for &W {
    fn span(&self) -> (T, T) {
        (**self).span()
    }
    fn position(&self, t: T) -> Result<Vec3<T>> {
        (**self).position(t)
    }
    fn velocity(&self, t: T, side: Side) -> Result<Vec3<T>> {
        (**self).velocity(t, side)
    }
    fn acceleration(&self, t: T, side: Side) -> Result<Vec3<T>> {
        (**self).acceleration(t, side)
    }
    fn breakpoints(&self) -> Vec<T> {
        (**self).breakpoints()
    }
    fn speed_bound(&self) -> T {
        (**self).speed_bound()
    }
    fn breakpoint_near(&self, t: T, tol: T) -> Option<T> {
        (**self).breakpoint_near(t, tol)
    }
}
