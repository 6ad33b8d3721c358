//! Boundary-value solvers: direct minimization of the action, shooting for
//! shortest-length boundaries, and the circular-orbit family used as an
//! oracle. All solvers work in `f64`.

pub mod lbfgs;
mod minimize;
mod orbit;
mod report;
mod shooting;

pub use minimize::{minimize_action, ActionObjective, Discretization, MinimizeOptions, MinimizeOutcome};
pub use orbit::{find_circular_orbit, CircularOrbit, CircularWorldline, OrbitOptions};
pub use report::{criticality_report, momentum_total_variation, CriticalityReport, ReportOptions};
pub use shooting::{check_shortest_boundary, shoot_shortest_boundary, ShootingOptions, ShootingOutcome};
