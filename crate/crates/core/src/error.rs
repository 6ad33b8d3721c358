use thiserror::Error;

/// Failures raised by the evaluation, solver and I/O layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("time {t} outside trajectory span [{start}, {end}]")]
    TimeOutOfRange { t: f64, start: f64, end: f64 },
    #[error("{sign} light-cone image of t = {t} leaves the available trajectory data")]
    SpanExhausted { t: f64, sign: &'static str },
    #[error("collision: separation {r} below r_min {r_min} at t = {t}")]
    Collision { t: f64, r: f64, r_min: f64 },
    #[error("segment {segment} is super-luminal: max speed {speed}")]
    SuperLuminal { segment: usize, speed: f64 },
    #[error("invalid trajectory: {0}")]
    InvalidTrajectory(String),
    #[error("invalid boundary data: {0}")]
    InvalidBoundary(String),
    #[error("invalid perturbation: {0}")]
    InvalidPerturbation(String),
    #[error("invalid reparametrization: {0}")]
    InvalidReparam(String),
    #[error("t = {t} is within {distance} of a node; use the corner residuals there")]
    TooCloseToNode { t: f64, distance: f64 },
    #[error("t = {t} is not a node of the trajectory or a sewing image of a partner node")]
    NotANode { t: f64 },
    #[error("boundary is not of shortest length: {0}")]
    NotShortestBoundary(String),
    #[error("shooting diverged: {0}")]
    ShootingDivergence(String),
    #[error("line search failed: {0}")]
    LineSearchFailure(String),
    #[error("Newton iteration failed: {0}")]
    NewtonFailure(String),
    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
