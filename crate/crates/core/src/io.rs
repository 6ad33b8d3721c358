//! File formats: trajectory JSON and CSV, the problem file, and the plot
//! series written next to a solution.
//!
//! Numbers go through `serde_json`, which prints the shortest decimal that
//! parses back to the same `f64`, so every file round-trips bit for bit.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::action::evaluate_at;
use crate::error::{Error, Result};
use crate::lightcone::LightConeOptions;
use crate::trajectory::{BoundaryData, Node, Particle, Side, Trajectory, Worldline};
use crate::vec3::Vec3;

fn arr(v: Vec3<f64>) -> [f64; 3] {
    [v.x, v.y, v.z]
}

fn vec(a: [f64; 3]) -> Vec3<f64> {
    Vec3::new(a[0], a[1], a[2])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub t: f64,
    pub x: [f64; 3],
    pub v_left: [f64; 3],
    pub v_right: [f64; 3],
}

/// On-disk form of a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryFile {
    pub nodes: Vec<NodeRecord>,
}

impl From<&Trajectory<f64>> for TrajectoryFile {
    fn from(traj: &Trajectory<f64>) -> Self {
        Self {
            nodes: traj
                .nodes()
                .iter()
                .map(|n| NodeRecord {
                    t: n.t,
                    x: arr(n.x),
                    v_left: arr(n.v_left),
                    v_right: arr(n.v_right),
                })
                .collect(),
        }
    }
}

impl TrajectoryFile {
    pub fn to_trajectory(&self) -> Result<Trajectory<f64>> {
        Trajectory::new(
            self.nodes
                .iter()
                .map(|r| Node {
                    t: r.t,
                    x: vec(r.x),
                    v_left: vec(r.v_left),
                    v_right: vec(r.v_right),
                })
                .collect(),
        )
    }
}

fn format_err(e: impl std::fmt::Display) -> Error {
    Error::Format(e.to_string())
}

pub fn trajectory_to_json(traj: &Trajectory<f64>) -> String {
    serde_json::to_string_pretty(&TrajectoryFile::from(traj)).expect("trajectory records serialize")
}

pub fn trajectory_from_json(text: &str) -> Result<Trajectory<f64>> {
    let file: TrajectoryFile = serde_json::from_str(text).map_err(format_err)?;
    file.to_trajectory()
}

pub fn read_trajectory(path: &Path) -> Result<Trajectory<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    trajectory_from_json(&text).map_err(|e| match e {
        Error::Format(m) => Error::Format(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn write_trajectory(path: &Path, traj: &Trajectory<f64>) -> Result<()> {
    std::fs::write(path, trajectory_to_json(traj)).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

/// One row per node and side: `t,x,y,z,vx,vy,vz,side`.
pub fn trajectory_csv(traj: &Trajectory<f64>) -> String {
    let mut out = String::from("t,x,y,z,vx,vy,vz,side\n");
    let nodes = traj.nodes();
    for (k, n) in nodes.iter().enumerate() {
        let mut sides = Vec::with_capacity(2);
        if k > 0 {
            sides.push(("left", n.v_left));
        }
        if k + 1 < nodes.len() {
            sides.push(("right", n.v_right));
        }
        for (name, v) in sides {
            writeln!(out, "{},{},{},{},{},{},{},{name}", n.t, n.x.x, n.x.y, n.x.z, v.x, v.y, v.z).unwrap();
        }
    }
    out
}

/// Plot series over both free ranges: `particle,t,x,y,z,vx,vy,vz,px,py,pz,e`.
/// Uniform sample times plus both sides of every node.
pub fn series_csv(
    traj1: &Trajectory<f64>,
    traj2: &Trajectory<f64>,
    boundary: &BoundaryData<f64>,
    samples: usize,
    cone: &LightConeOptions<f64>,
) -> Result<String> {
    let mut out = String::from("particle,t,x,y,z,vx,vy,vz,px,py,pz,e\n");
    let tm = boundary.times();
    for (p, own) in [(Particle::One, traj1), (Particle::Two, traj2)] {
        let (a, b) = tm.free_range(p);
        let mut pts: Vec<(f64, Side)> = (0..=samples)
            .map(|k| (a + (b - a) * k as f64 / samples.max(1) as f64, Side::Right))
            .collect();
        pts.last_mut().unwrap().1 = Side::Left;
        for t in own.breakpoints() {
            if t > a && t < b {
                pts.push((t, Side::Left));
                pts.push((t, Side::Right));
            }
        }
        pts.sort_by(|x, y| x.0.total_cmp(&y.0).then((x.1 == Side::Right).cmp(&(y.1 == Side::Right))));
        for (t, side) in pts {
            let ev = evaluate_at(traj1, traj2, boundary, p, t, side, cone)?;
            let (x, v, m) = (ev.state.x, ev.state.v, ev.p);
            writeln!(
                out,
                "{},{t},{},{},{},{},{},{},{},{},{},{}",
                p.index() + 1,
                x.x,
                x.y,
                x.z,
                v.x,
                v.y,
                v.z,
                m.x,
                m.y,
                m.z,
                ev.e
            )
            .unwrap();
        }
    }
    Ok(out)
}

/// A trajectory given inline or as a path relative to the problem file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TrajectorySource {
    Inline(TrajectoryFile),
    File(PathBuf),
}

impl TrajectorySource {
    pub fn load(&self, base: &Path) -> Result<Trajectory<f64>> {
        match self {
            Self::Inline(f) => f.to_trajectory(),
            Self::File(p) => read_trajectory(&base.join(p)),
        }
    }
}

/// Boundary data, either explicit or cut from two full paths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BoundarySpec {
    Explicit {
        t_o1: f64,
        o1: [f64; 3],
        t_l2: f64,
        l2: [f64; 3],
        past_segment: TrajectorySource,
        future_segment: TrajectorySource,
    },
    FromPaths {
        traj1: TrajectorySource,
        traj2: TrajectorySource,
        t_o1: f64,
        t_l2: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    #[default]
    Minimize,
    Shoot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub method: Method,
    /// Segments per particle for the minimizer.
    pub nodes: [usize; 2],
    pub gtol: f64,
    pub quad_tol: f64,
    pub max_iter: usize,
    pub r_min: f64,
    pub corner_seed: f64,
    pub seed: u64,
    /// Fixed steps per shot.
    pub steps: usize,
    /// Samples per particle in the CSV series.
    pub series_samples: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            method: Method::Minimize,
            nodes: [16, 16],
            gtol: 1e-8,
            quad_tol: 1e-10,
            max_iter: 20000,
            r_min: 1e-6,
            corner_seed: 0.0,
            seed: 0,
            steps: 200,
            series_samples: 400,
        }
    }
}

/// Problem file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub masses: [f64; 2],
    pub boundary: BoundarySpec,
    #[serde(default)]
    pub solver: SolverConfig,
    /// Optional starting paths for the minimizer.
    #[serde(default)]
    pub initial: Option<[TrajectorySource; 2]>,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl ProblemConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(format_err)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.solver;
        let positive = [("gtol", s.gtol), ("quad_tol", s.quad_tol), ("r_min", s.r_min)];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Format(format!("{name} must be positive, got {v}")));
            }
        }
        if s.nodes.iter().any(|&n| n == 0) || s.steps == 0 || s.max_iter == 0 {
            return Err(Error::Format("nodes, steps and max_iter must be positive".into()));
        }
        if !(s.corner_seed >= 0.0 && s.corner_seed.is_finite()) {
            return Err(Error::Format(format!("corner_seed must be non-negative, got {}", s.corner_seed)));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("problem config serializes")
    }

    /// Resolves the boundary data; file references are relative to `base`.
    pub fn boundary(&self, base: &Path) -> Result<BoundaryData<f64>> {
        let cone = LightConeOptions {
            r_min: self.solver.r_min,
            ..LightConeOptions::default()
        };
        match &self.boundary {
            BoundarySpec::Explicit {
                t_o1,
                o1,
                t_l2,
                l2,
                past_segment,
                future_segment,
            } => {
                let load = |name: &str, src: &TrajectorySource| {
                    src.load(base).map_err(|e| match e {
                        Error::Format(m) => Error::Format(format!("{name}: {m}")),
                        other => Error::InvalidBoundary(format!("{name}: {other}")),
                    })
                };
                BoundaryData::new(
                    self.masses,
                    (*t_o1, vec(*o1)),
                    (*t_l2, vec(*l2)),
                    load("past_segment", past_segment)?,
                    load("future_segment", future_segment)?,
                    1e-9,
                )
            }
            BoundarySpec::FromPaths { traj1, traj2, t_o1, t_l2 } => {
                BoundaryData::from_trajectories(&traj1.load(base)?, &traj2.load(base)?, *t_o1, *t_l2, self.masses, &cone)
            }
        }
    }

    pub fn initial(&self, base: &Path) -> Result<Option<[Trajectory<f64>; 2]>> {
        match &self.initial {
            None => Ok(None),
            Some([a, b]) => Ok(Some([a.load(base)?, b.load(base)?])),
        }
    }
}

/// Writes any serializable report as pretty JSON.
pub fn to_json<S: Serialize>(value: &S) -> String {
    serde_json::to_string_pretty(value).expect("report serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinked() -> Trajectory<f64> {
        Trajectory::new(vec![
            Node::smooth(0.0, Vec3::new(0.1, 1.0 / 3.0, -2.5e-17), Vec3::new(0.2, 0.0, 0.0)),
            Node {
                t: 0.7,
                x: Vec3::new(std::f64::consts::PI / 20.0, 1.0 / 3.0 + 1e-300, 0.0),
                v_left: Vec3::new(0.3, 0.1, 0.0),
                v_right: Vec3::new(-0.2, 0.1, 0.05),
            },
            Node::smooth(2.0, Vec3::new(0.3, 0.4, 0.1), Vec3::new(0.0, 0.0, 0.1)),
        ])
        .unwrap()
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let traj = kinked();
        let back = trajectory_from_json(&trajectory_to_json(&traj)).unwrap();
        assert_eq!(back.nodes(), traj.nodes());
        for t in [0.0, 0.35, 0.7, 1.9] {
            assert_eq!(back.position(t).unwrap(), traj.position(t).unwrap());
        }
    }

    #[test]
    fn csv_has_one_row_per_side() {
        let csv = trajectory_csv(&kinked());
        let rows: Vec<_> = csv.lines().collect();
        assert_eq!(rows[0], "t,x,y,z,vx,vy,vz,side");
        assert_eq!(rows.len(), 1 + 4);
        assert!(rows[2].starts_with("0.7,") && rows[2].ends_with(",left"));
        assert!(rows[3].ends_with(",right") && rows[3].contains(",-0.2,"));
    }

    #[test]
    fn malformed_inputs_are_format_errors() {
        assert!(matches!(trajectory_from_json("{\"nodes\": [}"), Err(Error::Format(_))));
        let cfg = r#"{"masses": [1, 1], "boundary": {"t_o1": 0}}"#;
        assert!(matches!(ProblemConfig::from_json(cfg), Err(Error::Format(_))));
    }

    #[test]
    fn problem_config_defaults_and_validation() {
        let inline = TrajectorySource::Inline(TrajectoryFile::from(&kinked()));
        let cfg = ProblemConfig {
            masses: [1.0, 2.0],
            boundary: BoundarySpec::FromPaths {
                traj1: inline.clone(),
                traj2: TrajectorySource::File("b.json".into()),
                t_o1: 0.0,
                t_l2: 1.0,
            },
            solver: SolverConfig::default(),
            initial: None,
            output: None,
        };
        let back = ProblemConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(back, cfg);

        let mut bad = cfg.clone();
        bad.solver.gtol = -1.0;
        assert!(ProblemConfig::from_json(&bad.to_json()).is_err());
    }
}
