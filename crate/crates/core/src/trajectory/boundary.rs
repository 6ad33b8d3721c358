use super::{Particle, Trajectory, Worldline};
use crate::error::{Error, Result};
use crate::lightcone::{solve_deviating_argument, ConeSign, LightConeOptions};
use crate::scalar::{lit, Real};
use crate::vec3::Vec3;

/// The six times that delimit the integration ranges.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryTimes<T> {
    pub o1: T,
    pub o1_minus: T,
    pub o1_plus: T,
    pub l2: T,
    pub l2_minus: T,
    pub l2_plus: T,
}

impl<T: Real> BoundaryTimes<T> {
    /// Range on which the particle's path is unknown.
    pub fn free_range(&self, p: Particle) -> (T, T) {
        match p {
            Particle::One => (self.o1, self.l2_minus),
            Particle::Two => (self.o1_plus, self.l2),
        }
    }

    /// Range the particle's full path (free part plus fixed segment) covers.
    pub fn full_range(&self, p: Particle) -> (T, T) {
        match p {
            Particle::One => (self.o1, self.l2_plus),
            Particle::Two => (self.o1_minus, self.l2),
        }
    }
}

/// Boundary data: the initial point `O1` of particle 1, the final point `L2`
/// of particle 2, and the two fixed segments inside their light-cones.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryData<T> {
    pub masses: [T; 2],
    pub t_o1: T,
    pub o1: Vec3<T>,
    pub t_l2: T,
    pub l2: Vec3<T>,
    /// Particle 2 on `[t_O1⁻, t_O1⁺]`.
    pub past_segment: Trajectory<T>,
    /// Particle 1 on `[t_L2⁻, t_L2⁺]`.
    pub future_segment: Trajectory<T>,
}

impl<T: Real> BoundaryData<T> {
    /// Validates masses, segment endpoints on the light-cones of `O1` and
    /// `L2`, and non-empty free ranges.
    pub fn new(
        masses: [T; 2],
        (t_o1, o1): (T, Vec3<T>),
        (t_l2, l2): (T, Vec3<T>),
        past_segment: Trajectory<T>,
        future_segment: Trajectory<T>,
        tol: T,
    ) -> Result<Self> {
        if !(masses[0] > T::zero() && masses[1] > T::zero()) {
            return Err(Error::InvalidBoundary("masses must be positive".into()));
        }
        let check = |name: &str, seg: &Trajectory<T>, t0: T, x0: Vec3<T>| -> Result<()> {
            let (a, b) = seg.span();
            for (label, s, sign) in [("past", a, -T::one()), ("future", b, T::one())] {
                let r = (x0 - seg.position(s)?).norm();
                let res = s - t0 - sign * r;
                if res.abs() > tol * (T::one() + s.abs()) {
                    return Err(Error::InvalidBoundary(format!(
                        "{name} segment {label} endpoint t = {s} misses the light-cone by {res}"
                    )));
                }
            }
            Ok(())
        };
        check("past", &past_segment, t_o1, o1)?;
        check("future", &future_segment, t_l2, l2)?;
        let bd = Self {
            masses,
            t_o1,
            o1,
            t_l2,
            l2,
            past_segment,
            future_segment,
        };
        let tm = bd.times();
        if !(tm.o1 < tm.l2_minus && tm.o1_plus < tm.l2) {
            return Err(Error::InvalidBoundary(format!(
                "empty free range: t_O1 = {}, t_L2- = {}, t_O1+ = {}, t_L2 = {}",
                tm.o1, tm.l2_minus, tm.o1_plus, tm.l2
            )));
        }
        Ok(bd)
    }

    /// Reads the boundary data off two full paths: `O1` is taken at `t_o1`
    /// on path 1, `L2` at `t_l2` on path 2, and the segments are exact slices.
    pub fn from_trajectories(
        traj1: &Trajectory<T>,
        traj2: &Trajectory<T>,
        t_o1: T,
        t_l2: T,
        masses: [T; 2],
        opts: &LightConeOptions<T>,
    ) -> Result<Self> {
        let o1 = traj1.position(t_o1)?;
        let l2 = traj2.position(t_l2)?;
        let o1m = solve_deviating_argument(traj2, t_o1, o1, ConeSign::Retarded, opts)?;
        let o1p = solve_deviating_argument(traj2, t_o1, o1, ConeSign::Advanced, opts)?;
        let l2m = solve_deviating_argument(traj1, t_l2, l2, ConeSign::Retarded, opts)?;
        let l2p = solve_deviating_argument(traj1, t_l2, l2, ConeSign::Advanced, opts)?;
        let past = traj2.slice(o1m.t_dev, o1p.t_dev)?;
        let future = traj1.slice(l2m.t_dev, l2p.t_dev)?;
        Self::new(masses, (t_o1, o1), (t_l2, l2), past, future, lit(1e-9))
    }

    /// Same as [`Self::from_trajectories`] for arbitrary worldlines, sampling
    /// each fixed segment at `samples` uniformly spaced Hermite nodes.
    pub fn from_worldlines<W1, W2>(
        w1: &W1,
        w2: &W2,
        t_o1: T,
        t_l2: T,
        masses: [T; 2],
        samples: usize,
        opts: &LightConeOptions<T>,
    ) -> Result<Self>
    where
        W1: Worldline<T> + ?Sized,
        W2: Worldline<T> + ?Sized,
    {
        let o1 = w1.position(t_o1)?;
        let l2 = w2.position(t_l2)?;
        let o1m = solve_deviating_argument(w2, t_o1, o1, ConeSign::Retarded, opts)?;
        let o1p = solve_deviating_argument(w2, t_o1, o1, ConeSign::Advanced, opts)?;
        let l2m = solve_deviating_argument(w1, t_l2, l2, ConeSign::Retarded, opts)?;
        let l2p = solve_deviating_argument(w1, t_l2, l2, ConeSign::Advanced, opts)?;
        let grid = |a: T, b: T| -> Vec<T> {
            let n = samples.max(2);
            (0..n)
                .map(|k| {
                    if k == n - 1 {
                        b
                    } else {
                        a + (b - a) * T::from_usize(k) / T::from_usize(n - 1)
                    }
                })
                .collect()
        };
        let past = Trajectory::sample(w2, &grid(o1m.t_dev, o1p.t_dev))?;
        let future = Trajectory::sample(w1, &grid(l2m.t_dev, l2p.t_dev))?;
        Self::new(masses, (t_o1, o1), (t_l2, l2), past, future, lit(1e-9))
    }

    pub fn times(&self) -> BoundaryTimes<T> {
        BoundaryTimes {
            o1: self.t_o1,
            o1_minus: self.past_segment.start(),
            o1_plus: self.past_segment.end(),
            l2: self.t_l2,
            l2_minus: self.future_segment.start(),
            l2_plus: self.future_segment.end(),
        }
    }

    pub fn mass(&self, p: Particle) -> T {
        self.masses[p.index()]
    }

    /// Fixed endpoint positions of a particle's free range.
    pub fn free_endpoints(&self, p: Particle) -> (Vec3<T>, Vec3<T>) {
        match p {
            Particle::One => (self.o1, self.future_segment.nodes()[0].x),
            Particle::Two => (
                self.past_segment.nodes()[self.past_segment.nodes().len() - 1].x,
                self.l2,
            ),
        }
    }

    /// Joins free parts with the fixed segments into full paths.
    pub fn assemble(
        &self,
        free1: &Trajectory<T>,
        free2: &Trajectory<T>,
    ) -> Result<(Trajectory<T>, Trajectory<T>)> {
        let tm = self.times();
        for (p, tr) in [(Particle::One, free1), (Particle::Two, free2)] {
            let (a, b) = tm.free_range(p);
            if tr.start() != a || tr.end() != b {
                return Err(Error::InvalidBoundary(format!(
                    "free path of {p:?} spans [{}, {}], expected [{a}, {b}]",
                    tr.start(),
                    tr.end()
                )));
            }
        }
        Ok((
            free1.concat(&self.future_segment)?,
            self.past_segment.concat(free2)?,
        ))
    }

    /// Checks that full paths pass through `O1`, `L2` and agree with the
    /// fixed segments at their nodes.
    pub fn check_paths(&self, traj1: &dyn Worldline<T>, traj2: &dyn Worldline<T>) -> Result<()> {
        let tm = self.times();
        for (p, tr) in [(Particle::One, traj1), (Particle::Two, traj2)] {
            let (a, b) = tm.full_range(p);
            let (s, e) = tr.span();
            if s > a || e < b {
                return Err(Error::InvalidBoundary(format!(
                    "path of {p:?} spans [{s}, {e}] but [{a}, {b}] is required"
                )));
            }
        }
        let tol = lit::<T>(1e-9);
        let close = |a: Vec3<T>, b: Vec3<T>| (a - b).max_abs() <= tol * (T::one() + a.max_abs());
        if !close(traj1.position(self.t_o1)?, self.o1) || !close(traj2.position(self.t_l2)?, self.l2)
        {
            return Err(Error::InvalidBoundary("paths miss O1 or L2".into()));
        }
        for (seg, tr) in [(&self.past_segment, traj2), (&self.future_segment, traj1)] {
            for n in seg.nodes() {
                if !close(tr.position(n.t)?, n.x) {
                    return Err(Error::InvalidBoundary(format!(
                        "path deviates from the fixed segment at t = {}",
                        n.t
                    )));
                }
            }
        }
        Ok(())
    }
}
