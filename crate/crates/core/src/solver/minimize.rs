//! Direct minimization of the discretized action.
//!
//! Each free path is a piecewise cubic Hermite curve on a fixed grid of node
//! times. The unknowns are the interior node positions and both one-sided
//! velocities at every node; endpoint positions and the velocities of the
//! fixed segments are data. Velocities are scaled by the mean segment length
//! so that all unknowns carry units of length.

use rayon::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::lbfgs::{self, LbfgsOptions};
use crate::action::{kink_times, partner_jump_impulses, ActionOptions};
use crate::error::{Error, Result};
use crate::lagrangian::{kinetic_term, partial_lagrangian, ParticleState};
use crate::lightcone::{solve_deviating_argument, ConeSign, LightConeOptions};
use crate::quadrature::{cells, GaussLegendre};
use crate::scalar::CompensatedSum;
use crate::trajectory::{BoundaryData, Node, Particle, Side, Trajectory, Worldline};
use crate::vec3::Vec3;

const PARTICLES: [Particle; 2] = [Particle::One, Particle::Two];

/// Node times of both free paths.
#[derive(Debug, Clone, PartialEq)]
pub struct Discretization {
    times: [Vec<f64>; 2],
}

impl Discretization {
    /// Node times must start and end at the free-range ends and increase.
    pub fn new(boundary: &BoundaryData<f64>, times: [Vec<f64>; 2]) -> Result<Self> {
        let tm = boundary.times();
        for p in PARTICLES {
            let ts = &times[p.index()];
            let (a, b) = tm.free_range(p);
            if ts.len() < 2 || ts[0] != a || ts[ts.len() - 1] != b {
                return Err(Error::InvalidBoundary(format!(
                    "grid of {p:?} must run from {a} to {b}"
                )));
            }
            if ts.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(Error::InvalidBoundary(format!("grid of {p:?} is not increasing")));
            }
        }
        Ok(Self { times })
    }

    pub fn uniform(boundary: &BoundaryData<f64>, segments: [usize; 2]) -> Result<Self> {
        let tm = boundary.times();
        let grid = |p: Particle| {
            let (a, b) = tm.free_range(p);
            let n = segments[p.index()].max(1);
            (0..=n)
                .map(|k| if k == n { b } else { a + (b - a) * k as f64 / n as f64 })
                .collect::<Vec<_>>()
        };
        Self::new(boundary, [grid(Particle::One), grid(Particle::Two)])
    }

    /// Nodes at `a + k·spacing`; a last gap shorter than half a spacing is
    /// merged into its neighbour.
    pub fn with_spacing(boundary: &BoundaryData<f64>, spacing: f64) -> Result<Self> {
        if !(spacing > 0.0) {
            return Err(Error::InvalidBoundary("grid spacing must be positive".into()));
        }
        let tm = boundary.times();
        let grid = |p: Particle| {
            let (a, b) = tm.free_range(p);
            let mut ts = vec![a];
            let mut k = 1.0;
            while a + k * spacing < b - 0.5 * spacing {
                ts.push(a + k * spacing);
                k += 1.0;
            }
            ts.push(b);
            ts
        };
        Self::new(boundary, [grid(Particle::One), grid(Particle::Two)])
    }

    pub fn times(&self, p: Particle) -> &[f64] {
        &self.times[p.index()]
    }

    pub fn segments(&self, p: Particle) -> usize {
        self.times[p.index()].len() - 1
    }

    pub fn variable_count(&self) -> usize {
        PARTICLES.iter().map(|&p| 9 * self.segments(p) - 3).sum()
    }

    fn mean_spacing(&self, p: Particle) -> f64 {
        let ts = self.times(p);
        (ts[ts.len() - 1] - ts[0]) / self.segments(p) as f64
    }

    /// Base grid with each anchor inserted, replacing a base node closer than
    /// `0.3` of the local spacing.
    fn with_anchors(&self, anchors: &[Vec<f64>; 2]) -> Self {
        let mut times = self.times.clone();
        for p in PARTICLES {
            let ts = &mut times[p.index()];
            let h = self.mean_spacing(p);
            for &s in &anchors[p.index()] {
                let n = ts.len();
                let k = ts.partition_point(|&t| t < s);
                if k == 0 || k == n {
                    continue;
                }
                let (left, right) = (ts[k - 1], ts[k]);
                if right - s < 0.3 * (right - left).min(h) && k < n - 1 {
                    ts[k] = s;
                } else if s - left < 0.3 * (right - left).min(h) && k > 1 {
                    ts[k - 1] = s;
                } else if s - left > 1e-9 * h && right - s > 1e-9 * h {
                    ts.insert(k, s);
                }
            }
        }
        Self { times }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct MinimizeOptions {
    pub lbfgs: LbfgsOptions,
    pub cone: LightConeOptions<f64>,
    /// Gauss-Legendre order of the fixed panels.
    pub quad_order: usize,
    pub panels_per_segment: usize,
    /// Size of the corners opened at the interior nodes of the initial
    /// guess, relative to the velocity scale.
    pub corner_seed: f64,
    /// Seed for the corner directions.
    pub seed: u64,
    /// Sewing-node drift, relative to the panel width, that triggers a new grid.
    pub realign_tol: f64,
    pub max_realign: usize,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self {
            lbfgs: LbfgsOptions::default(),
            cone: LightConeOptions::default(),
            quad_order: 10,
            panels_per_segment: 2,
            corner_seed: 0.0,
            seed: 0,
            realign_tol: 1e-3,
            max_realign: 4,
        }
    }
}

impl MinimizeOptions {
    pub fn from_action(opts: &ActionOptions<f64>) -> Self {
        Self { cone: opts.cone, ..Self::default() }
    }
}

/// Value and gradient of the action as a function of the discrete unknowns.
pub struct ActionObjective<'a> {
    boundary: &'a BoundaryData<f64>,
    disc: Discretization,
    offsets: [usize; 2],
    vscale: [f64; 2],
    rule: GaussLegendre<f64>,
    panel_width: f64,
    cone: LightConeOptions<f64>,
}

#[derive(Clone, Copy)]
enum Slot {
    X,
    VLeft,
    VRight,
}

impl<'a> ActionObjective<'a> {
    pub fn new(boundary: &'a BoundaryData<f64>, disc: Discretization, opts: &MinimizeOptions) -> Self {
        let offsets = [0, 9 * disc.segments(Particle::One) - 3];
        let vscale = [disc.mean_spacing(Particle::One), disc.mean_spacing(Particle::Two)];
        let panel_width = vscale[0].min(vscale[1]) / opts.panels_per_segment.max(1) as f64;
        Self {
            boundary,
            disc,
            offsets,
            vscale,
            rule: GaussLegendre::new(opts.quad_order),
            panel_width,
            cone: opts.cone,
        }
    }

    pub fn dimension(&self) -> usize {
        self.disc.variable_count()
    }

    pub fn discretization(&self) -> &Discretization {
        &self.disc
    }

    fn slot(&self, p: Particle, k: usize, slot: Slot) -> Option<usize> {
        let n = self.disc.segments(p);
        let off = self.offsets[p.index()];
        let interior = |j: usize| off + 3 + 9 * (k - 1) + j;
        match slot {
            Slot::X => (k >= 1 && k < n).then(|| interior(0)),
            Slot::VLeft if k == n => Some(off + 3 + 9 * (n - 1)),
            Slot::VLeft => (k >= 1).then(|| interior(3)),
            Slot::VRight if k == 0 => Some(off),
            Slot::VRight => (k < n).then(|| interior(6)),
        }
    }

    fn put(x: &mut [f64], at: usize, v: Vec3<f64>) {
        x[at..at + 3].copy_from_slice(&v.to_array());
    }

    fn get(x: &[f64], at: usize) -> Vec3<f64> {
        Vec3::new(x[at], x[at + 1], x[at + 2])
    }

    /// Unknowns read off two worldlines covering the free ranges.
    pub fn pack(&self, w1: &dyn Worldline<f64>, w2: &dyn Worldline<f64>) -> Result<Vec<f64>> {
        let mut x = vec![0.0; self.dimension()];
        for (p, w) in [(Particle::One, w1), (Particle::Two, w2)] {
            let s = self.vscale[p.index()];
            for (k, &t) in self.disc.times(p).iter().enumerate() {
                if let Some(i) = self.slot(p, k, Slot::X) {
                    Self::put(&mut x, i, w.position(t)?);
                }
                if let Some(i) = self.slot(p, k, Slot::VLeft) {
                    Self::put(&mut x, i, w.velocity(t, Side::Left)? * s);
                }
                if let Some(i) = self.slot(p, k, Slot::VRight) {
                    Self::put(&mut x, i, w.velocity(t, Side::Right)? * s);
                }
            }
        }
        Ok(x)
    }

    /// Adds `±seed` along a rotating axis to the one-sided velocities of
    /// every interior node.
    /// Opens a corner of size `amplitude` (relative to the velocity scale)
    /// at every interior node, in directions drawn from `rng_seed`.
    pub fn seed_corners(&self, x: &mut [f64], amplitude: f64, rng_seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
        for p in PARTICLES {
            let s = self.vscale[p.index()];
            for k in 1..self.disc.segments(p) {
                let dir = loop {
                    let d = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                    let n = d.norm();
                    if n > 0.1 && n <= 1.0 {
                        break d / n;
                    }
                };
                let e = dir * (amplitude * s);
                let (l, r) = (self.slot(p, k, Slot::VLeft).unwrap(), self.slot(p, k, Slot::VRight).unwrap());
                Self::put(x, l, Self::get(x, l) - e);
                Self::put(x, r, Self::get(x, r) + e);
            }
        }
    }

    pub fn free_paths(&self, x: &[f64]) -> Result<[Trajectory<f64>; 2]> {
        let build = |p: Particle| -> Result<Trajectory<f64>> {
            let ts = self.disc.times(p);
            let n = ts.len() - 1;
            let (xa, xb) = self.boundary.free_endpoints(p);
            let s = self.vscale[p.index()];
            let nodes = ts
                .iter()
                .enumerate()
                .map(|(k, &t)| {
                    let pos = match self.slot(p, k, Slot::X) {
                        Some(i) => Self::get(x, i),
                        None if k == 0 => xa,
                        None => xb,
                    };
                    let vl = self.slot(p, k, Slot::VLeft).map(|i| Self::get(x, i) / s);
                    let vr = self.slot(p, k, Slot::VRight).map(|i| Self::get(x, i) / s);
                    let (vl, vr) = match (vl, vr) {
                        (Some(l), Some(r)) => (l, r),
                        (None, Some(r)) => (r, r),
                        (Some(l), None) => (l, l),
                        (None, None) => unreachable!("node {k} of {n} has no velocity"),
                    };
                    Node { t, x: pos, v_left: vl, v_right: vr }
                })
                .collect();
            Trajectory::new(nodes)
        };
        Ok([build(Particle::One)?, build(Particle::Two)?])
    }

    /// Full paths (free parts joined with the fixed segments).
    pub fn paths(&self, x: &[f64]) -> Result<(Trajectory<f64>, Trajectory<f64>)> {
        let [f1, f2] = self.free_paths(x)?;
        self.boundary.assemble(&f1, &f2)
    }

    fn integrate<F>(&self, f: &F, a: f64, b: f64, kinks: &[f64]) -> Result<f64>
    where
        F: Fn(f64) -> Result<f64> + Sync,
    {
        let parts: Vec<f64> = cells(a, b, kinks)
            .par_iter()
            .map(|&(lo, hi)| {
                let n = ((hi - lo) / self.panel_width).ceil().max(1.0) as usize;
                self.rule.integrate_panels(f, lo, hi, n)
            })
            .collect::<Result<_>>()?;
        let mut acc = CompensatedSum::new();
        parts.into_iter().for_each(|v| acc.add(v));
        Ok(acc.value())
    }

    /// The action in the form anchored on particle 1's time, on fixed panels.
    pub fn action_of(&self, traj1: &Trajectory<f64>, traj2: &Trajectory<f64>) -> Result<f64> {
        let tm = self.boundary.times();
        let mut total = CompensatedSum::new();
        for (p, own) in [(Particle::One, traj1), (Particle::Two, traj2)] {
            let m = self.boundary.mass(p);
            let f = |t: f64| -> Result<f64> {
                Ok(kinetic_term(&ParticleState::on(p, own, t, Side::Right, m)?))
            };
            let (a, b) = tm.free_range(p);
            total.add(self.integrate(&f, a, b, &own.breakpoints())?);
        }
        for (sign, end) in [(ConeSign::Retarded, tm.l2_plus), (ConeSign::Advanced, tm.l2_minus)] {
            let f = |t: f64| -> Result<f64> {
                let x = traj1.position(t)?;
                let v = traj1.velocity(t, Side::Right)?;
                let sol = solve_deviating_argument(traj2, t, x, sign, &self.cone)?;
                Ok((1.0 - v.dot(sol.v_dev)) / (2.0 * sol.r * sol.denominator()))
            };
            let kinks = kink_times(traj1, traj2, &[sign], &self.cone)?;
            total.add(self.integrate(&f, tm.o1, end, &kinks)?);
        }
        Ok(total.value())
    }

    /// First variation along every unknown: `∫ ∂L_i/∂x·φ + P_i·φ̇` over the
    /// support of each Hermite basis function `φ`.
    pub fn gradient_of(&self, traj1: &Trajectory<f64>, traj2: &Trajectory<f64>) -> Result<Vec<f64>> {
        let mut grad = vec![0.0; self.dimension()];
        for p in PARTICLES {
            let (own, other) = match p {
                Particle::One => (traj1, traj2),
                Particle::Two => (traj2, traj1),
            };
            let m = self.boundary.mass(p);
            let ts = self.disc.times(p);
            let kinks = kink_times(own, other, &[ConeSign::Retarded, ConeSign::Advanced], &self.cone)?;
            let cs = cells(ts[0], ts[ts.len() - 1], &kinks);
            let parts: Vec<(usize, [f64; 12])> = cs
                .par_iter()
                .map(|&(lo, hi)| -> Result<(usize, [f64; 12])> {
                    let mid = 0.5 * (lo + hi);
                    let k = ts.partition_point(|&t| t <= mid) - 1;
                    let (t0, h) = (ts[k], ts[k + 1] - ts[k]);
                    let n = ((hi - lo) / self.panel_width).ceil().max(1.0) as usize;
                    let w = (hi - lo) / n as f64;
                    let mut acc = [0.0; 12];
                    for j in 0..n {
                        let a = lo + w * j as f64;
                        let b = if j + 1 == n { hi } else { a + w };
                        for (t, wt) in self.rule.mapped(a, b) {
                            let s = ParticleState::on(p, own, t, Side::Right, m)?;
                            let ev = partial_lagrangian(&s, other, &self.cone)?;
                            let basis = hermite_basis((t - t0) / h, h);
                            for (b, (phi, dphi)) in basis.iter().enumerate() {
                                for c in 0..3 {
                                    acc[3 * b + c] += wt * (ev.grad_x[c] * phi + ev.p[c] * dphi);
                                }
                            }
                        }
                    }
                    Ok((k, acc))
                })
                .collect::<Result<Vec<_>>>()?;
            let mut parts = parts;
            parts.extend(self.moving_jumps(p, own, other)?);
            let s = self.vscale[p.index()];
            for (k, acc) in parts {
                let targets = [
                    (self.slot(p, k, Slot::X), 1.0),
                    (self.slot(p, k, Slot::VRight), 1.0 / s),
                    (self.slot(p, k + 1, Slot::X), 1.0),
                    (self.slot(p, k + 1, Slot::VLeft), 1.0 / s),
                ];
                for (b, (slot, scale)) in targets.into_iter().enumerate() {
                    if let Some(i) = slot {
                        for c in 0..3 {
                            grad[i + c] += acc[3 * b + c] * scale;
                        }
                    }
                }
            }
        }
        Ok(grad)
    }

    /// Point terms of the first variation at the images of partner velocity
    /// jumps, spread over the Hermite position bases.
    fn moving_jumps(&self, p: Particle, own: &Trajectory<f64>, other: &Trajectory<f64>) -> Result<Vec<(usize, [f64; 12])>> {
        let ts = self.disc.times(p);
        let range = (ts[0], ts[ts.len() - 1]);
        let mut out = Vec::new();
        for (t, j) in partner_jump_impulses(own, other, range, &self.cone)? {
            let k = (ts.partition_point(|&s| s <= t) - 1).min(ts.len() - 2);
            let (t0, h) = (ts[k], ts[k + 1] - ts[k]);
            let mut acc = [0.0; 12];
            for (b, (phi, _)) in hermite_basis((t - t0) / h, h).iter().enumerate() {
                for c in 0..3 {
                    acc[3 * b + c] = j[c] * phi;
                }
            }
            out.push((k, acc));
        }
        Ok(out)
    }

    pub fn value(&self, x: &[f64]) -> Result<f64> {
        let (t1, t2) = self.paths(x)?;
        self.action_of(&t1, &t2)
    }

    pub fn value_and_gradient(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        let (t1, t2) = self.paths(x)?;
        Ok((self.action_of(&t1, &t2)?, self.gradient_of(&t1, &t2)?))
    }

    /// Like [`Self::value_and_gradient`] but maps inadmissible iterates
    /// (superluminal segments, collisions, lost light-cone images) to `None`.
    fn feasible(&self, x: &[f64]) -> Result<Option<(f64, Vec<f64>)>> {
        match self.value_and_gradient(x) {
            Ok(v) => Ok(Some(v)),
            Err(Error::SuperLuminal { .. } | Error::Collision { .. } | Error::SpanExhausted { .. }) => {
                Ok(None)
            }
            Err(e) => Err(e),
        }
    }
}

#[derive(Debug, Clone)]
pub struct MinimizeOutcome {
    pub traj1: Trajectory<f64>,
    pub traj2: Trajectory<f64>,
    pub discretization: Discretization,
    pub action: f64,
    pub gradient_norm: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    /// Accepted objective values of the last grid.
    pub history: Vec<f64>,
    /// Number of grid rebuilds after the first run.
    pub realignments: usize,
}

/// Value and time derivative of the four cubic Hermite bases at `u` on a
/// segment of length `h`: position and velocity at the left node, then at
/// the right node.
fn hermite_basis(u: f64, h: f64) -> [(f64, f64); 4] {
    let (u2, u3) = (u * u, u * u * u);
    [
        (2.0 * u3 - 3.0 * u2 + 1.0, (6.0 * u2 - 6.0 * u) / h),
        (h * (u3 - 2.0 * u2 + u), 3.0 * u2 - 4.0 * u + 1.0),
        (-2.0 * u3 + 3.0 * u2, (-6.0 * u2 + 6.0 * u) / h),
        (h * (u3 - u2), 3.0 * u2 - 2.0 * u),
    ]
}

fn jump_nodes(seg: &Trajectory<f64>) -> Vec<f64> {
    let nodes = seg.nodes();
    nodes[1..nodes.len() - 1]
        .iter()
        .filter(|n| n.jump().norm() > 1e-12 * (1.0 + n.v_left.norm()))
        .map(|n| n.t)
        .collect()
}

/// Times on the free ranges linked by light-cones to a velocity jump of the
/// fixed data: the junctions of the fixed segments with the free parts and
/// jump nodes inside the segments, followed along both cones.
fn sewing_anchors(
    boundary: &BoundaryData<f64>,
    traj1: &Trajectory<f64>,
    traj2: &Trajectory<f64>,
    cone: &LightConeOptions<f64>,
) -> Result<[Vec<f64>; 2]> {
    let tm = boundary.times();
    let mut queue: Vec<(Particle, f64)> = vec![(Particle::Two, tm.o1_plus), (Particle::One, tm.l2_minus)];
    queue.extend(jump_nodes(&boundary.past_segment).into_iter().map(|t| (Particle::Two, t)));
    queue.extend(jump_nodes(&boundary.future_segment).into_iter().map(|t| (Particle::One, t)));
    let mut anchors: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
    let path = |p: Particle| match p {
        Particle::One => traj1,
        Particle::Two => traj2,
    };
    while let Some((q, tau)) = queue.pop() {
        let own = q.other();
        let x = path(q).position(tau)?;
        let (lo, hi) = tm.free_range(own);
        let margin = 1e-9 * (hi - lo);
        for sign in [ConeSign::Retarded, ConeSign::Advanced] {
            let t = match solve_deviating_argument(path(own), tau, x, sign, cone) {
                Ok(sol) => sol.t_dev,
                Err(Error::SpanExhausted { .. }) => continue,
                Err(e) => return Err(e),
            };
            let list = &mut anchors[own.index()];
            if t > lo + margin && t < hi - margin && list.iter().all(|&s| (s - t).abs() > margin) {
                if list.len() > 10_000 {
                    return Err(Error::InvalidBoundary("sewing chain does not terminate".into()));
                }
                list.push(t);
                queue.push((own, t));
            }
        }
    }
    for a in anchors.iter_mut() {
        a.sort_by(|x, y| x.partial_cmp(y).unwrap());
    }
    Ok(anchors)
}

fn anchor_drift(old: &[Vec<f64>; 2], new: &[Vec<f64>; 2]) -> f64 {
    let mut drift: f64 = 0.0;
    for (o, n) in old.iter().zip(new) {
        if o.len() != n.len() {
            return f64::INFINITY;
        }
        for (a, b) in o.iter().zip(n) {
            drift = drift.max((a - b).abs());
        }
    }
    drift
}

/// Minimizes the action over the discrete free paths.
///
/// `initial` supplies worldlines covering both free ranges; by default the
/// free paths start as straight lines between their fixed endpoints. Grid
/// nodes are placed at the sewing anchors and the grid is rebuilt while they
/// drift by more than `realign_tol` panel widths.
pub fn minimize_action(
    boundary: &BoundaryData<f64>,
    base: &Discretization,
    initial: Option<(&dyn Worldline<f64>, &dyn Worldline<f64>)>,
    opts: &MinimizeOptions,
) -> Result<MinimizeOutcome> {
    let tm = boundary.times();
    let line = |p: Particle| -> Result<Trajectory<f64>> {
        let (a, b) = tm.free_range(p);
        let (xa, xb) = boundary.free_endpoints(p);
        Trajectory::uniform(xa, (xb - xa) / (b - a), a, a, b)
    };
    let (mut guess1, mut guess2): (Trajectory<f64>, Trajectory<f64>) = match initial {
        Some((w1, w2)) => {
            let d = base.with_anchors(&[Vec::new(), Vec::new()]);
            let obj = ActionObjective::new(boundary, d, opts);
            let [f1, f2] = obj.free_paths(&obj.pack(w1, w2)?)?;
            (f1, f2)
        }
        None => (line(Particle::One)?, line(Particle::Two)?),
    };
    let (full1, full2) = boundary.assemble(&guess1, &guess2)?;
    let mut anchors = sewing_anchors(boundary, &full1, &full2, &opts.cone)?;
    let mut evaluations = 0;
    let mut realignments = 0;
    loop {
        let disc = base.with_anchors(&anchors);
        let obj = ActionObjective::new(boundary, disc, opts);
        let mut x0 = obj.pack(&guess1, &guess2)?;
        if realignments == 0 && opts.corner_seed != 0.0 {
            obj.seed_corners(&mut x0, opts.corner_seed, opts.seed);
        }
        let res = lbfgs::minimize(|x| obj.feasible(x), x0, &opts.lbfgs)?;
        evaluations += res.evaluations;
        let (t1, t2) = obj.paths(&res.x)?;
        let next = sewing_anchors(boundary, &t1, &t2, &opts.cone)?;
        let drift = anchor_drift(&anchors, &next);
        // a stalled run restarts on the realigned grid with fresh curvature memory
        let settled = drift <= opts.realign_tol * obj.panel_width && !res.stalled;
        if settled || realignments >= opts.max_realign {
            return Ok(MinimizeOutcome {
                traj1: t1,
                traj2: t2,
                discretization: obj.disc.clone(),
                action: res.f,
                gradient_norm: res.grad_norm,
                iterations: res.iterations,
                evaluations,
                converged: res.converged && settled,
                history: res.history,
                realignments,
            });
        }
        let [f1, f2] = obj.free_paths(&res.x)?;
        guess1 = f1;
        guess2 = f2;
        anchors = next;
        realignments += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn drifting_boundary(kink: bool) -> BoundaryData<f64> {
        let t1 = Trajectory::uniform(Vec3::new(-3.0, 0.0, 0.0), Vec3::new(0.05, 0.02, 0.0), 0.0, -60.0, 60.0).unwrap();
        let u2 = Vec3::new(-0.03, 0.04, 0.01);
        let mut t2 = Trajectory::uniform(Vec3::new(3.0, 0.0, 0.0), u2, 0.0, -60.0, 60.0).unwrap();
        if kink {
            // velocity jump of particle 2 inside its past segment
            let x = t2.position(-2.0).unwrap();
            let before = Trajectory::uniform(x, u2, -2.0, -60.0, -2.0).unwrap();
            let after = Trajectory::uniform(x, Vec3::new(-0.1, 0.0, 0.05), -2.0, -2.0, 60.0).unwrap();
            t2 = before.concat(&after).unwrap();
        }
        BoundaryData::from_trajectories(&t1, &t2, 0.0, 8.0, [1.0, 1.5], &LightConeOptions::default()).unwrap()
    }

    /// Straight-line unknowns with a deterministic wobble so that corners
    /// and curvature are present.
    fn wobbly_point(obj: &ActionObjective<'_>, bd: &BoundaryData<f64>) -> Vec<f64> {
        let tm = bd.times();
        let line = |p: Particle| {
            let (a, b) = tm.free_range(p);
            let (xa, xb) = bd.free_endpoints(p);
            Trajectory::uniform(xa, (xb - xa) / (b - a), a, a, b).unwrap()
        };
        let mut x = obj.pack(&line(Particle::One), &line(Particle::Two)).unwrap();
        for (i, v) in x.iter_mut().enumerate() {
            *v += 0.02 * ((i as f64) * 0.7).sin();
        }
        x
    }

    fn check_gradient(kink: bool) {
        let bd = drifting_boundary(kink);
        let disc = Discretization::uniform(&bd, [4, 5]).unwrap();
        let obj = ActionObjective::new(&bd, disc, &MinimizeOptions::default());
        let x = wobbly_point(&obj, &bd);
        let (_, g) = obj.value_and_gradient(&x).unwrap();
        let gmax = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let eps = 1e-5;
        for i in 0..x.len() {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[i] += eps;
            xm[i] -= eps;
            let fd = (obj.value(&xp).unwrap() - obj.value(&xm).unwrap()) / (2.0 * eps);
            // central differences carry O(eps²) truncation and ~1e-11 rounding
            let tol = 1e-6 * g[i].abs().max(1e-3 * gmax);
            assert!((fd - g[i]).abs() <= tol, "coordinate {i}: fd {fd:e}, gradient {:e}", g[i]);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        check_gradient(false);
    }

    #[test]
    fn gradient_includes_moving_partner_jumps() {
        check_gradient(true);
    }

    #[test]
    fn zero_iterations_leave_the_guess_unchanged() {
        let bd = drifting_boundary(false);
        let disc = Discretization::uniform(&bd, [3, 3]).unwrap();
        let mut opts = MinimizeOptions::default();
        opts.lbfgs.gtol = 1e9;
        let out = minimize_action(&bd, &disc, None, &opts).unwrap();
        assert_eq!(out.iterations, 0);
        assert!(out.converged);
        let tm = bd.times();
        for (p, traj) in [(Particle::One, &out.traj1), (Particle::Two, &out.traj2)] {
            let (a, b) = tm.free_range(p);
            let (xa, xb) = bd.free_endpoints(p);
            let v = (xb - xa) / (b - a);
            for n in traj.nodes().iter().filter(|n| n.t >= a && n.t <= b) {
                assert!((n.x - (xa + v * (n.t - a))).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn grid_validation() {
        let bd = drifting_boundary(false);
        let (a, b) = bd.times().free_range(Particle::One);
        let good = Discretization::uniform(&bd, [2, 2]).unwrap();
        let two = good.times(Particle::Two).to_vec();
        assert!(Discretization::new(&bd, [vec![a, 0.5 * (a + b), b], two.clone()]).is_ok());
        assert!(Discretization::new(&bd, [vec![a + 0.1, b], two.clone()]).is_err());
        assert!(Discretization::new(&bd, [vec![a, b, b], two]).is_err());
        assert_eq!(good.variable_count(), 2 * (9 * 2 - 3));
        assert!(Discretization::with_spacing(&bd, 0.0).is_err());
    }
}
