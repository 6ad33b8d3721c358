//! Shooting for boundary data of shortest length.
//!
//! On a shortest boundary each particle's retarded data lie in the past
//! segment or in the partner's free part, and its advanced data in the future
//! segment or the partner's free part. The free parts are therefore found by
//! alternating single-particle shots: with the partner's path frozen, the
//! equations of motion `ẋ = v(P + A)`, `Ṗ = ∂L/∂x` form an ordinary initial
//! value problem, and Newton's method adjusts the initial momentum until the
//! path meets its fixed far endpoint.

use crate::error::{Error, Result};
use crate::lagrangian::{evaluate_with_cones, gamma, solve_cones, velocity_from_kinetic_momentum, ParticleState};
use crate::lightcone::{solve_deviating_argument, ConeSign, LightConeOptions};
use crate::trajectory::{BoundaryData, Node, Particle, Side, Trajectory, Worldline};
use crate::vec3::Vec3;

#[derive(Debug, Clone, Copy)]
pub struct ShootingOptions {
    /// Minimum number of Runge-Kutta steps across a free range.
    pub steps: usize,
    /// Endpoint miss accepted by the Newton iteration.
    pub newton_tol: f64,
    pub max_newton: usize,
    /// Sup-norm change of the free paths that ends the outer iteration.
    pub picard_tol: f64,
    pub max_picard: usize,
    pub cone: LightConeOptions<f64>,
}

impl Default for ShootingOptions {
    fn default() -> Self {
        Self {
            steps: 200,
            newton_tol: 1e-11,
            max_newton: 60,
            picard_tol: 1e-10,
            max_picard: 200,
            cone: LightConeOptions::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ShootingOutcome {
    pub traj1: Trajectory<f64>,
    pub traj2: Trajectory<f64>,
    /// Canonical momenta at the start of each free range.
    pub initial_momenta: [Vec3<f64>; 2],
    pub picard_iterations: usize,
    pub newton_iterations: usize,
    pub endpoint_miss: [f64; 2],
    /// Last sup-norm change of the free paths.
    pub picard_change: f64,
    /// Largest embedded local error estimate of the final shots.
    pub max_local_error: f64,
}

/// Fails with [`Error::NotShortestBoundary`] unless every retarded image of
/// particle 1's free range lies in the past segment and every advanced image
/// of particle 2's free range lies in the future segment.
pub fn check_shortest_boundary(boundary: &BoundaryData<f64>, cone: &LightConeOptions<f64>) -> Result<()> {
    let tm = boundary.times();
    let (_, x1_end) = boundary.free_endpoints(Particle::One);
    let (x2_start, _) = boundary.free_endpoints(Particle::Two);
    let past = &boundary.past_segment;
    let future = &boundary.future_segment;
    match solve_deviating_argument(past, tm.l2_minus, x1_end, ConeSign::Retarded, cone) {
        Ok(_) => {}
        Err(Error::SpanExhausted { .. }) => {
            return Err(Error::NotShortestBoundary(format!(
                "the retarded image of t = {} on particle 2 falls after t_O1+ = {}",
                tm.l2_minus, tm.o1_plus
            )))
        }
        Err(e) => return Err(e),
    }
    match solve_deviating_argument(future, tm.o1_plus, x2_start, ConeSign::Advanced, cone) {
        Ok(_) => Ok(()),
        Err(Error::SpanExhausted { .. }) => Err(Error::NotShortestBoundary(format!(
            "the advanced image of t = {} on particle 1 falls before t_L2- = {}",
            tm.o1_plus, tm.l2_minus
        ))),
        Err(e) => Err(e),
    }
}

// Dormand-Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

type State = [Vec3<f64>; 2];

/// Single-particle initial value problem with the partner frozen. On a
/// shortest boundary each cone sees exactly one piece of the partner's path,
/// so the retarded and advanced data are read from separate pieces, each
/// continued linearly past its ends; the junction between the pieces never
/// enters.
struct Shooter<'a> {
    particle: Particle,
    mass: f64,
    /// Partner pieces seen by the retarded and the advanced cone.
    partners: [&'a Trajectory<f64>; 2],
    range: (f64, f64),
    start: Vec3<f64>,
    /// Per cone, the partner times whose crossings are step ends.
    sources: [Vec<f64>; 2],
    steps: usize,
    cone: LightConeOptions<f64>,
}

struct Shot {
    nodes: Vec<Node<f64>>,
    end: Vec3<f64>,
    max_error: f64,
}

/// Right-hand side at a point: own velocity, `(ẋ, Ṗ)`, and the retarded and
/// advanced times on the partner.
struct Rhs {
    v: Vec3<f64>,
    dy: State,
    t_dev: [f64; 2],
}

struct Step {
    y: State,
    end: Rhs,
    error: f64,
}

impl Shooter<'_> {
    fn rhs(&self, t: f64, y: &State, side: Side) -> Result<Rhs> {
        self.rhs_on(self.partners, t, y, side)
    }

    fn rhs_on(&self, partners: [&Trajectory<f64>; 2], t: f64, y: &State, side: Side) -> Result<Rhs> {
        let s0 = ParticleState::new(self.particle, t, y[0], Vec3::zero(), self.mass);
        let ret = solve_deviating_argument(partners[0], t, y[0], ConeSign::Retarded, &self.cone)?;
        let adv = solve_deviating_argument(partners[1], t, y[0], ConeSign::Advanced, &self.cone)?;
        let a = evaluate_with_cones(&s0, &ret, &adv, side).a;
        let v = velocity_from_kinetic_momentum(y[1] + a, self.mass);
        let s = ParticleState { v, ..s0 };
        let ev = evaluate_with_cones(&s, &ret, &adv, side);
        Ok(Rhs { v, dy: [v, ev.grad_x], t_dev: [ret.t_dev, adv.t_dev] })
    }

    /// One Dormand-Prince step; the end point is evaluated with left limits.
    fn step_on(&self, partners: [&Trajectory<f64>; 2], t: f64, y: &State, k1: &State, h: f64) -> Result<Step> {
        let mut k: [State; 7] = [*k1; 7];
        let mut ys = *y;
        let mut last = None;
        for s in 1..7 {
            ys = *y;
            for (j, kj) in k.iter().enumerate().take(s) {
                let w = A[s][j] * h;
                if w != 0.0 {
                    ys[0] += kj[0] * w;
                    ys[1] += kj[1] * w;
                }
            }
            let side = if C[s] < 1.0 { Side::Right } else { Side::Left };
            let r = self.rhs_on(partners, t + C[s] * h, &ys, side)?;
            k[s] = r.dy;
            last = Some(r);
        }
        let mut err = [Vec3::zero(); 2];
        for (j, kj) in k.iter().enumerate() {
            let d = B4[j] - if j < 6 { A[6][j] } else { 0.0 };
            err[0] += kj[0] * (d * h);
            err[1] += kj[1] * (d * h);
        }
        Ok(Step { y: ys, end: last.unwrap(), error: err[0].max_abs().max(err[1].max_abs()) })
    }

    /// Earliest partner source crossed by either deviating time on a step,
    /// as `(cone, τ, linear estimate of the step length)`.
    fn crossing(&self, from: [f64; 2], to: [f64; 2], h: f64) -> Option<(usize, f64, f64)> {
        let mut best: Option<(usize, f64, f64)> = None;
        for c in 0..2 {
            let first = self.sources[c].partition_point(|&tau| tau <= from[c]);
            if let Some(&tau) = self.sources[c].get(first) {
                if tau <= to[c] {
                    let est = h * (tau - from[c]) / (to[c] - from[c]);
                    if best.map_or(true, |b| est < b.2) {
                        best = Some((c, tau, est));
                    }
                }
            }
        }
        best
    }

    /// A crossing other than `(cone, tau)` that happens strictly inside a
    /// step of length `h` ending on the crossing of `tau`.
    fn earlier_crossing(&self, from: [f64; 2], located: &Step, cone: usize, tau: f64, h: f64) -> Option<(usize, f64, f64)> {
        let mut to = located.end.t_dev;
        to[cone] = tau;
        // sources the step end sits on are not earlier
        for t in &mut to {
            *t -= 1e-14 * (1.0 + t.abs());
        }
        self.crossing(from, to, h)
    }

    /// Partner piece for cone `c` as seen before its source number `next`:
    /// cut there and continued linearly, so that stages of a step ending on
    /// the crossing, or overshooting it slightly, stay on the earlier branch.
    fn branch(&self, c: usize, next: usize) -> Result<Trajectory<f64>> {
        let piece = self.partners[c];
        match self.sources[c].get(next) {
            Some(&tau) => continued(&piece.slice(piece.start(), tau)?, 1.0 + (self.range.1 - self.range.0)),
            None => Ok(piece.clone()),
        }
    }

    fn shoot(&self, p0: Vec3<f64>) -> Result<Shot> {
        let (a, b) = self.range;
        let mut y: State = [self.start, p0];
        let mut cur = self.rhs(a, &y, Side::Right)?;
        let mut nodes = vec![Node::smooth(a, y[0], cur.v)];
        let mut max_error: f64 = 0.0;
        let mut t = a;
        let mut cuts: [Option<(usize, Trajectory<f64>)>; 2] = [None, None];
        let n = self.steps.max(1);
        for g in 1..=n {
            let target = if g == n { b } else { a + (b - a) * g as f64 / n as f64 };
            while t < target {
                let h = target - t;
                for c in 0..2 {
                    let next = self.sources[c].partition_point(|&tau| tau <= cur.t_dev[c]);
                    if cuts[c].as_ref().map(|(k, _)| *k) != Some(next) {
                        cuts[c] = Some((next, self.branch(c, next)?));
                    }
                }
                let partners = [&cuts[0].as_ref().unwrap().1, &cuts[1].as_ref().unwrap().1];
                let st = self.step_on(partners, t, &y, &cur.dy, h)?;
                let (st, t_new, event) = match self.crossing(cur.t_dev, st.end.t_dev, h) {
                    None => (st, target, None),
                    Some((c, tau, est)) => {
                        let (mut c, mut tau) = (c, tau);
                        let (mut hs, mut located) = self.locate(partners, t, &y, &cur, c, tau, est, h, st)?;
                        // the linear estimate may order near-simultaneous
                        // crossings wrongly; move to any earlier one
                        while let Some((c2, tau2, est2)) = self.earlier_crossing(cur.t_dev, &located, c, tau, hs) {
                            let (h2, l2) = self.locate(partners, t, &y, &cur, c2, tau2, est2, hs, located)?;
                            (c, tau, hs, located) = (c2, tau2, h2, l2);
                        }
                        if hs >= h {
                            (located, target, Some((c, tau)))
                        } else {
                            (located, t + hs, Some((c, tau)))
                        }
                    }
                };
                max_error = max_error.max(st.error);
                y = st.y;
                t = t_new;
                let v_left = st.end.v;
                cur = if event.is_some() && t < b { self.rhs(t, &y, Side::Right)? } else { st.end };
                if let Some((c, tau)) = event {
                    cur.t_dev[c] = cur.t_dev[c].max(tau);
                }
                nodes.push(Node { t, x: y[0], v_left, v_right: cur.v });
            }
        }
        Ok(Shot { end: y[0], nodes, max_error })
    }

    /// Illinois iteration on the step length that puts the end of the step
    /// on the light-cone of `tau`.
    #[allow(clippy::too_many_arguments)]
    fn locate(
        &self,
        partners: [&Trajectory<f64>; 2],
        t: f64,
        y: &State,
        cur: &Rhs,
        cone: usize,
        tau: f64,
        est: f64,
        h: f64,
        full: Step,
    ) -> Result<(f64, Step)> {
        let tol = 1e-14 * (1.0 + tau.abs());
        let (mut lo, mut glo) = (0.0, cur.t_dev[cone] - tau);
        let (mut hi, mut ghi) = (h, full.end.t_dev[cone] - tau);
        if ghi.abs() <= tol {
            return Ok((h, full));
        }
        let mut hs = est.clamp(0.0, h);
        let mut side = 0;
        for _ in 0..200 {
            if !(hs > lo && hs < hi) {
                hs = 0.5 * (lo + hi);
            }
            let st = self.step_on(partners, t, y, &cur.dy, hs)?;
            let g = st.end.t_dev[cone] - tau;
            if g.abs() <= tol || hi - lo <= 4.0 * f64::EPSILON * (1.0 + t.abs()) {
                return Ok((hs, st));
            }
            if g < 0.0 {
                lo = hs;
                glo = g;
                if side == -1 {
                    ghi *= 0.5;
                }
                side = -1;
            } else {
                hi = hs;
                ghi = g;
                if side == 1 {
                    glo *= 0.5;
                }
                side = 1;
            }
            hs = lo - glo * (hi - lo) / (ghi - glo);
        }
        Err(Error::NewtonFailure(format!("event at partner time {tau} not located")))
    }
}

fn solve3(a: [[f64; 3]; 3], b: Vec3<f64>) -> Option<Vec3<f64>> {
    let mut m = [[0.0; 4]; 3];
    for i in 0..3 {
        m[i][..3].copy_from_slice(&a[i]);
        m[i][3] = b[i];
    }
    for c in 0..3 {
        let piv = (c..3).max_by(|&i, &j| m[i][c].abs().partial_cmp(&m[j][c].abs()).unwrap())?;
        if m[piv][c] == 0.0 || !m[piv][c].is_finite() {
            return None;
        }
        m.swap(c, piv);
        for r in c + 1..3 {
            let f = m[r][c] / m[c][c];
            for k in c..4 {
                m[r][k] -= f * m[c][k];
            }
        }
    }
    let mut x = [0.0; 3];
    for r in (0..3).rev() {
        let s: f64 = (r + 1..3).map(|k| m[r][k] * x[k]).sum();
        x[r] = (m[r][3] - s) / m[r][r];
    }
    Some(Vec3::from_array(x))
}

struct Newton {
    momentum: Vec3<f64>,
    jacobian: Option<[[f64; 3]; 3]>,
    iterations: usize,
}

impl Newton {
    fn jacobian(sh: &Shooter<'_>, p: Vec3<f64>) -> Result<[[f64; 3]; 3]> {
        let delta = 1e-6 * (sh.mass + p.norm());
        let mut j = [[0.0; 3]; 3];
        for c in 0..3 {
            let e = Vec3::axis(c) * delta;
            let d = (sh.shoot(p + e)?.end - sh.shoot(p - e)?.end) / (2.0 * delta);
            for r in 0..3 {
                j[r][c] = d[r];
            }
        }
        Ok(j)
    }

    /// Chord-Newton with backtracking; the Jacobian is reused across calls
    /// and refreshed only when a step fails to reduce the miss.
    fn solve(&mut self, sh: &Shooter<'_>, target: Vec3<f64>, opts: &ShootingOptions) -> Result<(Shot, f64)> {
        let scale = 1.0 + target.max_abs();
        let mut shot = sh.shoot(self.momentum)?;
        let mut miss = (shot.end - target).norm();
        let mut fresh = false;
        for _ in 0..opts.max_newton {
            if miss <= opts.newton_tol * scale {
                return Ok((shot, miss));
            }
            self.iterations += 1;
            let jac = match self.jacobian {
                Some(j) => j,
                None => {
                    fresh = true;
                    *self.jacobian.insert(Self::jacobian(sh, self.momentum)?)
                }
            };
            let step = solve3(jac, target - shot.end)
                .ok_or_else(|| Error::NewtonFailure("singular shooting Jacobian".into()))?;
            let mut lambda = 1.0;
            let mut accepted = false;
            while lambda > 1e-4 {
                let trial = self.momentum + step * lambda;
                if let Ok(s) = sh.shoot(trial) {
                    let m = (s.end - target).norm();
                    if m < miss {
                        self.momentum = trial;
                        shot = s;
                        miss = m;
                        accepted = true;
                        break;
                    }
                }
                lambda *= 0.5;
            }
            if !accepted {
                if fresh {
                    return Err(Error::NewtonFailure(format!(
                        "shooting for {:?} stalled with endpoint miss {miss:.3e}",
                        sh.particle
                    )));
                }
                self.jacobian = None;
            } else {
                fresh = false;
            }
        }
        if miss <= opts.newton_tol * scale {
            Ok((shot, miss))
        } else {
            Err(Error::NewtonFailure(format!(
                "shooting for {:?} did not converge (endpoint miss {miss:.3e})",
                sh.particle
            )))
        }
    }
}

/// Collapses runs of nodes closer than `w`. Crossings that coincide on the
/// exact solution fall slightly apart while the partner is not yet
/// converged; left alone, every sweep would add another node to the chain.
fn merge_close_nodes(nodes: Vec<Node<f64>>, w: f64) -> Vec<Node<f64>> {
    let last = nodes.len() - 1;
    let mut out: Vec<Node<f64>> = Vec::with_capacity(nodes.len());
    for (k, n) in nodes.into_iter().enumerate() {
        let close = out.last().is_some_and(|p| n.t - p.t < w);
        if close && k == last && out.len() > 1 {
            // keep the pinned end node, fold the previous one into it
            let dropped = out.pop().unwrap();
            out.push(Node { v_left: dropped.v_left, ..n });
        } else if close && k != last {
            out.last_mut().unwrap().v_right = n.v_right;
        } else {
            out.push(n);
        }
    }
    out
}

/// Interior nodes of a partner piece whose crossings are step ends: all of
/// them for fixed segments, the velocity jumps for free parts.
fn event_sources(piece: &Trajectory<f64>, fixed: bool) -> Vec<f64> {
    let nodes = piece.nodes();
    nodes[1..nodes.len() - 1]
        .iter()
        .filter(|n| fixed || n.jump().norm() > 0.0)
        .map(|n| n.t)
        .collect()
}

/// `traj` continued by uniform motion for `margin` beyond both ends, so that
/// unconverged shots can still see their partner.
fn extended(traj: &Trajectory<f64>, margin: f64) -> Result<Trajectory<f64>> {
    let nodes = traj.nodes();
    let (first, last) = (nodes[0], nodes[nodes.len() - 1]);
    let mut out = Vec::with_capacity(nodes.len() + 2);
    out.push(Node::smooth(first.t - margin, first.x - first.v_right * margin, first.v_right));
    out.extend_from_slice(nodes);
    // end nodes carry no jump, so the continuation is the one-sided motion
    out[1].v_left = first.v_right;
    let n = out.len();
    out[n - 1].v_right = last.v_left;
    out.push(Node::smooth(last.t + margin, last.x + last.v_left * margin, last.v_left));
    Trajectory::new(out)
}

/// `traj` continued past its end by the cubic of its last segment over one
/// segment length and then by uniform motion. The force reads the partner
/// acceleration, so a purely linear continuation would still jump at the end.
fn continued(traj: &Trajectory<f64>, margin: f64) -> Result<Trajectory<f64>> {
    let nodes = traj.nodes();
    let (a, b) = (nodes[nodes.len() - 2], nodes[nodes.len() - 1]);
    let h = b.t - a.t;
    let (p0, v0, p1, v1) = (a.x, a.v_right * h, b.x, b.v_left * h);
    let s: f64 = 2.0;
    let (s2, s3) = (s * s, s * s * s);
    let x = p0 * (2.0 * s3 - 3.0 * s2 + 1.0) + v0 * (s3 - 2.0 * s2 + s) + p1 * (3.0 * s2 - 2.0 * s3) + v1 * (s3 - s2);
    let v = (p0 * (6.0 * s2 - 6.0 * s) + v0 * (3.0 * s2 - 4.0 * s + 1.0) + p1 * (6.0 * s - 6.0 * s2) + v1 * (3.0 * s2 - 2.0 * s)) / h;
    if v.norm() >= 1.0 {
        return extended(traj, margin);
    }
    let mut out = nodes.to_vec();
    out.last_mut().unwrap().v_right = b.v_left;
    out.push(Node::smooth(b.t + h, x, v));
    extended(&Trajectory::new(out)?, margin)
}

fn sup_distance(a: &Trajectory<f64>, b: &Trajectory<f64>, samples: usize) -> Result<f64> {
    let (lo, hi) = (a.start(), a.end());
    let mut d: f64 = 0.0;
    for k in 0..=samples {
        let t = lo + (hi - lo) * k as f64 / samples as f64;
        d = d.max((a.position(t)? - b.position(t)?).max_abs());
    }
    Ok(d)
}

/// Solves the boundary-value problem for a shortest boundary by alternating
/// shots for the two particles until the free paths stop changing.
pub fn shoot_shortest_boundary(boundary: &BoundaryData<f64>, opts: &ShootingOptions) -> Result<ShootingOutcome> {
    check_shortest_boundary(boundary, &opts.cone)?;
    let tm = boundary.times();
    let ranges = [tm.free_range(Particle::One), tm.free_range(Particle::Two)];
    let ends = [boundary.free_endpoints(Particle::One), boundary.free_endpoints(Particle::Two)];
    let mut free: Vec<Trajectory<f64>> = (0..2)
        .map(|i| {
            let ((a, b), (xa, xb)) = (ranges[i], ends[i]);
            Trajectory::uniform(xa, (xb - xa) / (b - a), a, a, b)
        })
        .collect::<Result<_>>()?;
    let margin = tm.l2_plus - tm.o1_minus;
    let mut newton: Vec<Newton> = Vec::with_capacity(2);
    {
        let (full1, full2) = boundary.assemble(&free[0], &free[1])?;
        for (i, p) in [Particle::One, Particle::Two].into_iter().enumerate() {
            let (own, other) = if i == 0 { (&full1, &full2) } else { (&full2, &full1) };
            let t = ranges[i].0;
            let s = ParticleState::on(p, own, t, Side::Right, boundary.mass(p))?;
            let (ret, adv) = solve_cones(&s, other, &opts.cone)?;
            let a = evaluate_with_cones(&s, &ret, &adv, Side::Right).a;
            newton.push(Newton { momentum: s.v * (s.mass * gamma(s.v)) - a, jacobian: None, iterations: 0 });
        }
    }
    let past = extended(&boundary.past_segment, margin)?;
    let future = extended(&boundary.future_segment, margin)?;
    let past_sources = event_sources(&boundary.past_segment, true);
    let future_sources = event_sources(&boundary.future_segment, true);
    let mut change = f64::INFINITY;
    let mut misses = [0.0; 2];
    let mut max_error = [0.0f64; 2];
    for it in 1..=opts.max_picard {
        let mut delta: f64 = 0.0;
        for (i, p) in [Particle::One, Particle::Two].into_iter().enumerate() {
            let partner_free = extended(&free[1 - i], margin)?;
            let free_sources = event_sources(&free[1 - i], false);
            let (partners, sources) = match p {
                Particle::One => ([&past, &partner_free], [past_sources.clone(), free_sources]),
                Particle::Two => ([&partner_free, &future], [free_sources, future_sources.clone()]),
            };
            let sh = Shooter {
                particle: p,
                mass: boundary.mass(p),
                partners,
                range: ranges[i],
                start: ends[i].0,
                sources,
                steps: opts.steps,
                cone: opts.cone,
            };
            let (mut shot, miss) = newton[i].solve(&sh, ends[i].1, opts)?;
            // pin the far end exactly onto the fixed data
            shot.nodes.last_mut().unwrap().x = ends[i].1;
            let next = Trajectory::new(merge_close_nodes(shot.nodes, 1e-6 * (ranges[i].1 - ranges[i].0)))?;
            delta = delta.max(sup_distance(&next, &free[i], 4 * opts.steps)?);
            misses[i] = miss;
            max_error[i] = shot.max_error;
            free[i] = next;
        }
        change = delta;
        if change <= opts.picard_tol {
            let (traj1, traj2) = boundary.assemble(&free[0], &free[1])?;
            return Ok(ShootingOutcome {
                traj1,
                traj2,
                initial_momenta: [newton[0].momentum, newton[1].momentum],
                picard_iterations: it,
                newton_iterations: newton[0].iterations + newton[1].iterations,
                endpoint_miss: misses,
                picard_change: change,
                max_local_error: max_error[0].max(max_error[1]),
            });
        }
        if !change.is_finite() || change > 1e6 {
            break;
        }
    }
    Err(Error::ShootingDivergence(format!(
        "free paths still change by {change:.3e} after {} outer iterations",
        opts.max_picard
    )))
}
