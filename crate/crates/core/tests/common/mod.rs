#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use varem::solver::{find_circular_orbit, CircularOrbit, CircularWorldline, OrbitOptions};
use varem::{BoundaryData, LightConeOptions, Node, Result, Side, Trajectory, Vec3, Worldline};

pub fn rng(seed: u64) -> ChaCha8Rng {
    rand::SeedableRng::seed_from_u64(seed)
}

pub fn unit(rng: &mut ChaCha8Rng) -> Vec3<f64> {
    loop {
        let v = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let n = v.norm();
        if n > 0.1 && n <= 1.0 {
            return v / n;
        }
    }
}

/// Analytic path `c + u t + Σ a_k sin(ω_k t + φ_k)`, used where closed-form
/// positions and velocities are needed.
#[derive(Debug, Clone, Copy)]
pub struct Wiggle {
    pub centre: Vec3<f64>,
    pub drift: Vec3<f64>,
    pub amp: [Vec3<f64>; 2],
    pub freq: [f64; 2],
    pub phase: [f64; 2],
    pub span: (f64, f64),
}

impl Wiggle {
    /// Random wiggle whose speed never exceeds `vmax` and whose position
    /// stays within `reach` of `centre + drift t`.
    pub fn random(rng: &mut ChaCha8Rng, centre: Vec3<f64>, vmax: f64, reach: f64, span: (f64, f64)) -> Self {
        let drift = unit(rng) * rng.gen_range(0.0..0.3 * vmax);
        let mut amp = [Vec3::zero(); 2];
        let mut freq = [0.0; 2];
        let budget = vmax - drift.norm();
        for k in 0..2 {
            let a = rng.gen_range(0.1..0.5) * reach;
            let w = rng.gen_range(0.05..0.45) * budget / a;
            amp[k] = unit(rng) * a;
            freq[k] = w;
        }
        let phase = [rng.gen_range(0.0..6.3), rng.gen_range(0.0..6.3)];
        Self { centre, drift, amp, freq, phase, span }
    }

    pub fn sampled(&self, h: f64) -> Trajectory<f64> {
        let (a, b) = self.span;
        let n = ((b - a) / h).ceil() as usize;
        let times: Vec<f64> = (0..=n).map(|k| if k == n { b } else { a + (b - a) * k as f64 / n as f64 }).collect();
        Trajectory::sample(self, &times).unwrap()
    }

    fn check(&self, t: f64) -> Result<()> {
        if t < self.span.0 || t > self.span.1 {
            return Err(varem::Error::TimeOutOfRange { t, start: self.span.0, end: self.span.1 });
        }
        Ok(())
    }
}

impl Worldline<f64> for Wiggle {
    fn span(&self) -> (f64, f64) {
        self.span
    }
    fn position(&self, t: f64) -> Result<Vec3<f64>> {
        self.check(t)?;
        let mut x = self.centre + self.drift * t;
        for k in 0..2 {
            x = x + self.amp[k] * (self.freq[k] * t + self.phase[k]).sin();
        }
        Ok(x)
    }
    fn velocity(&self, t: f64, _: Side) -> Result<Vec3<f64>> {
        self.check(t)?;
        let mut v = self.drift;
        for k in 0..2 {
            v = v + self.amp[k] * (self.freq[k] * (self.freq[k] * t + self.phase[k]).cos());
        }
        Ok(v)
    }
    fn acceleration(&self, t: f64, _: Side) -> Result<Vec3<f64>> {
        self.check(t)?;
        let mut a = Vec3::zero();
        for k in 0..2 {
            a = a - self.amp[k] * (self.freq[k] * self.freq[k] * (self.freq[k] * t + self.phase[k]).sin());
        }
        Ok(a)
    }
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
    fn speed_bound(&self) -> f64 {
        self.drift.norm() + (0..2).map(|k| self.amp[k].norm() * self.freq[k]).sum::<f64>()
    }
}

/// Random Hermite path with velocity jumps. Positions follow the chord rule
/// `x_{k+1} = x_k + h (v_k⁺ + v_{k+1}⁻) / 2`, so velocities are linear on
/// each segment and the speed never exceeds `vmax`. The path is pulled
/// back towards `centre` so it stays within a few units of it.
pub fn kinked(rng: &mut ChaCha8Rng, centre: Vec3<f64>, vmax: f64, span: (f64, f64), h: f64, jump_prob: f64) -> Trajectory<f64> {
    let (a, b) = span;
    let n = ((b - a) / h).ceil() as usize;
    let mut nodes = Vec::with_capacity(n + 1);
    let mut x = centre;
    let mut v = unit(rng) * rng.gen_range(0.0..vmax);
    for k in 0..=n {
        let t = if k == n { b } else { a + (b - a) * k as f64 / n as f64 };
        if k > 0 {
            let dt = t - nodes.last().map(|m: &Node<f64>| m.t).unwrap();
            let prev: &Node<f64> = nodes.last().unwrap();
            // steer towards the centre, keep the speed bounded
            let pull = (centre - prev.x) * 0.05;
            let mut target = v + pull + unit(rng) * (0.1 * vmax);
            if target.norm() > vmax {
                target = target * (vmax / target.norm());
            }
            x = prev.x + (prev.v_right + target) * (0.5 * dt);
            v = target;
        }
        let mut right = v;
        if k > 0 && k < n && rng.gen_bool(jump_prob) {
            right = right + unit(rng) * (0.2 * vmax);
            if right.norm() > vmax {
                right = right * (vmax / right.norm());
            }
        }
        nodes.push(Node { t, x, v_left: v, v_right: right });
        v = right;
    }
    Trajectory::new(nodes).unwrap()
}

/// Random pair of smooth sampled paths about `∓d/2` on the x axis together
/// with boundary data cut from them.
pub fn random_pair(rng: &mut ChaCha8Rng, kinks: bool) -> (Trajectory<f64>, Trajectory<f64>, BoundaryData<f64>) {
    let d = rng.gen_range(3.0..7.0);
    let t_l2 = d * rng.gen_range(1.6..2.6) + 1.0;
    let span = (-4.0 * d - 8.0, t_l2 + 4.0 * d + 8.0);
    let c1 = Vec3::new(-d / 2.0, 0.0, 0.0);
    let c2 = Vec3::new(d / 2.0, 0.0, 0.0);
    let (t1, t2) = if kinks {
        let mut a = kinked(rng, c1, 0.4, span, 0.7, 0.25);
        let mut b = kinked(rng, c2, 0.4, span, 0.7, 0.25);
        // kinked walks may wander; recentre them if they come too close
        while min_distance(&a, &b) < 1.0 {
            a = kinked(rng, c1, 0.4, span, 0.7, 0.25);
            b = kinked(rng, c2, 0.4, span, 0.7, 0.25);
        }
        (a, b)
    } else {
        let w1 = Wiggle::random(rng, c1, 0.5, d / 5.0, span);
        let w2 = Wiggle::random(rng, c2, 0.5, d / 5.0, span);
        (w1.sampled(0.5), w2.sampled(0.5))
    };
    let masses = [rng.gen_range(0.5..2.0), rng.gen_range(0.5..2.0)];
    let bd = BoundaryData::from_trajectories(&t1, &t2, 0.0, t_l2, masses, &LightConeOptions::default()).unwrap();
    (t1, t2, bd)
}

pub fn min_distance(a: &Trajectory<f64>, b: &Trajectory<f64>) -> f64 {
    let (lo, hi) = (a.start().max(b.start()), a.end().min(b.end()));
    (0..=400)
        .map(|k| {
            let t = (lo + (hi - lo) * k as f64 / 400.0).min(hi);
            (a.position(t).unwrap() - b.position(t).unwrap()).norm()
        })
        .fold(f64::INFINITY, f64::min)
}

/// Circular orbit at separation `ell` with boundary data cut at `t_O1 = 0`
/// and `t_L2 = delays·τ`, `τ` the light delay of the orbit.
pub fn circular_boundary(ell: f64, masses: [f64; 2], delays: f64) -> (CircularOrbit, CircularWorldline, CircularWorldline, BoundaryData<f64>) {
    let o = find_circular_orbit(ell, masses, &OrbitOptions::default()).unwrap();
    let tau = o.delay().unwrap();
    let (w1, w2) = o.worldlines(-10.0 * ell, 10.0 * ell + delays * tau);
    let bd = BoundaryData::from_worldlines(&w1, &w2, 0.0, delays * tau, masses, 64, &LightConeOptions::default()).unwrap();
    (o, w1, w2, bd)
}

/// Shortest-boundary fixtures: slowly drifting pairs with boundary data cut
/// from uniform motion.
pub fn shortest_fixture(k: usize) -> BoundaryData<f64> {
    let (d, t_l2, m2) = [(10.0, 20.0, 1.0), (6.0, 12.0, 1.0), (14.0, 28.0, 2.0), (8.0, 16.0, 0.5), (12.0, 22.0, 3.0)][k];
    let (t1, t2) = drifting_pair(d);
    BoundaryData::from_trajectories(&t1, &t2, 0.0, t_l2, [1.0, m2], &LightConeOptions::default()).unwrap()
}

/// The last shortest-boundary fixture with a velocity jump of particle 2 at
/// `t = -5`, inside its past segment.
pub fn kinked_shortest_fixture() -> BoundaryData<f64> {
    let (t1, t2) = drifting_pair(12.0);
    let x = t2.position(-5.0).unwrap();
    let before = Trajectory::uniform(x, Vec3::new(-0.02, -0.05, 0.03), -5.0, -200.0, -5.0).unwrap();
    let after = Trajectory::uniform(x, Vec3::new(-0.08, 0.02, 0.0), -5.0, -5.0, 200.0).unwrap();
    let t2 = before.concat(&after).unwrap();
    BoundaryData::from_trajectories(&t1, &t2, 0.0, 22.0, [1.0, 3.0], &LightConeOptions::default()).unwrap()
}

fn drifting_pair(d: f64) -> (Trajectory<f64>, Trajectory<f64>) {
    let u1 = Vec3::new(0.05, 0.1, 0.0);
    let u2 = Vec3::new(-0.02, -0.05, 0.03);
    let t1 = Trajectory::uniform(Vec3::new(-d / 2.0, 0.0, 0.0), u1, 0.0, -200.0, 200.0).unwrap();
    let t2 = Trajectory::uniform(Vec3::new(d / 2.0, 0.0, 0.0), u2, 0.0, -200.0, 200.0).unwrap();
    (t1, t2)
}
