use core::ops::Deref;

use super::{Side, Worldline};
use crate::error::{Error, Result};
use crate::poly;
use crate::quadrature::GaussLegendre;
use crate::scalar::{lit, CompensatedSum, Real};
use crate::vec3::Vec3;

/// Node of a piecewise cubic Hermite path. `v_left` is ignored at the first
/// node and `v_right` at the last one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node<T> {
    pub t: T,
    pub x: Vec3<T>,
    pub v_left: Vec3<T>,
    pub v_right: Vec3<T>,
}

impl<T: Real> Node<T> {
    /// Node without a velocity jump.
    pub fn smooth(t: T, x: Vec3<T>, v: Vec3<T>) -> Self {
        Self {
            t,
            x,
            v_left: v,
            v_right: v,
        }
    }

    pub fn jump(&self) -> Vec3<T> {
        self.v_right - self.v_left
    }
}

/// Cubic on `[t0, t0 + h]` determined by endpoint positions and velocities.
#[derive(Debug, Clone, Copy)]
struct Segment<T> {
    t0: T,
    h: T,
    x0: Vec3<T>,
    x1: Vec3<T>,
    v0: Vec3<T>,
    v1: Vec3<T>,
}

impl<T: Real> Segment<T> {
    fn local(&self, t: T) -> T {
        (t - self.t0) / self.h
    }

    fn position(&self, s: T) -> Vec3<T> {
        let (two, three) = (lit::<T>(2.0), lit::<T>(3.0));
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = two * s3 - three * s2 + T::one();
        let h10 = s3 - two * s2 + s;
        let h01 = three * s2 - two * s3;
        let h11 = s3 - s2;
        self.x0 * h00 + self.v0 * (self.h * h10) + self.x1 * h01 + self.v1 * (self.h * h11)
    }

    fn velocity(&self, s: T) -> Vec3<T> {
        let (c0, c1, c2) = self.velocity_coeffs();
        c0 + c1 * s + c2 * (s * s)
    }

    fn acceleration(&self, s: T) -> Vec3<T> {
        let (_, c1, c2) = self.velocity_coeffs();
        (c1 + c2 * (lit::<T>(2.0) * s)) / self.h
    }

    /// Velocity as the quadratic `c0 + c1 s + c2 s^2` in the local variable.
    fn velocity_coeffs(&self) -> (Vec3<T>, Vec3<T>, Vec3<T>) {
        let slope = (self.x1 - self.x0) / self.h;
        let c1 = slope * lit(6.0) - self.v0 * lit(4.0) - self.v1 * lit(2.0);
        let c2 = (self.v0 + self.v1) * lit(3.0) - slope * lit(6.0);
        (self.v0, c1, c2)
    }

    fn max_speed(&self) -> T {
        let (c0, c1, c2) = self.velocity_coeffs();
        // d/ds |v|^2 / 2 = v . v'
        let q = [
            c0.dot(c1),
            c1.dot(c1) + lit::<T>(2.0) * c0.dot(c2),
            lit::<T>(3.0) * c1.dot(c2),
            lit::<T>(2.0) * c2.dot(c2),
        ];
        let mut best = self.v0.norm().max(self.v1.norm());
        for s in poly::roots_in(&q, T::zero(), T::one()) {
            best = best.max(self.velocity(s).norm());
        }
        best
    }

    /// Arc length of the velocity curve, i.e. the integral of |a| dt.
    fn velocity_variation(&self) -> T {
        let (_, c1, c2) = self.velocity_coeffs();
        let a = c2 * lit(2.0);
        let aa = a.norm_sq();
        if aa == T::zero() {
            return c1.norm();
        }
        // |c1 + a u| is analytic on [0, 1] when the line stays well away
        // from the origin; the closed form below would cancel there
        let u_near = (-c1.dot(a) / aa).max(T::zero()).min(T::one());
        let h_min = (c1 + a * u_near).norm();
        if aa.sqrt() <= lit::<T>(0.25) * h_min {
            return GaussLegendre::<T>::new(10)
                .mapped(T::zero(), T::one())
                .fold(T::zero(), |acc, (u, w)| acc + w * (c1 + a * u).norm());
        }
        let b = c1.dot(a) / aa;
        let m = (c1.norm_sq() - b * b * aa).max(T::zero());
        let sqrt_a = aa.sqrt();
        let prim = |u: T| -> T {
            if m <= aa * T::epsilon() * T::epsilon() {
                sqrt_a * u * u.abs() * lit(0.5)
            } else {
                let root = (aa * u * u + m).sqrt();
                u * root * lit(0.5) + m / (lit::<T>(2.0) * sqrt_a) * (u * (aa / m).sqrt()).asinh()
            }
        };
        prim(T::one() + b) - prim(b)
    }
}

/// Piecewise cubic Hermite path without a speed constraint.
///
/// Positions are continuous by construction (adjacent segments share the
/// node position); velocities may jump at nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitePath<T> {
    nodes: Vec<Node<T>>,
}

enum Loc {
    Node(usize),
    Inside(usize),
}

impl<T: Real> HermitePath<T> {
    pub fn new(nodes: Vec<Node<T>>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::InvalidTrajectory(
                "at least two nodes are required".into(),
            ));
        }
        for (k, n) in nodes.iter().enumerate() {
            if !(n.t.is_finite() && n.x.is_finite() && n.v_left.is_finite() && n.v_right.is_finite())
            {
                return Err(Error::InvalidTrajectory(format!(
                    "node {k} has non-finite data"
                )));
            }
        }
        for (k, w) in nodes.windows(2).enumerate() {
            if !(w[0].t < w[1].t) {
                return Err(Error::InvalidTrajectory(format!(
                    "segment {k} has non-positive length ({} -> {})",
                    w[0].t, w[1].t
                )));
            }
        }
        Ok(Self { nodes })
    }

    /// Samples `x(t)` and one-sided velocities of another path at `times`.
    pub fn sample<W: Worldline<T> + ?Sized>(path: &W, times: &[T]) -> Result<Self> {
        let nodes = times
            .iter()
            .map(|&t| {
                Ok(Node {
                    t,
                    x: path.position(t)?,
                    v_left: path.velocity(t, Side::Left)?,
                    v_right: path.velocity(t, Side::Right)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(nodes)
    }

    pub fn nodes(&self) -> &[Node<T>] {
        &self.nodes
    }

    pub fn node_times(&self) -> Vec<T> {
        self.nodes.iter().map(|n| n.t).collect()
    }

    pub fn start(&self) -> T {
        self.nodes[0].t
    }

    pub fn end(&self) -> T {
        self.nodes[self.nodes.len() - 1].t
    }

    pub fn segment_count(&self) -> usize {
        self.nodes.len() - 1
    }

    fn segment(&self, k: usize) -> Segment<T> {
        let (a, b) = (&self.nodes[k], &self.nodes[k + 1]);
        Segment {
            t0: a.t,
            h: b.t - a.t,
            x0: a.x,
            x1: b.x,
            v0: a.v_right,
            v1: b.v_left,
        }
    }

    fn locate(&self, t: T) -> Result<Loc> {
        let idx = self.nodes.partition_point(|n| n.t < t);
        if idx < self.nodes.len() && self.nodes[idx].t == t {
            return Ok(Loc::Node(idx));
        }
        if idx == 0 || idx == self.nodes.len() {
            return Err(Error::TimeOutOfRange {
                t: t.as_f64(),
                start: self.start().as_f64(),
                end: self.end().as_f64(),
            });
        }
        Ok(Loc::Inside(idx - 1))
    }

    pub fn position(&self, t: T) -> Result<Vec3<T>> {
        Ok(match self.locate(t)? {
            Loc::Node(k) => self.nodes[k].x,
            Loc::Inside(k) => {
                let seg = self.segment(k);
                seg.position(seg.local(t))
            }
        })
    }

    pub fn velocity(&self, t: T, side: Side) -> Result<Vec3<T>> {
        let last = self.nodes.len() - 1;
        Ok(match self.locate(t)? {
            Loc::Node(k) => match side {
                Side::Left if k > 0 => self.nodes[k].v_left,
                Side::Right if k < last => self.nodes[k].v_right,
                Side::Left => self.nodes[k].v_right,
                Side::Right => self.nodes[k].v_left,
            },
            Loc::Inside(k) => {
                let seg = self.segment(k);
                seg.velocity(seg.local(t))
            }
        })
    }

    pub fn acceleration(&self, t: T, side: Side) -> Result<Vec3<T>> {
        let last = self.nodes.len() - 1;
        Ok(match self.locate(t)? {
            Loc::Node(k) => {
                let from_left = match side {
                    Side::Left => k > 0,
                    Side::Right => k == last,
                };
                if from_left {
                    self.segment(k - 1).acceleration(T::one())
                } else {
                    self.segment(k).acceleration(T::zero())
                }
            }
            Loc::Inside(k) => {
                let seg = self.segment(k);
                seg.acceleration(seg.local(t))
            }
        })
    }

    /// Interior node times.
    pub fn interior_times(&self) -> Vec<T> {
        self.nodes[1..self.nodes.len() - 1]
            .iter()
            .map(|n| n.t)
            .collect()
    }

    /// Supremum of the speed over all segments.
    pub fn max_speed(&self) -> T {
        (0..self.segment_count())
            .map(|k| self.segment(k).max_speed())
            .fold(T::zero(), T::max)
    }

    fn segment_speeds(&self) -> impl Iterator<Item = (usize, T)> + '_ {
        (0..self.segment_count()).map(|k| (k, self.segment(k).max_speed()))
    }

    /// Total variation of the velocity: jumps at interior nodes plus the
    /// arc length of the velocity curve inside each segment.
    pub fn total_variation(&self) -> T {
        let mut acc = CompensatedSum::new();
        for k in 0..self.segment_count() {
            acc.add(self.segment(k).velocity_variation());
        }
        for n in &self.nodes[1..self.nodes.len() - 1] {
            acc.add(n.jump().norm());
        }
        acc.value()
    }

    /// `|v(start)| + TV(v)` over the whole span.
    pub fn bv_norm(&self) -> T {
        self.nodes[0].v_right.norm() + self.total_variation()
    }

    /// Restriction to `[t0, t1]`; the cubic pieces are reproduced exactly.
    pub fn slice(&self, t0: T, t1: T) -> Result<Self> {
        if !(t0 < t1) {
            return Err(Error::InvalidTrajectory(format!(
                "empty slice [{t0}, {t1}]"
            )));
        }
        let mut nodes = vec![Node {
            t: t0,
            x: self.position(t0)?,
            v_left: self.velocity(t0, Side::Left)?,
            v_right: self.velocity(t0, Side::Right)?,
        }];
        nodes.extend(self.nodes.iter().filter(|n| n.t > t0 && n.t < t1).copied());
        nodes.push(Node {
            t: t1,
            x: self.position(t1)?,
            v_left: self.velocity(t1, Side::Left)?,
            v_right: self.velocity(t1, Side::Right)?,
        });
        Self::new(nodes)
    }

    /// Joins two paths that meet at a common node. The junction keeps the
    /// left velocity of `self` and the right velocity of `next`.
    pub fn concat(&self, next: &Self) -> Result<Self> {
        let a = self.nodes.last().unwrap();
        let b = &next.nodes[0];
        let scale = T::one().max(a.x.max_abs());
        if a.t != b.t || (a.x - b.x).max_abs() > lit::<T>(1e-12) * scale {
            return Err(Error::InvalidTrajectory(format!(
                "paths do not meet: ({}, {:?}) vs ({}, {:?})",
                a.t, a.x, b.t, b.x
            )));
        }
        let mut nodes = self.nodes[..self.nodes.len() - 1].to_vec();
        nodes.push(Node {
            t: a.t,
            x: a.x,
            v_left: a.v_left,
            v_right: b.v_right,
        });
        nodes.extend_from_slice(&next.nodes[1..]);
        Self::new(nodes)
    }

    /// `self + eps * other` on the union of both node sets, with `other`
    /// taken as zero outside its span (which must lie inside `self`'s span).
    pub fn add_scaled(&self, other: &Self, eps: T) -> Result<Self> {
        let (a, b) = (other.start(), other.end());
        if a < self.start() || b > self.end() {
            return Err(Error::InvalidTrajectory(format!(
                "added path [{a}, {b}] leaves the span [{}, {}]",
                self.start(),
                self.end()
            )));
        }
        let mut times: Vec<T> = self
            .nodes
            .iter()
            .chain(other.nodes.iter())
            .map(|n| n.t)
            .collect();
        times.sort_by(|a, b| a.partial_cmp(b).unwrap());
        times.dedup();
        let extra_v = |t: T, side: Side| -> Result<Vec3<T>> {
            let inside = match side {
                Side::Left => t > a && t <= b,
                Side::Right => t >= a && t < b,
            };
            if inside {
                other.velocity(t, side)
            } else {
                Ok(Vec3::zero())
            }
        };
        let nodes = times
            .into_iter()
            .map(|t| {
                let dx = if t >= a && t <= b { other.position(t)? } else { Vec3::zero() };
                let vl = extra_v(t, Side::Left)?;
                let vr = extra_v(t, Side::Right)?;
                Ok(Node {
                    t,
                    x: self.position(t)? + dx * eps,
                    v_left: self.velocity(t, Side::Left)? + vl * eps,
                    v_right: self.velocity(t, Side::Right)? + vr * eps,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(nodes)
    }

    pub fn translate_time(&self, dt: T) -> Result<Self> {
        Self::new(
            self.nodes
                .iter()
                .map(|n| Node { t: n.t + dt, ..*n })
                .collect(),
        )
    }
}

/// Largest speed over all segments; a value `>= 1` flags a super-luminal path.
pub fn check_subluminal<T: Real>(path: &HermitePath<T>) -> T {
    path.max_speed()
}

impl<T: Real> Worldline<T> for HermitePath<T> {
    fn span(&self) -> (T, T) {
        (self.start(), self.end())
    }
    fn position(&self, t: T) -> Result<Vec3<T>> {
        HermitePath::position(self, t)
    }
    fn velocity(&self, t: T, side: Side) -> Result<Vec3<T>> {
        HermitePath::velocity(self, t, side)
    }
    fn acceleration(&self, t: T, side: Side) -> Result<Vec3<T>> {
        HermitePath::acceleration(self, t, side)
    }
    fn breakpoints(&self) -> Vec<T> {
        self.interior_times()
    }
    fn speed_bound(&self) -> T {
        self.max_speed()
    }
    fn breakpoint_near(&self, t: T, tol: T) -> Option<T> {
        let idx = self.nodes.partition_point(|n| n.t < t);
        let last = self.nodes.len() - 1;
        [idx.wrapping_sub(1), idx]
            .into_iter()
            .filter(|&k| k >= 1 && k < last)
            .map(|k| self.nodes[k].t)
            .filter(|b| (*b - t).abs() <= tol)
            .min_by(|a, b| (*a - t).abs().partial_cmp(&(*b - t).abs()).unwrap())
    }
}

/// Sub-luminal [`HermitePath`]: every constructor rejects speeds `>= 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    path: HermitePath<T>,
    max_speed: T,
}

impl<T: Real> Trajectory<T> {
    pub fn new(nodes: Vec<Node<T>>) -> Result<Self> {
        Self::from_path(HermitePath::new(nodes)?)
    }

    pub fn from_path(path: HermitePath<T>) -> Result<Self> {
        let mut max_speed = T::zero();
        for (segment, speed) in path.segment_speeds() {
            if !(speed < T::one()) {
                return Err(Error::SuperLuminal {
                    segment,
                    speed: speed.as_f64(),
                });
            }
            max_speed = max_speed.max(speed);
        }
        Ok(Self { path, max_speed })
    }

    /// Particle at rest at `x` on `[t0, t1]`.
    pub fn stationary(x: Vec3<T>, t0: T, t1: T) -> Result<Self> {
        Self::uniform(x, Vec3::zero(), t0, t0, t1)
    }

    /// Uniform motion `x(t) = x_ref + v (t - t_ref)` on `[t0, t1]`.
    pub fn uniform(x_ref: Vec3<T>, v: Vec3<T>, t_ref: T, t0: T, t1: T) -> Result<Self> {
        Self::new(vec![
            Node::smooth(t0, x_ref + v * (t0 - t_ref), v),
            Node::smooth(t1, x_ref + v * (t1 - t_ref), v),
        ])
    }

    pub fn sample<W: Worldline<T> + ?Sized>(path: &W, times: &[T]) -> Result<Self> {
        Self::from_path(HermitePath::sample(path, times)?)
    }

    pub fn path(&self) -> &HermitePath<T> {
        &self.path
    }

    pub fn into_path(self) -> HermitePath<T> {
        self.path
    }

    pub fn slice(&self, t0: T, t1: T) -> Result<Self> {
        Self::from_path(self.path.slice(t0, t1)?)
    }

    pub fn concat(&self, next: &Self) -> Result<Self> {
        Self::from_path(self.path.concat(&next.path)?)
    }

    pub fn perturbed(&self, b: &Perturbation<T>, eps: T) -> Result<Self> {
        Self::from_path(self.path.add_scaled(&b.0, eps)?)
    }

    pub fn translate_time(&self, dt: T) -> Result<Self> {
        Self::from_path(self.path.translate_time(dt)?)
    }
}

impl<T> Deref for Trajectory<T> {
    type Target = HermitePath<T>;
    fn deref(&self) -> &HermitePath<T> {
        &self.path
    }
}

impl<T: Real> Worldline<T> for Trajectory<T> {
    fn span(&self) -> (T, T) {
        self.path.span()
    }
    fn position(&self, t: T) -> Result<Vec3<T>> {
        self.path.position(t)
    }
    fn velocity(&self, t: T, side: Side) -> Result<Vec3<T>> {
        self.path.velocity(t, side)
    }
    fn acceleration(&self, t: T, side: Side) -> Result<Vec3<T>> {
        self.path.acceleration(t, side)
    }
    fn breakpoints(&self) -> Vec<T> {
        self.path.interior_times()
    }
    fn speed_bound(&self) -> T {
        self.max_speed
    }
    fn breakpoint_near(&self, t: T, tol: T) -> Option<T> {
        Worldline::breakpoint_near(&self.path, t, tol)
    }
}

/// Trajectory variation `b(t)` that vanishes at both ends of its span.
#[derive(Debug, Clone, PartialEq)]
pub struct Perturbation<T>(HermitePath<T>);

impl<T: Real> Perturbation<T> {
    pub fn new(nodes: Vec<Node<T>>) -> Result<Self> {
        let path = HermitePath::new(nodes).map_err(|e| Error::InvalidPerturbation(e.to_string()))?;
        let ends = [path.nodes()[0].x, path.nodes()[path.nodes().len() - 1].x];
        if ends.iter().any(|x| *x != Vec3::zero()) {
            return Err(Error::InvalidPerturbation(format!(
                "b must vanish at both endpoints, got {:?} and {:?}",
                ends[0], ends[1]
            )));
        }
        Ok(Self(path))
    }

    /// Hat function: zero at `t0` and `t2`, `amplitude` at `t1`, linear between.
    pub fn hat(t0: T, t1: T, t2: T, amplitude: Vec3<T>) -> Result<Self> {
        let up = amplitude / (t1 - t0);
        let down = -amplitude / (t2 - t1);
        Self::new(vec![
            Node::smooth(t0, Vec3::zero(), up),
            Node {
                t: t1,
                x: amplitude,
                v_left: up,
                v_right: down,
            },
            Node::smooth(t2, Vec3::zero(), down),
        ])
    }

    pub fn path(&self) -> &HermitePath<T> {
        &self.0
    }
}

impl<T> Deref for Perturbation<T> {
    type Target = HermitePath<T>;
    fn deref(&self) -> &HermitePath<T> {
        &self.0
    }
}
