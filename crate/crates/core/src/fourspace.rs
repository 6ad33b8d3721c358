//! Four-space trajectories `s ↦ (t(s), x(s))` with monotone time components,
//! the homogeneous tilde Lagrangians, the zeroth momentum component and the
//! redundancy of the time-component Euler-Lagrange equation.
//!
//! This layer is used for verification only: every quantity is compared
//! against its time-parametrized counterpart.

use crate::action::{distance_to_kink, kink_times, ActionForm, ActionOptions};
use crate::error::{Error, Result};
use crate::lagrangian::{evaluate_with_cones, gamma, LagrangianEval, ParticleState};
use crate::lightcone::{solve_deviating_argument, ConeSign, LightConeOptions, LightConeSolution};
use crate::quadrature::integrate_piecewise;
use crate::scalar::{lit, Real};
use crate::trajectory::{BoundaryData, Particle, Side, Worldline};
use crate::vec3::Vec3;

/// Monotone piecewise-cubic time map `t(s)`, C¹ across knots, with
/// `t'(s)` confined to `[t_prime_min, t_prime_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Reparam<T> {
    s: Vec<T>,
    t: Vec<T>,
    dt: Vec<T>,
}

pub const T_PRIME_MIN: f64 = 0.1;
pub const T_PRIME_MAX: f64 = 10.0;

impl<T: Real> Reparam<T> {
    /// Knots `(s_k, t_k, t'_k)`.
    pub fn new(knots: &[(T, T, T)]) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::InvalidReparam("need at least two knots".into()));
        }
        let r = Self {
            s: knots.iter().map(|k| k.0).collect(),
            t: knots.iter().map(|k| k.1).collect(),
            dt: knots.iter().map(|k| k.2).collect(),
        };
        let (lo, hi) = (lit::<T>(T_PRIME_MIN), lit::<T>(T_PRIME_MAX));
        for k in 0..r.s.len() - 1 {
            if !(r.s[k + 1] > r.s[k]) || !(r.t[k + 1] > r.t[k]) {
                return Err(Error::InvalidReparam(format!("knot {k} is not increasing")));
            }
            let (mn, mx) = r.slope_range(k);
            if !(mn >= lo * (T::one() - lit(1e-12)) && mx <= hi * (T::one() + lit(1e-12))) {
                return Err(Error::InvalidReparam(format!(
                    "t' ranges over [{mn}, {mx}] on piece {k}, outside [{lo}, {hi}]"
                )));
            }
        }
        Ok(r)
    }

    pub fn identity(s0: T, s1: T) -> Result<Self> {
        Self::affine(T::one(), T::zero(), s0, s1)
    }

    /// `t(s) = scale·s + offset` on `[s0, s1]`.
    pub fn affine(scale: T, offset: T, s0: T, s1: T) -> Result<Self> {
        Self::new(&[(s0, scale * s0 + offset, scale), (s1, scale * s1 + offset, scale)])
    }

    /// Single cubic `t(s) = c0 + c1 s + c2 s² + c3 s³` on `[s0, s1]`.
    pub fn cubic(c: [T; 4], s0: T, s1: T) -> Result<Self> {
        let f = |s: T| c[0] + s * (c[1] + s * (c[2] + s * c[3]));
        let d = |s: T| c[1] + s * (c[2] * lit(2.0) + s * c[3] * lit(3.0));
        Self::new(&[(s0, f(s0), d(s0)), (s1, f(s1), d(s1))])
    }

    /// Map from `[s0, s1]` onto `[t0, t1]` on equally spaced knots whose
    /// relative slopes are `weights` (all positive); slopes are rescaled so
    /// the map ends exactly at `t1`.
    pub fn from_slope_weights(s0: T, s1: T, t0: T, t1: T, weights: &[T]) -> Result<Self> {
        let n = weights.len();
        if n < 2 || weights.iter().any(|w| !(*w > T::zero())) {
            return Err(Error::InvalidReparam("need >= 2 positive weights".into()));
        }
        let h = (s1 - s0) / T::from_usize(n - 1);
        let mut acc = vec![T::zero(); n];
        for k in 1..n {
            acc[k] = acc[k - 1] + h * (weights[k - 1] + weights[k]) * lit(0.5);
        }
        let scale = (t1 - t0) / acc[n - 1];
        let knots: Vec<_> = (0..n)
            .map(|k| {
                let s = if k == n - 1 { s1 } else { s0 + h * T::from_usize(k) };
                let t = if k == n - 1 { t1 } else { t0 + acc[k] * scale };
                (s, t, weights[k] * scale)
            })
            .collect();
        Self::new(&knots)
    }

    pub fn span(&self) -> (T, T) {
        (self.s[0], self.s[self.s.len() - 1])
    }

    pub fn image(&self) -> (T, T) {
        (self.t[0], self.t[self.t.len() - 1])
    }

    pub fn knots(&self) -> &[T] {
        &self.s
    }

    fn piece(&self, s: T) -> Result<usize> {
        let (a, b) = self.span();
        if !(s >= a && s <= b) {
            return Err(Error::TimeOutOfRange {
                t: s.as_f64(),
                start: a.as_f64(),
                end: b.as_f64(),
            });
        }
        let k = self.s.partition_point(|&x| x <= s);
        Ok(k.clamp(1, self.s.len() - 1) - 1)
    }

    /// `(t, t', t'')` on piece `k` at local `u ∈ [0, 1]`.
    fn local(&self, k: usize, u: T) -> (T, T, T) {
        let h = self.s[k + 1] - self.s[k];
        let (y0, y1) = (self.t[k], self.t[k + 1]);
        let (m0, m1) = (self.dt[k] * h, self.dt[k + 1] * h);
        let d = y1 - y0;
        let two = lit::<T>(2.0);
        let three = lit::<T>(3.0);
        // y0 + m0 u + (3d - 2m0 - m1) u² + (m0 + m1 - 2d) u³
        let c2 = three * d - two * m0 - m1;
        let c3 = m0 + m1 - two * d;
        let t = y0 + u * (m0 + u * (c2 + u * c3));
        let dt = (m0 + u * (two * c2 + three * c3 * u)) / h;
        let ddt = (two * c2 + lit::<T>(6.0) * c3 * u) / (h * h);
        (t, dt, ddt)
    }

    fn slope_range(&self, k: usize) -> (T, T) {
        let h = self.s[k + 1] - self.s[k];
        let mut cands = vec![T::zero(), T::one()];
        let d = self.t[k + 1] - self.t[k];
        let (m0, m1) = (self.dt[k] * h, self.dt[k + 1] * h);
        let c3 = m0 + m1 - lit::<T>(2.0) * d;
        if c3 != T::zero() {
            let c2 = lit::<T>(3.0) * d - lit::<T>(2.0) * m0 - m1;
            let u = -c2 / (lit::<T>(3.0) * c3);
            if u > T::zero() && u < T::one() {
                cands.push(u);
            }
        }
        let vals: Vec<T> = cands.into_iter().map(|u| self.local(k, u).1).collect();
        let mn = vals.iter().copied().fold(T::infinity(), T::min);
        let mx = vals.iter().copied().fold(T::neg_infinity(), T::max);
        (mn, mx)
    }

    fn eval(&self, s: T) -> Result<(T, T, T)> {
        let k = self.piece(s)?;
        let u = (s - self.s[k]) / (self.s[k + 1] - self.s[k]);
        Ok(self.local(k, u))
    }

    pub fn t(&self, s: T) -> Result<T> {
        Ok(self.eval(s)?.0)
    }

    pub fn t_prime(&self, s: T) -> Result<T> {
        Ok(self.eval(s)?.1)
    }

    pub fn t_second(&self, s: T) -> Result<T> {
        Ok(self.eval(s)?.2)
    }

    /// `s` with `t(s) = t`, by safeguarded Newton on the monotone map.
    pub fn inverse(&self, t: T) -> Result<T> {
        let (t0, t1) = self.image();
        if !(t >= t0 && t <= t1) {
            return Err(Error::TimeOutOfRange {
                t: t.as_f64(),
                start: t0.as_f64(),
                end: t1.as_f64(),
            });
        }
        let k = (self.t.partition_point(|&x| x <= t)).clamp(1, self.t.len() - 1) - 1;
        if t == self.t[k] {
            return Ok(self.s[k]);
        }
        let (mut lo, mut hi) = (T::zero(), T::one());
        let h = self.s[k + 1] - self.s[k];
        let mut u = (t - self.t[k]) / (self.t[k + 1] - self.t[k]);
        for _ in 0..200 {
            let (tu, dtu, _) = self.local(k, u);
            let f = tu - t;
            if f > T::zero() {
                hi = u;
            } else {
                lo = u;
            }
            let mut next = u - f / (dtu * h);
            if !(next > lo && next < hi) {
                next = (lo + hi) * lit(0.5);
            }
            if (next - u).abs() <= T::epsilon() * lit(4.0) {
                u = next;
                break;
            }
            u = next;
        }
        Ok(self.s[k] + u * h)
    }
}

/// A worldline together with a monotone reparametrization of its time.
#[derive(Clone, Copy)]
pub struct ParamTrajectory<'a, T> {
    pub traj: &'a dyn Worldline<T>,
    pub reparam: &'a Reparam<T>,
}

/// Lifts a worldline; the image of `t(s)` must lie inside the worldline's span.
pub fn lift<'a, T: Real>(
    traj: &'a dyn Worldline<T>,
    reparam: &'a Reparam<T>,
) -> Result<ParamTrajectory<'a, T>> {
    let (a, b) = traj.span();
    let (t0, t1) = reparam.image();
    if t0 < a || t1 > b {
        return Err(Error::InvalidReparam(format!(
            "time image [{t0}, {t1}] leaves the span [{a}, {b}]"
        )));
    }
    Ok(ParamTrajectory { traj, reparam })
}

impl<'a, T: Real> ParamTrajectory<'a, T> {
    pub fn span(&self) -> (T, T) {
        self.reparam.span()
    }

    pub fn time(&self, s: T) -> Result<T> {
        self.reparam.t(s)
    }

    pub fn position(&self, s: T) -> Result<Vec3<T>> {
        self.traj.position(self.reparam.t(s)?)
    }

    /// `(t', x')`; `x' = v(t(s))·t'` with the one-sided velocity `side`.
    pub fn derivative(&self, s: T, side: Side) -> Result<(T, Vec3<T>)> {
        let (t, dt, _) = self.reparam.eval(s)?;
        Ok((dt, self.traj.velocity(t, side)? * dt))
    }

    /// Chain-rule velocity `x'/t'`.
    pub fn velocity(&self, s: T, side: Side) -> Result<Vec3<T>> {
        let (dt, dx) = self.derivative(s, side)?;
        Ok(dx / dt)
    }

    /// Parameter values of the knots of `t(s)` and of the worldline's nodes.
    pub fn breakpoints(&self) -> Result<Vec<T>> {
        let (t0, t1) = self.reparam.image();
        let mut out: Vec<T> = self.reparam.knots().to_vec();
        for t in self.traj.breakpoints() {
            if t > t0 && t < t1 {
                out.push(self.reparam.inverse(t)?);
            }
        }
        out.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(out)
    }
}

/// Solution of the four-space light-cone condition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FourConeSolution<T> {
    pub cone: LightConeSolution<T>,
    /// Partner parameter `s_j^±`.
    pub s_dev: T,
    pub t_prime_dev: T,
    pub x_prime_dev: Vec3<T>,
}

impl<T: Real> FourConeSolution<T> {
    /// `t'_j ± n·x'_j`.
    pub fn denominator(&self) -> T {
        self.t_prime_dev + self.cone.sign.sign::<T>() * self.cone.n.dot(self.x_prime_dev)
    }
}

/// Solves `t_j(s_j) = t_i(s) ± |x_i(s) - x_j(s_j)|`: the root is found in
/// time on the partner worldline and mapped back through its reparametrization.
pub fn solve_four_cone<T: Real>(
    p_i: &ParamTrajectory<'_, T>,
    other: &ParamTrajectory<'_, T>,
    s: T,
    sign: ConeSign,
    opts: &LightConeOptions<T>,
) -> Result<FourConeSolution<T>> {
    let t = p_i.time(s)?;
    let x = p_i.position(s)?;
    let cone = solve_deviating_argument(other.traj, t, x, sign, opts)?;
    let s_dev = other.reparam.inverse(cone.t_dev)?;
    let dt = other.reparam.t_prime(s_dev)?;
    Ok(FourConeSolution {
        cone,
        s_dev,
        t_prime_dev: dt,
        x_prime_dev: cone.v_dev * dt,
    })
}

/// `(t'_i ± n·x'_i) / (t'_j ± n·x'_j)`.
pub fn radon_nikodym_s<T: Real>(sol: &FourConeSolution<T>, t_prime_i: T, x_prime_i: Vec3<T>) -> T {
    let sg = sol.cone.sign.sign::<T>();
    (t_prime_i + sg * sol.cone.n.dot(x_prime_i)) / sol.denominator()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TildeEval<T> {
    pub s: T,
    pub t_prime: T,
    pub x_prime: Vec3<T>,
    pub m_tilde: T,
    pub i_minus: T,
    pub i_plus: T,
    pub l_tilde: T,
    /// Spatial momentum `∂L̃/∂x'`.
    pub p_tilde: Vec3<T>,
    /// Zeroth momentum `∂L̃/∂t'`.
    pub p0: T,
    pub retarded: FourConeSolution<T>,
    pub advanced: FourConeSolution<T>,
}

pub fn tilde_eval<T: Real>(
    p_i: &ParamTrajectory<'_, T>,
    other: &ParamTrajectory<'_, T>,
    mass: T,
    s: T,
    opts: &LightConeOptions<T>,
) -> Result<TildeEval<T>> {
    let (tp, xp) = p_i.derivative(s, Side::Right)?;
    let ret = solve_four_cone(p_i, other, s, ConeSign::Retarded, opts)?;
    let adv = solve_four_cone(p_i, other, s, ConeSign::Advanced, opts)?;
    let xn = xp.norm();
    let root = ((tp - xn) * (tp + xn)).sqrt();
    let m_tilde = mass * xp.norm_sq() / (tp + root);
    let link = |c: &FourConeSolution<T>| {
        let den = c.cone.r * c.denominator();
        let inv = T::one() / (den + den);
        ((tp * c.t_prime_dev - xp.dot(c.x_prime_dev)) * inv, c.x_prime_dev * inv, c.t_prime_dev * inv)
    };
    let (im, am, um) = link(&ret);
    let (ip, ap, up) = link(&adv);
    let g = tp / root;
    Ok(TildeEval {
        s,
        t_prime: tp,
        x_prime: xp,
        m_tilde,
        i_minus: im,
        i_plus: ip,
        l_tilde: m_tilde + im + ip,
        p_tilde: xp * (mass / root) - am - ap,
        p0: -(mass * (g - T::one())) + um + up,
        retarded: ret,
        advanced: adv,
    })
}

/// Time-parametrized evaluation at the image point `t(s)`.
pub fn time_eval<T: Real>(
    p_i: &ParamTrajectory<'_, T>,
    other: &ParamTrajectory<'_, T>,
    particle: Particle,
    mass: T,
    s: T,
    opts: &LightConeOptions<T>,
) -> Result<LagrangianEval<T>> {
    let t = p_i.time(s)?;
    let state = ParticleState::new(particle, t, p_i.position(s)?, p_i.velocity(s, Side::Right)?, mass);
    let ret = solve_deviating_argument(other.traj, t, state.x, ConeSign::Retarded, opts)?;
    let adv = solve_deviating_argument(other.traj, t, state.x, ConeSign::Advanced, opts)?;
    Ok(evaluate_with_cones(&state, &ret, &adv, Side::Right))
}

/// `|P̃⁰ + (v·∂L/∂v - L)|` with `v = x'/t'`.
pub fn legendre_identity_residual<T: Real>(
    p_i: &ParamTrajectory<'_, T>,
    other: &ParamTrajectory<'_, T>,
    particle: Particle,
    mass: T,
    s: T,
    opts: &LightConeOptions<T>,
) -> Result<T> {
    let te = tilde_eval(p_i, other, mass, s, opts)?;
    let ev = time_eval(p_i, other, particle, mass, s, opts)?;
    Ok((te.p0 + ev.legendre_direct()).abs())
}

/// Time and spatial components of the four-space Euler-Lagrange residual.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeRedundancy<T> {
    /// `t'·∂L/∂t - dP̃⁰/ds`.
    pub time_residual: T,
    /// `t'·∂L/∂x - dP̃/ds`.
    pub spatial_residual: Vec3<T>,
    pub velocity: Vec3<T>,
    /// `(1 + |v|)γ`.
    pub bound: T,
}

impl<T: Real> TimeRedundancy<T> {
    /// `|time| - C·|spatial|`; non-positive up to discretization error.
    pub fn diagnostic(&self) -> T {
        self.time_residual.abs() - self.bound * self.spatial_residual.norm()
    }

    /// `|time + v·spatial|`, which vanishes identically.
    pub fn identity_gap(&self) -> T {
        (self.time_residual + self.velocity.dot(self.spatial_residual)).abs()
    }
}

/// Evaluates both residual components at `s` with five-point differences in
/// `s`. The step follows the same rule as the time-domain residual.
pub fn time_component_redundancy<T: Real>(
    p_i: &ParamTrajectory<'_, T>,
    other: &ParamTrajectory<'_, T>,
    particle: Particle,
    mass: T,
    s: T,
    opts: &ActionOptions<T>,
) -> Result<TimeRedundancy<T>> {
    let t = p_i.time(s)?;
    let mut dist = distance_to_kink(p_i.traj, other.traj, t, &opts.cone)?;
    let (s0, s1) = p_i.span();
    // distances in s are at least distances in t over t'_max
    dist = (dist / lit(T_PRIME_MAX)).min(s - s0).min(s1 - s);
    for &k in p_i.reparam.knots() {
        if k != s0 && k != s1 {
            dist = dist.min((k - s).abs());
        }
    }
    let h = opts.fd_min_step.max(opts.fd_rel_step * dist);
    if h + h >= dist {
        return Err(Error::TooCloseToNode {
            t: t.as_f64(),
            distance: dist.as_f64(),
        });
    }
    let at = |u: T| tilde_eval(p_i, other, mass, u, &opts.cone);
    let ev = time_eval(p_i, other, particle, mass, s, &opts.cone)?;
    let tp = p_i.reparam.t_prime(s)?;
    let e = [at(s - h - h)?, at(s - h)?, at(s + h)?, at(s + h + h)?];
    let d5 = |f: &dyn Fn(&TildeEval<T>) -> T| {
        (f(&e[0]) - f(&e[3]) + (f(&e[2]) - f(&e[1])) * lit(8.0)) / (h * lit(12.0))
    };
    let dp0 = d5(&|x| x.p0);
    let dp = Vec3::new(d5(&|x| x.p_tilde.x), d5(&|x| x.p_tilde.y), d5(&|x| x.p_tilde.z));
    let v = ev.state.v;
    Ok(TimeRedundancy {
        time_residual: tp * ev.grad_t - dp0,
        spatial_residual: ev.grad_x * tp - dp,
        velocity: v,
        bound: (T::one() + v.norm()) * gamma(v),
    })
}

/// Action evaluated over the lifted parametrizations. The boundary times
/// are carried to parameter values through the inverses of `t(s)`.
pub fn evaluate_action_lifted<T: Real>(
    p1: &ParamTrajectory<'_, T>,
    p2: &ParamTrajectory<'_, T>,
    boundary: &BoundaryData<T>,
    form: ActionForm,
    opts: &ActionOptions<T>,
) -> Result<T> {
    let tm = boundary.times();
    let mut quad = opts.quad;
    quad.tol = quad.tol * lit(0.25);
    let kinetic = |p: &ParamTrajectory<'_, T>, m: T, (a, b): (T, T)| -> Result<T> {
        let f = |s: T| -> Result<T> {
            let (tp, xp) = p.derivative(s, Side::Right)?;
            let xn = xp.norm();
            Ok(m * xp.norm_sq() / (tp + ((tp - xn) * (tp + xn)).sqrt()))
        };
        let lo = p.reparam.inverse(a)?;
        let hi = p.reparam.inverse(b)?;
        Ok(integrate_piecewise(&f, lo, hi, &p.breakpoints()?, &quad)?.value)
    };
    let link = |own: &ParamTrajectory<'_, T>,
                oth: &ParamTrajectory<'_, T>,
                sign: ConeSign,
                (a, b): (T, T)|
     -> Result<T> {
        let f = |s: T| -> Result<T> {
            let (tp, xp) = own.derivative(s, Side::Right)?;
            let c = solve_four_cone(own, oth, s, sign, &opts.cone)?;
            let den = c.cone.r * c.denominator();
            Ok((tp * c.t_prime_dev - xp.dot(c.x_prime_dev)) / (den + den))
        };
        let mut kinks = own.breakpoints()?;
        let (t0, t1) = own.reparam.image();
        for t in kink_times(own.traj, oth.traj, &[sign], &opts.cone)? {
            if t > t0 && t < t1 {
                kinks.push(own.reparam.inverse(t)?);
            }
        }
        // knots of the partner's time map seen through the light-cone
        let (u0, u1) = oth.reparam.image();
        for &k in oth.reparam.knots() {
            let tk = oth.reparam.t(k)?;
            if tk > u0 && tk < u1 {
                let xk = oth.traj.position(tk)?;
                if let Ok(img) = solve_deviating_argument(own.traj, tk, xk, sign.flip(), &opts.cone) {
                    if img.t_dev > t0 && img.t_dev < t1 {
                        kinks.push(own.reparam.inverse(img.t_dev)?);
                    }
                }
            }
        }
        let lo = own.reparam.inverse(a)?;
        let hi = own.reparam.inverse(b)?;
        Ok(integrate_piecewise(&f, lo, hi, &kinks, &quad)?.value)
    };
    let k1 = kinetic(p1, boundary.mass(Particle::One), tm.free_range(Particle::One))?;
    let k2 = kinetic(p2, boundary.mass(Particle::Two), tm.free_range(Particle::Two))?;
    let (ir, ia) = match form {
        ActionForm::AFokker => (
            link(p1, p2, ConeSign::Retarded, (tm.o1, tm.l2_plus))?,
            link(p1, p2, ConeSign::Advanced, (tm.o1, tm.l2_minus))?,
        ),
        ActionForm::L2 => (
            link(p2, p1, ConeSign::Advanced, (tm.o1_minus, tm.l2))?,
            link(p2, p1, ConeSign::Retarded, (tm.o1_plus, tm.l2))?,
        ),
    };
    Ok(k1 + k2 + ir + ia)
}
