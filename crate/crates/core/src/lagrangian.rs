//! Partial Lagrangians `L_i = M_i + I⁻ + I⁺`, the potentials `A`, `U`, the
//! momentum `P = ∂L/∂v`, the Legendre transform `E` and the explicit
//! gradients `∂L/∂x`, `∂L/∂t`.

use serde::Serialize;

use crate::error::Result;
use crate::lightcone::{
    deviating_partials_side, solve_deviating_argument, ConeSign, LightConeOptions,
    LightConeSolution,
};
use crate::scalar::Real;
use crate::trajectory::{Particle, Side, Worldline};
use crate::vec3::Vec3;

/// Point in the phase space of one particle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParticleState<T> {
    pub particle: Particle,
    pub t: T,
    pub x: Vec3<T>,
    pub v: Vec3<T>,
    pub mass: T,
}

impl<T: Real> ParticleState<T> {
    pub fn new(particle: Particle, t: T, x: Vec3<T>, v: Vec3<T>, mass: T) -> Self {
        Self {
            particle,
            t,
            x,
            v,
            mass,
        }
    }

    /// State read off a worldline, with the one-sided velocity `side`.
    pub fn on<W: Worldline<T> + ?Sized>(
        particle: Particle,
        w: &W,
        t: T,
        side: Side,
        mass: T,
    ) -> Result<Self> {
        Ok(Self::new(particle, t, w.position(t)?, w.velocity(t, side)?, mass))
    }
}

/// `√(1 - v²)` evaluated as `√((1-|v|)(1+|v|))`.
#[inline]
pub fn inverse_gamma<T: Real>(v: Vec3<T>) -> T {
    let s = v.norm();
    ((T::one() - s) * (T::one() + s)).sqrt()
}

#[inline]
pub fn gamma<T: Real>(v: Vec3<T>) -> T {
    T::one() / inverse_gamma(v)
}

/// `m(1 - √(1 - v²))`, written without cancellation for small `v`.
pub fn kinetic_term<T: Real>(state: &ParticleState<T>) -> T {
    let ig = inverse_gamma(state.v);
    state.mass * state.v.norm_sq() / (T::one() + ig)
}

/// Everything the partial Lagrangian produces at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LagrangianEval<T> {
    pub state: ParticleState<T>,
    pub kinetic: T,
    pub i_minus: T,
    pub i_plus: T,
    pub lagrangian: T,
    /// Vector potential `Σ v_dev / (2D)`.
    pub a: Vec3<T>,
    /// Scalar potential `Σ 1 / (2D)`.
    pub u: T,
    pub p: Vec3<T>,
    /// `mγ - m - U`.
    pub e: T,
    pub grad_x: Vec3<T>,
    /// Explicit time derivative at fixed `x`, `v`.
    pub grad_t: T,
    /// Part of `grad_x` proportional to the delayed accelerations.
    pub grad_x_accel: Vec3<T>,
    pub retarded: LightConeSolution<T>,
    pub advanced: LightConeSolution<T>,
}

impl<T: Real> LagrangianEval<T> {
    /// `M - v·A + U`.
    pub fn lagrangian_potential_form(&self) -> T {
        self.kinetic - self.state.v.dot(self.a) + self.u
    }

    /// `v·∂L/∂v - L`, evaluated directly from the momentum.
    pub fn legendre_direct(&self) -> T {
        self.state.v.dot(self.p) - self.lagrangian
    }

    pub fn gamma(&self) -> T {
        gamma(self.state.v)
    }
}

struct ConeTerms<T> {
    i: T,
    inv_2d: T,
    v_dev: Vec3<T>,
    grad_x: Vec3<T>,
    grad_x_accel: Vec3<T>,
    grad_t: T,
}

fn cone_terms<T: Real>(v: Vec3<T>, sol: &LightConeSolution<T>, side: Side) -> ConeTerms<T> {
    let sg = sol.sign.sign::<T>();
    let vj = sol.v_dev_side(side);
    let aj = sol.a_dev_side(side);
    let d = sol.r * sol.denominator_side(side);
    let inv_2d = T::one() / (d + d);
    let i = (T::one() - v.dot(vj)) * inv_2d;
    let (dt_dx, dt_dt) = deviating_partials_side(sol, side);

    // D = ±(t_dev - t + (x_i - x_j(t_dev))·v_j(t_dev))
    let ra = sol.r * sol.n.dot(aj);
    let base = T::one() - vj.norm_sq();
    let dd_dx_plain = dt_dx * (sg * base) + vj * sg;
    let dd_dx_accel = dt_dx * (sg * ra);
    let dd_dt = sg * (base + ra) * dt_dt - sg;

    let i_over_d = i / d;
    let va = v.dot(aj);
    let grad_x_plain = -(dd_dx_plain * i_over_d);
    let grad_x_accel = -(dd_dx_accel * i_over_d) - dt_dx * (va * inv_2d);
    let grad_t = -i_over_d * dd_dt - va * inv_2d * dt_dt;
    ConeTerms {
        i,
        inv_2d,
        v_dev: vj,
        grad_x: grad_x_plain + grad_x_accel,
        grad_x_accel,
        grad_t,
    }
}

/// Evaluates all partial-Lagrangian quantities from already solved cones.
///
/// `side` selects the one-sided delayed data; the state's own velocity is
/// taken as given.
pub fn evaluate_with_cones<T: Real>(
    state: &ParticleState<T>,
    retarded: &LightConeSolution<T>,
    advanced: &LightConeSolution<T>,
    side: Side,
) -> LagrangianEval<T> {
    let v = state.v;
    let m = state.mass;
    let ret = cone_terms(v, retarded, side);
    let adv = cone_terms(v, advanced, side);
    let kinetic = kinetic_term(state);
    let a = ret.v_dev * ret.inv_2d + adv.v_dev * adv.inv_2d;
    let u = ret.inv_2d + adv.inv_2d;
    let g = gamma(v);
    LagrangianEval {
        state: *state,
        kinetic,
        i_minus: ret.i,
        i_plus: adv.i,
        lagrangian: kinetic + ret.i + adv.i,
        a,
        u,
        p: v * (m * g) - a,
        e: m * v.norm_sq() * g / (T::one() + inverse_gamma(v)) - u,
        grad_x: ret.grad_x + adv.grad_x,
        grad_t: ret.grad_t + adv.grad_t,
        grad_x_accel: ret.grad_x_accel + adv.grad_x_accel,
        retarded: *retarded,
        advanced: *advanced,
    }
}

/// Retarded and advanced cones of `state` on the partner worldline.
pub fn solve_cones<T: Real, W: Worldline<T> + ?Sized>(
    state: &ParticleState<T>,
    other: &W,
    opts: &LightConeOptions<T>,
) -> Result<(LightConeSolution<T>, LightConeSolution<T>)> {
    let ret = solve_deviating_argument(other, state.t, state.x, ConeSign::Retarded, opts)?;
    let adv = solve_deviating_argument(other, state.t, state.x, ConeSign::Advanced, opts)?;
    Ok((ret, adv))
}

pub fn partial_lagrangian<T: Real, W: Worldline<T> + ?Sized>(
    state: &ParticleState<T>,
    other: &W,
    opts: &LightConeOptions<T>,
) -> Result<LagrangianEval<T>> {
    partial_lagrangian_side(state, other, Side::Right, opts)
}

pub fn partial_lagrangian_side<T: Real, W: Worldline<T> + ?Sized>(
    state: &ParticleState<T>,
    other: &W,
    side: Side,
    opts: &LightConeOptions<T>,
) -> Result<LagrangianEval<T>> {
    let (ret, adv) = solve_cones(state, other, opts)?;
    Ok(evaluate_with_cones(state, &ret, &adv, side))
}

/// `(I⁻, I⁺, retarded, advanced)`.
pub fn interaction_terms<T: Real, W: Worldline<T> + ?Sized>(
    state: &ParticleState<T>,
    other: &W,
    opts: &LightConeOptions<T>,
) -> Result<(T, T, LightConeSolution<T>, LightConeSolution<T>)> {
    let ev = partial_lagrangian(state, other, opts)?;
    Ok((ev.i_minus, ev.i_plus, ev.retarded, ev.advanced))
}

/// `(A, U)`.
pub fn potentials<T: Real, W: Worldline<T> + ?Sized>(
    state: &ParticleState<T>,
    other: &W,
    opts: &LightConeOptions<T>,
) -> Result<(Vec3<T>, T)> {
    let ev = partial_lagrangian(state, other, opts)?;
    Ok((ev.a, ev.u))
}

pub fn momentum<T: Real, W: Worldline<T> + ?Sized>(
    state: &ParticleState<T>,
    other: &W,
    opts: &LightConeOptions<T>,
) -> Result<Vec3<T>> {
    Ok(partial_lagrangian(state, other, opts)?.p)
}

pub fn legendre_transform<T: Real, W: Worldline<T> + ?Sized>(
    state: &ParticleState<T>,
    other: &W,
    opts: &LightConeOptions<T>,
) -> Result<T> {
    Ok(partial_lagrangian(state, other, opts)?.e)
}

pub fn grad_x<T: Real, W: Worldline<T> + ?Sized>(
    state: &ParticleState<T>,
    other: &W,
    opts: &LightConeOptions<T>,
) -> Result<Vec3<T>> {
    Ok(partial_lagrangian(state, other, opts)?.grad_x)
}

/// Velocity with kinetic momentum `p`, `p / √(m² + p²)`.
pub fn velocity_from_kinetic_momentum<T: Real>(p: Vec3<T>, mass: T) -> Vec3<T> {
    p / (mass * mass + p.norm_sq()).sqrt()
}

/// Point values for serialized time series.
#[derive(Debug, Clone, Serialize)]
pub struct SeriesPoint {
    pub t: f64,
    pub x: [f64; 3],
    pub v: [f64; 3],
    pub p: [f64; 3],
    pub e: f64,
}

impl<T: Real> From<&LagrangianEval<T>> for SeriesPoint {
    fn from(ev: &LagrangianEval<T>) -> Self {
        let c = |w: Vec3<T>| [w.x.as_f64(), w.y.as_f64(), w.z.as_f64()];
        Self {
            t: ev.state.t.as_f64(),
            x: c(ev.state.x),
            v: c(ev.state.v),
            p: c(ev.p),
            e: ev.e.as_f64(),
        }
    }
}
