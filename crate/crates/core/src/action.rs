//! The two-body action in its two equivalent forms, its first variation,
//! and pointwise Euler-Lagrange and corner residuals.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lagrangian::{evaluate_with_cones, kinetic_term, solve_cones, LagrangianEval, ParticleState};
use crate::lightcone::{solve_deviating_argument, ConeSign, LightConeOptions};
use crate::quadrature::{integrate_piecewise, QuadratureOptions};
use crate::scalar::{lit, Real};
use crate::trajectory::{BoundaryData, Particle, Perturbation, Side, Worldline};
use crate::vec3::Vec3;

/// Which time the interaction integrals are written in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ActionForm {
    /// Both interaction integrals over particle 1's time.
    AFokker,
    /// Both interaction integrals over particle 2's time.
    L2,
}

#[derive(Debug, Clone, Copy)]
pub struct ActionOptions<T> {
    pub quad: QuadratureOptions<T>,
    pub cone: LightConeOptions<T>,
    /// Lower bound of the finite-difference step used for `dP/dt`.
    pub fd_min_step: T,
    /// Step as a fraction of the distance to the nearest kink.
    pub fd_rel_step: T,
    /// Distance under which a time is identified with a node.
    pub node_tol: T,
}

impl<T: Real> Default for ActionOptions<T> {
    fn default() -> Self {
        Self {
            quad: QuadratureOptions::default(),
            cone: LightConeOptions::default(),
            fd_min_step: lit(1e-5),
            fd_rel_step: lit(0.01),
            node_tol: lit(1e-9),
        }
    }
}

impl<T: Real> ActionOptions<T> {
    pub fn with_quad_tol(mut self, tol: T) -> Self {
        self.quad.tol = tol;
        self
    }
}

/// The four integrals of one form of the action.
///
/// `interaction_retarded` pairs particle 1's time with the earlier time of
/// particle 2: it is the integral of `I₁₂⁻` over particle 1's time in the
/// `AFokker` form and of `I₂₁⁺` over particle 2's time in the `L2` form.
/// `interaction_advanced` is the other pairing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ActionBreakdown<T> {
    pub form: ActionForm,
    pub kinetic1: T,
    pub kinetic2: T,
    pub interaction_retarded: T,
    pub interaction_advanced: T,
    pub total: T,
    pub error_estimate: T,
}

/// Both forms side by side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ActionReport<T> {
    pub a_fokker: ActionBreakdown<T>,
    pub l2: ActionBreakdown<T>,
    pub difference: T,
}

pub(crate) fn pick<'a, T: Real>(
    particle: Particle,
    traj1: &'a dyn Worldline<T>,
    traj2: &'a dyn Worldline<T>,
) -> (&'a dyn Worldline<T>, &'a dyn Worldline<T>) {
    match particle {
        Particle::One => (traj1, traj2),
        Particle::Two => (traj2, traj1),
    }
}

/// Times on `own` whose `sign`-cone image on `other` is a node of `other`.
pub fn partner_node_images<T: Real>(
    own: &dyn Worldline<T>,
    other: &dyn Worldline<T>,
    sign: ConeSign,
    opts: &LightConeOptions<T>,
) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for tau in other.breakpoints() {
        let x = other.position(tau)?;
        match solve_deviating_argument(own, tau, x, sign.flip(), opts) {
            Ok(sol) => out.push(sol.t_dev),
            Err(Error::SpanExhausted { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// Own nodes plus partner-node images under the given cones: the only
/// places where integrands built from these cones can have kinks.
pub fn kink_times<T: Real>(
    own: &dyn Worldline<T>,
    other: &dyn Worldline<T>,
    signs: &[ConeSign],
    opts: &LightConeOptions<T>,
) -> Result<Vec<T>> {
    let mut out = own.breakpoints();
    for &s in signs {
        out.extend(partner_node_images(own, other, s, opts)?);
    }
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(out)
}

fn kinetic_integral<T: Real>(
    own: &dyn Worldline<T>,
    mass: T,
    particle: Particle,
    (a, b): (T, T),
    quad: &QuadratureOptions<T>,
) -> Result<(T, T)> {
    let f = |t: T| -> Result<T> {
        let s = ParticleState::on(particle, own, t, Side::Right, mass)?;
        Ok(kinetic_term(&s))
    };
    let est = integrate_piecewise(&f, a, b, &own.breakpoints(), quad)?;
    Ok((est.value, est.error))
}

fn interaction_integral<T: Real>(
    own: &dyn Worldline<T>,
    other: &dyn Worldline<T>,
    sign: ConeSign,
    (a, b): (T, T),
    opts: &ActionOptions<T>,
    quad: &QuadratureOptions<T>,
) -> Result<(T, T)> {
    let f = |t: T| -> Result<T> {
        let x = own.position(t)?;
        let v = own.velocity(t, Side::Right)?;
        let sol = solve_deviating_argument(other, t, x, sign, &opts.cone)?;
        let d = sol.r * sol.denominator();
        Ok((T::one() - v.dot(sol.v_dev)) / (d + d))
    };
    let kinks = kink_times(own, other, &[sign], &opts.cone)?;
    let est = integrate_piecewise(&f, a, b, &kinks, quad)?;
    Ok((est.value, est.error))
}

/// Evaluates the action in the requested form. Each of the four integrals
/// is computed to a quarter of `opts.quad.tol`.
pub fn evaluate_action<T: Real>(
    traj1: &dyn Worldline<T>,
    traj2: &dyn Worldline<T>,
    boundary: &BoundaryData<T>,
    form: ActionForm,
    opts: &ActionOptions<T>,
) -> Result<ActionBreakdown<T>> {
    let tm = boundary.times();
    let mut quad = opts.quad;
    quad.tol = quad.tol * lit(0.25);
    let (k1, e1) = kinetic_integral(
        traj1,
        boundary.mass(Particle::One),
        Particle::One,
        tm.free_range(Particle::One),
        &quad,
    )?;
    let (k2, e2) = kinetic_integral(
        traj2,
        boundary.mass(Particle::Two),
        Particle::Two,
        tm.free_range(Particle::Two),
        &quad,
    )?;
    let ((ir, er), (ia, ea)) = match form {
        ActionForm::AFokker => (
            interaction_integral(traj1, traj2, ConeSign::Retarded, (tm.o1, tm.l2_plus), opts, &quad)?,
            interaction_integral(traj1, traj2, ConeSign::Advanced, (tm.o1, tm.l2_minus), opts, &quad)?,
        ),
        ActionForm::L2 => (
            interaction_integral(traj2, traj1, ConeSign::Advanced, (tm.o1_minus, tm.l2), opts, &quad)?,
            interaction_integral(traj2, traj1, ConeSign::Retarded, (tm.o1_plus, tm.l2), opts, &quad)?,
        ),
    };
    Ok(ActionBreakdown {
        form,
        kinetic1: k1,
        kinetic2: k2,
        interaction_retarded: ir,
        interaction_advanced: ia,
        total: k1 + k2 + ir + ia,
        error_estimate: e1 + e2 + er + ea,
    })
}

pub fn action_report<T: Real>(
    traj1: &dyn Worldline<T>,
    traj2: &dyn Worldline<T>,
    boundary: &BoundaryData<T>,
    opts: &ActionOptions<T>,
) -> Result<ActionReport<T>> {
    let a = evaluate_action(traj1, traj2, boundary, ActionForm::AFokker, opts)?;
    let l = evaluate_action(traj1, traj2, boundary, ActionForm::L2, opts)?;
    Ok(ActionReport {
        a_fokker: a,
        l2: l,
        difference: a.total - l.total,
    })
}

/// Partial-Lagrangian evaluation for `particle` at time `t`, one-sided.
pub fn evaluate_at<T: Real>(
    traj1: &dyn Worldline<T>,
    traj2: &dyn Worldline<T>,
    boundary: &BoundaryData<T>,
    particle: Particle,
    t: T,
    side: Side,
    opts: &LightConeOptions<T>,
) -> Result<LagrangianEval<T>> {
    let (own, other) = pick(particle, traj1, traj2);
    let s = ParticleState::on(particle, own, t, side, boundary.mass(particle))?;
    let (ret, adv) = solve_cones(&s, other, opts)?;
    Ok(evaluate_with_cones(&s, &ret, &adv, side))
}

/// First variation `δS_i(b) = ∫ [∂L_i/∂x·b + P_i·ḃ] dt` over the support of
/// `b`, which must lie inside the particle's free range.
pub fn gateaux_derivative<T: Real>(
    traj1: &dyn Worldline<T>,
    traj2: &dyn Worldline<T>,
    boundary: &BoundaryData<T>,
    b: &Perturbation<T>,
    particle: Particle,
    opts: &ActionOptions<T>,
) -> Result<T> {
    let (lo, hi) = boundary.times().free_range(particle);
    let slack = opts.node_tol * (T::one() + lo.abs().max(hi.abs()));
    if b.start() < lo - slack || b.end() > hi + slack {
        return Err(Error::InvalidPerturbation(format!(
            "support [{}, {}] leaves the free range [{lo}, {hi}]",
            b.start(),
            b.end()
        )));
    }
    let (own, other) = pick(particle, traj1, traj2);
    let mass = boundary.mass(particle);
    let f = |t: T| -> Result<T> {
        let s = ParticleState::on(particle, own, t, Side::Right, mass)?;
        let (ret, adv) = solve_cones(&s, other, &opts.cone)?;
        let ev = evaluate_with_cones(&s, &ret, &adv, Side::Right);
        Ok(ev.grad_x.dot(b.position(t)?) + ev.p.dot(b.velocity(t, Side::Right)?))
    };
    let mut kinks = kink_times(own, other, &[ConeSign::Retarded, ConeSign::Advanced], &opts.cone)?;
    kinks.extend(b.interior_times());
    let mut total = integrate_piecewise(&f, b.start(), b.end(), &kinks, &opts.quad)?.value;
    for (t, j) in partner_jump_impulses(own, other, (b.start(), b.end()), &opts.cone)? {
        total = total + j.dot(b.position(t)?);
    }
    Ok(total)
}

/// Impulses carried by the images of partner velocity jumps on the open
/// range `(lo, hi)` of own time.
///
/// The interaction term jumps at such an image `t*`, and `t*` moves with the
/// own position by `dt*/dx = -σ n / (1 + σ n·v)`, so the first variation of
/// the action gains `J·b(t*)` with `J = [I(t*⁻) - I(t*⁺)] dt*/dx`. Where the
/// own velocity also jumps at `t*` the two one-sided values are averaged,
/// which is what a central difference sees.
pub fn partner_jump_impulses<T: Real>(
    own: &dyn Worldline<T>,
    other: &dyn Worldline<T>,
    (lo, hi): (T, T),
    opts: &LightConeOptions<T>,
) -> Result<Vec<(T, Vec3<T>)>> {
    let half = lit::<T>(0.5);
    let mut out = Vec::new();
    for tau in other.breakpoints() {
        let y = other.position(tau)?;
        for sign in [ConeSign::Retarded, ConeSign::Advanced] {
            let t = match solve_deviating_argument(own, tau, y, sign.flip(), opts) {
                Ok(sol) => sol.t_dev,
                Err(Error::SpanExhausted { .. }) => continue,
                Err(e) => return Err(e),
            };
            if !(t > lo && t < hi) {
                continue;
            }
            let sol = solve_deviating_argument(other, t, own.position(t)?, sign, opts)?;
            let sg = sign.sign::<T>();
            let term = |v: Vec3<T>, side: Side| {
                let d = sol.r * sol.denominator_side(side);
                (T::one() - v.dot(sol.v_dev_side(side))) / (d + d)
            };
            let mut impulse = Vec3::zero();
            for side in [Side::Left, Side::Right] {
                let v = own.velocity(t, side)?;
                let jump = term(v, Side::Left) - term(v, Side::Right);
                impulse = impulse + sol.n * (-sg * jump * half / (T::one() + sg * sol.n.dot(v)));
            }
            if impulse.norm_sq() > T::zero() {
                out.push((t, impulse));
            }
        }
    }
    Ok(out)
}

/// Distance from `t` to the nearest kink of the partial Lagrangian or span end.
pub fn distance_to_kink<T: Real>(
    own: &dyn Worldline<T>,
    other: &dyn Worldline<T>,
    t: T,
    opts: &LightConeOptions<T>,
) -> Result<T> {
    let (a, b) = own.span();
    let kinks = kink_times(own, other, &[ConeSign::Retarded, ConeSign::Advanced], opts)?;
    Ok(kinks
        .into_iter()
        .map(|k| (k - t).abs())
        .fold((t - a).min(b - t), T::min))
}

/// `∂L/∂x - dP/dt` at a time away from kinks; `dP/dt` by five-point central
/// differences of the analytic momentum.
pub fn el_residual<T: Real>(
    traj1: &dyn Worldline<T>,
    traj2: &dyn Worldline<T>,
    boundary: &BoundaryData<T>,
    particle: Particle,
    t: T,
    opts: &ActionOptions<T>,
) -> Result<Vec3<T>> {
    let (lo, hi) = boundary.times().free_range(particle);
    if !(t > lo && t < hi) {
        return Err(Error::TimeOutOfRange {
            t: t.as_f64(),
            start: lo.as_f64(),
            end: hi.as_f64(),
        });
    }
    let (own, other) = pick(particle, traj1, traj2);
    let dist = distance_to_kink(own, other, t, &opts.cone)?;
    let h = opts.fd_min_step.max(opts.fd_rel_step * dist);
    if h + h >= dist {
        return Err(Error::TooCloseToNode {
            t: t.as_f64(),
            distance: dist.as_f64(),
        });
    }
    let at = |s: T| evaluate_at(traj1, traj2, boundary, particle, s, Side::Right, &opts.cone);
    let centre = at(t)?;
    let p = |s: T| -> Result<Vec3<T>> { Ok(at(s)?.p) };
    let two = h + h;
    let dp = (p(t - two)? - p(t + two)? + (p(t + h)? - p(t - h)?) * lit(8.0)) / (h * lit(12.0));
    Ok(centre.grad_x - dp)
}

/// Whether `t` is an own node or a partner-node image (within `tol`).
pub fn is_kink<T: Real>(
    own: &dyn Worldline<T>,
    other: &dyn Worldline<T>,
    t: T,
    tol: T,
    opts: &LightConeOptions<T>,
) -> Result<bool> {
    let kinks = kink_times(own, other, &[ConeSign::Retarded, ConeSign::Advanced], opts)?;
    Ok(kinks.iter().any(|&k| (k - t).abs() <= tol))
}

/// Corner residuals `(P(τ⁺) - P(τ⁻), E(τ⁺) - E(τ⁻))` at a node or a
/// partner-node image.
pub fn we_residuals<T: Real>(
    traj1: &dyn Worldline<T>,
    traj2: &dyn Worldline<T>,
    boundary: &BoundaryData<T>,
    particle: Particle,
    node_time: T,
    opts: &ActionOptions<T>,
) -> Result<(Vec3<T>, T)> {
    let (own, other) = pick(particle, traj1, traj2);
    let tol = opts.node_tol * (T::one() + node_time.abs());
    if !is_kink(own, other, node_time, tol, &opts.cone)? {
        return Err(Error::NotANode {
            t: node_time.as_f64(),
        });
    }
    // a corner within the tolerance of an own node is evaluated on the node
    let node_time = own.breakpoint_near(node_time, tol).unwrap_or(node_time);
    let left = evaluate_at(traj1, traj2, boundary, particle, node_time, Side::Left, &opts.cone)?;
    let right = evaluate_at(traj1, traj2, boundary, particle, node_time, Side::Right, &opts.cone)?;
    Ok((right.p - left.p, right.e - left.e))
}

/// Kinks of `particle` strictly inside its free range. Kinks closer than
/// `opts.node_tol` (relative) form one corner, represented by an own node
/// when the cluster contains one.
pub fn free_range_kinks<T: Real>(
    traj1: &dyn Worldline<T>,
    traj2: &dyn Worldline<T>,
    boundary: &BoundaryData<T>,
    particle: Particle,
    opts: &ActionOptions<T>,
) -> Result<Vec<T>> {
    let (own, other) = pick(particle, traj1, traj2);
    let (lo, hi) = boundary.times().free_range(particle);
    let nodes = own.breakpoints();
    let mut k = kink_times(own, other, &[ConeSign::Retarded, ConeSign::Advanced], &opts.cone)?;
    k.retain(|&t| t > lo && t < hi);
    let mut out: Vec<T> = Vec::with_capacity(k.len());
    let mut start = T::zero();
    for t in k {
        let is_node = nodes.contains(&t);
        match out.last_mut() {
            Some(last) if t - start <= opts.node_tol * (T::one() + t.abs()) => {
                if is_node {
                    *last = t;
                }
            }
            _ => {
                out.push(t);
                start = t;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory::{Node, Trajectory};

    fn ax(x: f64) -> Vec3<f64> {
        Vec3::new(x, 0.0, 0.0)
    }

    /// Static pair at separation `d` with `t_O1 = 0` and `t_L2⁻ = w`.
    fn static_fixture(d: f64, w: f64) -> (Trajectory<f64>, Trajectory<f64>, BoundaryData<f64>) {
        let t1 = Trajectory::stationary(Vec3::zero(), -10.0, 40.0).unwrap();
        let t2 = Trajectory::stationary(ax(d), -10.0, 40.0).unwrap();
        let bd = BoundaryData::from_trajectories(&t1, &t2, 0.0, w + d, [1.0, 1.0], &LightConeOptions::default())
            .unwrap();
        (t1, t2, bd)
    }

    #[test]
    fn static_action_value() {
        let (t1, t2, bd) = static_fixture(2.0, 2.0);
        let tm = bd.times();
        assert!((tm.o1_minus + 2.0).abs() < 1e-12 && (tm.o1_plus - 2.0).abs() < 1e-12);
        assert!((tm.l2_minus - 2.0).abs() < 1e-12 && (tm.l2_plus - 6.0).abs() < 1e-12);
        let o = ActionOptions::default();
        let a = evaluate_action(&t1, &t2, &bd, ActionForm::AFokker, &o).unwrap();
        assert!((a.interaction_retarded - 1.5).abs() < 1e-12);
        assert!((a.interaction_advanced - 0.5).abs() < 1e-12);
        assert_eq!(a.kinetic1, 0.0);
        assert!((a.total - 2.0).abs() < 1e-12);
        let l = evaluate_action(&t1, &t2, &bd, ActionForm::L2, &o).unwrap();
        assert!((a.total - l.total).abs() < 2e-10);
        assert!((l.interaction_retarded - 1.5).abs() < 1e-12);
    }

    #[test]
    fn static_scaling_with_separation() {
        // interaction windows have lengths w + 2d and w
        let o = ActionOptions::default();
        for (d, w) in [(2.0, 3.0), (4.0, 3.0)] {
            let (t1, t2, bd) = static_fixture(d, w);
            let a = evaluate_action(&t1, &t2, &bd, ActionForm::AFokker, &o).unwrap();
            let want = ((w + 2.0 * d) + w) / (2.0 * d);
            assert!((a.total - want).abs() < 1e-12);
        }
    }

    #[test]
    fn static_residuals() {
        let (t1, t2, bd) = static_fixture(2.0, 2.0);
        let o = ActionOptions::default();
        let r = el_residual(&t1, &t2, &bd, Particle::One, 1.0, &o).unwrap();
        assert!((r - ax(0.25)).norm() < 1e-9);
        let r2 = el_residual(&t1, &t2, &bd, Particle::Two, 3.0, &o).unwrap();
        assert!((r2 + r).norm() < 1e-9);
    }

    fn jump_pair() -> (Trajectory<f64>, Trajectory<f64>, BoundaryData<f64>) {
        let tau = 1.0;
        let t1 = Trajectory::new(vec![
            Node::smooth(-10.0, Vec3::zero(), Vec3::zero()),
            Node { t: tau, x: Vec3::zero(), v_left: Vec3::zero(), v_right: ax(0.1) },
            Node::smooth(100.0, ax(0.1 * 99.0), ax(0.1)),
        ])
        .unwrap();
        let t2 = Trajectory::stationary(ax(-20.0), -60.0, 200.0).unwrap();
        let bd = BoundaryData::from_trajectories(&t1, &t2, 0.0, 30.0, [1.0, 1.0], &LightConeOptions::default())
            .unwrap();
        (t1, t2, bd)
    }

    #[test]
    fn corner_residual_of_artificial_jump() {
        let (t1, t2, bd) = jump_pair();
        let o = ActionOptions::default();
        let (dp, de) = we_residuals(&t1, &t2, &bd, Particle::One, 1.0, &o).unwrap();
        let g = 1.0 / (1.0f64 - 0.01).sqrt();
        assert!((dp - ax(0.1 * g)).norm() < 1e-14);
        assert!((de - (g - 1.0)).abs() < 1e-14);
        assert!((dp.x - 0.1005038).abs() < 1e-7 && (de - 0.0050378).abs() < 1e-7);
        assert!(matches!(
            we_residuals(&t1, &t2, &bd, Particle::One, 1.5, &o),
            Err(Error::NotANode { .. })
        ));
        // smooth image of a partner node: nothing jumps
        let (s1, s2, sbd) = static_fixture(2.0, 2.0);
        assert!(matches!(
            we_residuals(&s1, &s2, &sbd, Particle::One, 1.0, &o),
            Err(Error::NotANode { .. })
        ));
    }

    #[test]
    fn el_residual_refuses_nodes() {
        let (t1, t2, bd) = jump_pair();
        let o = ActionOptions::default();
        assert!(matches!(
            el_residual(&t1, &t2, &bd, Particle::One, 1.0 + 1e-6, &o),
            Err(Error::TooCloseToNode { .. })
        ));
    }

    #[test]
    fn zero_perturbation_has_zero_derivative() {
        let (t1, t2, bd) = static_fixture(2.0, 2.0);
        let b = Perturbation::new(vec![
            Node::smooth(0.0, Vec3::zero(), Vec3::zero()),
            Node::smooth(2.0, Vec3::zero(), Vec3::zero()),
        ])
        .unwrap();
        let d = gateaux_derivative(&t1, &t2, &bd, &b, Particle::One, &ActionOptions::default()).unwrap();
        assert_eq!(d, 0.0);
    }

    #[test]
    fn gateaux_matches_difference_quotient_for_static_pair() {
        let (t1, t2, bd) = static_fixture(2.0, 2.0);
        let o = ActionOptions::default();
        let b = Perturbation::hat(0.0, 1.0, 2.0, ax(1.0)).unwrap();
        let g = gateaux_derivative(&t1, &t2, &bd, &b, Particle::One, &o).unwrap();
        let s = |eps: f64| {
            let p = t1.perturbed(&b, eps).unwrap();
            evaluate_action(&p, &t2, &bd, ActionForm::AFokker, &o).unwrap().total
        };
        let s0 = s(0.0);
        let q = |eps: f64| (s(eps) - s0) / eps;
        let rich = 2.0 * q(1e-4) - q(2e-4);
        let rel = (rich - g).abs() / g.abs();
        assert!(rel < 1e-6, "{g} vs {rich}");
    }

    #[test]
    fn gateaux_sees_moving_partner_kink() {
        // particle 1 kinks at t = 1; its advanced image on particle 2 lies near
        // t = 21, inside the support of the perturbation
        let (t1, t2, bd) = jump_pair();
        let o = ActionOptions::default().with_quad_tol(1e-13);
        let b = Perturbation::hat(20.5, 24.0, 29.0, Vec3::new(1.0, 0.5, 0.0)).unwrap();
        let kicks = partner_jump_impulses(&t2, &t1, (20.5, 29.0), &o.cone).unwrap();
        assert_eq!(kicks.len(), 1);
        assert!((kicks[0].0 - 21.0).abs() < 0.1);
        let g = gateaux_derivative(&t1, &t2, &bd, &b, Particle::Two, &o).unwrap();
        let s = |eps: f64| {
            let p = t2.perturbed(&b, eps).unwrap();
            evaluate_action(&t1, &p, &bd, ActionForm::AFokker, &o).unwrap().total
        };
        let d = |eps: f64| (s(eps) - s(-eps)) / (2.0 * eps);
        let rich = (4.0 * d(1e-3) - d(2e-3)) / 3.0;
        assert!((rich - g).abs() < 1e-6 * g.abs(), "{g} vs {rich}");
        // without the point term the integral alone is visibly off
        let smooth = g - kicks[0].1.dot(b.position(kicks[0].0).unwrap());
        assert!((rich - smooth).abs() > 1e-4 * g.abs());
    }
}
