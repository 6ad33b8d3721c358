//! Advanced and retarded deviating arguments of the light-cone condition
//! `s = t ± |x_i - x_j(s)|`.

use crate::error::{Error, Result};
use crate::scalar::{lit, Real};
use crate::trajectory::{Side, Worldline};
use crate::vec3::Vec3;

/// Which light-cone the partner is evaluated on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConeSign {
    /// Past cone, `t_j^- = t - r`.
    Retarded,
    /// Future cone, `t_j^+ = t + r`.
    Advanced,
}

impl ConeSign {
    #[inline]
    pub fn sign<T: Real>(self) -> T {
        match self {
            ConeSign::Retarded => -T::one(),
            ConeSign::Advanced => T::one(),
        }
    }

    pub fn flip(self) -> Self {
        match self {
            ConeSign::Retarded => ConeSign::Advanced,
            ConeSign::Advanced => ConeSign::Retarded,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ConeSign::Retarded => "retarded",
            ConeSign::Advanced => "advanced",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LightConeOptions<T> {
    /// Absolute tolerance on the light-cone residual.
    pub tol: T,
    /// Minimum admissible separation.
    pub r_min: T,
    pub max_iter: usize,
    /// Relative distance under which a root is identified with a partner node.
    pub snap_tol: T,
}

impl<T: Real> Default for LightConeOptions<T> {
    fn default() -> Self {
        Self {
            tol: lit::<T>(1e-12).max(T::epsilon() * lit(64.0)),
            r_min: lit(1e-6),
            max_iter: 200,
            snap_tol: lit::<T>(1e-10).max(T::epsilon() * lit(256.0)),
        }
    }
}

/// Solved deviating argument together with the delayed partner data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LightConeSolution<T> {
    pub sign: ConeSign,
    /// Time of the evaluating particle.
    pub t: T,
    pub x_i: Vec3<T>,
    /// Deviating argument `t_j^±`.
    pub t_dev: T,
    pub r: T,
    /// Unit vector from the delayed partner position to `x_i`.
    pub n: Vec3<T>,
    pub x_dev: Vec3<T>,
    /// Delayed velocity, right limit at partner nodes.
    pub v_dev: Vec3<T>,
    pub a_dev: Vec3<T>,
    pub v_dev_left: Vec3<T>,
    pub v_dev_right: Vec3<T>,
    pub a_dev_left: Vec3<T>,
    pub a_dev_right: Vec3<T>,
}

impl<T: Real> LightConeSolution<T> {
    /// `t_dev - t ∓ r`.
    pub fn residual(&self) -> T {
        self.t_dev - self.t - self.sign.sign::<T>() * self.r
    }

    pub fn v_dev_side(&self, side: Side) -> Vec3<T> {
        match side {
            Side::Left => self.v_dev_left,
            Side::Right => self.v_dev_right,
        }
    }

    pub fn a_dev_side(&self, side: Side) -> Vec3<T> {
        match side {
            Side::Left => self.a_dev_left,
            Side::Right => self.a_dev_right,
        }
    }

    /// `1 ± n·v_dev` for the chosen one-sided partner velocity.
    pub fn denominator_side(&self, side: Side) -> T {
        T::one() + self.sign.sign::<T>() * self.n.dot(self.v_dev_side(side))
    }

    pub fn denominator(&self) -> T {
        T::one() + self.sign.sign::<T>() * self.n.dot(self.v_dev)
    }
}

/// Solves `s = t ± |x_i - x_j(s)|` for the unique root `s` on `traj_j`.
///
/// `f(s) = s - t ∓ r(s)` is strictly increasing with slope `1 ± n·v ≥ 1 - |v|`,
/// so a sign-change bracket exists whenever the root lies in the span; Newton
/// steps are kept inside it and replaced by bisection when they leave it.
pub fn solve_deviating_argument<T: Real, W: Worldline<T> + ?Sized>(
    traj_j: &W,
    t: T,
    x_i: Vec3<T>,
    sign: ConeSign,
    opts: &LightConeOptions<T>,
) -> Result<LightConeSolution<T>> {
    let sg = sign.sign::<T>();
    let (start, end) = traj_j.span();
    let exhausted = || Error::SpanExhausted {
        t: t.as_f64(),
        sign: sign.label(),
    };
    let f = |s: T| -> Result<(T, T)> {
        let d = x_i - traj_j.position(s)?;
        let r = d.norm();
        let v = traj_j.velocity(s, Side::Right)?;
        let slope = if r > T::zero() {
            T::one() + sg * (d / r).dot(v)
        } else {
            T::one()
        };
        Ok((s - t - sg * r, slope))
    };

    // bracket [lo, hi] with f(lo) <= 0 <= f(hi)
    let anchor = t.max(start).min(end);
    let (f_anchor, _) = f(anchor)?;
    let vmax = traj_j.speed_bound().min(lit(0.999_999));
    let (mut lo, mut hi, mut flo, mut fhi);
    if sign == ConeSign::Advanced {
        if f_anchor > T::zero() {
            if anchor == start && f_anchor > opts.tol {
                return Err(exhausted());
            }
            lo = start;
            flo = f(start)?.0;
            if flo > opts.tol {
                return Err(exhausted());
            }
            hi = anchor;
            fhi = f_anchor;
        } else {
            lo = anchor;
            flo = f_anchor;
            let mut step = (-f_anchor / (T::one() - vmax)).max(T::epsilon() * (T::one() + t.abs()));
            loop {
                let cand = (lo + step).min(end);
                let fc = f(cand)?.0;
                if fc >= T::zero() {
                    hi = cand;
                    fhi = fc;
                    break;
                }
                if cand == end {
                    // roots within the residual tolerance of the end are kept
                    if -fc <= opts.tol {
                        hi = end;
                        fhi = fc;
                        break;
                    }
                    return Err(exhausted());
                }
                lo = cand;
                flo = fc;
                step = step * lit(2.0);
            }
        }
    } else if f_anchor < T::zero() {
        if anchor == end && -f_anchor > opts.tol {
            return Err(exhausted());
        }
        hi = end;
        fhi = f(end)?.0;
        if -fhi > opts.tol {
            return Err(exhausted());
        }
        lo = anchor;
        flo = f_anchor;
    } else {
        hi = anchor;
        fhi = f_anchor;
        let mut step = (f_anchor / (T::one() - vmax)).max(T::epsilon() * (T::one() + t.abs()));
        loop {
            let cand = (hi - step).max(start);
            let fc = f(cand)?.0;
            if fc <= T::zero() {
                lo = cand;
                flo = fc;
                break;
            }
            if cand == start {
                if fc <= opts.tol {
                    lo = start;
                    flo = fc;
                    break;
                }
                return Err(exhausted());
            }
            hi = cand;
            fhi = fc;
            step = step * lit(2.0);
        }
    }

    let mut s = if flo.abs() < fhi.abs() { lo } else { hi };
    let mut fs = if flo.abs() < fhi.abs() { flo } else { fhi };
    let mut converged = fs.abs() <= opts.tol;
    let mut iter = 0;
    while !converged && iter < opts.max_iter {
        iter += 1;
        let (_, slope) = f(s)?;
        let mut next = s - fs / slope;
        if !(next > lo && next < hi) {
            next = (lo + hi) * lit(0.5);
        }
        let (fn_, _) = f(next)?;
        if fn_ <= T::zero() {
            lo = next;
        } else {
            hi = next;
        }
        s = next;
        fs = fn_;
        converged = fs.abs() <= opts.tol
            || (hi - lo) <= T::epsilon() * lit::<T>(4.0) * (T::one() + s.abs());
    }
    if !converged {
        return Err(Error::NewtonFailure(format!(
            "light-cone root not converged after {} iterations (|f| = {})",
            opts.max_iter, fs
        )));
    }
    // polish down to rounding level while the residual keeps shrinking
    for _ in 0..3 {
        if fs == T::zero() {
            break;
        }
        let (_, slope) = f(s)?;
        let next = s - fs / slope;
        if !(next >= start && next <= end) {
            break;
        }
        let (fn_, _) = f(next)?;
        if fn_.abs() >= fs.abs() {
            break;
        }
        s = next;
        fs = fn_;
    }

    let x_dev = traj_j.position(s)?;
    let d = x_i - x_dev;
    let r = d.norm();
    if !(r >= opts.r_min) {
        return Err(Error::Collision {
            t: t.as_f64(),
            r: r.as_f64(),
            r_min: opts.r_min.as_f64(),
        });
    }
    let n = d / r;
    let at = traj_j
        .breakpoint_near(s, opts.snap_tol * (T::one() + s.abs()))
        .unwrap_or(s);
    let v_dev_left = traj_j.velocity(at, Side::Left)?;
    let v_dev_right = traj_j.velocity(at, Side::Right)?;
    let a_dev_left = traj_j.acceleration(at, Side::Left)?;
    let a_dev_right = traj_j.acceleration(at, Side::Right)?;
    Ok(LightConeSolution {
        sign,
        t,
        x_i,
        t_dev: s,
        r,
        n,
        x_dev,
        v_dev: v_dev_right,
        a_dev: a_dev_right,
        v_dev_left,
        v_dev_right,
        a_dev_left,
        a_dev_right,
    })
}

/// Implicit-function partials `(∂t_dev/∂x_i, ∂t_dev/∂t)`.
pub fn deviating_partials<T: Real>(sol: &LightConeSolution<T>) -> (Vec3<T>, T) {
    deviating_partials_side(sol, Side::Right)
}

pub fn deviating_partials_side<T: Real>(sol: &LightConeSolution<T>, side: Side) -> (Vec3<T>, T) {
    let den = sol.denominator_side(side);
    (sol.n * (sol.sign.sign::<T>() / den), T::one() / den)
}

/// Radon-Nikodym derivative `d t_dev / d t` along a path with velocity `v_i`.
pub fn radon_nikodym<T: Real>(sol: &LightConeSolution<T>, v_i: Vec3<T>) -> T {
    let sg = sol.sign.sign::<T>();
    (T::one() + sg * sol.n.dot(v_i)) / sol.denominator()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory::Trajectory;

    fn ax(x: f64) -> Vec3<f64> {
        Vec3::new(x, 0.0, 0.0)
    }

    fn receding() -> Trajectory<f64> {
        Trajectory::uniform(Vec3::zero(), ax(0.5), 0.0, -10.0, 10.0).unwrap()
    }

    #[test]
    fn static_partner() {
        let tr = Trajectory::stationary(ax(2.0), -10.0, 10.0).unwrap();
        let o = LightConeOptions::default();
        let adv = solve_deviating_argument(&tr, 0.0, Vec3::zero(), ConeSign::Advanced, &o).unwrap();
        assert!((adv.t_dev - 2.0).abs() < 1e-12);
        assert!((adv.r - 2.0).abs() < 1e-12);
        assert_eq!(adv.n, ax(-1.0));
        let ret = solve_deviating_argument(&tr, 0.0, Vec3::zero(), ConeSign::Retarded, &o).unwrap();
        assert!((ret.t_dev + 2.0).abs() < 1e-12);
        let (dx, dt) = deviating_partials(&adv);
        assert!((dx - ax(-1.0)).norm() < 1e-15 && (dt - 1.0).abs() < 1e-15);
        assert!((radon_nikodym(&adv, Vec3::zero()) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn uniform_motion_closed_form() {
        let tr = receding();
        let o = LightConeOptions::default();
        let ret = solve_deviating_argument(&tr, 1.0, Vec3::zero(), ConeSign::Retarded, &o).unwrap();
        assert!((ret.t_dev - 2.0 / 3.0).abs() < 1e-12);
        assert!((ret.r - 1.0 / 3.0).abs() < 1e-12);
        assert!((ret.n - ax(-1.0)).norm() < 1e-15);
        let adv = solve_deviating_argument(&tr, 1.0, Vec3::zero(), ConeSign::Advanced, &o).unwrap();
        assert!((adv.t_dev - 2.0).abs() < 1e-12);
        assert!((adv.r - 1.0).abs() < 1e-12);

        let (dx, dt) = deviating_partials(&ret);
        assert!((dt - 2.0 / 3.0).abs() < 1e-14);
        assert!((dx - ax(2.0 / 3.0)).norm() < 1e-14);
        assert!((radon_nikodym(&ret, Vec3::zero()) - 2.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn partial_in_time_matches_finite_difference() {
        let tr = receding();
        let o = LightConeOptions::default();
        let solve = |t: f64| {
            solve_deviating_argument(&tr, t, Vec3::new(0.0, 0.3, 0.0), ConeSign::Retarded, &o)
                .unwrap()
        };
        let h = 1e-6;
        let fd = (solve(1.0 + h).t_dev - solve(1.0 - h).t_dev) / (2.0 * h);
        let (_, dt) = deviating_partials(&solve(1.0));
        assert!((fd - dt).abs() < 1e-6);
    }

    #[test]
    fn inverse_maps_multiply_to_one() {
        let tr = receding();
        let me = Trajectory::uniform(ax(-1.0), Vec3::new(0.0, 0.2, 0.0), 0.0, -10.0, 10.0).unwrap();
        let o = LightConeOptions::default();
        let x = me.position(1.0).unwrap();
        let vi = me.velocity(1.0, Side::Right).unwrap();
        let fwd = solve_deviating_argument(&tr, 1.0, x, ConeSign::Advanced, &o).unwrap();
        let back =
            solve_deviating_argument(&me, fwd.t_dev, fwd.x_dev, ConeSign::Retarded, &o).unwrap();
        assert!((back.t_dev - 1.0).abs() < 1e-12);
        let prod = radon_nikodym(&fwd, vi) * radon_nikodym(&back, fwd.v_dev);
        assert!((prod - 1.0).abs() < 1e-12);
    }

    #[test]
    fn span_and_collision_errors() {
        let tr = Trajectory::stationary(ax(2.0), -1.0, 1.0).unwrap();
        let o = LightConeOptions::default();
        assert!(matches!(
            solve_deviating_argument(&tr, 0.0, Vec3::zero(), ConeSign::Advanced, &o),
            Err(Error::SpanExhausted { .. })
        ));
        let near = Trajectory::stationary(ax(1e-8), -1.0, 1.0).unwrap();
        assert!(matches!(
            solve_deviating_argument(&near, 0.0, Vec3::zero(), ConeSign::Advanced, &o),
            Err(Error::Collision { .. })
        ));
    }
}
