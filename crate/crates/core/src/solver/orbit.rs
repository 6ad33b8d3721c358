use serde::Serialize;

use crate::error::{Error, Result};
use crate::lagrangian::{partial_lagrangian, ParticleState};
use crate::lightcone::LightConeOptions;
use crate::trajectory::{Particle, Side, Worldline};
use crate::vec3::Vec3;

/// Uniform circular motion in the xy-plane, `R(cos(ωt + φ), sin(ωt + φ), 0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircularWorldline {
    pub radius: f64,
    pub omega: f64,
    pub phase: f64,
    pub t0: f64,
    pub t1: f64,
}

impl CircularWorldline {
    fn check(&self, t: f64) -> Result<f64> {
        if !(t >= self.t0 && t <= self.t1) {
            return Err(Error::TimeOutOfRange { t, start: self.t0, end: self.t1 });
        }
        Ok(self.omega * t + self.phase)
    }
}

impl Worldline<f64> for CircularWorldline {
    fn span(&self) -> (f64, f64) {
        (self.t0, self.t1)
    }
    fn position(&self, t: f64) -> Result<Vec3<f64>> {
        let a = self.check(t)?;
        Ok(Vec3::new(a.cos(), a.sin(), 0.0) * self.radius)
    }
    fn velocity(&self, t: f64, _side: Side) -> Result<Vec3<f64>> {
        let a = self.check(t)?;
        Ok(Vec3::new(-a.sin(), a.cos(), 0.0) * (self.radius * self.omega))
    }
    fn acceleration(&self, t: f64, _side: Side) -> Result<Vec3<f64>> {
        let a = self.check(t)?;
        Ok(Vec3::new(a.cos(), a.sin(), 0.0) * (-self.radius * self.omega * self.omega))
    }
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
    fn speed_bound(&self) -> f64 {
        (self.radius * self.omega).abs()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct OrbitOptions {
    pub max_iter: usize,
    /// Relative step tolerance of the Newton iteration.
    pub step_tol: f64,
    pub cone: LightConeOptions<f64>,
}

impl Default for OrbitOptions {
    fn default() -> Self {
        Self { max_iter: 60, step_tol: 1e-15, cone: LightConeOptions::default() }
    }
}

/// A member of the circular-orbit family: both charges on concentric
/// circles at opposite phase with a common angular frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CircularOrbit {
    pub separation: f64,
    pub masses: [f64; 2],
    pub omega: f64,
    pub radii: [f64; 2],
    /// Largest Euler-Lagrange residual norm of the two particles.
    pub el_residual: f64,
    pub iterations: usize,
}

impl CircularOrbit {
    pub fn reduced_mass(&self) -> f64 {
        self.masses[0] * self.masses[1] / (self.masses[0] + self.masses[1])
    }

    /// `ω²μℓ³`, equal to one in the Coulomb-Kepler limit.
    pub fn kepler_ratio(&self) -> f64 {
        self.omega * self.omega * self.reduced_mass() * self.separation.powi(3)
    }

    pub fn speeds(&self) -> [f64; 2] {
        [self.radii[0] * self.omega, self.radii[1] * self.omega]
    }

    pub fn worldlines(&self, t0: f64, t1: f64) -> (CircularWorldline, CircularWorldline) {
        worldlines(self.omega, self.radii, t0, t1)
    }

    /// Constant light-cone delay between the two particles.
    pub fn delay(&self) -> Result<f64> {
        let span = 20.0 * self.separation + 10.0;
        let (w1, w2) = self.worldlines(-span, span);
        let sol = crate::lightcone::solve_deviating_argument(
            &w2,
            0.0,
            w1.position(0.0)?,
            crate::lightcone::ConeSign::Advanced,
            &LightConeOptions::default(),
        )?;
        Ok(sol.t_dev)
    }

    /// Euler-Lagrange residual vectors at `t = 0`, using `dP/dt = ω ẑ × P`.
    pub fn residuals(&self, cone: &LightConeOptions<f64>) -> Result<[Vec3<f64>; 2]> {
        el_vectors(self.omega, self.radii, self.masses, self.separation, cone)
    }
}

fn worldlines(omega: f64, radii: [f64; 2], t0: f64, t1: f64) -> (CircularWorldline, CircularWorldline) {
    (
        CircularWorldline { radius: radii[0], omega, phase: 0.0, t0, t1 },
        CircularWorldline { radius: radii[1], omega, phase: std::f64::consts::PI, t0, t1 },
    )
}

fn el_vectors(
    omega: f64,
    radii: [f64; 2],
    masses: [f64; 2],
    separation: f64,
    cone: &LightConeOptions<f64>,
) -> Result<[Vec3<f64>; 2]> {
    let v = radii[0].max(radii[1]) * omega;
    if !(v < 1.0) || !(radii[0] > 0.0 && radii[1] > 0.0) {
        return Err(Error::NewtonFailure(format!(
            "iterate left the admissible region (radii {radii:?}, speed {v})"
        )));
    }
    let span = 4.0 * separation / (1.0 - v) + 10.0;
    let (w1, w2) = worldlines(omega, radii, -span, span);
    let mut out = [Vec3::zero(); 2];
    for (k, (p, own, other)) in
        [(Particle::One, &w1, &w2), (Particle::Two, &w2, &w1)].into_iter().enumerate()
    {
        let s = ParticleState::on(p, own, 0.0, Side::Right, masses[k])?;
        let ev = partial_lagrangian(&s, other, cone)?;
        let dp = Vec3::new(-ev.p.y, ev.p.x, 0.0) * omega;
        out[k] = ev.grad_x - dp;
    }
    Ok(out)
}

/// Newton iteration on the radial Euler-Lagrange residuals of the circular
/// ansatz, started from the Kepler orbit. Unknowns are `ω` and `r₁` with
/// `r₂ = ℓ - r₁`; for equal masses `r₁ = r₂ = ℓ/2` and only `ω` is solved.
pub fn find_circular_orbit(separation: f64, masses: [f64; 2], opts: &OrbitOptions) -> Result<CircularOrbit> {
    if !(separation > opts.cone.r_min) {
        return Err(Error::InvalidBoundary(format!(
            "separation {separation} is below r_min {}",
            opts.cone.r_min
        )));
    }
    if !(masses[0] > 0.0 && masses[1] > 0.0) {
        return Err(Error::InvalidBoundary("masses must be positive".into()));
    }
    let l = separation;
    let mu = masses[0] * masses[1] / (masses[0] + masses[1]);
    let symmetric = masses[0] == masses[1];
    // residuals scaled by ℓ² to be O(1)
    let residual = |y: [f64; 2]| -> Result<[f64; 2]> {
        let radii = [y[1], l - y[1]];
        let r = el_vectors(y[0], radii, masses, l, &opts.cone)?;
        Ok([r[0].x * l * l, -r[1].x * l * l])
    };
    let mut y = [(1.0 / (mu * l.powi(3))).sqrt(), l * masses[1] / (masses[0] + masses[1])];
    if symmetric {
        y[1] = 0.5 * l;
    }
    let norm = |f: [f64; 2]| if symmetric { f[0].abs() } else { f[0].hypot(f[1]) };
    let mut f = residual(y)?;
    let mut iterations = 0;
    for it in 0..opts.max_iter {
        iterations = it + 1;
        let scale = [y[0], l];
        let hs = [1e-7 * y[0], 1e-7 * l];
        let mut jac = [[0.0; 2]; 2];
        let unknowns = if symmetric { 1 } else { 2 };
        for c in 0..unknowns {
            let mut yp = y;
            let mut ym = y;
            yp[c] += hs[c];
            ym[c] -= hs[c];
            let (fp, fm) = (residual(yp)?, residual(ym)?);
            for r in 0..2 {
                jac[r][c] = (fp[r] - fm[r]) / (2.0 * hs[c]);
            }
        }
        let step = if symmetric {
            [-f[0] / jac[0][0], 0.0]
        } else {
            let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
            [
                -(jac[1][1] * f[0] - jac[0][1] * f[1]) / det,
                -(-jac[1][0] * f[0] + jac[0][0] * f[1]) / det,
            ]
        };
        if !(step[0].is_finite() && step[1].is_finite()) {
            return Err(Error::NewtonFailure("singular Jacobian".into()));
        }
        let mut lambda = 1.0;
        let accepted = loop {
            let trial = [y[0] + lambda * step[0], y[1] + lambda * step[1]];
            match residual(trial) {
                Ok(ft) if norm(ft) < norm(f) || norm(ft) == 0.0 => break Some((trial, ft)),
                _ if lambda < 1e-6 => break None,
                _ => lambda *= 0.5,
            }
        };
        let rel = (step[0] / scale[0]).abs().max((step[1] / scale[1]).abs());
        match accepted {
            Some((yt, ft)) => {
                y = yt;
                f = ft;
            }
            None if rel < 1e-12 => break,
            None => {
                return Err(Error::NewtonFailure(format!(
                    "no decrease along the Newton direction at iteration {it} (|F| = {})",
                    norm(f)
                )))
            }
        }
        if rel * lambda < opts.step_tol {
            break;
        }
    }
    let radii = [y[1], l - y[1]];
    let r = el_vectors(y[0], radii, masses, l, &opts.cone)?;
    Ok(CircularOrbit {
        separation: l,
        masses,
        omega: y[0],
        radii,
        el_residual: r[0].norm().max(r[1].norm()),
        iterations,
    })
}
