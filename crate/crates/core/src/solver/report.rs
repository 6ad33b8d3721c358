use serde::{Deserialize, Serialize};

use crate::action::{
    el_residual, evaluate_action, evaluate_at, free_range_kinks, we_residuals, ActionForm,
    ActionOptions,
};
use crate::error::{Error, Result};
use crate::quadrature::cells;
use crate::trajectory::{BoundaryData, Particle, Side, Worldline};

/// Residuals certifying (or refuting) that a pair of paths is a critical
/// point of the action.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalityReport {
    pub action: f64,
    pub action_l2: f64,
    /// Largest `|∂L/∂x - dP/dt|` over the sampled smooth points.
    pub max_el_residual: f64,
    /// Largest momentum jump over nodes and partner-node images.
    pub max_dp: f64,
    /// Largest energy jump over nodes and partner-node images.
    pub max_de: f64,
    pub max_lightcone_residual: f64,
    /// Total variation of `P` over each free range.
    pub tv_momentum: [f64; 2],
    pub el_samples: usize,
    pub corners_checked: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct ReportOptions {
    pub action: ActionOptions<f64>,
    /// Euler-Lagrange sample points per particle.
    pub el_samples: usize,
    /// Uniform sample count for the momentum variation.
    pub tv_samples: usize,
}

impl Default for ReportOptions {
    fn default() -> Self {
        Self { action: ActionOptions::default(), el_samples: 64, tv_samples: 2000 }
    }
}

/// Total variation of the momentum of `particle` over its free range,
/// measured on a uniform partition refined by the kinks, with the jump at
/// every kink added exactly.
pub fn momentum_total_variation(
    traj1: &dyn Worldline<f64>,
    traj2: &dyn Worldline<f64>,
    boundary: &BoundaryData<f64>,
    particle: Particle,
    samples: usize,
    opts: &ActionOptions<f64>,
) -> Result<f64> {
    let (lo, hi) = boundary.times().free_range(particle);
    let kinks = free_range_kinks(traj1, traj2, boundary, particle, opts)?;
    let n = samples.max(1);
    let mut pts: Vec<(f64, bool)> = (0..=n)
        .map(|k| (if k == n { hi } else { lo + (hi - lo) * k as f64 / n as f64 }, false))
        .collect();
    pts.extend(kinks.iter().map(|&t| (t, true)));
    pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let p = |t: f64, side: Side| -> Result<crate::vec3::Vec3<f64>> {
        Ok(evaluate_at(traj1, traj2, boundary, particle, t, side, &opts.cone)?.p)
    };
    let mut tv = 0.0;
    let mut prev = p(lo, Side::Right)?;
    for w in pts.windows(2) {
        let (t, is_kink) = w[1];
        if t <= w[0].0 {
            continue;
        }
        let left = p(t, Side::Left)?;
        tv += (left - prev).norm();
        prev = if is_kink || t == hi {
            let right = if t == hi { left } else { p(t, Side::Right)? };
            tv += (right - left).norm();
            right
        } else {
            left
        };
    }
    Ok(tv)
}

/// Samples Euler-Lagrange residuals inside every smoothness cell of both free
/// ranges, corner residuals at every kink, and light-cone residuals.
pub fn criticality_report(
    traj1: &dyn Worldline<f64>,
    traj2: &dyn Worldline<f64>,
    boundary: &BoundaryData<f64>,
    opts: &ReportOptions,
) -> Result<CriticalityReport> {
    let a = &opts.action;
    let mut max_el: f64 = 0.0;
    let mut max_dp: f64 = 0.0;
    let mut max_de: f64 = 0.0;
    let mut max_lc: f64 = 0.0;
    let mut el_samples = 0;
    let mut corners = 0;
    let mut tv = [0.0; 2];
    for p in [Particle::One, Particle::Two] {
        let (lo, hi) = boundary.times().free_range(p);
        let kinks = free_range_kinks(traj1, traj2, boundary, p, a)?;
        for &k in &kinks {
            let (dp, de) = we_residuals(traj1, traj2, boundary, p, k, a)?;
            max_dp = max_dp.max(dp.norm());
            max_de = max_de.max(de.abs());
            corners += 1;
        }
        let cs = cells(lo, hi, &kinks);
        let per_cell = (opts.el_samples / cs.len()).max(1);
        for (c0, c1) in cs {
            for j in 0..per_cell {
                let t = c0 + (c1 - c0) * (j as f64 + 0.5) / per_cell as f64;
                match el_residual(traj1, traj2, boundary, p, t, a) {
                    Ok(r) => {
                        max_el = max_el.max(r.norm());
                        el_samples += 1;
                    }
                    Err(Error::TooCloseToNode { .. }) => continue,
                    Err(e) => return Err(e),
                }
                let ev = evaluate_at(traj1, traj2, boundary, p, t, Side::Right, &a.cone)?;
                max_lc = max_lc.max(ev.retarded.residual().abs()).max(ev.advanced.residual().abs());
            }
        }
        tv[p.index()] = momentum_total_variation(traj1, traj2, boundary, p, opts.tv_samples, a)?;
    }
    Ok(CriticalityReport {
        action: evaluate_action(traj1, traj2, boundary, ActionForm::AFokker, a)?.total,
        action_l2: evaluate_action(traj1, traj2, boundary, ActionForm::L2, a)?.total,
        max_el_residual: max_el,
        max_dp,
        max_de,
        max_lightcone_residual: max_lc,
        tv_momentum: tv,
        el_samples,
        corners_checked: corners,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lightcone::LightConeOptions;
    use crate::solver::{find_circular_orbit, OrbitOptions};
    use crate::trajectory::Trajectory;
    use crate::vec3::Vec3;

    fn boundary(t1: &Trajectory<f64>, t2: &Trajectory<f64>, t_l2: f64) -> BoundaryData<f64> {
        BoundaryData::from_trajectories(t1, t2, 0.0, t_l2, [1.0, 1.0], &LightConeOptions::default()).unwrap()
    }

    #[test]
    fn static_pair_is_not_critical() {
        // held apart at distance 2, each particle feels the unbalanced
        // Coulomb force 1/d²
        let t1 = Trajectory::stationary(Vec3::new(-1.0, 0.0, 0.0), -40.0, 40.0).unwrap();
        let t2 = Trajectory::stationary(Vec3::new(1.0, 0.0, 0.0), -40.0, 40.0).unwrap();
        let bd = boundary(&t1, &t2, 4.0);
        let r = criticality_report(&t1, &t2, &bd, &ReportOptions::default()).unwrap();
        assert!((r.max_el_residual - 0.25).abs() < 1e-6, "{}", r.max_el_residual);
        assert!(r.max_dp < 1e-14 && r.max_de < 1e-14);
        assert!(r.max_lightcone_residual < 1e-12);
        assert!(r.tv_momentum[0] < 1e-12 && r.tv_momentum[1] < 1e-12);
        assert!(r.el_samples > 0);
    }

    #[test]
    fn artificial_kink_shows_its_kinetic_jump() {
        // with the partner at rest the potentials do not depend on the own
        // velocity, so the jumps are those of a free particle
        let (tk, u) = (1.0, 0.1);
        let x = Vec3::new(-5.0, 0.0, 0.0);
        let before = Trajectory::stationary(x, -60.0, tk).unwrap();
        let after = Trajectory::uniform(x, Vec3::new(0.0, u, 0.0), tk, tk, 60.0).unwrap();
        let t1 = before.concat(&after).unwrap();
        let t2 = Trajectory::stationary(Vec3::new(5.0, 0.0, 0.0), -60.0, 60.0).unwrap();
        let bd = boundary(&t1, &t2, 20.0);
        let (lo, hi) = bd.times().free_range(Particle::One);
        assert!(lo < tk && tk < hi);
        let gamma = 1.0 / (1.0 - u * u).sqrt();
        let (dp, de) = we_residuals(&t1, &t2, &bd, Particle::One, tk, &ActionOptions::default()).unwrap();
        assert!((dp.norm() - gamma * u).abs() < 1e-12, "{}", dp.norm());
        assert!((de.abs() - (gamma - 1.0)).abs() < 1e-12, "{de}");
        let r = criticality_report(&t1, &t2, &bd, &ReportOptions::default()).unwrap();
        assert!((r.max_dp - gamma * u).abs() < 1e-12);
        assert!(r.corners_checked >= 1);
        assert!(r.tv_momentum[0] >= gamma * u - 1e-12);
    }

    #[test]
    fn circular_orbit_passes() {
        let o = find_circular_orbit(10.0, [1.0, 2.0], &OrbitOptions::default()).unwrap();
        let tau = o.delay().unwrap();
        let (w1, w2) = o.worldlines(-100.0, 100.0 + 2.0 * tau);
        let bd = BoundaryData::from_worldlines(&w1, &w2, 0.0, 2.0 * tau, [1.0, 2.0], 64, &LightConeOptions::default()).unwrap();
        let r = criticality_report(&w1, &w2, &bd, &ReportOptions::default()).unwrap();
        assert!(r.max_el_residual < 1e-6, "{}", r.max_el_residual);
        assert!(r.max_lightcone_residual < 1e-10);
        assert!((r.action - r.action_l2).abs() < 1e-8);
    }
}
