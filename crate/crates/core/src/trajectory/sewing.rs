use super::{Particle, Worldline};
use crate::error::{Error, Result};
use crate::lightcone::{solve_deviating_argument, ConeSign, LightConeOptions};
use crate::scalar::Real;

/// Times linked by successive forward light-cones, alternating between the
/// two trajectories and starting on particle 2.
#[derive(Debug, Clone, PartialEq)]
pub struct SewingGrid<T> {
    pub chain: Vec<(Particle, T)>,
}

impl<T: Real> SewingGrid<T> {
    pub fn times(&self, p: Particle) -> Vec<T> {
        self.chain
            .iter()
            .filter(|(q, _)| *q == p)
            .map(|(_, t)| *t)
            .collect()
    }

    /// Consecutive `(from, to)` links of the chain.
    pub fn links(&self) -> impl Iterator<Item = ((Particle, T), (Particle, T))> + '_ {
        self.chain.windows(2).map(|w| (w[0], w[1]))
    }
}

/// Forward sewing chain from `start` on particle 2 up to `end_limit`.
pub fn build_sewing_grid<T: Real>(
    traj1: &dyn Worldline<T>,
    traj2: &dyn Worldline<T>,
    start: T,
    end_limit: T,
    opts: &LightConeOptions<T>,
) -> Result<SewingGrid<T>> {
    let (s2, e2) = traj2.span();
    if start < s2 || start > e2 {
        return Err(Error::TimeOutOfRange {
            t: start.as_f64(),
            start: s2.as_f64(),
            end: e2.as_f64(),
        });
    }
    let mut chain = vec![(Particle::Two, start)];
    loop {
        let (p, t) = *chain.last().unwrap();
        let (from, to) = match p {
            Particle::One => (traj1, traj2),
            Particle::Two => (traj2, traj1),
        };
        let x = from.position(t)?;
        match solve_deviating_argument(to, t, x, ConeSign::Advanced, opts) {
            Ok(sol) if sol.t_dev <= end_limit => chain.push((p.other(), sol.t_dev)),
            Ok(_) => break,
            Err(Error::SpanExhausted { .. }) if to.span().1 >= end_limit => break,
            Err(e) => return Err(e),
        }
    }
    Ok(SewingGrid { chain })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory::{Side, Trajectory};
    use crate::vec3::Vec3;

    #[test]
    fn static_pair_spacing() {
        let a = Trajectory::stationary(Vec3::zero(), -5.0, 20.0).unwrap();
        let b = Trajectory::stationary(Vec3::new(1.0, 0.0, 0.0), -5.0, 20.0).unwrap();
        let g = build_sewing_grid(&a, &b, 0.0, 3.5, &LightConeOptions::default()).unwrap();
        let times: Vec<f64> = g.chain.iter().skip(1).map(|c| c.1).collect();
        assert_eq!(times.len(), 3);
        for (got, want) in times.iter().zip([1.0, 2.0, 3.0]) {
            assert!((got - want).abs() < 1e-12);
        }
        assert_eq!(g.chain[1].0, Particle::One);
        assert_eq!(g.chain[2].0, Particle::Two);

        let b2 = Trajectory::stationary(Vec3::new(2.0, 0.0, 0.0), -5.0, 20.0).unwrap();
        let g2 = build_sewing_grid(&a, &b2, 0.0, 10.0, &LightConeOptions::default()).unwrap();
        for (k, (_, t)) in g2.chain.iter().enumerate() {
            assert!((t - 2.0 * k as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn uniform_motion_links_satisfy_light_cone() {
        let a = Trajectory::stationary(Vec3::zero(), -5.0, 200.0).unwrap();
        let b = Trajectory::uniform(Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.5, 0.0, 0.0), 0.0, -5.0, 200.0)
            .unwrap();
        let g = build_sewing_grid(&a, &b, 0.0, 60.0, &LightConeOptions::default()).unwrap();
        let mut last_gap = 0.0;
        for ((p, t0), (q, t1)) in g.links() {
            let (from, to): (&Trajectory<f64>, &Trajectory<f64>) =
                if p == Particle::One { (&a, &b) } else { (&b, &a) };
            let r = (from.position(t0).unwrap() - to.position(t1).unwrap()).norm();
            assert_ne!(p, q);
            assert!((t1 - t0 - r).abs() < 1e-10);
            assert!(t1 - t0 >= last_gap - 1e-12);
            last_gap = t1 - t0;
            let _ = to.velocity(t1, Side::Right).unwrap();
        }
        assert!(g.chain.len() > 3);
    }

    #[test]
    fn exhausted_span_is_an_error() {
        let a = Trajectory::stationary(Vec3::zero(), -5.0, 2.5).unwrap();
        let b = Trajectory::stationary(Vec3::new(1.0, 0.0, 0.0), -5.0, 20.0).unwrap();
        let r = build_sewing_grid(&a, &b, 0.0, 10.0, &LightConeOptions::default());
        assert!(matches!(r, Err(Error::SpanExhausted { .. })));
    }
}
