//! First hitting times of noisy orbits into small balls.

use rand::Rng;

use crate::dynamics::{DynamicsError, MapSystem, Point, PointSource};
use crate::perturbation::{sample_noise, NoiseSpec};

/// Entrance condition for the noisy observation `y`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum HitTarget {
    /// `||y - z|| <= radius`.
    Ball { radius: f64 },
    /// `-ln ||y - z|| > level`, the exceedance set of the observable.
    Exceedance { level: f64 },
}

impl HitTarget {
    #[inline]
    fn is_hit(&self, y: &Point, z: &Point) -> bool {
        let d = y.distance(z);
        match *self {
            HitTarget::Ball { radius } => d <= radius,
            HitTarget::Exceedance { level } => -d.ln() > level,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HittingOutcome {
    Hit(u64),
    Censored,
}

impl HittingOutcome {
    pub fn time(&self) -> Option<u64> {
        match self {
            HittingOutcome::Hit(t) => Some(*t),
            HittingOutcome::Censored => None,
        }
    }
}

/// Least `j` in `1..=max_steps` with `T^j x0 + eps xi_j` inside the target.
/// One noise draw is consumed per step.
pub fn hitting_time<S: PointSource + ?Sized, R: Rng + ?Sized>(
    orbit: &mut S,
    z: &Point,
    target: HitTarget,
    noise: &NoiseSpec,
    dim: usize,
    max_steps: u64,
    noise_rng: &mut R,
) -> Result<HittingOutcome, DynamicsError> {
    let times = hitting_times(orbit, z, &[target], noise, dim, max_steps, noise_rng)?;
    Ok(times[0])
}

/// Hitting times of several targets along one noisy orbit. `orbit` yields
/// `x0` first, which is skipped. Stops once every target is hit or after
/// `max_steps` steps.
pub fn hitting_times<S: PointSource + ?Sized, R: Rng + ?Sized>(
    orbit: &mut S,
    z: &Point,
    targets: &[HitTarget],
    noise: &NoiseSpec,
    dim: usize,
    max_steps: u64,
    noise_rng: &mut R,
) -> Result<Vec<HittingOutcome>, DynamicsError> {
    let mut out = vec![HittingOutcome::Censored; targets.len()];
    let mut pending = targets.len();
    orbit.next_point()?;
    for j in 1..=max_steps {
        if pending == 0 {
            break;
        }
        let x = orbit.next_point()?;
        let y = x.add(&sample_noise(noise, dim, noise_rng));
        for (slot, target) in out.iter_mut().zip(targets) {
            if *slot == HittingOutcome::Censored && target.is_hit(&y, z) {
                *slot = HittingOutcome::Hit(j);
                pending -= 1;
            }
        }
    }
    Ok(out)
}

/// Hitting times from independent realizations at one target radius.
#[derive(Clone, Debug, PartialEq)]
pub struct HittingTimeSample {
    pub times: Vec<u64>,
    pub censored: usize,
    pub max_steps: u64,
    pub z: Point,
    pub radius: f64,
    pub epsilon: f64,
    /// `nu(B(z, eps))`, when known, for the theoretical survival.
    pub nu_ball: Option<f64>,
}

impl HittingTimeSample {
    pub fn from_outcomes(
        outcomes: impl IntoIterator<Item = HittingOutcome>,
        max_steps: u64,
        z: Point,
        radius: f64,
        epsilon: f64,
        nu_ball: Option<f64>,
    ) -> Self {
        let mut times = Vec::new();
        let mut censored = 0;
        for o in outcomes {
            match o {
                HittingOutcome::Hit(t) => times.push(t),
                HittingOutcome::Censored => censored += 1,
            }
        }
        HittingTimeSample {
            times,
            censored,
            max_steps,
            z,
            radius,
            epsilon,
            nu_ball,
        }
    }

    pub fn realizations(&self) -> usize {
        self.times.len() + self.censored
    }

    /// Fraction of realizations with hitting time strictly above `m`.
    pub fn survival_beyond(&self, m: u64) -> f64 {
        assert!(
            self.censored == 0 || self.max_steps >= m,
            "censoring below m leaves the survival undefined"
        );
        let n = self.realizations();
        if n == 0 {
            return f64::NAN;
        }
        let beyond = self.times.iter().filter(|&&t| t > m).count() + self.censored;
        beyond as f64 / n as f64
    }
}

/// The ball radius whose rescaled hitting time `(t/m) R` is compared with `t`.
pub fn hitting_radius(t: f64, m: u64) -> f64 {
    t / m as f64
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurvivalPoint {
    pub t: f64,
    pub radius: f64,
    pub empirical: f64,
    /// `exp(-t nu(B(z, eps)) / eps)`, absent when the ball measure is unknown.
    pub theoretical: Option<f64>,
    pub realizations: usize,
    pub censored: usize,
}

/// Empirical `P((t/m) R > t) = P(R > m)` for each `(t, sample)` next to the
/// exponential law `exp(-t nu(B(z, eps)) / eps)`.
pub fn survival_curve(samples: &[(f64, HittingTimeSample)], m: u64) -> Vec<SurvivalPoint> {
    let mut out: Vec<SurvivalPoint> = samples
        .iter()
        .map(|(t, s)| SurvivalPoint {
            t: *t,
            radius: s.radius,
            empirical: s.survival_beyond(m),
            theoretical: s.nu_ball.map(|nu| (-t * nu / s.epsilon).exp()),
            realizations: s.realizations(),
            censored: s.censored,
        })
        .collect();
    out.sort_by(|a, b| a.t.total_cmp(&b.t));
    out
}

/// Runs `hitting_times` from a fresh orbit of `map` at `x0`.
#[allow(clippy::too_many_arguments)]
pub fn hitting_times_from<R: Rng + ?Sized>(
    map: &MapSystem,
    x0: Point,
    branch_rng: Option<crate::StreamRng>,
    z: &Point,
    targets: &[HitTarget],
    noise: &NoiseSpec,
    max_steps: u64,
    noise_rng: &mut R,
) -> Result<Vec<HittingOutcome>, DynamicsError> {
    let mut orbit = map.orbit(x0, branch_rng);
    hitting_times(
        &mut orbit,
        z,
        targets,
        noise,
        map.ambient_dim(),
        max_steps,
        noise_rng,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::MapKind;
    use crate::StreamRng;
    use rand::SeedableRng;

    #[test]
    fn huge_ball_is_hit_immediately() {
        let map = MapSystem::TernaryShift;
        let noise = NoiseSpec::from_epsilon(0.01).unwrap();
        let mut rng = StreamRng::seed_from_u64(1);
        let radius = map.domain().diameter() + noise.epsilon();
        let out = hitting_times_from(&map, Point::scalar(0.3), None, &Point::scalar(0.7), &[HitTarget::Ball { radius }], &noise, 100, &mut rng).unwrap();
        assert_eq!(out, vec![HittingOutcome::Hit(1)]);
    }

    #[test]
    fn zero_radius_is_always_censored() {
        let map = MapSystem::default_for(MapKind::Hemmer);
        let noise = NoiseSpec::from_epsilon(0.01).unwrap();
        let mut rng = StreamRng::seed_from_u64(2);
        let out = hitting_times_from(&map, Point::scalar(0.3), None, &Point::scalar(0.1), &[HitTarget::Ball { radius: 0.0 }], &noise, 10_000, &mut rng).unwrap();
        assert_eq!(out, vec![HittingOutcome::Censored]);
    }

    #[test]
    fn fully_censored_sample_survives() {
        let s = HittingTimeSample::from_outcomes(vec![HittingOutcome::Censored; 20], 500, Point::scalar(0.5), 1e-4, 0.1, Some(0.2));
        let curve = survival_curve(&[(1.0, s.clone()), (0.5, s)], 100);
        assert!(curve.iter().all(|p| p.empirical == 1.0));
        assert_eq!(curve[0].t, 0.5);
    }

    #[test]
    fn hitting_radius_scales_with_t() {
        assert_eq!(hitting_radius(2.0, 10_000), 2e-4);
    }
}
