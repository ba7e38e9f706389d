//! Observational noise, instrument truncation and the random-stream contract.
//!
//! The observed value at time i is `trunc(T^i x + eps * xi_i, q)`, applied
//! componentwise. Noise never feeds back into the dynamics.

use rand::{Rng, SeedableRng};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::dynamics::{Orbit, Point};
use crate::StreamRng;

/// Largest truncation digit that still changes a double.
pub const MAX_TRUNCATION_DIGITS: u32 = 15;

const POW10: [f64; 16] = [
    1e0, 1e1, 1e2, 1e3, 1e4, 1e5, 1e6, 1e7, 1e8, 1e9, 1e10, 1e11, 1e12, 1e13, 1e14, 1e15,
];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PerturbationError {
    #[error("noise amplitude must be finite and nonnegative, got {0}")]
    InvalidEpsilon(f64),
    #[error("truncation digit must lie in 1..=15, got {0}")]
    InvalidDigits(u32),
}

/// Shape of the normalized noise variable xi.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum NoiseDistribution {
    /// Uniform on the closed unit ball of the ambient space.
    #[default]
    UniformBall,
}

/// Noise of amplitude `epsilon = 10^-p`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseSpec {
    epsilon: f64,
    p: Option<f64>,
    pub distribution: NoiseDistribution,
}

impl NoiseSpec {
    pub const NONE: NoiseSpec = NoiseSpec {
        epsilon: 0.0,
        p: None,
        distribution: NoiseDistribution::UniformBall,
    };

    /// Noise with `epsilon = 10^-p`.
    pub fn from_exponent(p: f64) -> Result<Self, PerturbationError> {
        let epsilon = 10f64.powf(-p);
        if !p.is_finite() || !epsilon.is_finite() {
            return Err(PerturbationError::InvalidEpsilon(epsilon));
        }
        Ok(NoiseSpec {
            epsilon,
            p: Some(p),
            distribution: NoiseDistribution::UniformBall,
        })
    }

    pub fn from_epsilon(epsilon: f64) -> Result<Self, PerturbationError> {
        if !(epsilon.is_finite() && epsilon >= 0.0) {
            return Err(PerturbationError::InvalidEpsilon(epsilon));
        }
        let p = (epsilon > 0.0).then(|| -epsilon.log10());
        Ok(NoiseSpec {
            epsilon,
            p,
            distribution: NoiseDistribution::UniformBall,
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// The exponent p, absent for noiseless observation.
    pub fn exponent(&self) -> Option<f64> {
        self.p
    }

    pub fn is_noiseless(&self) -> bool {
        self.epsilon == 0.0
    }
}

/// Instrument precision: values are truncated at decimal digit `q`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct TruncationSpec {
    digits: Option<u32>,
}

impl TruncationSpec {
    pub const NONE: TruncationSpec = TruncationSpec { digits: None };

    pub fn digits(q: u32) -> Result<Self, PerturbationError> {
        if !(1..=MAX_TRUNCATION_DIGITS).contains(&q) {
            return Err(PerturbationError::InvalidDigits(q));
        }
        Ok(TruncationSpec { digits: Some(q) })
    }

    pub fn get(&self) -> Option<u32> {
        self.digits
    }

    #[inline]
    pub fn apply(&self, x: f64) -> f64 {
        match self.digits {
            Some(q) => truncate(x, q),
            None => x,
        }
    }
}

/// `floor(10^q x) / 10^q`, on the grid of doubles `k / 10^q`.
///
/// The integer `k` is the largest one whose rounded grid value does not exceed
/// `x`, which keeps the operation idempotent despite the representation error of
/// `k / 10^q`.
///
/// # Panics
///
/// If `q` is outside `1..=15`.
pub fn truncate(x: f64, q: u32) -> f64 {
    assert!(
        (1..=MAX_TRUNCATION_DIGITS).contains(&q),
        "truncation digit {q} outside 1..=15"
    );
    if !x.is_finite() {
        return x;
    }
    let scale = POW10[q as usize];
    let mut k = (x * scale).floor();
    if k / scale > x {
        k -= 1.0;
    } else if (k + 1.0) / scale <= x {
        k += 1.0;
    }
    k / scale
}

/// Draws `eps * xi` with xi uniform on the unit ball of dimension `dim`.
#[inline]
pub fn sample_noise<R: Rng + ?Sized>(spec: &NoiseSpec, dim: usize, rng: &mut R) -> Point {
    if spec.epsilon == 0.0 {
        return Point::default();
    }
    let eps = spec.epsilon;
    match dim {
        1 => Point::scalar(eps * rng.random_range(-1.0..=1.0)),
        _ => loop {
            let u = 2.0 * rng.random::<f64>() - 1.0;
            let v = 2.0 * rng.random::<f64>() - 1.0;
            if u * u + v * v <= 1.0 {
                break Point::planar(eps * u, eps * v);
            }
        },
    }
}

/// Observes a single orbit point. Noiseless specs consume no randomness.
#[inline]
pub fn observe_point<R: Rng + ?Sized>(
    point: Point,
    noise: &NoiseSpec,
    trunc: &TruncationSpec,
    dim: usize,
    rng: &mut R,
) -> Point {
    let noisy = if noise.is_noiseless() {
        point
    } else {
        point.add(&sample_noise(noise, dim, rng))
    };
    match trunc.digits {
        Some(_) => {
            let mut out = noisy;
            for c in out.0.iter_mut().take(dim) {
                *c = trunc.apply(*c);
            }
            out
        }
        None => noisy,
    }
}

/// Observes a stored orbit; the orbit itself is untouched.
pub fn observe<R: Rng + ?Sized>(
    orbit: &Orbit,
    noise: &NoiseSpec,
    trunc: &TruncationSpec,
    rng: &mut R,
) -> Vec<Point> {
    let dim = orbit.map.ambient_dim();
    orbit
        .points
        .iter()
        .map(|&p| observe_point(p, noise, trunc, dim, rng))
        .collect()
}

/// What a substream is used for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StreamRole {
    InitialCondition,
    Branch,
    Noise,
    Target,
    Measure,
}

impl StreamRole {
    fn tag(self) -> u8 {
        match self {
            StreamRole::InitialCondition => 1,
            StreamRole::Branch => 2,
            StreamRole::Noise => 3,
            StreamRole::Target => 4,
            StreamRole::Measure => 5,
        }
    }
}

/// Identifies one independent substream.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StreamKey {
    pub cell: u64,
    pub realization: u64,
    pub role: StreamRole,
}

impl StreamKey {
    pub fn new(cell: u64, realization: u64, role: StreamRole) -> Self {
        StreamKey {
            cell,
            realization,
            role,
        }
    }
}

/// Derives substreams by hashing `(base_seed, cell, realization, role)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RandomStreamPolicy {
    pub base_seed: u64,
}

impl RandomStreamPolicy {
    pub fn new(base_seed: u64) -> Self {
        RandomStreamPolicy { base_seed }
    }

    pub fn seed_bytes(&self, key: StreamKey) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update(b"obsnoise/stream/v1");
        h.update(self.base_seed.to_le_bytes());
        h.update(key.cell.to_le_bytes());
        h.update(key.realization.to_le_bytes());
        h.update([key.role.tag()]);
        h.finalize().into()
    }

    /// First eight bytes of the derived seed, for reporting.
    pub fn seed_u64(&self, key: StreamKey) -> u64 {
        let b = self.seed_bytes(key);
        u64::from_le_bytes(b[..8].try_into().expect("8 bytes"))
    }

    pub fn stream(&self, key: StreamKey) -> StreamRng {
        StreamRng::from_seed(self.seed_bytes(key))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{generate_orbit, MapSystem};
    use rand::SeedableRng;

    #[test]
    fn truncate_examples() {
        assert_eq!(truncate(0.123456, 2), 0.12);
        assert_eq!(truncate(-0.005, 2), -0.01);
        assert_eq!(truncate(0.12, 2), 0.12);
        assert_eq!(truncate(0.29, 2), truncate(truncate(0.29, 2), 2));
    }

    #[test]
    fn invalid_specs() {
        assert!(TruncationSpec::digits(0).is_err());
        assert!(TruncationSpec::digits(16).is_err());
        assert!(NoiseSpec::from_epsilon(-1e-3).is_err());
        assert!(NoiseSpec::from_epsilon(f64::NAN).is_err());
    }

    #[test]
    fn epsilon_matches_exponent() {
        for p in 0..=10 {
            let spec = NoiseSpec::from_exponent(p as f64).unwrap();
            let want = 10f64.powi(-p);
            assert!((spec.epsilon() - want).abs() <= f64::EPSILON * want);
        }
    }

    #[test]
    fn zero_noise_is_zero_vector() {
        let mut rng = StreamRng::seed_from_u64(1);
        for dim in [1, 2] {
            assert_eq!(sample_noise(&NoiseSpec::NONE, dim, &mut rng), Point::default());
        }
    }

    #[test]
    fn uniform_noise_mean_in_one_dimension() {
        let spec = NoiseSpec::from_epsilon(0.1).unwrap();
        let mut rng = StreamRng::seed_from_u64(7);
        let n = 1_000_000;
        let mean = (0..n).map(|_| sample_noise(&spec, 1, &mut rng).x()).sum::<f64>() / n as f64;
        let se = (0.1 / 3f64.sqrt()) / (n as f64).sqrt();
        assert!(mean.abs() < 4.0 * se, "mean {mean}");
    }

    #[test]
    fn disk_noise_inner_area_fraction() {
        let spec = NoiseSpec::from_epsilon(1.0).unwrap();
        let mut rng = StreamRng::seed_from_u64(11);
        let n = 1_000_000;
        let mut inside = 0usize;
        for _ in 0..n {
            let p = sample_noise(&spec, 2, &mut rng);
            let r = p.distance(&Point::default());
            assert!(r <= 1.0);
            if r <= 0.5 {
                inside += 1;
            }
        }
        let frac = inside as f64 / n as f64;
        let se = (0.25 * 0.75 / n as f64).sqrt();
        assert!((frac - 0.25).abs() < 4.0 * se, "fraction {frac}");
    }

    #[test]
    fn observe_identity_and_truncation() {
        let orbit = generate_orbit(&MapSystem::TernaryShift, Point::scalar(0.123), 50, 0, None).unwrap();
        let mut rng = StreamRng::seed_from_u64(3);
        let same = observe(&orbit, &NoiseSpec::NONE, &TruncationSpec::NONE, &mut rng);
        assert_eq!(same, orbit.points);
        let q3 = observe(&orbit, &NoiseSpec::NONE, &TruncationSpec::digits(3).unwrap(), &mut rng);
        for (o, p) in q3.iter().zip(&orbit.points) {
            assert_eq!(o.x(), truncate(p.x(), 3));
        }
    }

    #[test]
    fn noisy_observation_amplitude() {
        let orbit = generate_orbit(&MapSystem::TernaryShift, Point::scalar(0.3141), 10_000, 0, None).unwrap();
        let mut rng = StreamRng::seed_from_u64(5);
        let eps = 1e-2;
        let obs = observe(&orbit, &NoiseSpec::from_epsilon(eps).unwrap(), &TruncationSpec::NONE, &mut rng);
        let max = obs
            .iter()
            .zip(&orbit.points)
            .map(|(o, p)| (o.x() - p.x()).abs())
            .fold(0.0, f64::max);
        assert!(max <= eps * (1.0 + 1e-12));
        assert!(max > 0.9 * eps);
    }

    #[test]
    fn substreams_differ_by_every_key_component() {
        let policy = RandomStreamPolicy::new(42);
        let base = StreamKey::new(0, 0, StreamRole::Noise);
        let variants = [
            StreamKey::new(1, 0, StreamRole::Noise),
            StreamKey::new(0, 1, StreamRole::Noise),
            StreamKey::new(0, 0, StreamRole::Branch),
        ];
        for v in variants {
            assert_ne!(policy.seed_bytes(base), policy.seed_bytes(v));
        }
        assert_ne!(policy.seed_bytes(base), RandomStreamPolicy::new(43).seed_bytes(base));
        assert_eq!(policy.seed_bytes(base), RandomStreamPolicy::new(42).seed_bytes(base));
    }
}
