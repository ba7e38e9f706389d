//! Extreme value statistics of chaotic maps seen through noisy, truncating
//! instruments.
//!
//! The crate simulates orbits of a small catalog of maps, perturbs the
//! observed values, fits GEV laws to block maxima of `-ln dist(y, z)` and
//! compares the fitted normalizing sequences with their closed forms.

pub mod dynamics;
pub mod evt;
pub mod exec;
pub mod experiments;
pub mod measure;
pub mod perturbation;
pub mod pipeline;
pub mod recurrence;

/// Random stream used for every seeded role.
pub type StreamRng = rand_chacha::ChaCha8Rng;

pub use dynamics::{MapKind, MapSystem, Orbit, Point, PointSource};
pub use evt::{fit_gev, Gev, GevFit};
pub use exec::Executor;
pub use perturbation::{NoiseSpec, RandomStreamPolicy, StreamKey, StreamRole, TruncationSpec};
