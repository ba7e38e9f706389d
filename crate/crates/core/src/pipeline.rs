//! Streaming path from an orbit to block maxima of the noisy observable.

use rand::Rng;

use crate::dynamics::{DynamicsError, Point, PointSource};
use crate::evt::BlockMaximaAccumulator;
use crate::perturbation::{observe_point, NoiseSpec, TruncationSpec};

/// Observes `n_blocks * m` consecutive points of `source` and returns the
/// block maxima of `-ln ||y - z||`, without storing the series.
///
/// An exact hit of the target yields `+inf` for its block.
#[allow(clippy::too_many_arguments)]
pub fn noisy_block_maxima<S, R>(
    source: &mut S,
    z: &Point,
    noise: &NoiseSpec,
    truncation: &TruncationSpec,
    dim: usize,
    m: usize,
    n_blocks: usize,
    noise_rng: &mut R,
) -> Result<Vec<f64>, DynamicsError>
where
    S: PointSource + ?Sized,
    R: Rng + ?Sized,
{
    let mut acc = BlockMaximaAccumulator::new(m, n_blocks);
    for _ in 0..n_blocks * m {
        let x = source.next_point()?;
        let y = observe_point(x, noise, truncation, dim, noise_rng);
        acc.push_distance(y.distance(z));
    }
    Ok(acc.into_maxima())
}
