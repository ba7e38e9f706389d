//! Observable process, block maxima, GEV fitting and the theoretical
//! normalizing sequences.

pub mod gev;
pub mod gof;
pub mod lmoments;
pub mod scaling;

use thiserror::Error;

use crate::dynamics::{MapKind, Point};

pub use gof::{kolmogorov_survival, ks_statistic, ks_test, KsResult};
pub use gev::{fit_gev, gev_from_l_moments, FitError, FitOptions, Gev, GevFit};
pub use lmoments::{sample_l_moments, LMoments};
pub use scaling::{theoretical_bm_fractal, theoretical_scaling, ScalingError, ScalingPrediction};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ObservableError {
    #[error("observable is infinite: point coincides with the target {0}")]
    InfiniteObservable(Point),
    #[error("block size {m} exceeds series length {len}")]
    EmptyBlocks { m: usize, len: usize },
    #[error("block size must be at least 1")]
    ZeroBlockSize,
    #[error("series contains a non-finite value at index {0}")]
    NonFinite(usize),
}

/// `-ln ||point - z||`.
pub fn observable(point: &Point, z: &Point) -> Result<f64, ObservableError> {
    let d = point.distance(z);
    if d == 0.0 {
        return Err(ObservableError::InfiniteObservable(*z));
    }
    Ok(-d.ln())
}

/// Maxima over consecutive disjoint blocks of length `m`; the remainder is
/// dropped.
pub fn block_maxima(series: &[f64], m: usize) -> Result<Vec<f64>, ObservableError> {
    if m == 0 {
        return Err(ObservableError::ZeroBlockSize);
    }
    if series.len() < m {
        return Err(ObservableError::EmptyBlocks {
            m,
            len: series.len(),
        });
    }
    Ok(series
        .chunks_exact(m)
        .map(|block| block.iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .collect())
}

/// Streaming block maxima of the observable, accumulated as block minima of
/// the distance. `-ln` is monotone, so `-ln(min d) == max(-ln d)` bit for bit.
#[derive(Clone, Debug)]
pub struct BlockMaximaAccumulator {
    m: usize,
    filled: usize,
    min_distance: f64,
    maxima: Vec<f64>,
}

impl BlockMaximaAccumulator {
    pub fn new(m: usize, expected_blocks: usize) -> Self {
        assert!(m >= 1, "block size must be at least 1");
        BlockMaximaAccumulator {
            m,
            filled: 0,
            min_distance: f64::INFINITY,
            maxima: Vec::with_capacity(expected_blocks),
        }
    }

    /// Feeds one distance. A zero distance yields a `+inf` block maximum.
    #[inline]
    pub fn push_distance(&mut self, d: f64) {
        if d < self.min_distance {
            self.min_distance = d;
        }
        self.filled += 1;
        if self.filled == self.m {
            self.maxima.push(-self.min_distance.ln());
            self.filled = 0;
            self.min_distance = f64::INFINITY;
        }
    }

    pub fn completed_blocks(&self) -> usize {
        self.maxima.len()
    }

    pub fn into_maxima(self) -> Vec<f64> {
        self.maxima
    }
}

/// Observable values with the target and observation settings that produced
/// them.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservedSeries {
    values: Vec<f64>,
    pub target: Point,
    pub map: Option<MapKind>,
    pub epsilon: Option<f64>,
    pub truncation: Option<u32>,
}

impl ObservedSeries {
    pub fn new(values: Vec<f64>, target: Point) -> Result<Self, ObservableError> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(ObservableError::NonFinite(i));
        }
        Ok(ObservedSeries {
            values,
            target,
            map: None,
            epsilon: None,
            truncation: None,
        })
    }

    /// Evaluates the observable along observed points.
    pub fn from_points(points: &[Point], target: Point) -> Result<Self, ObservableError> {
        let values = points
            .iter()
            .map(|p| observable(p, &target))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(values, target)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn block_maxima(&self, m: usize) -> Result<Vec<f64>, ObservableError> {
        block_maxima(&self.values, m)
    }
}
