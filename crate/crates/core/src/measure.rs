//! Local measure of noise balls and local dimension from `b_m`-vs-`p` scans.

use std::f64::consts::LN_10;

use rand::SeedableRng;
use serde::Serialize;
use thiserror::Error;

use crate::dynamics::{sample_initial_condition, DynamicsError, MapSystem, Point, PointSource};
use crate::StreamRng;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeasureError {
    #[error("ball of radius {epsilon} around {z} has zero measure")]
    ZeroMeasure { z: Point, epsilon: f64 },
    #[error("measure model {model} does not apply to map {map}")]
    Unsupported { model: &'static str, map: String },
    #[error("invalid measure input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error("{used} points survive plateau exclusion, at least 3 required")]
    InsufficientPoints { used: usize },
    #[error("b_m shows no dependence on p")]
    NoSignal,
}

/// How `nu(B(z, eps))` is obtained.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LocalMeasureModel {
    /// Normalized Lebesgue measure on the map's interval.
    LebesgueInterval,
    /// Density `(1 - x) / 2` on `[-1, 1]`.
    HemmerDensity,
    /// Density `(1 - alpha) x^-alpha` on `[0, 1]`.
    PmDensity { alpha: f64 },
    /// Visit frequency along one long orbit.
    Empirical { orbit_len: usize, seed: u64 },
}

impl LocalMeasureModel {
    pub fn name(&self) -> &'static str {
        match self {
            LocalMeasureModel::LebesgueInterval => "lebesgue",
            LocalMeasureModel::HemmerDensity => "hemmer",
            LocalMeasureModel::PmDensity { .. } => "pm",
            LocalMeasureModel::Empirical { .. } => "empirical",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeasureEstimate {
    pub value: f64,
    /// Zero for the analytic models, binomial for the empirical one.
    pub stderr: f64,
}

fn clipped_interval(map: &MapSystem, z: f64, epsilon: f64) -> (f64, f64) {
    let dom = map.domain();
    ((z - epsilon).max(dom.lower.x()), (z + epsilon).min(dom.upper.x()))
}

/// Estimates `nu(B(z, epsilon))` for the invariant measure of `map`.
pub fn local_measure(
    model: &LocalMeasureModel,
    z: &Point,
    epsilon: f64,
    map: &MapSystem,
) -> Result<MeasureEstimate, MeasureError> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(MeasureError::InvalidInput(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    let unsupported = || MeasureError::Unsupported {
        model: model.name(),
        map: map.kind().to_string(),
    };
    let value = match *model {
        LocalMeasureModel::LebesgueInterval => {
            if map.ambient_dim() != 1 {
                return Err(unsupported());
            }
            let (lo, hi) = clipped_interval(map, z.x(), epsilon);
            (hi - lo).max(0.0) / map.domain().width(0)
        }
        LocalMeasureModel::HemmerDensity => {
            if !matches!(map, MapSystem::Hemmer) {
                return Err(unsupported());
            }
            let (lo, hi) = clipped_interval(map, z.x(), epsilon);
            // Integral of (1 - x) / 2 over [lo, hi], free of cancellation near 1.
            ((hi - lo) * ((1.0 - hi) + (1.0 - lo)) / 4.0).max(0.0)
        }
        LocalMeasureModel::PmDensity { alpha } => {
            if !matches!(map, MapSystem::PomeauManneville { .. }) {
                return Err(unsupported());
            }
            let (lo, hi) = clipped_interval(map, z.x(), epsilon);
            let e = 1.0 - alpha;
            (hi.max(0.0).powf(e) - lo.max(0.0).powf(e)).max(0.0)
        }
        LocalMeasureModel::Empirical { orbit_len, seed } => {
            return empirical_measure(map, z, epsilon, orbit_len, seed);
        }
    };
    if value == 0.0 {
        return Err(MeasureError::ZeroMeasure { z: *z, epsilon });
    }
    Ok(MeasureEstimate { value, stderr: 0.0 })
}

fn empirical_measure(
    map: &MapSystem,
    z: &Point,
    epsilon: f64,
    orbit_len: usize,
    seed: u64,
) -> Result<MeasureEstimate, MeasureError> {
    if orbit_len == 0 {
        return Err(MeasureError::InvalidInput("orbit length must be positive".into()));
    }
    let mut rng = StreamRng::seed_from_u64(seed);
    let x0 = sample_initial_condition(map, &mut rng, map.default_burn_in())?;
    let branch = map.is_random().then(|| rng.clone());
    let mut orbit = map.orbit(x0, branch);
    let mut hits = 0usize;
    for _ in 0..orbit_len {
        if orbit.next_point()?.distance(z) <= epsilon {
            hits += 1;
        }
    }
    if hits == 0 {
        return Err(MeasureError::ZeroMeasure { z: *z, epsilon });
    }
    let n = orbit_len as f64;
    let value = hits as f64 / n;
    Ok(MeasureEstimate {
        value,
        stderr: (value * (1.0 - value) / n).sqrt(),
    })
}

/// Ordinary least squares `y = intercept + slope x`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
}

pub fn linear_fit(points: &[(f64, f64)]) -> Option<LinearFit> {
    let n = points.len();
    if n < 2 {
        return None;
    }
    let nf = n as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = points.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let slope_stderr = if n > 2 {
        let rss: f64 = points
            .iter()
            .map(|p| (p.1 - intercept - slope * p.0).powi(2))
            .sum();
        (rss / (nf - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Some(LinearFit {
        slope,
        intercept,
        slope_stderr,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DimensionEstimate {
    pub dimension: f64,
    /// Slope of `b_m` (natural log) against `p`.
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the dimension, propagated from the slope.
    pub stderr: f64,
    pub m: u64,
    pub d: usize,
    pub points_used: Vec<(f64, f64)>,
    pub points_discarded: Vec<(f64, f64)>,
}

/// Default fraction of the reference slope below which a segment counts as a
/// plateau.
pub const DEFAULT_PLATEAU_THRESHOLD: f64 = 0.25;

/// Local dimension from `(p, b_m)` pairs with `eps = 10^-p`.
///
/// The reference slope is fitted on the lower-`p` half. Walking down from the
/// largest `p`, every point whose segment to its predecessor has a slope below
/// `plateau_threshold` times the reference is discarded, until the first steep
/// segment. The survivors are fitted by least squares and
/// `D = d - d * slope / ln 10`.
pub fn estimate_dimension(
    points: &[(f64, f64)],
    m: u64,
    d: usize,
    plateau_threshold: f64,
) -> Result<DimensionEstimate, MeasureError> {
    if points.len() < 3 {
        return Err(MeasureError::InsufficientPoints { used: points.len() });
    }
    if points.iter().any(|(p, b)| !p.is_finite() || !b.is_finite()) {
        return Err(MeasureError::InvalidInput("non-finite (p, b_m) point".into()));
    }
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    if sorted.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(MeasureError::InvalidInput("p values must be distinct".into()));
    }

    let half = sorted.len().div_ceil(2).max(2);
    let reference = linear_fit(&sorted[..half]).expect("distinct abscissae").slope;
    let scale = sorted.iter().map(|p| p.1.abs()).fold(1.0, f64::max);
    if reference.abs() <= 1e-12 * scale {
        return Err(MeasureError::NoSignal);
    }

    let mut keep = sorted.len();
    while keep > 1 {
        let (p0, b0) = sorted[keep - 2];
        let (p1, b1) = sorted[keep - 1];
        let segment = (b1 - b0) / (p1 - p0);
        if segment.abs() < plateau_threshold * reference.abs() {
            keep -= 1;
        } else {
            break;
        }
    }
    if keep == 1 {
        return Err(MeasureError::NoSignal);
    }
    let (used, discarded) = sorted.split_at(keep);
    if used.len() < 3 {
        return Err(MeasureError::InsufficientPoints { used: used.len() });
    }
    let fit = linear_fit(used).expect("distinct abscissae");
    let df = d as f64;
    Ok(DimensionEstimate {
        dimension: df - df * fit.slope / LN_10,
        slope: fit.slope,
        intercept: fit.intercept,
        stderr: df * fit.slope_stderr / LN_10,
        m,
        d,
        points_used: used.to_vec(),
        points_discarded: discarded.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::MapKind;
    use crate::evt::theoretical_bm_fractal;
    use approx::assert_abs_diff_eq;

    #[test]
    fn analytic_measures() {
        let ternary = MapSystem::TernaryShift;
        let v = local_measure(&LocalMeasureModel::LebesgueInterval, &Point::scalar(0.5), 0.01, &ternary).unwrap();
        assert_abs_diff_eq!(v.value, 0.02, epsilon = 1e-15);
        let edge = local_measure(&LocalMeasureModel::LebesgueInterval, &Point::scalar(0.0), 0.01, &ternary).unwrap();
        assert_abs_diff_eq!(edge.value, 0.01, epsilon = 1e-15);

        let hemmer = MapSystem::Hemmer;
        let v = local_measure(&LocalMeasureModel::HemmerDensity, &Point::scalar(1.0), 0.01, &hemmer).unwrap();
        assert_abs_diff_eq!(v.value, 2.5e-5, epsilon = 1e-15);
        let whole = local_measure(&LocalMeasureModel::HemmerDensity, &Point::scalar(0.0), 5.0, &hemmer).unwrap();
        assert_abs_diff_eq!(whole.value, 1.0, epsilon = 1e-15);

        let pm = MapSystem::default_for(MapKind::PomeauManneville);
        let v = local_measure(&LocalMeasureModel::PmDensity { alpha: 0.3 }, &Point::scalar(0.0), 1e-3, &pm).unwrap();
        assert_abs_diff_eq!(v.value, 1e-3f64.powf(0.7), epsilon = 1e-15);
    }

    #[test]
    fn model_map_mismatch() {
        let err = local_measure(&LocalMeasureModel::HemmerDensity, &Point::scalar(0.0), 0.1, &MapSystem::TernaryShift);
        assert!(matches!(err, Err(MeasureError::Unsupported { .. })));
    }

    #[test]
    fn cantor_gap_has_zero_measure() {
        let ifs = MapSystem::default_for(MapKind::CantorIfs);
        let model = LocalMeasureModel::Empirical { orbit_len: 100_000, seed: 9 };
        let err = local_measure(&model, &Point::scalar(0.5), 0.1, &ifs).unwrap_err();
        assert!(matches!(err, MeasureError::ZeroMeasure { .. }));
    }

    #[test]
    fn exact_cantor_line_gives_cantor_dimension() {
        let dim = 2f64.ln() / 3f64.ln();
        let pts: Vec<(f64, f64)> = (1..=6)
            .map(|p| (p as f64, theoretical_bm_fractal(10_000, 10f64.powi(-p), dim, 1)))
            .collect();
        let est = estimate_dimension(&pts, 10_000, 1, DEFAULT_PLATEAU_THRESHOLD).unwrap();
        assert_abs_diff_eq!(est.dimension, dim, epsilon = 1e-12);
        assert!(est.points_discarded.is_empty());
    }

    #[test]
    fn plateau_suffix_is_discarded() {
        let mut pts: Vec<(f64, f64)> = (1..=4).map(|p| (p as f64, 1.0 + 0.8 * p as f64)).collect();
        pts.extend([(5.0, 4.25), (6.0, 4.27), (7.0, 4.26)]);
        let est = estimate_dimension(&pts, 1000, 1, 0.25).unwrap();
        assert_eq!(est.points_used.len(), 4);
        assert_eq!(est.points_discarded, vec![(5.0, 4.25), (6.0, 4.27), (7.0, 4.26)]);
        assert_abs_diff_eq!(est.slope, 0.8, epsilon = 1e-12);
    }

    #[test]
    fn dimension_errors() {
        let flat: Vec<(f64, f64)> = (1..=5).map(|p| (p as f64, 3.0)).collect();
        assert_eq!(estimate_dimension(&flat, 10, 1, 0.25), Err(MeasureError::NoSignal));
        let two = [(1.0, 1.0), (2.0, 2.0)];
        assert!(matches!(estimate_dimension(&two, 10, 1, 0.25), Err(MeasureError::InsufficientPoints { .. })));
        let short = [(1.0, 1.0), (2.0, 2.0), (3.0, 2.01), (4.0, 2.02)];
        assert_eq!(
            estimate_dimension(&short, 10, 1, 0.25),
            Err(MeasureError::InsufficientPoints { used: 2 })
        );
        let dup = [(1.0, 1.0), (1.0, 2.0), (3.0, 3.0)];
        assert!(estimate_dimension(&dup, 10, 1, 0.25).is_err());
    }
}
