//! Normalizing sequences `u_m = u / a_m + b_m` under observational noise.

use std::f64::consts::PI;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScalingError {
    #[error("target has zero measure at scale {epsilon}")]
    ZeroMeasure { epsilon: f64 },
    #[error("invalid scaling input: {0}")]
    InvalidInput(String),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalingPrediction {
    pub a_m: f64,
    pub b_m: f64,
    pub m: u64,
    pub epsilon: f64,
    pub d: usize,
    /// Measure of the noise ball around the target used for `b_m`.
    pub measure_value: f64,
}

/// Predicted `(a_m, b_m)` for block length `m`, noise `epsilon` and ball measure
/// `nu_ball = nu(B(z, epsilon))`.
///
/// `d = 1`: `a_m = 1`, `b_m = ln(m nu / eps)`.
/// `d = 2`: `a_m = 2`, `b_m = ln(pi m nu / eps^2) / 2`.
pub fn theoretical_scaling(
    m: u64,
    epsilon: f64,
    nu_ball: f64,
    d: usize,
) -> Result<ScalingPrediction, ScalingError> {
    if m == 0 {
        return Err(ScalingError::InvalidInput("m must be at least 1".into()));
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(ScalingError::InvalidInput(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    if nu_ball == 0.0 {
        return Err(ScalingError::ZeroMeasure { epsilon });
    }
    if !(nu_ball > 0.0 && nu_ball <= 1.0) {
        return Err(ScalingError::InvalidInput(format!(
            "ball measure must lie in (0, 1], got {nu_ball}"
        )));
    }
    let mf = m as f64;
    let b_m = match d {
        1 => (mf * nu_ball / epsilon).ln(),
        2 => (PI * mf * nu_ball / (epsilon * epsilon)).ln() / 2.0,
        _ => {
            return Err(ScalingError::InvalidInput(format!(
                "ambient dimension {d} not supported"
            )))
        }
    };
    Ok(ScalingPrediction {
        a_m: d as f64,
        b_m,
        m,
        epsilon,
        d,
        measure_value: nu_ball,
    })
}

/// `b_m ~ ln(m eps^(D - d)) / d` for a measure of local dimension `D`, defined
/// up to an additive constant.
pub fn theoretical_bm_fractal(m: u64, epsilon: f64, dimension: f64, d: usize) -> f64 {
    let df = d as f64;
    ((m as f64).ln() + (dimension - df) * epsilon.ln()) / df
}
