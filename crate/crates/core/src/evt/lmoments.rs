//! Sample L-moments from unbiased probability-weighted moments.

use super::gev::FitError;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LMoments {
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
    /// L-skewness `l3 / l2`.
    pub t3: f64,
}

/// First three sample L-moments.
///
/// With the order statistics `x_(1) <= ... <= x_(n)`,
/// `b_r = n^-1 sum_j x_(j) prod_{s=1..r} (j - s) / (n - s)` and
/// `l1 = b0`, `l2 = 2 b1 - b0`, `l3 = 6 b2 - 6 b1 + b0`.
pub fn sample_l_moments(sample: &[f64]) -> Result<LMoments, FitError> {
    let n = sample.len();
    if n < 3 {
        return Err(FitError::TooFewValues { n, min: 3 });
    }
    if let Some(i) = sample.iter().position(|x| !x.is_finite()) {
        return Err(FitError::NonFinite { index: i });
    }
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    if xs[0] == xs[n - 1] {
        return Err(FitError::DegenerateSample);
    }

    let nf = n as f64;
    let (mut b0, mut b1, mut b2) = (0.0, 0.0, 0.0);
    for (i, &x) in xs.iter().enumerate() {
        let j = i as f64; // j - 1 for the 1-based rank
        b0 += x;
        b1 += x * j / (nf - 1.0);
        b2 += x * j * (j - 1.0) / ((nf - 1.0) * (nf - 2.0));
    }
    b0 /= nf;
    b1 /= nf;
    b2 /= nf;

    let l1 = b0;
    let l2 = 2.0 * b1 - b0;
    let l3 = 6.0 * b2 - 6.0 * b1 + b0;
    if l2 <= 0.0 {
        return Err(FitError::DegenerateSample);
    }
    Ok(LMoments {
        l1,
        l2,
        l3,
        t3: l3 / l2,
    })
}
