//! Generalized extreme value distribution and its L-moment estimator.
//!
//! Shape convention: `kappa > 0` is Frechet, `kappa < 0` Weibull, `kappa = 0`
//! Gumbel, with `G(y) = exp(-[1 + kappa (y - mu) / sigma]^(-1/kappa))`. The
//! Hosking shape `k` used by the closed-form estimator is `-kappa`.

use rand::Rng;
use libm::tgamma as gamma;
use thiserror::Error;

use super::lmoments::{sample_l_moments, LMoments};

/// Euler-Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Below this |shape| the Gumbel limit formulas are used.
const GUMBEL_SHAPE_EPS: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("sample has {n} values, at least {min} required")]
    TooFewValues { n: usize, min: usize },
    #[error("all sample values are equal")]
    DegenerateSample,
    #[error("sample value at index {index} is not finite")]
    NonFinite { index: usize },
    #[error("fit diverged: {0}")]
    FitDiverged(String),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitOptions {
    pub min_sample: usize,
    /// Largest accepted |t3|; the rational shape approximation degrades beyond.
    pub t3_max: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            min_sample: 20,
            t3_max: 0.9,
        }
    }
}

/// A GEV law.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Gev {
    pub kappa: f64,
    pub mu: f64,
    pub sigma: f64,
}

impl Gev {
    pub const STANDARD_GUMBEL: Gev = Gev {
        kappa: 0.0,
        mu: 0.0,
        sigma: 1.0,
    };

    pub fn new(kappa: f64, mu: f64, sigma: f64) -> Self {
        assert!(sigma > 0.0, "GEV scale must be positive");
        Gev { kappa, mu, sigma }
    }

    fn is_gumbel(&self) -> bool {
        self.kappa.abs() < GUMBEL_SHAPE_EPS
    }

    /// Lower (Frechet) or upper (Weibull) endpoint of the support.
    pub fn support(&self) -> (f64, f64) {
        if self.is_gumbel() {
            (f64::NEG_INFINITY, f64::INFINITY)
        } else if self.kappa > 0.0 {
            (self.mu - self.sigma / self.kappa, f64::INFINITY)
        } else {
            (f64::NEG_INFINITY, self.mu - self.sigma / self.kappa)
        }
    }

    /// `-ln G(y)`, saturating at 0 and infinity outside the support.
    fn neg_log_cdf(&self, y: f64) -> f64 {
        let s = (y - self.mu) / self.sigma;
        if self.is_gumbel() {
            return (-s).exp();
        }
        let arg = self.kappa * s;
        if arg <= -1.0 {
            return if self.kappa > 0.0 { f64::INFINITY } else { 0.0 };
        }
        (-arg.ln_1p() / self.kappa).exp()
    }

    pub fn cdf(&self, y: f64) -> f64 {
        (-self.neg_log_cdf(y)).exp()
    }

    /// Exact inverse of [`Gev::cdf`] on the support.
    ///
    /// # Panics
    ///
    /// If `u` is not in the open unit interval.
    pub fn quantile(&self, u: f64) -> f64 {
        assert!(u > 0.0 && u < 1.0, "quantile level must lie in (0, 1)");
        let t = -u.ln();
        self.quantile_from_neg_log(t)
    }

    fn quantile_from_neg_log(&self, t: f64) -> f64 {
        let lt = t.ln();
        if self.is_gumbel() {
            self.mu - self.sigma * lt
        } else {
            self.mu + self.sigma * (-self.kappa * lt).exp_m1() / self.kappa
        }
    }

    /// Inverse-CDF draw.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        // u = 0 has probability 2^-53; map it into the open interval.
        self.quantile(if u == 0.0 { f64::MIN_POSITIVE } else { u })
    }
}

/// GEV parameters estimated from a sample of block maxima.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GevFit {
    pub kappa: f64,
    pub mu: f64,
    pub sigma: f64,
    /// Sample L-skewness.
    pub t3: f64,
    pub n_sample: usize,
}

impl GevFit {
    pub fn gev(&self) -> Gev {
        Gev::new(self.kappa, self.mu, self.sigma)
    }
}

/// Closed-form Hosking estimator from the first three L-moments.
pub fn gev_from_l_moments(lm: &LMoments, n_sample: usize) -> Result<GevFit, FitError> {
    let c = 2.0 / (3.0 + lm.t3) - std::f64::consts::LN_2 / 3f64.ln();
    let k = 7.8590 * c + 2.9554 * c * c;
    let (sigma, mu) = if k.abs() < GUMBEL_SHAPE_EPS {
        let sigma = lm.l2 / std::f64::consts::LN_2;
        (sigma, lm.l1 - EULER_GAMMA * sigma)
    } else {
        let g = gamma(1.0 + k);
        let sigma = lm.l2 * k / ((1.0 - 2f64.powf(-k)) * g);
        (sigma, lm.l1 - sigma * (1.0 - g) / k)
    };
    if !(sigma.is_finite() && mu.is_finite() && k.is_finite()) || sigma <= 0.0 {
        return Err(FitError::FitDiverged(format!(
            "non-finite estimate (k={k}, sigma={sigma}, mu={mu})"
        )));
    }
    Ok(GevFit {
        kappa: if k == 0.0 { 0.0 } else { -k },
        mu,
        sigma,
        t3: lm.t3,
        n_sample,
    })
}

/// Fits a GEV law to `sample` by L-moments.
pub fn fit_gev(sample: &[f64], opts: &FitOptions) -> Result<GevFit, FitError> {
    let min = opts.min_sample.max(3);
    if sample.len() < min {
        return Err(FitError::TooFewValues {
            n: sample.len(),
            min,
        });
    }
    let lm = sample_l_moments(sample)?;
    if lm.t3.abs() > opts.t3_max {
        return Err(FitError::FitDiverged(format!(
            "|t3| = {:.4} exceeds {}",
            lm.t3.abs(),
            opts.t3_max
        )));
    }
    gev_from_l_moments(&lm, sample.len())
}
