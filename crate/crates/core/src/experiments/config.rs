//! Experiment configuration, read from TOML.

use serde::{Deserialize, Serialize};

use crate::dynamics::{MapKind, MapSystem, Point, DEFAULT_PM_ALPHA};
use crate::evt::FitOptions;
use crate::measure::{LocalMeasureModel, DEFAULT_PLATEAU_THRESHOLD};

use super::ConfigError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Truncation,
    BmConvergence,
    Dimension,
    HittingTime,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Truncation => "truncation",
            ExperimentKind::BmConvergence => "bm_convergence",
            ExperimentKind::Dimension => "dimension",
            ExperimentKind::HittingTime => "hitting_time",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZSelector {
    /// A point drawn from a burned-in orbit, independently per realization.
    AttractorRandom,
    /// The point of vanishing density: Hemmer `z = 1`.
    Sporadic,
    /// The neutral fixed point: Pomeau-Manneville `z = 0`.
    Recurrent,
}

/// A target given literally or by selector.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TargetSpec {
    Scalar(f64),
    Planar([f64; 2]),
    Selector(ZSelector),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureChoice {
    /// The closed form for the map when one exists, else empirical.
    Auto,
    Lebesgue,
    Hemmer,
    Pm,
    Empirical,
}

fn default_z() -> Vec<TargetSpec> {
    vec![TargetSpec::Selector(ZSelector::AttractorRandom)]
}
fn default_one() -> usize {
    1
}
fn default_n_blocks() -> usize {
    1000
}
fn default_realizations() -> usize {
    30
}
fn default_measure() -> MeasureChoice {
    MeasureChoice::Auto
}
fn default_empirical_n() -> usize {
    1_000_000
}
fn default_plateau() -> f64 {
    DEFAULT_PLATEAU_THRESHOLD
}
fn default_t_grid() -> Vec<f64> {
    vec![0.5, 1.0, 2.0, 4.0]
}
fn default_budget() -> u64 {
    100_000_000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub map: MapKind,
    /// Pomeau-Manneville exponent.
    #[serde(default)]
    pub alpha: Option<f64>,
    /// Lozi parameters.
    #[serde(default)]
    pub a: Option<f64>,
    #[serde(default)]
    pub b: Option<f64>,
    /// Weight of the first IFS branch.
    #[serde(default)]
    pub q1: Option<f64>,
    #[serde(default = "default_z")]
    pub z: Vec<TargetSpec>,
    /// Number of independent draws per `attractor_random` entry.
    #[serde(default = "default_one")]
    pub z_count: usize,
    /// Noise exponents, `eps = 10^-p`.
    #[serde(default)]
    pub p: Vec<f64>,
    /// Truncation digits.
    #[serde(default)]
    pub q: Vec<u32>,
    pub m: Vec<u64>,
    #[serde(default = "default_n_blocks")]
    pub n_blocks: usize,
    #[serde(default = "default_realizations")]
    pub realizations: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_measure")]
    pub measure: MeasureChoice,
    /// Orbit length of the empirical measure model.
    #[serde(default = "default_empirical_n")]
    pub empirical_n: usize,
    #[serde(default)]
    pub burn_in: Option<usize>,
    #[serde(default = "default_plateau")]
    pub plateau_threshold: f64,
    /// Dimension reported next to the regression estimate.
    #[serde(default)]
    pub reference_dimension: Option<f64>,
    #[serde(default = "default_t_grid")]
    pub t_grid: Vec<f64>,
    /// Hitting-time horizon; defaults to `100 m`.
    #[serde(default)]
    pub max_steps: Option<u64>,
    #[serde(default)]
    pub t3_max: Option<f64>,
    #[serde(default)]
    pub min_sample: Option<usize>,
    /// Upper bound on `n_blocks * max(m)`.
    #[serde(default = "default_budget")]
    pub orbit_budget: u64,
    /// Output directory; the command line flag takes precedence.
    #[serde(default)]
    pub out: Option<String>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn map_system(&self) -> Result<MapSystem, ConfigError> {
        let unused = |field: &'static str, present: bool| {
            if present {
                Err(ConfigError::Field {
                    field,
                    message: format!("not a parameter of {}", self.map),
                })
            } else {
                Ok(())
            }
        };
        let bad = |field: &'static str| {
            move |e: crate::dynamics::DynamicsError| ConfigError::Field {
                field,
                message: e.to_string(),
            }
        };
        let default = MapSystem::default_for(self.map);
        match self.map {
            MapKind::PomeauManneville => {
                unused("a", self.a.is_some())?;
                unused("b", self.b.is_some())?;
                unused("q1", self.q1.is_some())?;
                MapSystem::pomeau_manneville(self.alpha.unwrap_or(DEFAULT_PM_ALPHA))
                    .map_err(bad("alpha"))
            }
            MapKind::CantorIfs => {
                unused("alpha", self.alpha.is_some())?;
                unused("a", self.a.is_some())?;
                unused("b", self.b.is_some())?;
                MapSystem::cantor_ifs(self.q1.unwrap_or(0.5)).map_err(bad("q1"))
            }
            MapKind::Lozi => {
                unused("alpha", self.alpha.is_some())?;
                unused("q1", self.q1.is_some())?;
                let MapSystem::Lozi { a, b } = default else {
                    unreachable!()
                };
                MapSystem::lozi(self.a.unwrap_or(a), self.b.unwrap_or(b)).map_err(bad("a"))
            }
            MapKind::TernaryShift | MapKind::Hemmer => {
                unused("alpha", self.alpha.is_some())?;
                unused("a", self.a.is_some())?;
                unused("b", self.b.is_some())?;
                unused("q1", self.q1.is_some())?;
                Ok(default)
            }
        }
    }

    pub fn fit_options(&self) -> FitOptions {
        let d = FitOptions::default();
        FitOptions {
            min_sample: self.min_sample.unwrap_or(d.min_sample),
            t3_max: self.t3_max.unwrap_or(d.t3_max),
        }
    }

    pub fn burn_in(&self, map: &MapSystem) -> usize {
        self.burn_in.unwrap_or_else(|| map.default_burn_in())
    }

    pub fn max_steps(&self, m: u64) -> u64 {
        self.max_steps.unwrap_or(100 * m)
    }

    /// The measure model used for `nu(B(z, eps))`.
    pub fn measure_model(&self, map: &MapSystem) -> LocalMeasureModel {
        let empirical = LocalMeasureModel::Empirical {
            orbit_len: self.empirical_n,
            seed: self.seed,
        };
        match (self.measure, map) {
            (MeasureChoice::Lebesgue, _) => LocalMeasureModel::LebesgueInterval,
            (MeasureChoice::Hemmer, _) => LocalMeasureModel::HemmerDensity,
            (MeasureChoice::Pm, MapSystem::PomeauManneville { alpha }) => {
                LocalMeasureModel::PmDensity { alpha: *alpha }
            }
            (MeasureChoice::Pm, _) => LocalMeasureModel::PmDensity {
                alpha: DEFAULT_PM_ALPHA,
            },
            (MeasureChoice::Empirical, _) => empirical,
            (MeasureChoice::Auto, MapSystem::TernaryShift) => LocalMeasureModel::LebesgueInterval,
            (MeasureChoice::Auto, MapSystem::Hemmer) => LocalMeasureModel::HemmerDensity,
            (MeasureChoice::Auto, MapSystem::PomeauManneville { alpha }) => {
                LocalMeasureModel::PmDensity { alpha: *alpha }
            }
            (MeasureChoice::Auto, _) => empirical,
        }
    }

    /// Resolves a named selector to its point, `None` for `attractor_random`.
    pub fn named_target(&self, selector: ZSelector) -> Result<Option<Point>, ConfigError> {
        let point = match (selector, self.map) {
            (ZSelector::AttractorRandom, _) => return Ok(None),
            (ZSelector::Sporadic, MapKind::Hemmer) => Point::scalar(1.0),
            (ZSelector::Recurrent, MapKind::PomeauManneville) => Point::scalar(0.0),
            (sel, map) => {
                return Err(ConfigError::Field {
                    field: "z",
                    message: format!("selector {sel:?} has no named point for {map}"),
                })
            }
        };
        Ok(Some(point))
    }

    /// Checks every field, naming the first offending one.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let field = |field: &'static str, message: String| Err(ConfigError::Field { field, message });
        let map = self.map_system()?;
        let dim = map.ambient_dim();
        if self.realizations == 0 {
            return field("realizations", "must be at least 1".into());
        }
        if self.m.is_empty() {
            return field("m", "needs at least one block size".into());
        }
        if self.m.contains(&0) {
            return field("m", "block sizes must be positive".into());
        }
        if self.z.is_empty() {
            return field("z", "needs at least one target".into());
        }
        if self.z_count == 0 {
            return field("z_count", "must be at least 1".into());
        }
        for t in &self.z {
            match t {
                TargetSpec::Scalar(x) if dim != 1 || !x.is_finite() => {
                    return field("z", format!("{x} is not a point of {}", self.map));
                }
                TargetSpec::Planar(xy) if dim != 2 || !xy.iter().all(|c| c.is_finite()) => {
                    return field("z", format!("{xy:?} is not a point of {}", self.map));
                }
                TargetSpec::Selector(s) => {
                    self.named_target(*s)?;
                }
                _ => {}
            }
        }
        if let Some(&p) = self.p.iter().find(|p| !p.is_finite()) {
            return field("p", format!("noise exponent {p} is not finite"));
        }
        if let Some(&q) = self.q.iter().find(|&&q| !(1..=15).contains(&q)) {
            return field("q", format!("truncation digit {q} outside 1..=15"));
        }
        if !(self.plateau_threshold >= 0.0 && self.plateau_threshold < 1.0) {
            return field("plateau_threshold", "must lie in [0, 1)".into());
        }
        if self.empirical_n == 0 {
            return field("empirical_n", "must be positive".into());
        }
        match self.experiment {
            ExperimentKind::Truncation => {
                if self.q.is_empty() {
                    return field("q", "the truncation experiment needs truncation digits".into());
                }
                if !self.p.is_empty() {
                    return field("p", "the truncation experiment runs without noise".into());
                }
            }
            ExperimentKind::BmConvergence | ExperimentKind::Dimension => {
                if self.p.is_empty() {
                    return field("p", "needs at least one noise exponent".into());
                }
                if !self.q.is_empty() {
                    return field("q", "only the truncation experiment truncates".into());
                }
                if self.experiment == ExperimentKind::Dimension && self.p.len() < 3 {
                    return field("p", "the dimension regression needs at least 3 exponents".into());
                }
            }
            ExperimentKind::HittingTime => {
                if dim != 1 {
                    return field("map", "hitting times are only compared in dimension 1".into());
                }
                if self.p.is_empty() {
                    return field("p", "needs at least one noise exponent".into());
                }
                if self.t_grid.is_empty() || self.t_grid.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
                    return field("t_grid", "needs positive, finite values".into());
                }
                if self.z.contains(&TargetSpec::Selector(ZSelector::AttractorRandom)) {
                    return field("z", "hitting times need fixed targets".into());
                }
                if self.max_steps == Some(0) {
                    return field("max_steps", "must be positive".into());
                }
            }
        }
        if self.experiment != ExperimentKind::HittingTime {
            if self.n_blocks == 0 {
                return field("n_blocks", "must be at least 1".into());
            }
            let longest = *self.m.iter().max().expect("m is nonempty");
            let needed = (self.n_blocks as u64).saturating_mul(longest);
            if needed > self.orbit_budget {
                return field(
                    "n_blocks",
                    format!(
                        "n_blocks * max(m) = {needed} exceeds orbit_budget {}",
                        self.orbit_budget
                    ),
                );
            }
        }
        Ok(())
    }
}
