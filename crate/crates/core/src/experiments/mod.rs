//! Seeded experiment drivers and their result tables.

mod config;
mod hitting;

use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::dynamics::{sample_initial_condition, DynamicsError, MapKind, MapSystem, Point};
use crate::evt::{fit_gev, theoretical_scaling, FitOptions, GevFit};
use crate::exec::Executor;
use crate::measure::{estimate_dimension, local_measure, DimensionEstimate, LocalMeasureModel};
use crate::perturbation::{
    NoiseSpec, RandomStreamPolicy, StreamKey, StreamRole, TruncationSpec,
};
use crate::pipeline::noisy_block_maxima;

pub use config::{ExperimentConfig, ExperimentKind, MeasureChoice, TargetSpec, ZSelector};
pub use hitting::{
    check_maxima_hitting_identity, run_hitting_time_experiment, IdentityReport, SurvivalRow,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("cannot parse config: {0}")]
    Parse(String),
    #[error("invalid `{field}`: {message}")]
    Field {
        field: &'static str,
        message: String,
    },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

/// One fitted realization of one cell.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResultRow {
    pub experiment: ExperimentKind,
    pub map: MapKind,
    pub z: String,
    pub p: Option<f64>,
    pub q: Option<u32>,
    pub m: u64,
    pub realization: u64,
    pub kappa: Option<f64>,
    pub mu: Option<f64>,
    pub sigma: Option<f64>,
    pub converged: bool,
    pub bm_theory: Option<f64>,
    pub seed: u64,
}

impl ResultRow {
    fn set_fit(&mut self, fit: Option<GevFit>) {
        self.converged = fit.is_some();
        self.kappa = fit.map(|f| f.kappa);
        self.mu = fit.map(|f| f.mu);
        self.sigma = fit.map(|f| f.sigma);
    }
}

/// Mean and sample standard deviation. The deviation of a single value is 0.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
}

pub fn mean_std(values: &[f64]) -> Option<Stat> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() < 2 {
        0.0
    } else {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    Some(Stat { mean, std })
}

/// Statistics of one cell over its realizations.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SummaryRow {
    pub experiment: ExperimentKind,
    pub map: MapKind,
    pub z: String,
    pub p: Option<f64>,
    pub q: Option<u32>,
    pub m: u64,
    pub count: usize,
    pub converged: usize,
    pub failure_fraction: f64,
    pub kappa: Option<Stat>,
    pub mu: Option<Stat>,
    pub sigma: Option<Stat>,
    pub bm_theory: Option<f64>,
}

/// Groups rows by cell, in order of first appearance.
pub fn aggregate(rows: &[ResultRow]) -> Vec<SummaryRow> {
    let mut groups: Vec<(usize, Vec<&ResultRow>)> = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        let same = |o: &ResultRow| {
            o.experiment == row.experiment
                && o.map == row.map
                && o.z == row.z
                && o.p.map(f64::to_bits) == row.p.map(f64::to_bits)
                && o.q == row.q
                && o.m == row.m
        };
        match groups.iter_mut().find(|(first, _)| same(&rows[*first])) {
            Some((_, members)) => members.push(row),
            None => groups.push((i, vec![row])),
        }
    }
    groups
        .into_iter()
        .map(|(first, members)| {
            let head = &rows[first];
            let collect = |f: fn(&ResultRow) -> Option<f64>| -> Vec<f64> {
                members.iter().filter_map(|r| f(r)).collect()
            };
            let converged = members.iter().filter(|r| r.converged).count();
            let theory = collect(|r| r.bm_theory);
            SummaryRow {
                experiment: head.experiment,
                map: head.map,
                z: head.z.clone(),
                p: head.p,
                q: head.q,
                m: head.m,
                count: members.len(),
                converged,
                failure_fraction: (members.len() - converged) as f64 / members.len() as f64,
                kappa: mean_std(&collect(|r| r.kappa)),
                mu: mean_std(&collect(|r| r.mu)),
                sigma: mean_std(&collect(|r| r.sigma)),
                bm_theory: mean_std(&theory).map(|s| s.mean),
            }
        })
        .collect()
}

/// Regression of mean `b_m` against `p` at one block length.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DimensionReport {
    pub m: u64,
    /// `(p, mean fitted location)` over all realizations and targets.
    pub points: Vec<(f64, f64)>,
    pub estimate: Option<DimensionEstimate>,
    pub reference_dimension: Option<f64>,
    pub warning: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentOutput {
    pub experiment: ExperimentKind,
    pub map: MapKind,
    pub rows: Vec<ResultRow>,
    pub summary: Vec<SummaryRow>,
    pub dimension: Vec<DimensionReport>,
    pub survival: Vec<SurvivalRow>,
    pub warnings: Vec<String>,
}

/// Runs the experiment named in `config`.
pub fn run_experiment(
    config: &ExperimentConfig,
    executor: &Executor,
) -> Result<ExperimentOutput, ExperimentError> {
    config.validate()?;
    match config.experiment {
        ExperimentKind::Truncation => run_truncation_experiment(config, executor),
        ExperimentKind::BmConvergence => run_bm_convergence_experiment(config, executor),
        ExperimentKind::Dimension => run_dimension_experiment(config, executor),
        ExperimentKind::HittingTime => run_hitting_time_experiment(config, executor),
    }
}

/// A target after expanding `attractor_random` into `z_count` draws.
#[derive(Clone, Debug, PartialEq)]
pub(crate) enum Target {
    Fixed(Point),
    /// Drawn per realization from the stream keyed by this index.
    Random(u64),
}

impl Target {
    pub(crate) fn label(&self, dim: usize) -> String {
        match self {
            Target::Fixed(p) if dim == 1 => format!("{}", p.x()),
            Target::Fixed(p) => format!("{} {}", p.x(), p.y()),
            Target::Random(k) => format!("attractor_random[{k}]"),
        }
    }

    pub(crate) fn resolve(
        &self,
        map: &MapSystem,
        policy: &RandomStreamPolicy,
        realization: u64,
        burn_in: usize,
    ) -> Result<Point, DynamicsError> {
        match self {
            Target::Fixed(p) => Ok(*p),
            Target::Random(k) => {
                let mut rng = policy.stream(StreamKey::new(*k, realization, StreamRole::Target));
                sample_initial_condition(map, &mut rng, burn_in)
            }
        }
    }
}

pub(crate) fn expand_targets(config: &ExperimentConfig) -> Result<Vec<Target>, ConfigError> {
    let mut out = Vec::new();
    let mut draws = 0u64;
    for spec in &config.z {
        match spec {
            TargetSpec::Scalar(x) => out.push(Target::Fixed(Point::scalar(*x))),
            TargetSpec::Planar([x, y]) => out.push(Target::Fixed(Point::planar(*x, *y))),
            TargetSpec::Selector(sel) => match config.named_target(*sel)? {
                Some(p) => out.push(Target::Fixed(p)),
                None => {
                    for _ in 0..config.z_count {
                        out.push(Target::Random(draws));
                        draws += 1;
                    }
                }
            },
        }
    }
    Ok(out)
}

/// The cell's varying parameter.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) enum Level {
    Noise(f64),
    Digits(u32),
}

impl Level {
    fn bits(&self) -> u64 {
        match self {
            Level::Noise(p) => p.to_bits(),
            Level::Digits(q) => (1 << 63) | u64::from(*q),
        }
    }
}

/// Stable identifier of a cell, independent of its position in the config.
pub(crate) fn cell_id(target: &Target, level: Level, m: u64) -> u64 {
    let mut h = Sha256::new();
    h.update(b"obsnoise/cell/v1");
    match target {
        Target::Fixed(p) => {
            h.update([0u8]);
            h.update(p.x().to_le_bytes());
            h.update(p.y().to_le_bytes());
        }
        Target::Random(k) => {
            h.update([1u8]);
            h.update(k.to_le_bytes());
        }
    }
    h.update(level.bits().to_le_bytes());
    h.update(m.to_le_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

struct Cell {
    target: Target,
    level: Level,
    m: u64,
    id: u64,
}

struct BlockContext<'a> {
    config: &'a ExperimentConfig,
    map: MapSystem,
    policy: RandomStreamPolicy,
    fit: FitOptions,
    measure: LocalMeasureModel,
    burn_in: usize,
}

fn cells(config: &ExperimentConfig) -> Result<Vec<Cell>, ConfigError> {
    let levels: Vec<Level> = if config.experiment == ExperimentKind::Truncation {
        config.q.iter().map(|&q| Level::Digits(q)).collect()
    } else {
        config.p.iter().map(|&p| Level::Noise(p)).collect()
    };
    let mut out = Vec::new();
    for target in expand_targets(config)? {
        for &level in &levels {
            for &m in &config.m {
                out.push(Cell {
                    id: cell_id(&target, level, m),
                    target: target.clone(),
                    level,
                    m,
                });
            }
        }
    }
    Ok(out)
}

fn level_specs(level: Level) -> (NoiseSpec, TruncationSpec) {
    match level {
        Level::Noise(p) => (
            NoiseSpec::from_exponent(p).expect("exponents are validated finite"),
            TruncationSpec::NONE,
        ),
        Level::Digits(q) => (
            NoiseSpec::NONE,
            TruncationSpec::digits(q).expect("digits are validated"),
        ),
    }
}

fn block_maxima_row(
    ctx: &BlockContext<'_>,
    cell: &Cell,
    realization: u64,
) -> Result<ResultRow, ExperimentError> {
    let map = &ctx.map;
    let dim = map.ambient_dim();
    let (noise, truncation) = level_specs(cell.level);
    let key = |role| StreamKey::new(cell.id, realization, role);

    let mut z = cell
        .target
        .resolve(map, &ctx.policy, realization, ctx.burn_in)?;
    if truncation.get().is_some() {
        // The target is a value the instrument can actually report.
        for c in z.0.iter_mut().take(dim) {
            *c = truncation.apply(*c);
        }
    }

    let mut ic_rng = ctx.policy.stream(key(StreamRole::InitialCondition));
    let x0 = sample_initial_condition(map, &mut ic_rng, ctx.burn_in)?;
    let branch = map
        .is_random()
        .then(|| ctx.policy.stream(key(StreamRole::Branch)));
    let mut noise_rng = ctx.policy.stream(key(StreamRole::Noise));
    let mut orbit = map.orbit(x0, branch);
    let maxima = noisy_block_maxima(
        &mut orbit,
        &z,
        &noise,
        &truncation,
        dim,
        cell.m as usize,
        ctx.config.n_blocks,
        &mut noise_rng,
    )?;

    let bm_theory = match (ctx.config.experiment, cell.level) {
        (ExperimentKind::BmConvergence, Level::Noise(_)) => {
            local_measure(&ctx.measure, &z, noise.epsilon(), map)
                .ok()
                .and_then(|nu| theoretical_scaling(cell.m, noise.epsilon(), nu.value, dim).ok())
                .map(|s| s.b_m)
        }
        _ => None,
    };
    let (p, q) = match cell.level {
        Level::Noise(p) => (Some(p), None),
        Level::Digits(q) => (None, Some(q)),
    };
    let mut row = ResultRow {
        experiment: ctx.config.experiment,
        map: map.kind(),
        z: cell.target.label(dim),
        p,
        q,
        m: cell.m,
        realization,
        kappa: None,
        mu: None,
        sigma: None,
        converged: false,
        bm_theory,
        seed: ctx.policy.seed_u64(key(StreamRole::InitialCondition)),
    };
    row.set_fit(fit_gev(&maxima, &ctx.fit).ok());
    Ok(row)
}

fn run_block_maxima(
    config: &ExperimentConfig,
    executor: &Executor,
) -> Result<Vec<ResultRow>, ExperimentError> {
    config.validate()?;
    let map = config.map_system()?;
    let ctx = BlockContext {
        config,
        measure: config.measure_model(&map),
        burn_in: config.burn_in(&map),
        fit: config.fit_options(),
        policy: RandomStreamPolicy::new(config.seed),
        map,
    };
    let cells = cells(config)?;
    let jobs: Vec<(usize, u64)> = (0..cells.len())
        .flat_map(|c| (0..config.realizations as u64).map(move |r| (c, r)))
        .collect();
    executor
        .map(jobs, |(c, r)| block_maxima_row(&ctx, &cells[c], r))
        .into_iter()
        .collect()
}

fn output(
    config: &ExperimentConfig,
    rows: Vec<ResultRow>,
    dimension: Vec<DimensionReport>,
) -> ExperimentOutput {
    let warnings = dimension
        .iter()
        .filter_map(|d| d.warning.clone())
        .collect();
    ExperimentOutput {
        experiment: config.experiment,
        map: config.map,
        summary: aggregate(&rows),
        rows,
        dimension,
        survival: Vec::new(),
        warnings,
    }
}

/// Noise-free runs with the observations truncated to `q` digits.
pub fn run_truncation_experiment(
    config: &ExperimentConfig,
    executor: &Executor,
) -> Result<ExperimentOutput, ExperimentError> {
    expect_kind(config, ExperimentKind::Truncation)?;
    let rows = run_block_maxima(config, executor)?;
    Ok(output(config, rows, Vec::new()))
}

/// Noisy runs whose fitted location is compared with the predicted `b_m`.
pub fn run_bm_convergence_experiment(
    config: &ExperimentConfig,
    executor: &Executor,
) -> Result<ExperimentOutput, ExperimentError> {
    expect_kind(config, ExperimentKind::BmConvergence)?;
    let rows = run_block_maxima(config, executor)?;
    Ok(output(config, rows, Vec::new()))
}

/// Noise scans whose `b_m`-versus-`p` slope gives the local dimension.
pub fn run_dimension_experiment(
    config: &ExperimentConfig,
    executor: &Executor,
) -> Result<ExperimentOutput, ExperimentError> {
    expect_kind(config, ExperimentKind::Dimension)?;
    let rows = run_block_maxima(config, executor)?;
    let dim = config.map.ambient_dim();
    let dimension = config
        .m
        .iter()
        .map(|&m| {
            let mut report = dimension_report(&rows, &config.p, m, dim, config.plateau_threshold);
            report.reference_dimension = config.reference_dimension;
            report
        })
        .collect();
    Ok(output(config, rows, dimension))
}

/// Mean fitted location per `p` at block length `m`, then the dimension fit.
pub fn dimension_report(
    rows: &[ResultRow],
    p_list: &[f64],
    m: u64,
    dim: usize,
    plateau_threshold: f64,
) -> DimensionReport {
    let mut points = Vec::new();
    let mut missing = Vec::new();
    for &p in p_list {
        let mus: Vec<f64> = rows
            .iter()
            .filter(|r| r.m == m && r.p.map(f64::to_bits) == Some(p.to_bits()))
            .filter_map(|r| r.mu)
            .collect();
        match mean_std(&mus) {
            Some(s) => points.push((p, s.mean)),
            None => missing.push(p),
        }
    }
    let (estimate, mut warning) = match estimate_dimension(&points, m, dim, plateau_threshold) {
        Ok(e) => (Some(e), None),
        Err(e) => (None, Some(format!("m = {m}: {e}"))),
    };
    if !missing.is_empty() {
        let note = format!("m = {m}: no converged fit at p = {missing:?}");
        warning = Some(match warning {
            Some(w) => format!("{w}; {note}"),
            None => note,
        });
    }
    DimensionReport {
        m,
        points,
        estimate,
        reference_dimension: None,
        warning,
    }
}

fn expect_kind(config: &ExperimentConfig, kind: ExperimentKind) -> Result<(), ConfigError> {
    if config.experiment == kind {
        Ok(())
    } else {
        Err(ConfigError::Field {
            field: "experiment",
            message: format!(
                "expected {}, found {}",
                kind.name(),
                config.experiment.name()
            ),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn row(kappa: Option<f64>) -> ResultRow {
        ResultRow {
            experiment: ExperimentKind::Truncation,
            map: MapKind::TernaryShift,
            z: "0.5".into(),
            p: None,
            q: Some(7),
            m: 100,
            realization: 0,
            kappa,
            mu: kappa,
            sigma: kappa.map(|_| 1.0),
            converged: kappa.is_some(),
            bm_theory: None,
            seed: 0,
        }
    }

    #[test]
    fn aggregate_single_row() {
        let s = aggregate(&[row(Some(0.3))]);
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].count, 1);
        assert_eq!(s[0].kappa, Some(Stat { mean: 0.3, std: 0.0 }));
    }

    #[test]
    fn aggregate_pair() {
        let s = aggregate(&[row(Some(0.1)), row(Some(-0.1))]);
        let k = s[0].kappa.unwrap();
        assert_abs_diff_eq!(k.mean, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(k.std, 0.02f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn aggregate_failure_fraction() {
        let rows: Vec<ResultRow> = (0..30)
            .map(|i| row(if i % 10 == 0 { None } else { Some(0.0) }))
            .collect();
        let s = aggregate(&rows);
        assert_eq!(s[0].count, 30);
        assert_eq!(s[0].converged, 27);
        assert_abs_diff_eq!(s[0].failure_fraction, 0.1, epsilon = 1e-15);
    }

    #[test]
    fn aggregate_keeps_cells_apart() {
        let mut other = row(Some(1.0));
        other.m = 200;
        let s = aggregate(&[row(Some(0.0)), other, row(Some(0.5))]);
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].count, 2);
        assert_eq!(s[1].m, 200);
    }

    #[test]
    fn cell_ids_depend_on_every_coordinate() {
        let z = Target::Fixed(Point::scalar(0.5));
        let base = cell_id(&z, Level::Noise(2.0), 1000);
        assert_ne!(base, cell_id(&z, Level::Noise(3.0), 1000));
        assert_ne!(base, cell_id(&z, Level::Noise(2.0), 10_000));
        assert_ne!(base, cell_id(&Target::Random(0), Level::Noise(2.0), 1000));
        assert_ne!(cell_id(&z, Level::Digits(2), 1), cell_id(&z, Level::Noise(0.0), 1));
    }

    #[test]
    fn smoke_truncation_row_count() {
        let cfg = ExperimentConfig::from_toml(
            "experiment = \"truncation\"\nmap = \"ternary_shift\"\nq = [7]\nm = [100]\nrealizations = 2\n",
        )
        .unwrap();
        let out = run_experiment(&cfg, &Executor::sequential()).unwrap();
        assert_eq!(out.rows.len(), 2);
        assert_eq!(out.summary.len(), 1);
        assert!(out.rows.iter().all(|r| r.q == Some(7) && r.p.is_none()));
    }
}
