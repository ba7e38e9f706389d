use serde::Serialize;

use crate::dynamics::{sample_initial_condition, DynamicsError, MapSystem, Point, PointSource};
use crate::evt::BlockMaximaAccumulator;
use crate::exec::Executor;
use crate::measure::local_measure;
use crate::perturbation::{
    observe_point, NoiseSpec, RandomStreamPolicy, StreamKey, StreamRole, TruncationSpec,
};
use crate::recurrence::{
    hitting_radius, hitting_times_from, survival_curve, HitTarget, HittingOutcome,
    HittingTimeSample,
};

use super::{
    cell_id, expand_targets, expect_kind, ExperimentConfig, ExperimentError, ExperimentKind,
    ExperimentOutput, Level, Target,
};

/// One point of an empirical survival curve with its exponential prediction.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SurvivalRow {
    pub z: String,
    pub p: f64,
    pub m: u64,
    pub t: f64,
    pub radius: f64,
    pub empirical: f64,
    pub theoretical: Option<f64>,
    pub realizations: usize,
    pub censored: usize,
}

/// Survival of the rescaled hitting time for every `(z, p, m)` and `t`.
///
/// All radii of one realization are scanned along a single orbit, so the
/// curves are monotone in `t` realization by realization.
pub fn run_hitting_time_experiment(
    config: &ExperimentConfig,
    executor: &Executor,
) -> Result<ExperimentOutput, ExperimentError> {
    expect_kind(config, ExperimentKind::HittingTime)?;
    config.validate()?;
    let map = config.map_system()?;
    let policy = RandomStreamPolicy::new(config.seed);
    let burn_in = config.burn_in(&map);
    let model = config.measure_model(&map);
    let dim = map.ambient_dim();

    let mut cells = Vec::new();
    for target in expand_targets(config)? {
        let Target::Fixed(z) = target else {
            unreachable!("validation rejects random targets for hitting times")
        };
        for &p in &config.p {
            for &m in &config.m {
                cells.push((target.clone(), z, p, m));
            }
        }
    }

    let jobs: Vec<(usize, u64)> = (0..cells.len())
        .flat_map(|c| (0..config.realizations as u64).map(move |r| (c, r)))
        .collect();
    let outcomes = executor
        .map(jobs, |(c, r)| {
            let (target, z, p, m) = &cells[c];
            let noise = NoiseSpec::from_exponent(*p).expect("exponents are validated finite");
            let key = |role| StreamKey::new(cell_id(target, Level::Noise(*p), *m), r, role);
            let targets: Vec<HitTarget> = config
                .t_grid
                .iter()
                .map(|&t| HitTarget::Ball {
                    radius: hitting_radius(t, *m),
                })
                .collect();
            let mut ic = policy.stream(key(StreamRole::InitialCondition));
            let x0 = sample_initial_condition(&map, &mut ic, burn_in)?;
            let branch = map.is_random().then(|| policy.stream(key(StreamRole::Branch)));
            let mut noise_rng = policy.stream(key(StreamRole::Noise));
            hitting_times_from(
                &map,
                x0,
                branch,
                z,
                &targets,
                &noise,
                config.max_steps(*m),
                &mut noise_rng,
            )
        })
        .into_iter()
        .collect::<Result<Vec<_>, DynamicsError>>()?;

    let n = config.realizations;
    let mut survival = Vec::new();
    for (c, (target, z, p, m)) in cells.iter().enumerate() {
        let noise = NoiseSpec::from_exponent(*p).expect("exponents are validated finite");
        let eps = noise.epsilon();
        let nu = if dim == 1 {
            local_measure(&model, z, eps, &map).ok().map(|e| e.value)
        } else {
            None
        };
        let per_cell = &outcomes[c * n..(c + 1) * n];
        let samples: Vec<(f64, HittingTimeSample)> = config
            .t_grid
            .iter()
            .enumerate()
            .map(|(i, &t)| {
                let sample = HittingTimeSample::from_outcomes(
                    per_cell.iter().map(|o| o[i]),
                    config.max_steps(*m),
                    *z,
                    hitting_radius(t, *m),
                    eps,
                    nu,
                );
                (t, sample)
            })
            .collect();
        for point in survival_curve(&samples, *m) {
            survival.push(SurvivalRow {
                z: target.label(dim),
                p: *p,
                m: *m,
                t: point.t,
                radius: point.radius,
                empirical: point.empirical,
                theoretical: point.theoretical,
                realizations: point.realizations,
                censored: point.censored,
            });
        }
    }

    Ok(ExperimentOutput {
        experiment: config.experiment,
        map: config.map,
        rows: Vec::new(),
        summary: Vec::new(),
        dimension: Vec::new(),
        survival,
        warnings: Vec::new(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct IdentityReport {
    pub realizations: usize,
    /// Realizations where `{R > m}` and `{M_m <= level}` agree.
    pub agreements: usize,
    /// Realizations with `R <= m`.
    pub hits: usize,
}

impl IdentityReport {
    pub fn holds(&self) -> bool {
        self.agreements == self.realizations
    }
}

/// Computes, on shared random streams, both the first entrance time `R` into
/// `{-ln ||y - z|| > level}` and the maximum `M_m` of `-ln ||y - z||` over the
/// first `m` noisy observations, and counts the realizations where
/// `R > m` coincides with `M_m <= level`.
pub fn check_maxima_hitting_identity(
    map: &MapSystem,
    z: &Point,
    noise: &NoiseSpec,
    m: u64,
    level: f64,
    realizations: usize,
    policy: &RandomStreamPolicy,
) -> Result<IdentityReport, DynamicsError> {
    let cell = u64::MAX;
    let mut report = IdentityReport {
        realizations,
        agreements: 0,
        hits: 0,
    };
    for r in 0..realizations as u64 {
        let key = |role| StreamKey::new(cell, r, role);
        let mut ic = policy.stream(key(StreamRole::InitialCondition));
        let x0 = sample_initial_condition(map, &mut ic, map.default_burn_in())?;
        let branch = map.is_random().then(|| policy.stream(key(StreamRole::Branch)));

        let mut noise_rng = policy.stream(key(StreamRole::Noise));
        let hit = hitting_times_from(
            map,
            x0,
            branch.clone(),
            z,
            &[HitTarget::Exceedance { level }],
            noise,
            m,
            &mut noise_rng,
        )?[0];

        let mut noise_rng = policy.stream(key(StreamRole::Noise));
        let mut orbit = map.orbit(x0, branch);
        orbit.next_point()?;
        let mut acc = BlockMaximaAccumulator::new(m as usize, 1);
        for _ in 0..m {
            let x = orbit.next_point()?;
            let y = observe_point(x, noise, &TruncationSpec::NONE, map.ambient_dim(), &mut noise_rng);
            acc.push_distance(y.distance(z));
        }
        let maximum = acc.into_maxima()[0];

        let survived = hit == HittingOutcome::Censored;
        if !survived {
            report.hits += 1;
        }
        if survived == (maximum <= level) {
            report.agreements += 1;
        }
    }
    Ok(report)
}
