use obsnoise::experiments::{run_experiment, ExperimentConfig, ExperimentOutput};
use obsnoise::measure::linear_fit;
use obsnoise::Executor;

fn run_with(toml: &str, executor: &Executor) -> ExperimentOutput {
    let cfg = ExperimentConfig::from_toml(toml).unwrap();
    run_experiment(&cfg, executor).unwrap()
}

fn run(toml: &str) -> ExperimentOutput {
    run_with(toml, &Executor::sequential())
}

fn mean_mu(out: &ExperimentOutput, p: f64, m: u64) -> f64 {
    out.summary
        .iter()
        .find(|c| c.p == Some(p) && c.m == m)
        .and_then(|c| c.mu)
        .expect("cell with converged fits")
        .mean
}

#[test]
fn row_count_includes_failed_fits() {
    let out = run(
        "experiment = \"truncation\"\nmap = \"ternary_shift\"\nz = [\"attractor_random\"]\nz_count = 2\n\
         q = [2, 8]\nm = [50, 100, 200]\nn_blocks = 100\nrealizations = 3\n",
    );
    assert_eq!(out.rows.len(), 2 * 2 * 3 * 3);
    assert_eq!(out.summary.len(), 2 * 2 * 3);
    let coarse: Vec<_> = out.rows.iter().filter(|r| r.q == Some(2)).collect();
    assert!(coarse.iter().any(|r| !r.converged));
    for r in &out.rows {
        assert_eq!(r.converged, r.kappa.is_some());
        assert_eq!(r.converged, r.mu.is_some() && r.sigma.is_some());
    }
}

#[test]
fn output_does_not_depend_on_thread_count() {
    let configs = [
        "experiment = \"dimension\"\nmap = \"cantor_ifs\"\nz_count = 2\np = [1, 2, 3]\nm = [100]\nn_blocks = 100\nrealizations = 4\nseed = 9\n",
        "experiment = \"bm_convergence\"\nmap = \"lozi\"\np = [1]\nm = [50]\nn_blocks = 100\nrealizations = 4\nseed = 9\nempirical_n = 10000\n",
        "experiment = \"hitting_time\"\nmap = \"hemmer\"\nz = [0.2]\np = [1]\nm = [100]\nrealizations = 40\nseed = 9\n",
    ];
    for text in configs {
        let a = run_with(text, &Executor::sequential());
        let b = run_with(text, &Executor::with_threads(4));
        assert_eq!(a, b);
        assert_eq!(a, run_with(text, &Executor::sequential()));
    }
}

#[test]
fn seed_changes_results() {
    let text = "experiment = \"bm_convergence\"\nmap = \"ternary_shift\"\nz = [0.3]\np = [2]\nm = [100]\nn_blocks = 100\nrealizations = 2\n";
    let a = run(text);
    let b = run(&format!("{text}seed = 1\n"));
    assert_ne!(a.rows[0].mu, b.rows[0].mu);
}

#[test]
fn fitted_location_grows_like_log_m() {
    let out = run(
        "experiment = \"bm_convergence\"\nmap = \"ternary_shift\"\nz = [0.5]\np = [2]\n\
         m = [1000, 10000, 30000]\nrealizations = 3\nseed = 4\n",
    );
    let pts: Vec<(f64, f64)> = [1000u64, 10_000, 30_000]
        .iter()
        .map(|&m| ((m as f64).ln(), mean_mu(&out, 2.0, m)))
        .collect();
    let slope = linear_fit(&pts).unwrap().slope;
    assert!((slope - 1.0).abs() <= 0.15, "slope {slope}");
}

#[test]
fn hemmer_sporadic_point_converges_at_large_noise() {
    let out = run(
        "experiment = \"bm_convergence\"\nmap = \"hemmer\"\nz = [\"sporadic\"]\np = [1]\n\
         m = [1000, 10000]\nrealizations = 10\nseed = 5\n",
    );
    let err = |m: u64| {
        let c = out.summary.iter().find(|c| c.m == m).unwrap();
        (c.mu.unwrap().mean - c.bm_theory.unwrap()).abs()
    };
    // b_m rises by ln 10 over the m range.
    let trend = std::f64::consts::LN_10;
    assert!(err(10_000) < err(1000), "{} then {}", err(1000), err(10_000));
    assert!(err(10_000) < 0.1 * trend, "error {}", err(10_000));
}

#[test]
fn pm_location_slope_in_p_follows_alpha() {
    let alpha = 0.3;
    let out = run(&format!(
        "experiment = \"bm_convergence\"\nmap = \"pomeau_manneville\"\nalpha = {alpha}\n\
         z = [\"recurrent\"]\np = [1, 2, 3]\nm = [10000]\nrealizations = 10\nseed = 6\n"
    ));
    let pts: Vec<(f64, f64)> = [1.0, 2.0, 3.0]
        .iter()
        .map(|&p| (p, mean_mu(&out, p, 10_000)))
        .collect();
    let slope = linear_fit(&pts).unwrap().slope;
    let expected = alpha * std::f64::consts::LN_10;
    assert!(
        (slope - expected).abs() <= 0.2 * expected,
        "slope {slope} vs {expected}"
    );
}

#[test]
fn cantor_plateau_at_tiny_noise_is_discarded() {
    let out = run(
        "experiment = \"dimension\"\nmap = \"cantor_ifs\"\np = [1, 2, 3, 4, 5, 6, 7, 8]\n\
         m = [1000]\nrealizations = 10\nseed = 7\n",
    );
    let report = &out.dimension[0];
    let est = report.estimate.as_ref().expect("dimension estimate");
    assert!(
        est.points_discarded.iter().any(|&(p, _)| p == 8.0),
        "kept {:?}",
        est.points_used
    );
    assert!(est.points_used.len() >= 3);
}

#[test]
fn survival_is_monotone_and_censoring_shrinks_with_radius() {
    let out = run(
        "experiment = \"hitting_time\"\nmap = \"ternary_shift\"\nz = [0.5]\np = [1]\nm = [1000]\n\
         t_grid = [4, 0.25, 1, 0.5, 2]\nmax_steps = 1500\nrealizations = 400\nseed = 8\n",
    );
    let s = &out.survival;
    assert_eq!(s.len(), 5);
    assert!(s.windows(2).all(|w| w[0].t < w[1].t));
    assert!(s.windows(2).all(|w| w[0].empirical >= w[1].empirical));
    assert!(s.windows(2).all(|w| w[0].censored >= w[1].censored));
    assert!(s[0].censored > 0);
}

#[test]
fn planar_hitting_times_are_rejected() {
    let err = ExperimentConfig::from_toml(
        "experiment = \"hitting_time\"\nmap = \"lozi\"\nz = [[0.1, 0.1]]\np = [1]\nm = [100]\n",
    )
    .unwrap_err();
    assert!(err.to_string().contains("map"));
}
