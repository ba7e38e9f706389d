mod table;

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::Serialize;

use obsnoise::evt::{block_maxima, fit_gev, FitOptions, ObservableError};
use obsnoise::experiments::{
    dimension_report, run_experiment, ExperimentConfig, ExperimentKind, ExperimentOutput,
};
use obsnoise::measure::DEFAULT_PLATEAU_THRESHOLD;
use obsnoise::{Executor, MapKind};

#[derive(Parser)]
#[command(name = "obsnoise", version, about = "Extreme value laws of noisy chaotic observations")]
struct Cli {
    /// Worker threads; defaults to the available parallelism.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Overrides the base seed of the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment from a TOML config or a previous manifest.json.
    Run { config: PathBuf },
    /// Fit a GEV law to block maxima of one CSV column.
    Fit {
        csv: PathBuf,
        #[arg(long)]
        column: String,
        #[arg(long)]
        m: usize,
        /// Treat the column as raw values and observe `-ln |x - target|`.
        #[arg(long, allow_hyphen_values = true)]
        target: Option<f64>,
    },
    /// Re-run the dimension regression on an existing rows.csv.
    Dimension {
        rows: PathBuf,
        #[arg(long, default_value_t = DEFAULT_PLATEAU_THRESHOLD)]
        plateau_threshold: f64,
    },
    /// Print the catalog map names.
    ListMaps,
    /// Check a config without running it.
    Validate { config: PathBuf },
}

/// A failure and the exit code it maps to.
enum Failure {
    Config(String),
    Runtime(String),
}

impl Failure {
    fn runtime(e: impl std::fmt::Display) -> Self {
        Failure::Runtime(e.to_string())
    }
}

#[derive(Serialize, serde::Deserialize)]
struct Manifest {
    config: String,
    version: String,
    seed: u64,
    wall_time_seconds: f64,
}

#[derive(Serialize)]
struct Summary<'a> {
    experiment: ExperimentKind,
    map: MapKind,
    version: &'static str,
    seed: u64,
    cells: &'a [obsnoise::experiments::SummaryRow],
    dimension: &'a [obsnoise::experiments::DimensionReport],
    survival: &'a [obsnoise::experiments::SurvivalRow],
    warnings: &'a [String],
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::ListMaps => {
            for kind in MapKind::ALL {
                println!("{kind}");
            }
            Ok(())
        }
        Command::Validate { config } => {
            let (cfg, _) = load_config(config, cli.seed)?;
            println!("{}: ok ({} experiment on {})", config.display(), cfg.experiment.name(), cfg.map);
            Ok(())
        }
        Command::Run { config } => run(cli, config),
        Command::Fit {
            csv,
            column,
            m,
            target,
        } => fit(csv, column, *m, *target),
        Command::Dimension {
            rows,
            plateau_threshold,
        } => dimension(rows, *plateau_threshold),
    }
}

/// Reads a TOML config, or the config echoed in a manifest. Returns the
/// parsed config with any seed override applied and the verbatim text.
fn load_config(path: &Path, seed: Option<u64>) -> Result<(ExperimentConfig, String), Failure> {
    let raw = fs::read_to_string(path)
        .map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
    let (text, manifest_seed) = match serde_json::from_str::<Manifest>(&raw) {
        Ok(m) => (m.config, Some(m.seed)),
        Err(_) => (raw, None),
    };
    let mut cfg = ExperimentConfig::from_toml(&text).map_err(|e| Failure::Config(e.to_string()))?;
    if let Some(s) = seed.or(manifest_seed) {
        cfg.seed = s;
    }
    Ok((cfg, text))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value).map_err(Failure::runtime)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))
}

fn run(cli: &Cli, config: &Path) -> Result<(), Failure> {
    let (cfg, text) = load_config(config, cli.seed)?;
    let out_dir = cli
        .out
        .clone()
        .or_else(|| cfg.out.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("obsnoise-out"));
    let executor = cli.threads.map(Executor::with_threads).unwrap_or_default();

    let start = Instant::now();
    let output = run_experiment(&cfg, &executor).map_err(|e| match e {
        obsnoise::experiments::ExperimentError::Config(c) => Failure::Config(c.to_string()),
        other => Failure::runtime(other),
    })?;
    let wall = start.elapsed().as_secs_f64();

    fs::create_dir_all(&out_dir)
        .map_err(|e| Failure::Runtime(format!("{}: {e}", out_dir.display())))?;
    table::write_rows(create(&out_dir.join("rows.csv"))?, &output.rows).map_err(Failure::runtime)?;
    if cfg.experiment == ExperimentKind::HittingTime {
        table::write_survival(create(&out_dir.join("survival.csv"))?, &output.survival)
            .map_err(Failure::runtime)?;
    }
    write_json(&out_dir.join("summary.json"), &summary(&output, cfg.seed))?;
    write_json(
        &out_dir.join("manifest.json"),
        &Manifest {
            config: text,
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: cfg.seed,
            wall_time_seconds: wall,
        },
    )?;

    for w in &output.warnings {
        eprintln!("warning: {w}");
    }
    println!(
        "{} on {}: {} rows, {} cells, {} survival points -> {}",
        cfg.experiment.name(),
        cfg.map,
        output.rows.len(),
        output.summary.len(),
        output.survival.len(),
        out_dir.display()
    );
    Ok(())
}

fn summary(output: &ExperimentOutput, seed: u64) -> Summary<'_> {
    Summary {
        experiment: output.experiment,
        map: output.map,
        version: env!("CARGO_PKG_VERSION"),
        seed,
        cells: &output.summary,
        dimension: &output.dimension,
        survival: &output.survival,
        warnings: &output.warnings,
    }
}

#[derive(Serialize)]
struct FitReport {
    kappa: f64,
    mu: f64,
    sigma: f64,
    t3: f64,
    n_blocks: usize,
    m: usize,
}

fn fit(csv_path: &Path, column: &str, m: usize, target: Option<f64>) -> Result<(), Failure> {
    let file = File::open(csv_path)
        .map_err(|e| Failure::Config(format!("cannot read {}: {e}", csv_path.display())))?;
    let mut reader = csv::Reader::from_reader(file);
    let headers = reader.headers().map_err(Failure::runtime)?.clone();
    let index = headers
        .iter()
        .position(|h| h == column)
        .ok_or_else(|| Failure::Config(format!("no column named '{column}'")))?;
    let mut series = Vec::new();
    for record in reader.records() {
        let record = record.map_err(Failure::runtime)?;
        let field = record.get(index).unwrap_or("").trim();
        let x: f64 = field
            .parse()
            .map_err(|_| Failure::Runtime(format!("cannot parse '{field}' as a number")))?;
        series.push(match target {
            Some(z) => -(x - z).abs().ln(),
            None => x,
        });
    }
    let maxima = block_maxima(&series, m).map_err(|e: ObservableError| Failure::runtime(e))?;
    let g = fit_gev(&maxima, &FitOptions::default()).map_err(Failure::runtime)?;
    let report = FitReport {
        kappa: g.kappa,
        mu: g.mu,
        sigma: g.sigma,
        t3: g.t3,
        n_blocks: maxima.len(),
        m,
    };
    println!("{}", serde_json::to_string_pretty(&report).map_err(Failure::runtime)?);
    Ok(())
}

fn dimension(path: &Path, threshold: f64) -> Result<(), Failure> {
    let file = File::open(path)
        .map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
    let rows = table::read_rows(file).map_err(Failure::Runtime)?;
    let first = rows
        .first()
        .ok_or_else(|| Failure::Runtime("no rows".into()))?;
    let dim = first.map.ambient_dim();
    let mut p_list: Vec<f64> = rows.iter().filter_map(|r| r.p).collect();
    p_list.sort_by(f64::total_cmp);
    p_list.dedup();
    let mut m_list: Vec<u64> = rows.iter().map(|r| r.m).collect();
    m_list.sort_unstable();
    m_list.dedup();
    let reports: Vec<_> = m_list
        .iter()
        .map(|&m| dimension_report(&rows, &p_list, m, dim, threshold))
        .collect();
    println!("{}", serde_json::to_string_pretty(&reports).map_err(Failure::runtime)?);
    if reports.iter().all(|r| r.estimate.is_none()) {
        return Err(Failure::Runtime("no block length supports a dimension fit".into()));
    }
    Ok(())
}
