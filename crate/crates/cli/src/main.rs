//! `bathdiff`: fermion vs spin bath dynamics from the command line.

mod config;
mod output;
mod plot;
mod validate;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use bathdiff_core::corr4::{corr4_bruteforce, corr4_closed, CorrQuery};
use bathdiff_core::experiments::{heatmap_sweep, run_scenario, HeatmapConfig};
use bathdiff_core::me2::BathOccupation;
use bathdiff_core::Statistics;
use clap::{Parser, Subcommand};
use serde::Serialize;

use config::{Config, MAX_DIM_ENV};
use output::{OutputDir, RunManifest};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Core(bathdiff_core::Error),
    Io(String),
    ValidationFailed(usize),
}

impl CliError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) | CliError::Core(bathdiff_core::Error::Argument(_)) => 2,
            CliError::Core(bathdiff_core::Error::Capacity { .. }) => 3,
            CliError::Core(bathdiff_core::Error::Numerical(_)) | CliError::ValidationFailed(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "config error: {msg}"),
            CliError::Core(e) => e.fmt(f),
            CliError::Io(msg) => write!(f, "io error: {msg}"),
            CliError::ValidationFailed(n) => write!(f, "{n} validation check(s) failed"),
        }
    }
}

impl From<bathdiff_core::Error> for CliError {
    fn from(e: bathdiff_core::Error) -> Self {
        CliError::Core(e)
    }
}

#[derive(Parser)]
#[command(
    name = "bathdiff",
    version,
    about = "Fermion vs spin bath dynamics of a resonant level"
)]
struct Cli {
    /// TOML config with [scenario], [heatmap] and [limits] sections.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,

    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Skip SVG plots.
    #[arg(long, global = true)]
    no_plot: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fermion, spin and ME2 system population for the [scenario] section.
    Dynamics,
    /// Fermion-spin discrepancy over the (N_E, n_exc) plane.
    Heatmap,
    /// Four-point bath correlator <O1† O2 O3† O4>, closed form vs dense trace.
    Corr4 {
        statistics: Statistics,
        k1: usize,
        k2: usize,
        k3: usize,
        k4: usize,
        /// Occupation of each bath mode, comma separated.
        #[arg(
            long,
            value_delimiter = ',',
            required = true,
            allow_negative_numbers = true
        )]
        f: Vec<f64>,
    },
    /// Run the built-in invariant checks.
    Validate,
}

fn load_config(path: Option<&Path>) -> Result<Config, CliError> {
    match path {
        Some(p) => Config::load(p),
        None => Ok(Config::default()),
    }
}

fn env_max_dim() -> Option<String> {
    std::env::var(MAX_DIM_ENV).ok()
}

#[derive(Serialize)]
struct HeatmapDiagnostics<'a> {
    cells: usize,
    failures: &'a [bathdiff_core::experiments::CellFailure],
}

fn cmd_dynamics(cli: &Cli) -> Result<(), CliError> {
    let cfg = load_config(cli.config.as_deref())?;
    let options = cfg.run_options(env_max_dim().as_deref())?;
    let scenario = cfg.scenario.clone().ok_or_else(|| {
        CliError::Config("dynamics needs a [scenario] section (pass --config)".into())
    })?;
    scenario.validate()?;
    let start = Instant::now();
    let result = run_scenario(&scenario, &options)?;

    let mut out = OutputDir::create(&cli.out)?;
    out.write("dynamics.csv", &output::dynamics_csv(&result))?;
    if !cli.no_plot {
        let t: Vec<f64> = result.fermion.grid.times().collect();
        let mut series: Vec<(&str, &[f64])> = vec![
            ("fermion", &result.fermion.values),
            ("spin", &result.spin.values),
        ];
        if let Some(me2) = &result.me2 {
            series.push(("ME2", &me2.values));
        }
        let title = format!(
            "system population, N_E={} n_exc={}",
            scenario.n_bath, scenario.n_exc
        );
        out.write("dynamics.svg", &plot::line_plot(&title, &t, &series))?;
    }
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command: "dynamics",
        config: &cfg,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
        outputs: out.written().to_vec(),
        diagnostics: &result.diagnostics,
    };
    let path = out.write_manifest(&manifest)?;
    println!(
        "dim {} ({}), {} samples, max norm drift {:.2e}; wrote {}",
        result.diagnostics.sector_dim,
        result.diagnostics.method,
        result.fermion.values.len(),
        result.diagnostics.max_norm_drift(),
        path.display()
    );
    Ok(())
}

fn cmd_heatmap(cli: &Cli) -> Result<(), CliError> {
    let cfg = load_config(cli.config.as_deref())?;
    let options = cfg.run_options(env_max_dim().as_deref())?;
    let sweep: HeatmapConfig = cfg.heatmap.clone().unwrap_or_default();
    let start = Instant::now();
    let result = heatmap_sweep(&sweep, &options)?;

    let mut out = OutputDir::create(&cli.out)?;
    out.write("heatmap.csv", &output::heatmap_csv(&result, sweep.me2))?;
    if !cli.no_plot {
        out.write(
            "heatmap.svg",
            &plot::heatmap_plot("max |n_fermion - n_spin|", &result),
        )?;
    }
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command: "heatmap",
        config: serde_json::json!({ "heatmap": &sweep, "limits": &cfg.limits }),
        wall_clock_seconds: start.elapsed().as_secs_f64(),
        outputs: out.written().to_vec(),
        diagnostics: HeatmapDiagnostics {
            cells: result.rows.len() + result.failures.len(),
            failures: &result.failures,
        },
    };
    let path = out.write_manifest(&manifest)?;
    for f in &result.failures {
        eprintln!(
            "cell N_E={} n_exc={} failed: {}",
            f.n_bath, f.n_exc, f.error
        );
    }
    println!(
        "{} cells, {} failed; wrote {}",
        result.rows.len() + result.failures.len(),
        result.failures.len(),
        path.display()
    );
    Ok(())
}

fn cmd_corr4(statistics: Statistics, indices: [usize; 4], f: &[f64]) -> Result<(), CliError> {
    let q = CorrQuery::new(indices, statistics, BathOccupation::explicit(f.to_vec())?)?;
    let closed = corr4_closed(&q)?;
    let oracle = corr4_bruteforce(&q)?;
    println!("closed_form {}", output::fmt_float(closed.re));
    println!("oracle      {}", output::fmt_float(oracle.re));
    println!(
        "abs_diff    {}",
        output::fmt_float((closed - oracle).norm())
    );
    Ok(())
}

fn cmd_validate() -> Result<(), CliError> {
    let outcomes = validate::run_suite();
    print!("{}", validate::render(&outcomes));
    match outcomes.iter().filter(|o| !o.passed).count() {
        0 => Ok(()),
        n => Err(CliError::ValidationFailed(n)),
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    match &cli.command {
        Command::Dynamics => cmd_dynamics(cli),
        Command::Heatmap => cmd_heatmap(cli),
        Command::Corr4 {
            statistics,
            k1,
            k2,
            k3,
            k4,
            f,
        } => cmd_corr4(*statistics, [*k1, *k2, *k3, *k4], f),
        Command::Validate => cmd_validate(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("bathdiff: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
