//! `caresim` command-line driver.
//!
//! Exit codes: 0 success, 2 configuration or validation error, 3 runtime error.

mod manifest;

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Mutex;

use anyhow::{anyhow, Context};
use caresim::analysis::analyze;
use caresim::config::LoadedConfig;
use caresim::engine::{write_day_records, RunOutput};
use caresim::exec::Execution;
use caresim::indicators::{walkability_grid, write_grid, GridSpec};
use caresim::population::{write_caregivers, write_dyads, write_patients, Population};
use caresim::scenarios::{
    apply_scenario, read_records, run_experiment_with, write_records, ExperimentError,
    ReplicateRecord,
};
use caresim::seed;
use clap::{Args, Parser, Subcommand};

use manifest::RunManifest;

#[derive(Debug, Parser)]
#[command(
    name = "caresim",
    version,
    about = "Elder-caregiver dyad simulation on road networks"
)]
struct Cli {
    /// Print progress to stderr.
    #[arg(long, short, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Synthesise one replicate's population and write patients, caregivers and dyads.
    Synth(SynthArgs),
    /// Run the paired scenario experiment and write replicates.csv.
    Experiment(ExperimentArgs),
    /// Analyse replicates.csv into summary.json.
    Analyze(AnalyzeArgs),
    /// Write the walkability raster of one scenario's network.
    ExportGrid(ExportGridArgs),
}

#[derive(Debug, Args)]
struct ConfigArgs {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's base seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Replicate whose population to synthesise.
    #[arg(long, default_value_t = 0)]
    replicate: u64,
    /// Sweep point whose population to synthesise.
    #[arg(long, default_value_t = 0)]
    sweep: u64,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Parallel experiment cells (0 = all cores).
    #[arg(long, env = "CARESIM_THREADS")]
    jobs: Option<usize>,
    /// Also write one per-day CSV per run under `<out>/days`.
    #[arg(long)]
    day_records: bool,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    /// replicates.csv written by `experiment`.
    #[arg(long, visible_alias = "input")]
    replicates: PathBuf,
    /// summary.json to write.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ExportGridArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Scenario name as given in the config.
    #[arg(long)]
    scenario: String,
    /// Grid CSV to write.
    #[arg(long)]
    out: PathBuf,
}

/// An error together with the process exit code it maps to.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

trait ExitContext<T> {
    fn config_err(self) -> Result<T, Failure>;
    fn runtime_err(self) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> ExitContext<T> for Result<T, E> {
    fn config_err(self) -> Result<T, Failure> {
        self.map_err(|e| Failure {
            code: 2,
            error: e.into(),
        })
    }

    fn runtime_err(self) -> Result<T, Failure> {
        self.map_err(|e| Failure {
            code: 3,
            error: e.into(),
        })
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let verbose = cli.verbose;
    let result = match cli.command {
        Command::Synth(a) => synth(a, verbose),
        Command::Experiment(a) => experiment(a, verbose),
        Command::Analyze(a) => analyze_cmd(a, verbose),
        Command::ExportGrid(a) => export_grid(a, verbose),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn load(args: &ConfigArgs) -> Result<LoadedConfig, Failure> {
    let loaded = LoadedConfig::load(&args.config)
        .with_context(|| format!("loading {}", args.config.display()))
        .config_err()?;
    Ok(match args.seed {
        Some(s) => loaded.with_seed(s),
        None => loaded,
    })
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)
            .with_context(|| format!("creating {}", dir.display()))
            .runtime_err()?;
    }
    File::create(path)
        .map(BufWriter::new)
        .with_context(|| format!("creating {}", path.display()))
        .runtime_err()
}

fn synth(args: SynthArgs, verbose: bool) -> Result<(), Failure> {
    let mut manifest = RunManifest::start("synth");
    let cfg = load(&args.config)?;
    let cell = seed::cell_seed(cfg.experiment.base_seed, args.replicate, args.sweep);
    let population = Population::build(
        &cfg.net,
        &cfg.marginals,
        &cfg.stages,
        cfg.experiment.population,
        &cfg.config.engine.population_params(),
        seed::derive(cell, &[seed::STREAM_POPULATION]),
    )
    .config_err()?;
    if verbose {
        eprintln!(
            "synthesised {} patients, {} caregivers",
            population.patients.len(),
            population.caregivers.len()
        );
    }
    let out = &args.out;
    write_patients(create(&out.join("patients.csv"))?, &population.patients).runtime_err()?;
    write_caregivers(create(&out.join("caregivers.csv"))?, &population.caregivers).runtime_err()?;
    write_dyads(create(&out.join("dyads.csv"))?, &population.dyads).runtime_err()?;
    manifest
        .record_inputs(&args.config.config, &cfg)
        .runtime_err()?;
    manifest.finish(&out.join("manifest.json")).runtime_err()
}

fn experiment(args: ExperimentArgs, verbose: bool) -> Result<(), Failure> {
    let mut manifest = RunManifest::start("experiment");
    let cfg = load(&args.config)?;
    let execution = Execution::from_jobs(args.jobs);
    if verbose {
        eprintln!(
            "running {} replicates x {} sweep points ({execution:?})",
            cfg.experiment.replicates,
            cfg.experiment.sweeps.points(&cfg.config.engine).len()
        );
    }

    let days: Mutex<Vec<(ReplicateRecord, Vec<u8>)>> = Mutex::new(Vec::new());
    let sink = |record: &ReplicateRecord, run: &RunOutput| {
        let mut buf = Vec::new();
        if write_day_records(&mut buf, &run.records).is_ok() {
            if let Ok(mut d) = days.lock() {
                d.push((record.clone(), buf));
            }
        }
    };
    let records = run_experiment_with(
        &cfg.inputs(),
        &cfg.experiment,
        execution,
        args.day_records.then_some(&sink as _),
    )
    .map_err(|e| match e {
        ExperimentError::Invalid(_) | ExperimentError::Scenario { .. } => Failure {
            code: 2,
            error: e.into(),
        },
        other => Failure {
            code: 3,
            error: other.into(),
        },
    })?;

    write_records(create(&args.out.join("replicates.csv"))?, &records).runtime_err()?;
    if args.day_records {
        let mut days = days
            .into_inner()
            .map_err(|_| anyhow!("day-record collector poisoned"))
            .runtime_err()?;
        days.sort_by_key(|(r, _)| r.key());
        for (r, bytes) in days {
            let name = format!("{}_r{}_p{}.csv", r.scenario, r.replicate, r.sweep);
            let path = args.out.join("days").join(name);
            std::fs::create_dir_all(args.out.join("days")).runtime_err()?;
            std::fs::write(&path, bytes)
                .with_context(|| format!("writing {}", path.display()))
                .runtime_err()?;
        }
    }
    if verbose {
        eprintln!("wrote {} records", records.len());
    }
    manifest
        .record_inputs(&args.config.config, &cfg)
        .runtime_err()?;
    manifest
        .finish(&args.out.join("manifest.json"))
        .runtime_err()
}

fn analyze_cmd(args: AnalyzeArgs, verbose: bool) -> Result<(), Failure> {
    let mut manifest = RunManifest::start("analyze");
    let file = File::open(&args.replicates)
        .with_context(|| format!("opening {}", args.replicates.display()))
        .config_err()?;
    let records = read_records(file)
        .with_context(|| format!("reading {}", args.replicates.display()))
        .config_err()?;
    let summary = analyze(&records).config_err()?;
    if verbose {
        eprintln!(
            "analysed {} records over {} sweep points",
            records.len(),
            summary.sweeps.len()
        );
    }
    let mut w = create(&args.out)?;
    serde_json::to_writer_pretty(&mut w, &summary).runtime_err()?;
    std::io::Write::write_all(&mut w, b"\n").runtime_err()?;
    drop(w);
    manifest.hash_input(&args.replicates).runtime_err()?;
    manifest.finish(&sidecar(&args.out)).runtime_err()
}

fn export_grid(args: ExportGridArgs, verbose: bool) -> Result<(), Failure> {
    let mut manifest = RunManifest::start("export-grid");
    let cfg = load(&args.config)?;
    let scenario = cfg
        .scenario(&args.scenario)
        .ok_or_else(|| {
            let known: Vec<&str> = cfg
                .experiment
                .scenarios
                .iter()
                .map(|s| s.name.as_str())
                .collect();
            anyhow!(
                "unknown scenario '{}' (known: {})",
                args.scenario,
                known.join(", ")
            )
        })
        .config_err()?;
    let net = apply_scenario(&cfg.net, scenario).config_err()?;
    let grid = GridSpec::covering(&net, cfg.config.grid.cell_size);
    let cells = walkability_grid(&net, &grid, &cfg.indicators).runtime_err()?;
    if verbose {
        eprintln!("computed {} cells", cells.len());
    }
    write_grid(create(&args.out)?, &cells).runtime_err()?;
    manifest
        .record_inputs(&args.config.config, &cfg)
        .runtime_err()?;
    manifest.finish(&sidecar(&args.out)).runtime_err()
}

/// `<out>.manifest.json` next to a single-file output.
fn sidecar(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    out.with_file_name(name)
}
