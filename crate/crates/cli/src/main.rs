mod bundle;
mod report;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use dcgrb::config::ConfigFile;
use dcgrb::engine::{run_experiment, run_experiment_with_workers, sequences_for, ExperimentConfig};
use dcgrb::filterfn::{
    dc_response, effective_error_spectrum, filter_transfer, flatness, log_grid, low_frequency_slope, one_over_f,
};
use dcgrb::noise::{gradient_profile, sample_register_trace, write_trace_csv, SequenceTiming, TraceKey};
use dcgrb::pulses::{schedule_table, Family};
use dcgrb::rotations::{clifford_table, CliffordIndex};
use dcgrb::theory::{
    concurrent_detuning_variance, correlation_length, error_autocorrelation, expected_step_moments, gamma_params,
    moments, predict, Bandwidth, ErrorStrengths, NoiseProcess, Regime,
};
use serde::de::DeserializeOwned;
use serde_json::json;

use crate::bundle::{sha256_hex, write_json, write_run, Manifest, RunRecord, MANIFEST, SCHEMA_VERSION};

/// Errors that select a specific exit status.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{0} invariant check(s) failed")]
    Invariant(usize),
}

#[derive(Parser)]
#[command(name = "dcgrb", version, about = "Randomized-benchmarking simulations with correlated noise and composite pulses")]
struct Cli {
    /// Experiment file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the seed of every run in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for simulation (defaults to all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory, or output file for single-artifact commands.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Refuse runs whose k·J·n·q exceeds this.
    #[arg(long, global = true)]
    budget_cells: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the Clifford table with its decompositions and durations.
    Cliffords,
    /// Print the compiled pulse schedule of one Clifford.
    Schedule {
        #[arg(long, value_parser = parse_enum::<Family>)]
        family: Family,
        #[arg(long)]
        clifford: u8,
    },
    /// Run every experiment in the config and write a data bundle.
    Simulate {
        /// Only run the entry with this label.
        #[arg(long)]
        run: Option<String>,
    },
    /// Analyze a bundle written by `simulate`.
    Analyze,
    /// Simulate and analyze in one go.
    Report {
        #[arg(long)]
        run: Option<String>,
    },
    /// Closed-form predictions for the survival statistics.
    Predict {
        #[arg(long)]
        gates: usize,
        #[arg(long, default_value_t = 1)]
        realizations: usize,
        /// Error-strength regime, used together with --sigma2.
        #[arg(long, value_parser = parse_enum::<Regime>)]
        regime: Option<Regime>,
        /// Error strength σ² for both components.
        #[arg(long)]
        sigma2: Option<f64>,
        #[arg(long, value_parser = parse_enum::<NoiseProcess>)]
        process: Option<NoiseProcess>,
        #[arg(long, value_parser = parse_enum::<Bandwidth>, default_value = "per-gate")]
        bandwidth: Bandwidth,
        /// Correlated noise strength ρ_C² (rms²).
        #[arg(long, default_value_t = 0.0)]
        rho_c2: f64,
        /// Uncorrelated noise strength ρ_U² (rms²).
        #[arg(long, default_value_t = 0.0)]
        rho_u2: f64,
    },
    /// Filter functions and effective error spectra for the config's [spectrum] section.
    Spectrum,
    /// Dump the noise trace of one (sequence, realization, qubit) cell as CSV.
    Trace {
        #[arg(long)]
        run: String,
        #[arg(long, default_value_t = 0)]
        sequence: usize,
        #[arg(long, default_value_t = 0)]
        realization: usize,
        #[arg(long, default_value_t = 0)]
        qubit: usize,
    },
    /// Autocorrelation of per-gate error magnitudes for one run.
    Autocorr {
        #[arg(long)]
        run: String,
        #[arg(long, default_value_t = 50)]
        max_lag: usize,
    },
}

fn parse_enum<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_status(&e))
        }
    }
}

fn exit_status(e: &anyhow::Error) -> u8 {
    if let Some(c) = e.downcast_ref::<CliError>() {
        return match c {
            CliError::Config(_) => 2,
            CliError::Invariant(_) => 4,
        };
    }
    match e.downcast_ref::<dcgrb::Error>() {
        Some(dcgrb::Error::Budget { .. }) => 3,
        Some(
            dcgrb::Error::Config(_)
            | dcgrb::Error::InvalidNoise(_)
            | dcgrb::Error::GradientTooLarge(_)
            | dcgrb::Error::SequenceTooShort(_)
            | dcgrb::Error::InvalidClifford(_)
            | dcgrb::Error::UnknownFamily(_)
            | dcgrb::Error::UnsupportedCombination(_),
        ) => 2,
        _ => 1,
    }
}

struct Loaded {
    file: ConfigFile,
    path: PathBuf,
    sha256: String,
}

fn load_config(cli: &Cli) -> Result<Loaded> {
    let path = cli.config.clone().ok_or_else(|| CliError::Config("--config is required".into()))?;
    let bytes = fs::read(&path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let text = String::from_utf8(bytes.clone()).map_err(|_| CliError::Config("config is not UTF-8".into()))?;
    let file = ConfigFile::parse(&text)?;
    Ok(Loaded { file, path, sha256: sha256_hex(&bytes) })
}

fn run_config(cli: &Cli, loaded: &Loaded, label: &str) -> Result<ExperimentConfig> {
    let mut cfg = loaded
        .file
        .run(label)
        .cloned()
        .ok_or_else(|| CliError::Config(format!("no run labelled {label:?}")))?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn out_dir(cli: &Cli) -> Result<PathBuf> {
    let dir = cli.out.clone().ok_or_else(|| CliError::Config("--out is required".into()))?;
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

/// Writes to `--out` when given, otherwise to stdout.
fn emit(cli: &Cli, text: &str) -> Result<()> {
    match &cli.out {
        Some(path) => {
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(parent)?;
            }
            fs::write(path, text).with_context(|| format!("writing {}", path.display()))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Cliffords => cmd_cliffords(&cli),
        Command::Schedule { family, clifford } => cmd_schedule(&cli, *family, *clifford),
        Command::Simulate { run } => cmd_simulate(&cli, run.as_deref()).map(|_| ()),
        Command::Analyze => cmd_analyze(&cli),
        Command::Report { run } => {
            cmd_simulate(&cli, run.as_deref())?;
            cmd_analyze(&cli)
        }
        Command::Predict { gates, realizations, regime, sigma2, process, bandwidth, rho_c2, rho_u2 } => {
            cmd_predict(&cli, *gates, *realizations, *regime, *sigma2, *process, *bandwidth, *rho_c2, *rho_u2)
        }
        Command::Spectrum => cmd_spectrum(&cli),
        Command::Trace { run, sequence, realization, qubit } => cmd_trace(&cli, run, *sequence, *realization, *qubit),
        Command::Autocorr { run, max_lag } => cmd_autocorr(&cli, run, *max_lag),
    }
}

fn cmd_cliffords(cli: &Cli) -> Result<()> {
    let table = clifford_table();
    let rows: Vec<_> = table
        .elements()
        .iter()
        .map(|e| {
            let durations: serde_json::Map<_, _> = Family::ALL
                .iter()
                .map(|&f| (f.name().to_string(), json!(schedule_table(f)[e.index.slot()].duration())))
                .collect();
            json!({
                "label": e.index.label(),
                "phi_pre": e.phi_pre,
                "core": e.core,
                "phi_post": e.phi_post,
                "inverse": table.inverse(e.index).label(),
                "so3": table.so3(e.index),
                "durations": durations,
            })
        })
        .collect();
    emit(cli, &(serde_json::to_string_pretty(&rows)? + "\n"))
}

fn cmd_schedule(cli: &Cli, family: Family, clifford: u8) -> Result<()> {
    let index = CliffordIndex::new(clifford)?;
    let schedule = &schedule_table(family)[index.slot()];
    let value = json!({ "schedule": schedule, "duration": schedule.duration() });
    emit(cli, &(serde_json::to_string_pretty(&value)? + "\n"))
}

fn cmd_simulate(cli: &Cli, only: Option<&str>) -> Result<PathBuf> {
    let loaded = load_config(cli)?;
    let dir = out_dir(cli)?;
    let labels: Vec<String> = match only {
        Some(l) => vec![l.to_string()],
        None => loaded.file.runs.iter().map(|r| r.label.clone()).collect(),
    };
    // check every budget before spending time on any run
    for label in &labels {
        let cfg = run_config(cli, &loaded, label)?;
        if let Some(budget) = cli.budget_cells {
            if cfg.cells() > budget {
                return Err(dcgrb::Error::Budget { cells: cfg.cells(), budget }.into());
            }
        }
    }
    let start = Instant::now();
    let mut runs = Vec::new();
    for label in &labels {
        let cfg = run_config(cli, &loaded, label)?;
        let result = match cli.workers {
            Some(w) => run_experiment_with_workers(&cfg, cli.budget_cells, w)?,
            None => run_experiment(&cfg, cli.budget_cells)?,
        };
        let (tensor, sidecar) = write_run(&dir, label, &result)?;
        eprintln!("{label}: {} cells in {:.2}s", cfg.cells(), result.elapsed_seconds);
        runs.push(RunRecord {
            label: label.clone(),
            seed: cfg.seed,
            cells: cfg.cells(),
            tensor: file_name(&tensor),
            sidecar: file_name(&sidecar),
            seconds: result.elapsed_seconds,
        });
    }
    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        artifact_version: env!("CARGO_PKG_VERSION").to_string(),
        config_path: loaded.path.display().to_string(),
        config_sha256: loaded.sha256.clone(),
        seed_override: cli.seed,
        workers: cli.workers,
        runs,
        total_seconds: start.elapsed().as_secs_f64(),
    };
    write_json(&dir.join(MANIFEST), &manifest)?;
    Ok(dir)
}

fn file_name(path: &Path) -> String {
    path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn cmd_analyze(cli: &Cli) -> Result<()> {
    let loaded = load_config(cli)?;
    let dir = out_dir(cli)?;
    let report = report::analyze_bundle(&dir, &loaded.file, &loaded.sha256)?;
    report::write_trajectories(&dir, &report)?;
    write_json(&dir.join("report.json"), &report)?;
    let failed = report.failed_checks();
    for check in &failed {
        eprintln!("check failed: {} {}", check.name, check.detail);
    }
    if failed.is_empty() {
        eprintln!("{} checks passed; report written to {}", report.checks.len(), dir.join("report.json").display());
        Ok(())
    } else {
        Err(CliError::Invariant(failed.len()).into())
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_predict(
    cli: &Cli,
    gates: usize,
    realizations: usize,
    regime: Option<Regime>,
    sigma2: Option<f64>,
    process: Option<NoiseProcess>,
    bandwidth: Bandwidth,
    rho_c2: f64,
    rho_u2: f64,
) -> Result<()> {
    let value = match (regime, sigma2, process) {
        (Some(regime), Some(s2), None) => {
            let s = ErrorStrengths::from_sigma(s2, s2);
            let m = moments(regime, gates, realizations, &s);
            let long_form = concurrent_detuning_variance(regime, gates, realizations, s2).ok();
            json!({
                "regime": regime,
                "gates": gates,
                "realizations": realizations,
                "sigma2": s2,
                "moments": m,
                "gamma": gamma_params(&m).ok(),
                "concurrent_detuning_variance": long_form,
            })
        }
        (None, None, Some(process)) => {
            let steps = expected_step_moments(process, bandwidth)?;
            let p = predict(process, bandwidth, rho_c2, rho_u2, gates, realizations)?;
            json!({ "step_moments": steps, "prediction": p })
        }
        _ => {
            return Err(CliError::Config("give either --regime with --sigma2, or --process with noise strengths".into()).into())
        }
    };
    emit(cli, &(serde_json::to_string_pretty(&value)? + "\n"))
}

fn cmd_spectrum(cli: &Cli) -> Result<()> {
    let loaded = load_config(cli)?;
    let spec = loaded.file.spectrum.clone().ok_or_else(|| CliError::Config("config has no [spectrum] section".into()))?;
    let index = CliffordIndex::new(spec.clifford)?;
    let mut rows = String::from("family,omega,magnitude,input,effective\n");
    let mut summary = Vec::new();
    for &family in &spec.families {
        let schedule = &schedule_table(family)[index.slot()];
        let unit = 2.0 * std::f64::consts::PI / schedule.duration();
        let grid = log_grid(spec.band_lo_rel * unit, spec.band_hi_rel * unit, spec.points);
        let g = filter_transfer(schedule, spec.channel, &grid);
        let input = one_over_f(&grid, spec.cutoff_rel * unit);
        let effective = effective_error_spectrum(&g, &input, spec.overlap)?;
        for (((w, m), s), e) in grid.iter().zip(g.magnitude()).zip(&input).zip(&effective) {
            rows.push_str(&format!("{},{w},{m},{s},{e}\n", family.name()));
        }
        summary.push(json!({
            "family": family,
            "duration": schedule.duration(),
            "dc_response": dc_response(schedule, spec.channel),
            "low_frequency_slope": low_frequency_slope(&g),
            "flatness": flatness(&effective),
        }));
    }
    match &cli.out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            fs::write(dir.join("spectrum.csv"), rows)?;
            write_json(&dir.join("spectrum.json"), &summary)?;
        }
        None => println!("{}", serde_json::to_string_pretty(&summary)?),
    }
    Ok(())
}

fn cmd_trace(cli: &Cli, label: &str, sequence: usize, realization: usize, qubit: usize) -> Result<()> {
    let loaded = load_config(cli)?;
    let cfg = run_config(cli, &loaded, label)?;
    if sequence >= cfg.sequences || realization >= cfg.realizations || qubit >= cfg.register.qubits {
        return Err(CliError::Config("cell index outside the run's grid".into()).into());
    }
    let seq = sequences_for(cfg.seed, sequence + 1, cfg.gates)?.pop().expect("at least one sequence");
    let timing = SequenceTiming::new(&seq, cfg.family);
    let profile = gradient_profile(cfg.register.qubits, cfg.register.amplitude_gradient)?
        .with_detuning_gradient(cfg.register.detuning_gradient);
    let key = TraceKey { seed: cfg.seed, sequence: sequence as u64, realization: realization as u64, qubit: qubit as u64 };
    let trace = sample_register_trace(&cfg.noise, &timing, &profile, key);
    let mut buf = Vec::new();
    write_trace_csv(&trace, &timing, &mut buf)?;
    emit(cli, &String::from_utf8(buf)?)
}

fn cmd_autocorr(cli: &Cli, label: &str, max_lag: usize) -> Result<()> {
    let loaded = load_config(cli)?;
    let cfg = run_config(cli, &loaded, label)?;
    let acf = error_autocorrelation(&report::error_magnitudes(&cfg)?, max_lag);
    let value = json!({ "run": label, "acf": acf, "correlation_length": correlation_length(&acf) });
    emit(cli, &(serde_json::to_string_pretty(&value)? + "\n"))
}
