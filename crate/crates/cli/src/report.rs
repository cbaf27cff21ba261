//! Turns a simulation bundle into the analysis report.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::Result;
use dcgrb::analysis::{
    cross_correlation, cumulative_variance, epg_from_survival, fit_error_components, fit_rb_decay, loglog_slope,
    mean_off_diagonal, qpn_bounds, shuffle_ensemble, variance_ratio, DecayFit, ErrorComponentFit, VarianceRatio,
};
use dcgrb::config::{AnalysisSpec, ConfigFile};
use dcgrb::engine::{sequences_for, ExperimentConfig};
use dcgrb::noise::{gradient_profile, sample_register_trace, SequenceTiming, TraceKey};
use dcgrb::pulses::Family;
use dcgrb::theory::{correlation_length, error_autocorrelation, first_order_walk};
use serde::Serialize;

use crate::bundle::{load_manifest, read_json, read_tensor, Sidecar, SCHEMA_VERSION};

#[derive(Debug, Serialize)]
pub struct Trajectory {
    pub mean: Vec<f64>,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    /// Trajectory for the recorded realization order.
    pub recorded: Vec<f64>,
}

#[derive(Debug, Serialize)]
pub struct QpnCurves {
    pub shots: u64,
    pub worst_case: f64,
    pub upper: Vec<f64>,
    pub lower: Vec<f64>,
}

#[derive(Debug, Serialize)]
pub struct QubitReport {
    pub qubit: usize,
    pub mean_survival: f64,
    pub epg: Option<f64>,
    pub trajectory: Trajectory,
    pub variance_ratio: Option<VarianceRatio>,
    pub early_slope: Option<f64>,
    pub late_slope: Option<f64>,
    pub fit: Option<ErrorComponentFit>,
    pub fit_error: Option<String>,
    pub qpn: Option<QpnCurves>,
}

#[derive(Debug, Serialize)]
pub struct Autocorrelation {
    pub acf: Vec<f64>,
    pub correlation_length: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct RunReport {
    pub label: String,
    pub family: Family,
    pub gates: usize,
    pub realizations: usize,
    pub sequences: usize,
    pub mean_duration: f64,
    pub qubits: Vec<QubitReport>,
    pub cross_correlation: Option<Vec<Vec<f64>>>,
    pub mean_cross_correlation: Option<f64>,
    pub autocorrelation: Option<Autocorrelation>,
}

#[derive(Debug, Serialize)]
pub struct DecayReport {
    pub family: Family,
    pub qubit: usize,
    pub gates: Vec<usize>,
    pub fit: DecayFit,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub name: String,
    pub config_sha256: String,
    pub analysis: AnalysisSpec,
    pub runs: Vec<RunReport>,
    pub decay: Vec<DecayReport>,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn failed_checks(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }
}

fn default_analysis() -> AnalysisSpec {
    AnalysisSpec { reorderings: 100, permutation_seed: 0, fit_components: false, autocorrelation_max_lag: 0 }
}

fn slope(values: &[f64], lo: usize, hi: usize) -> Option<f64> {
    (hi > lo && hi <= values.len()).then(|| loglog_slope(values, lo, hi).ok()).flatten()
}

/// Per-gate error magnitudes `‖ε_j‖` for every (sequence, realization) of qubit 0.
pub fn error_magnitudes(config: &ExperimentConfig) -> Result<Vec<Vec<f64>>> {
    let profile = gradient_profile(config.register.qubits, config.register.amplitude_gradient)?
        .with_detuning_gradient(config.register.detuning_gradient);
    let mut out = Vec::with_capacity(config.sequences * config.realizations);
    for (k, seq) in sequences_for(config.seed, config.sequences, config.gates)?.iter().enumerate() {
        let timing = SequenceTiming::new(seq, config.family);
        for n in 0..config.realizations {
            let key = TraceKey { seed: config.seed, sequence: k as u64, realization: n as u64, qubit: 0 };
            let trace = sample_register_trace(&config.noise, &timing, &profile, key);
            let steps = first_order_walk(seq, config.family, &timing, &trace);
            out.push(steps.iter().map(|r| (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt()).collect());
        }
    }
    Ok(out)
}

fn analyze_qubit(
    q: usize,
    p: &[Vec<f64>],
    config: &ExperimentConfig,
    spec: &AnalysisSpec,
    label: &str,
    checks: &mut Vec<Check>,
) -> Result<QubitReport> {
    let n = config.realizations;
    let total: f64 = p.iter().flatten().sum();
    let mean_survival = total / (p.len() * n) as f64;
    let in_range = p.iter().flatten().all(|v| (0.0..=1.0).contains(v));
    checks.push(Check {
        name: format!("{label}/q{q}: probabilities in [0, 1]"),
        passed: in_range,
        detail: String::new(),
    });

    let order: Vec<usize> = (0..n).collect();
    let recorded = cumulative_variance(p, &order)?.values;
    let ens = shuffle_ensemble(p, spec.reorderings, spec.permutation_seed)?;
    let last = n - 1;
    let spread = (ens.max[last] - ens.min[last]).abs();
    checks.push(Check {
        name: format!("{label}/q{q}: endpoint identical across orderings"),
        passed: spread <= 1e-12 * ens.max[last].abs().max(1e-300),
        detail: format!("spread {spread:.3e}"),
    });
    checks.push(Check {
        name: format!("{label}/q{q}: variances non-negative"),
        passed: ens.min.iter().chain(&recorded).all(|v| *v >= 0.0 && v.is_finite()),
        detail: String::new(),
    });

    let qpn = if config.shots > 0 {
        let b = qpn_bounds(p, &order, config.shots)?;
        let margin = ens.mean.iter().zip(&b.lower).map(|(v, lo)| v - lo).fold(f64::INFINITY, f64::min);
        checks.push(Check {
            name: format!("{label}/q{q}: trajectory above projection-noise floor"),
            passed: margin >= 0.0,
            detail: format!("smallest margin {margin:.3e}"),
        });
        Some(QpnCurves { shots: b.shots, worst_case: b.worst_case, upper: b.upper, lower: b.lower })
    } else {
        None
    };

    let (fit, fit_error) = if spec.fit_components && n >= 3 {
        let ns: Vec<usize> = (1..=n).collect();
        match fit_error_components(&ns, &ens.mean, config.gates) {
            Ok(f) => (Some(f), None),
            Err(e) => (None, Some(e.to_string())),
        }
    } else {
        (None, None)
    };

    let knee = 20.min(n);
    Ok(QubitReport {
        qubit: q,
        mean_survival,
        epg: epg_from_survival(mean_survival, config.gates).ok(),
        variance_ratio: variance_ratio(&ens).ok(),
        early_slope: slope(&ens.mean, 1, knee),
        late_slope: slope(&ens.mean, knee, n),
        trajectory: Trajectory { mean: ens.mean, min: ens.min, max: ens.max, recorded },
        fit,
        fit_error,
        qpn,
    })
}

/// Analyzes the bundle in `dir` produced from `config`.
pub fn analyze_bundle(dir: &Path, config: &ConfigFile, config_sha256: &str) -> Result<Report> {
    let manifest = load_manifest(dir)?;
    if manifest.config_sha256 != config_sha256 {
        return Err(crate::CliError::Config(format!(
            "bundle was produced from a different config (hash {})",
            manifest.config_sha256
        ))
        .into());
    }
    let spec = config.analysis.clone().unwrap_or_else(default_analysis);
    let mut checks = Vec::new();
    let mut runs = Vec::new();
    for record in &manifest.runs {
        let sidecar: Sidecar = read_json(&dir.join(&record.sidecar))?;
        let cfg = &sidecar.config;
        let tensor = read_tensor(&dir.join(&record.tensor), cfg)?;
        let mut qubits = Vec::new();
        for (q, p) in tensor.iter().enumerate() {
            qubits.push(analyze_qubit(q, p, cfg, &spec, &record.label, &mut checks)?);
        }
        let (matrix, mean_cc) = if tensor.len() > 1 {
            let cols: Vec<Vec<f64>> = tensor.iter().map(|p| p.concat()).collect();
            match cross_correlation(&cols) {
                Ok(m) => {
                    let mean = mean_off_diagonal(&m);
                    (Some(m), Some(mean))
                }
                Err(_) => (None, None),
            }
        } else {
            (None, None)
        };
        let autocorrelation = if spec.autocorrelation_max_lag > 0 {
            let acf = error_autocorrelation(&error_magnitudes(cfg)?, spec.autocorrelation_max_lag);
            let correlation_length = correlation_length(&acf);
            Some(Autocorrelation { acf, correlation_length })
        } else {
            None
        };
        runs.push(RunReport {
            label: record.label.clone(),
            family: cfg.family,
            gates: cfg.gates,
            realizations: cfg.realizations,
            sequences: cfg.sequences,
            mean_duration: sidecar.durations.iter().sum::<f64>() / sidecar.durations.len() as f64,
            qubits,
            cross_correlation: matrix,
            mean_cross_correlation: mean_cc,
            autocorrelation,
        });
    }
    Ok(Report {
        schema_version: SCHEMA_VERSION,
        name: config.name.clone(),
        config_sha256: config_sha256.to_string(),
        analysis: spec,
        decay: decay_fits(&runs),
        runs,
        checks,
    })
}

/// Fits the survival decay for every family that was run at three or more lengths.
fn decay_fits(runs: &[RunReport]) -> Vec<DecayReport> {
    let mut groups: BTreeMap<(String, usize), BTreeMap<usize, Vec<f64>>> = BTreeMap::new();
    let mut families = BTreeMap::new();
    for run in runs {
        for q in &run.qubits {
            let key = (run.family.name().to_string(), q.qubit);
            families.insert(key.clone(), run.family);
            groups.entry(key).or_default().entry(run.gates).or_default().push(q.mean_survival);
        }
    }
    groups
        .into_iter()
        .filter(|(_, by_j)| by_j.len() >= 3)
        .filter_map(|(key, by_j)| {
            let gates: Vec<usize> = by_j.keys().copied().collect();
            let means: Vec<f64> = by_j.values().map(|v| v.iter().sum::<f64>() / v.len() as f64).collect();
            let fit = fit_rb_decay(&gates, &means).ok()?;
            Some(DecayReport { family: families[&key], qubit: key.1, gates, fit })
        })
        .collect()
}

/// One CSV per run and qubit with the ensemble trajectory and QPN floor.
pub fn write_trajectories(dir: &Path, report: &Report) -> Result<()> {
    for run in &report.runs {
        for q in &run.qubits {
            let path = dir.join(format!("{}_q{}_trajectory.csv", run.label, q.qubit));
            let mut w = csv::Writer::from_path(&path)?;
            w.write_record(["n", "mean", "min", "max", "recorded", "qpn_lower"])?;
            for i in 0..q.trajectory.mean.len() {
                let lower = q.qpn.as_ref().map(|b| b.lower[i].to_string()).unwrap_or_default();
                w.write_record([
                    (i + 1).to_string(),
                    q.trajectory.mean[i].to_string(),
                    q.trajectory.min[i].to_string(),
                    q.trajectory.max[i].to_string(),
                    q.trajectory.recorded[i].to_string(),
                    lower,
                ])?;
            }
            w.flush()?;
        }
    }
    Ok(())
}
