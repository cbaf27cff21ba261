//! Exact Monte Carlo evolution of compiled sequences under sampled noise.

use std::f64::consts::FRAC_PI_2;
use std::time::Instant;

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::{
    gradient_profile, sample_register_trace, stream, tag, NoiseSpec, NoiseTrace, SequenceTiming, TraceKey,
};
use crate::pulses::{schedule_table, Family, PulseSchedule};
use crate::rotations::{clifford_table, CliffordSequence, Unitary2};

/// Products between re-projections onto SU(2).
pub const REPROJECT_EVERY: usize = 256;

/// Noisy unitary of one gate that starts at lab time `t_start` and is the
/// `gate`-th element of its sequence.
///
/// Segments are split wherever a per-cell noise value changes, so the noise
/// is constant on every exponential that gets multiplied in.
pub fn evolve(schedule: &PulseSchedule, trace: &NoiseTrace, gate: usize, t_start: f64) -> Unitary2 {
    let mut u = Unitary2::rz(schedule.phi_pre);
    let det = &trace.detuning;
    let amp = &trace.amplitude;
    let split = det.has_cells() || amp.has_cells();
    let mut t = t_start;
    for seg in &schedule.segments {
        let (s, c) = seg.phi.sin_cos();
        let mut apply = |theta: f64, tau: f64, cell: usize| {
            let drive = theta * (1.0 + amp.value(gate, cell));
            let z = det.value(gate, cell) * tau * FRAC_PI_2;
            u = Unitary2::exp_pauli(drive * c, drive * s, z) * u;
        };
        let end = t + seg.duration;
        if !split || seg.duration == 0.0 {
            apply(seg.theta, seg.duration, 0);
        } else {
            let mut a = t;
            while a < end {
                let cell = a.floor() as usize;
                let b = ((cell + 1) as f64).min(end);
                let tau = b - a;
                apply(seg.theta * (tau / seg.duration), tau, cell);
                a = b;
            }
        }
        t = end;
    }
    Unitary2::rz(schedule.phi_post) * u
}

fn check_trace(trace: &NoiseTrace, timing: &SequenceTiming) -> Result<()> {
    for ch in [&trace.detuning, &trace.amplitude] {
        if !ch.per_gate.is_empty() && ch.per_gate.len() < timing.gates() {
            return Err(Error::GridMisaligned { have: ch.per_gate.len(), need: timing.gates() });
        }
        if ch.has_cells() && ch.per_cell.len() < timing.cells() {
            return Err(Error::GridMisaligned { have: ch.per_cell.len(), need: timing.cells() });
        }
    }
    Ok(())
}

/// Noisy product over the whole sequence, later gates on the left.
pub fn sequence_unitary(
    sequence: &CliffordSequence,
    family: Family,
    timing: &SequenceTiming,
    trace: &NoiseTrace,
) -> Result<Unitary2> {
    check_trace(trace, timing)?;
    let table = schedule_table(family);
    let mut acc = Unitary2::IDENTITY;
    for (j, g) in sequence.indices().iter().enumerate() {
        acc = evolve(&table[g.slot()], trace, j, timing.starts[j]) * acc;
        if j % REPROJECT_EVERY == REPROJECT_EVERY - 1 {
            acc = acc.project_su2();
        }
    }
    Ok(acc)
}

/// Probability of returning to |0⟩.
pub fn run_sequence(
    sequence: &CliffordSequence,
    family: Family,
    timing: &SequenceTiming,
    trace: &NoiseTrace,
) -> Result<f64> {
    Ok(sequence_unitary(sequence, family, timing, trace)?.survival().clamp(0.0, 1.0))
}

/// Binomial shot estimate of `p` from `r` repetitions.
pub fn qpn_sample<R: Rng + ?Sized>(p: f64, r: u64, rng: &mut R) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidProbability(p));
    }
    if r == 0 {
        return Err(Error::TooFew { what: "shots", need: 1, got: 0 });
    }
    let b = Binomial::new(r, p).map_err(|_| Error::InvalidProbability(p))?;
    Ok(b.sample(rng) as f64 / r as f64)
}

/// Simultaneously driven register sharing one control field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Register {
    pub qubits: usize,
    /// Linear amplitude gradient γ: qubit q sees a Rabi rate scaled by 1 + (q − 1)γ.
    #[serde(default)]
    pub amplitude_gradient: f64,
    /// Linear static fractional detuning offset per qubit step.
    #[serde(default)]
    pub detuning_gradient: f64,
}

impl Default for Register {
    fn default() -> Self {
        Self { qubits: 1, amplitude_gradient: 0.0, detuning_gradient: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Number of random sequences k.
    pub sequences: usize,
    /// Gates per sequence J, including the inverting gate.
    pub gates: usize,
    /// Noise realizations n per sequence.
    pub realizations: usize,
    /// Shots r per (sequence, realization); 0 reports exact probabilities.
    #[serde(default)]
    pub shots: u64,
    pub family: Family,
    #[serde(default)]
    pub noise: Vec<NoiseSpec>,
    #[serde(default)]
    pub register: Register,
    /// Symmetric preparation/measurement flip probability κ.
    #[serde(default)]
    pub spam: f64,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sequences == 0 || self.realizations == 0 {
            return Err(Error::Config("sequences and realizations must be ≥ 1".into()));
        }
        if self.gates < 2 {
            return Err(Error::SequenceTooShort(self.gates));
        }
        if !(0.0..0.5).contains(&self.spam) {
            return Err(Error::Config(format!("spam must lie in [0, 0.5), got {}", self.spam)));
        }
        if self.register.qubits == 0 {
            return Err(Error::Config("register needs at least one qubit".into()));
        }
        gradient_profile(self.register.qubits, self.register.amplitude_gradient)?;
        for spec in &self.noise {
            spec.validate()?;
        }
        Ok(())
    }

    /// Work measure `k·J·n·q` used by the resource guard.
    pub fn cells(&self) -> u64 {
        self.sequences as u64 * self.gates as u64 * self.realizations as u64 * self.register.qubits as u64
    }
}

/// The k sequences drawn for a master seed; identical across families and noise.
pub fn sequences_for(seed: u64, count: usize, gates: usize) -> Result<Vec<CliffordSequence>> {
    let table = clifford_table();
    (0..count)
        .map(|k| table.generate_sequence(gates, &mut stream(seed, &[tag::SEQUENCE, gates as u64, k as u64])))
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub sequences: Vec<CliffordSequence>,
    /// Exact survival probabilities (after SPAM), indexed `[k][n][q]` flat.
    pub survival: Vec<f64>,
    /// Shot-sampled estimates, same layout, present when `shots > 0`.
    pub estimates: Option<Vec<f64>>,
    /// Lab-time duration of each sequence in π/2 units.
    pub durations: Vec<f64>,
    pub elapsed_seconds: f64,
}

impl ExperimentResult {
    fn idx(&self, k: usize, n: usize, q: usize) -> usize {
        (k * self.config.realizations + n) * self.config.register.qubits + q
    }

    pub fn exact(&self, k: usize, n: usize, q: usize) -> f64 {
        self.survival[self.idx(k, n, q)]
    }

    /// What an experiment would report: shot estimates if sampled, exact otherwise.
    pub fn observed(&self, k: usize, n: usize, q: usize) -> f64 {
        match &self.estimates {
            Some(e) => e[self.idx(k, n, q)],
            None => self.exact(k, n, q),
        }
    }

    /// Observed `[k][n]` matrix for one qubit.
    pub fn matrix(&self, q: usize) -> Vec<Vec<f64>> {
        (0..self.config.sequences)
            .map(|k| (0..self.config.realizations).map(|n| self.observed(k, n, q)).collect())
            .collect()
    }

    /// Exact `[k][n]` matrix for one qubit.
    pub fn exact_matrix(&self, q: usize) -> Vec<Vec<f64>> {
        (0..self.config.sequences)
            .map(|k| (0..self.config.realizations).map(|n| self.exact(k, n, q)).collect())
            .collect()
    }

    pub fn mean_survival(&self, q: usize) -> f64 {
        let m = self.matrix(q);
        m.iter().flatten().sum::<f64>() / (self.config.sequences * self.config.realizations) as f64
    }

    pub fn mean_duration(&self) -> f64 {
        self.durations.iter().sum::<f64>() / self.durations.len() as f64
    }
}

/// Runs the full `(k, n, q)` grid. Every cell owns its random streams, so
/// the output does not depend on how rayon schedules the work.
pub fn run_experiment(config: &ExperimentConfig, budget_cells: Option<u64>) -> Result<ExperimentResult> {
    config.validate()?;
    if let Some(budget) = budget_cells {
        if config.cells() > budget {
            return Err(Error::Budget { cells: config.cells(), budget });
        }
    }
    let start = Instant::now();
    let profile = gradient_profile(config.register.qubits, config.register.amplitude_gradient)?
        .with_detuning_gradient(config.register.detuning_gradient);
    let sequences = sequences_for(config.seed, config.sequences, config.gates)?;
    let (nq, nr) = (config.register.qubits, config.realizations);
    let per_sequence: Vec<(Vec<f64>, Option<Vec<f64>>, f64)> = sequences
        .par_iter()
        .enumerate()
        .map(|(k, seq)| -> Result<_> {
            let timing = SequenceTiming::new(seq, config.family);
            let mut exact = Vec::with_capacity(nr * nq);
            let mut shots = (config.shots > 0).then(|| Vec::with_capacity(nr * nq));
            for n in 0..nr {
                for q in 0..nq {
                    let key = TraceKey { seed: config.seed, sequence: k as u64, realization: n as u64, qubit: q as u64 };
                    let trace = sample_register_trace(&config.noise, &timing, &profile, key);
                    let p = run_sequence(seq, config.family, &timing, &trace)?;
                    let p = config.spam + (1.0 - 2.0 * config.spam) * p;
                    exact.push(p);
                    if let Some(s) = shots.as_mut() {
                        let mut rng = stream(config.seed, &[tag::SHOTS, k as u64, n as u64, q as u64]);
                        s.push(qpn_sample(p, config.shots, &mut rng)?);
                    }
                }
            }
            Ok((exact, shots, timing.total))
        })
        .collect::<Result<_>>()?;
    let mut survival = Vec::with_capacity(config.sequences * nr * nq);
    let mut estimates = (config.shots > 0).then(Vec::new);
    let mut durations = Vec::with_capacity(config.sequences);
    for (exact, shots, d) in per_sequence {
        survival.extend(exact);
        if let (Some(all), Some(s)) = (estimates.as_mut(), shots) {
            all.extend(s);
        }
        durations.push(d);
    }
    Ok(ExperimentResult {
        config: config.clone(),
        sequences,
        survival,
        estimates,
        durations,
        elapsed_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Runs on a dedicated pool of `workers` threads.
pub fn run_experiment_with_workers(
    config: &ExperimentConfig,
    budget_cells: Option<u64>,
    workers: usize,
) -> Result<ExperimentResult> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| run_experiment(config, budget_cells))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::{Channel, ChannelTrace, Correlation};
    use crate::pulses::{ideal_unitary, PulseSegment};
    use crate::rotations::Core;
    use std::f64::consts::PI;

    fn element(core: Core) -> &'static crate::rotations::CliffordElement {
        clifford_table().elements().iter().find(|e| e.core == core && e.phi_post == 0.0).unwrap()
    }

    fn small_config(family: Family, noise: Vec<NoiseSpec>) -> ExperimentConfig {
        ExperimentConfig {
            sequences: 4,
            gates: 20,
            realizations: 3,
            shots: 0,
            family,
            noise,
            register: Register::default(),
            spam: 0.0,
            seed: 17,
        }
    }

    #[test]
    fn noiseless_evolution_is_ideal() {
        for family in Family::ALL {
            for s in schedule_table(family) {
                let u = evolve(s, &NoiseTrace::default(), 0, 0.0);
                let e = clifford_table().get(s.target);
                assert!(u.fidelity(&e.unitary) > 1.0 - 1e-12);
                let core = Unitary2::rz(s.phi_post) * ideal_unitary(s) * Unitary2::rz(s.phi_pre);
                assert!(u.fidelity(&core) > 1.0 - 1e-12);
            }
        }
    }

    #[test]
    fn x180_static_detuning_first_order() {
        let s = &schedule_table(Family::Primitive)[element(Core::X180).index.slot()];
        let delta = 1e-4;
        let u = evolve(s, &NoiseTrace::constant(delta, 0.0), 0, 0.0);
        let lambda = u * clifford_table().get(s.target).unitary.dagger();
        let a = lambda.rotation_vector();
        // Λ ≈ 1 + i δ σ_y
        assert!((-a[1] / 2.0 - delta).abs() < 1e-7);
        assert!(a[0].abs() < 1e-7 && a[2].abs() < 1e-7);
    }

    #[test]
    fn splitting_a_segment_is_exact() {
        let whole = PulseSchedule {
            family: Family::Primitive,
            target: element(Core::X180).index,
            segments: vec![PulseSegment::driven(PI, 1.0, 0.3)],
            phi_pre: 0.0,
            phi_post: 0.0,
        };
        let mut halves = whole.clone();
        halves.segments = vec![PulseSegment::driven(PI / 2.0, 1.0, 0.3); 2];
        let trace = NoiseTrace::constant(0.03, -0.02);
        let a = evolve(&whole, &trace, 0, 0.0);
        let b = evolve(&halves, &trace, 0, 0.0);
        for (x, y) in a.0.iter().zip(b.0) {
            assert!((x - y).norm() < 1e-14);
        }
        // per-cell values that happen to be equal also split the segment
        let cells = NoiseTrace {
            detuning: ChannelTrace { per_cell: vec![0.03; 3], ..Default::default() },
            amplitude: ChannelTrace { offset: -0.02, ..Default::default() },
        };
        let c = evolve(&whole, &cells, 0, 0.5);
        for (x, y) in a.0.iter().zip(c.0) {
            assert!((x - y).norm() < 1e-14);
        }
    }

    #[test]
    fn noiseless_sequences_survive() {
        for family in Family::ALL {
            let r = run_experiment(&small_config(family, vec![]), None).unwrap();
            assert!(r.survival.iter().all(|&p| (p - 1.0).abs() < 1e-12));
        }
    }

    #[test]
    fn identity_only_sequence_is_blind_to_detuning() {
        let wait = element(Core::Wait).index;
        let seq = CliffordSequence::from_indices(vec![wait; 50]).unwrap();
        let timing = SequenceTiming::new(&seq, Family::Primitive);
        let trace = NoiseTrace::constant(0.05, 0.0);
        let p = run_sequence(&seq, Family::Primitive, &timing, &trace).unwrap();
        assert!((p - 1.0).abs() < 1e-12);
    }

    #[test]
    fn long_products_stay_unitary() {
        let seq = &sequences_for(3, 1, 10_000).unwrap()[0];
        let timing = SequenceTiming::new(seq, Family::Primitive);
        let spec = NoiseSpec::single(Channel::Detuning, 1e-6, Correlation::PerPi2Time);
        let trace = sample_register_trace(
            &[spec],
            &timing,
            &crate::noise::GradientProfile::uniform(1),
            TraceKey { seed: 1, sequence: 0, realization: 0, qubit: 0 },
        );
        let u = sequence_unitary(seq, Family::Primitive, &timing, &trace).unwrap();
        assert!(u.unitarity_defect() < 1e-9);
    }

    #[test]
    fn short_trace_is_rejected() {
        let seq = &sequences_for(3, 1, 10).unwrap()[0];
        let timing = SequenceTiming::new(seq, Family::Primitive);
        let trace = NoiseTrace {
            detuning: ChannelTrace { per_gate: vec![0.0; 3], ..Default::default() },
            ..Default::default()
        };
        assert!(matches!(
            run_sequence(seq, Family::Primitive, &timing, &trace),
            Err(Error::GridMisaligned { .. })
        ));
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let noise = vec![NoiseSpec::mixed(Channel::Detuning, 1e-3, 1e-3)];
        let mut cfg = small_config(Family::Corpse, noise);
        cfg.register = Register { qubits: 2, amplitude_gradient: 0.01, detuning_gradient: 0.0 };
        cfg.shots = 50;
        let a = run_experiment_with_workers(&cfg, None, 1).unwrap();
        let b = run_experiment_with_workers(&cfg, None, 3).unwrap();
        assert_eq!(a.survival, b.survival);
        assert_eq!(a.estimates, b.estimates);
    }

    #[test]
    fn budget_guard() {
        let cfg = small_config(Family::Primitive, vec![]);
        assert!(matches!(run_experiment(&cfg, Some(10)), Err(Error::Budget { .. })));
        assert!(run_experiment(&cfg, Some(cfg.cells())).is_ok());
    }

    #[test]
    fn spam_maps_unit_survival_to_one_minus_kappa() {
        let mut cfg = small_config(Family::Primitive, vec![]);
        cfg.spam = 0.01;
        let r = run_experiment(&cfg, None).unwrap();
        assert!(r.survival.iter().all(|&p| (p - 0.99).abs() < 1e-12));
    }

    #[test]
    fn qpn_edge_cases_and_variance() {
        let mut rng = stream(1, &[9]);
        assert_eq!(qpn_sample(0.0, 100, &mut rng).unwrap(), 0.0);
        assert!(qpn_sample(1.5, 100, &mut rng).is_err());
        assert!(qpn_sample(0.5, 0, &mut rng).is_err());
        let draws: Vec<f64> = (0..10_000).map(|_| qpn_sample(0.5, 220, &mut rng).unwrap()).collect();
        let mean = draws.iter().sum::<f64>() / 1e4;
        let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 9_999.0;
        assert!((var / (0.25 / 220.0) - 1.0).abs() < 0.05, "variance {var}");
        let big = qpn_sample(0.9, 1_000_000_000, &mut rng).unwrap();
        assert!((big - 0.9).abs() < 1e-3);
    }

    #[test]
    fn corpse_sequences_last_about_six_times_longer() {
        let p = run_experiment(&small_config(Family::Primitive, vec![]), None).unwrap();
        let c = run_experiment(&small_config(Family::Corpse, vec![]), None).unwrap();
        let ratio = c.mean_duration() / p.mean_duration();
        assert!((5.0..=7.5).contains(&ratio), "ratio {ratio}");
    }
}
