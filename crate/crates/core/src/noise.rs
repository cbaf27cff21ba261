//! Noise models and sampled traces.
//!
//! A trace for one channel is the sum of a per-gate part (constant over each
//! correlation block of virtual gates) and a per-cell part (constant over each
//! unit of lab time, i.e. each primitive π/2 duration). Every component draws
//! from its own ChaCha stream keyed by `(master seed, component, k, n, qubit)`,
//! so results do not depend on evaluation order and a block of length `J`
//! reproduces the fully correlated value exactly.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pulses::{schedule_table, Family};
use crate::rotations::CliffordSequence;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    Detuning,
    Amplitude,
}

impl Channel {
    fn id(self) -> u64 {
        match self {
            Channel::Detuning => 1,
            Channel::Amplitude => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Correlation {
    /// One value for the whole sequence.
    Full,
    /// A fresh value every primitive π/2 time.
    PerPi2Time,
    /// A fresh value every `gates` virtual gates.
    Block { gates: usize },
}

/// Whether a component is common to all qubits of a register or drawn
/// independently per qubit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    #[default]
    Shared,
    Local,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseComponent {
    /// Variance ρ² of the Gaussian values.
    pub rms2: f64,
    pub correlation: Correlation,
    #[serde(default)]
    pub scope: Scope,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    pub channel: Channel,
    pub components: Vec<NoiseComponent>,
}

impl NoiseSpec {
    pub fn single(channel: Channel, rms2: f64, correlation: Correlation) -> Self {
        Self { channel, components: vec![NoiseComponent { rms2, correlation, scope: Scope::Shared }] }
    }

    /// Independent fully correlated (`rho_c2`) and per-π/2-time (`rho_u2`) parts.
    pub fn mixed(channel: Channel, rho_c2: f64, rho_u2: f64) -> Self {
        Self::block_mixed(channel, rho_c2, Correlation::Full, rho_u2)
    }

    pub fn block_mixed(channel: Channel, rho_c2: f64, correlated: Correlation, rho_u2: f64) -> Self {
        Self {
            channel,
            components: vec![
                NoiseComponent { rms2: rho_c2, correlation: correlated, scope: Scope::Shared },
                NoiseComponent { rms2: rho_u2, correlation: Correlation::PerPi2Time, scope: Scope::Shared },
            ],
        }
    }

    pub fn validate(&self) -> Result<()> {
        for c in &self.components {
            if !(c.rms2 >= 0.0 && c.rms2.is_finite()) {
                return Err(Error::InvalidNoise(format!("rms² must be finite and ≥ 0, got {}", c.rms2)));
            }
            if let Correlation::Block { gates: 0 } = c.correlation {
                return Err(Error::InvalidNoise("block length must be ≥ 1".into()));
            }
        }
        Ok(())
    }
}

/// Per-qubit multipliers on the drive amplitude and static detuning offsets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientProfile {
    pub multipliers: Vec<f64>,
    pub detuning_offsets: Vec<f64>,
}

impl GradientProfile {
    pub fn uniform(num_qubits: usize) -> Self {
        Self { multipliers: vec![1.0; num_qubits], detuning_offsets: vec![0.0; num_qubits] }
    }

    pub fn num_qubits(&self) -> usize {
        self.multipliers.len()
    }

    /// Adds a linear static detuning `(q − 1)·beta` across the register.
    pub fn with_detuning_gradient(mut self, beta: f64) -> Self {
        for (q, d) in self.detuning_offsets.iter_mut().enumerate() {
            *d = q as f64 * beta;
        }
        self
    }
}

/// `g_q = 1 + (q − 1)·γ`, with qubit 1 as the calibration reference.
pub fn gradient_profile(num_qubits: usize, gamma: f64) -> Result<GradientProfile> {
    if num_qubits == 0 {
        return Err(Error::InvalidNoise("need at least one qubit".into()));
    }
    if !(gamma.abs() < 0.05) {
        return Err(Error::GradientTooLarge(gamma));
    }
    let mut profile = GradientProfile::uniform(num_qubits);
    for (q, g) in profile.multipliers.iter_mut().enumerate() {
        *g = 1.0 + q as f64 * gamma;
    }
    Ok(profile)
}

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a master seed with a path of indices into a 64-bit stream seed.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix64(master), |acc, &p| splitmix64(acc ^ splitmix64(p.wrapping_add(GOLDEN))))
}

pub fn stream(master: u64, path: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, path))
}

/// Stream tags so that the different consumers of a master seed never overlap.
pub mod tag {
    pub const SEQUENCE: u64 = 1;
    pub const NOISE: u64 = 2;
    pub const SHOTS: u64 = 3;
    pub const PERMUTATION: u64 = 4;
}

/// Gate start times and durations for one compiled sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceTiming {
    pub starts: Vec<f64>,
    pub durations: Vec<f64>,
    pub total: f64,
}

impl SequenceTiming {
    pub fn new(sequence: &CliffordSequence, family: Family) -> Self {
        let table = schedule_table(family);
        let mut starts = Vec::with_capacity(sequence.len());
        let mut durations = Vec::with_capacity(sequence.len());
        let mut t = 0.0;
        for g in sequence.indices() {
            let d = table[g.slot()].duration();
            starts.push(t);
            durations.push(d);
            t += d;
        }
        Self { starts, durations, total: t }
    }

    pub fn gates(&self) -> usize {
        self.starts.len()
    }

    /// Number of π/2-time cells touched by the sequence.
    pub fn cells(&self) -> usize {
        (self.total.ceil() as usize).max(1)
    }
}

/// One channel of a sampled trace.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ChannelTrace {
    /// Static value added everywhere.
    #[serde(default)]
    pub offset: f64,
    /// Value per virtual gate; empty means zero.
    pub per_gate: Vec<f64>,
    /// Value per π/2-time cell; empty means zero.
    pub per_cell: Vec<f64>,
}

impl ChannelTrace {
    #[inline]
    pub fn gate_value(&self, gate: usize) -> f64 {
        self.offset + self.per_gate.get(gate).copied().unwrap_or(0.0)
    }

    #[inline]
    pub fn value(&self, gate: usize, cell: usize) -> f64 {
        self.gate_value(gate) + self.per_cell.get(cell).copied().unwrap_or(0.0)
    }

    pub fn has_cells(&self) -> bool {
        !self.per_cell.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.offset == 0.0 && self.per_gate.iter().chain(&self.per_cell).all(|&v| v == 0.0)
    }

    fn add_gate(&mut self, gates: usize, values: impl Iterator<Item = f64>) {
        if self.per_gate.is_empty() {
            self.per_gate = vec![0.0; gates];
        }
        for (slot, v) in self.per_gate.iter_mut().zip(values) {
            *slot += v;
        }
    }

    fn add_cell(&mut self, cells: usize, values: impl Iterator<Item = f64>) {
        if self.per_cell.is_empty() {
            self.per_cell = vec![0.0; cells];
        }
        for (slot, v) in self.per_cell.iter_mut().zip(values) {
            *slot += v;
        }
    }
}

/// Identifies the random streams behind one trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceKey {
    pub seed: u64,
    pub sequence: u64,
    pub realization: u64,
    pub qubit: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NoiseTrace {
    pub detuning: ChannelTrace,
    pub amplitude: ChannelTrace,
}

impl NoiseTrace {
    pub fn channel(&self, channel: Channel) -> &ChannelTrace {
        match channel {
            Channel::Detuning => &self.detuning,
            Channel::Amplitude => &self.amplitude,
        }
    }

    fn channel_mut(&mut self, channel: Channel) -> &mut ChannelTrace {
        match channel {
            Channel::Detuning => &mut self.detuning,
            Channel::Amplitude => &mut self.amplitude,
        }
    }

    /// Static values on both channels.
    pub fn constant(detuning: f64, amplitude: f64) -> Self {
        Self {
            detuning: ChannelTrace { offset: detuning, ..Default::default() },
            amplitude: ChannelTrace { offset: amplitude, ..Default::default() },
        }
    }
}

fn draws(rng: &mut ChaCha8Rng, rms: f64, count: usize) -> Vec<f64> {
    (0..count).map(|_| { let z: f64 = StandardNormal.sample(rng); rms * z }).collect::<Vec<f64>>()
}

/// Samples the shared and local components of one channel, before any
/// per-qubit gradient is applied.
fn sample_components(
    spec: &NoiseSpec,
    gates: usize,
    cells: usize,
    key: TraceKey,
) -> (ChannelTrace, ChannelTrace) {
    let mut shared = ChannelTrace::default();
    let mut local = ChannelTrace::default();
    for (idx, comp) in spec.components.iter().enumerate() {
        if comp.rms2 == 0.0 {
            continue;
        }
        let qubit = match comp.scope {
            Scope::Shared => 0,
            Scope::Local => key.qubit + 1,
        };
        let mut rng = stream(
            key.seed,
            &[tag::NOISE, spec.channel.id(), idx as u64, key.sequence, key.realization, qubit],
        );
        let rms = comp.rms2.sqrt();
        let target = match comp.scope {
            Scope::Shared => &mut shared,
            Scope::Local => &mut local,
        };
        match comp.correlation {
            Correlation::PerPi2Time => {
                let values = draws(&mut rng, rms, cells);
                target.add_cell(cells, values.into_iter());
            }
            Correlation::Full | Correlation::Block { .. } => {
                let block = match comp.correlation {
                    Correlation::Block { gates: m } => m,
                    _ => gates.max(1),
                };
                let values = draws(&mut rng, rms, gates.div_ceil(block));
                target.add_gate(gates, (0..gates).map(|j| values[j / block]));
            }
        }
    }
    (shared, local)
}

/// Samples one channel for a single qubit with unit gradient.
pub fn sample_trace(spec: &NoiseSpec, timing: &SequenceTiming, key: TraceKey) -> ChannelTrace {
    let (mut shared, local) = sample_components(spec, timing.gates(), timing.cells(), key);
    merge(&mut shared, &local, timing.gates(), timing.cells());
    shared
}

fn merge(into: &mut ChannelTrace, other: &ChannelTrace, gates: usize, cells: usize) {
    into.offset += other.offset;
    if !other.per_gate.is_empty() {
        into.add_gate(gates, other.per_gate.iter().copied());
    }
    if !other.per_cell.is_empty() {
        into.add_cell(cells, other.per_cell.iter().copied());
    }
}

/// Samples all channels for qubit `key.qubit` of a register described by `profile`.
///
/// The amplitude channel of qubit q sees `g_q(1 + δ_shared) − 1 + δ_local`;
/// the detuning channel adds the qubit's static offset.
pub fn sample_register_trace(
    specs: &[NoiseSpec],
    timing: &SequenceTiming,
    profile: &GradientProfile,
    key: TraceKey,
) -> NoiseTrace {
    let (gates, cells) = (timing.gates(), timing.cells());
    let q = key.qubit as usize;
    let mut trace = NoiseTrace::default();
    for spec in specs {
        let (mut shared, local) = sample_components(spec, gates, cells, key);
        if spec.channel == Channel::Amplitude {
            let g = profile.multipliers[q];
            if g != 1.0 {
                shared.per_gate.iter_mut().chain(shared.per_cell.iter_mut()).for_each(|v| *v *= g);
            }
        }
        merge(&mut shared, &local, gates, cells);
        merge(trace.channel_mut(spec.channel), &shared, gates, cells);
    }
    trace.amplitude.offset += profile.multipliers[q] - 1.0;
    trace.detuning.offset += profile.detuning_offsets[q];
    trace
}

/// Writes `(t_start, t_end, gate, cell, detuning, amplitude)` rows, one per
/// interval on which both channels are constant.
pub fn write_trace_csv<W: Write>(trace: &NoiseTrace, timing: &SequenceTiming, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t_start", "t_end", "gate", "cell", "detuning", "amplitude"])?;
    for (j, (&t0, &d)) in timing.starts.iter().zip(&timing.durations).enumerate() {
        if d == 0.0 {
            continue;
        }
        let t1 = t0 + d;
        let mut a = t0;
        while a < t1 {
            let cell = a.floor() as usize;
            let b = ((cell + 1) as f64).min(t1);
            w.write_record([
                a.to_string(),
                b.to_string(),
                j.to_string(),
                cell.to_string(),
                trace.detuning.value(j, cell).to_string(),
                trace.amplitude.value(j, cell).to_string(),
            ])?;
            a = b;
        }
    }
    w.flush()?;
    Ok(())
}
