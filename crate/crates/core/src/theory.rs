//! Pauli-space random-walk description of error accumulation.
//!
//! Conventions used throughout:
//!
//! * A noisy gate `Ũ = Λ U` has error operator `Λ = exp(i ε·σ)`, so the error
//!   vector `ε` is the Pauli content of `−i log Λ`.
//! * Step `r_j` is the unit-noise first-order error of gate `j` expressed in
//!   the frame at the start of the sequence. Summing `δ_j r_j` gives the walk
//!   `R`, and the survival probability is `1 − ‖R_xy‖²` to leading order.
//! * "Unit noise" means detuning δ = 1 or fractional amplitude error δ = 1.

use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::engine::evolve;
use crate::error::{Error, Result};
use crate::filterfn::{dc_response, toggling_trajectory};
use crate::noise::{Channel, NoiseTrace, SequenceTiming};
use crate::pulses::{schedule_table, Family};
use crate::rotations::{clifford_table, mat_t_vec, mat_vec, CliffordElement, CliffordSequence, Unitary2};

pub type Vec3 = [f64; 3];

fn norm(v: Vec3) -> f64 {
    norm2(v).sqrt()
}

fn norm2(v: Vec3) -> f64 {
    v[0] * v[0] + v[1] * v[1] + v[2] * v[2]
}

fn norm2_xy(v: Vec3) -> f64 {
    v[0] * v[0] + v[1] * v[1]
}

fn scale(v: Vec3, s: f64) -> Vec3 {
    v.map(|x| x * s)
}

fn add(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

/// Pauli coefficients of a gate's error operator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorVector {
    pub components: Vec3,
    /// Magnus order the vector is accurate to.
    pub order: u8,
}

impl ErrorVector {
    pub fn magnitude(&self) -> f64 {
        norm(self.components)
    }
}

/// Exact error operator of a gate together with its extracted vector.
#[derive(Debug, Clone, Copy)]
pub struct ErrorMap {
    pub vector: ErrorVector,
    pub operator: Unitary2,
}

/// Error of `element` compiled in `family` under a static value `delta` on `channel`.
///
/// The vector is read off the exact logarithm of `Λ = Ũ U†`; it agrees with
/// the first-order vector up to `O(δ²)`.
pub fn error_map(element: &CliffordElement, family: Family, channel: Channel, delta: f64) -> Result<ErrorMap> {
    let schedule = &schedule_table(family)[element.index.slot()];
    let trace = match channel {
        Channel::Detuning => NoiseTrace::constant(delta, 0.0),
        Channel::Amplitude => NoiseTrace::constant(0.0, delta),
    };
    let noisy = evolve(schedule, &trace, 0, 0.0);
    let lambda = noisy * element.unitary.dagger();
    let a = lambda.rotation_vector();
    let angle = norm(a);
    if angle >= FRAC_PI_2 {
        return Err(Error::LogBranch(angle));
    }
    Ok(ErrorMap { vector: ErrorVector { components: scale(a, -0.5), order: 1 }, operator: lambda })
}

/// First-order vector by Richardson extrapolation of [`error_map`] in δ.
pub fn first_order_error(element: &CliffordElement, family: Family, channel: Channel) -> Result<ErrorVector> {
    // three-level Romberg table on f(h)/h, cancelling the O(h) and O(h²) terms
    let h = 1e-4;
    let mut d = [[0.0; 3]; 3];
    for (k, row) in d.iter_mut().enumerate() {
        let hk = h / (1 << k) as f64;
        *row = scale(error_map(element, family, channel, hk)?.vector.components, 1.0 / hk);
    }
    let r1 = |a: Vec3, b: Vec3| [0, 1, 2].map(|i| 2.0 * b[i] - a[i]);
    let (e01, e12) = (r1(d[0], d[1]), r1(d[1], d[2]));
    let c = [0, 1, 2].map(|i| (4.0 * e12[i] - e01[i]) / 3.0);
    Ok(ErrorVector { components: c, order: 1 })
}

/// Right-frame rotation vector per unit noise, `a = (π/2) ∫ R dt`.
fn right_vector(slot: usize, family: Family, channel: Channel) -> Vec3 {
    scale(dc_response(&schedule_table(family)[slot], channel), FRAC_PI_2)
}

fn table_slot(family: Family, channel: Channel) -> usize {
    let f = Family::ALL.iter().position(|&x| x == family).unwrap();
    f * 2 + matches!(channel, Channel::Amplitude) as usize
}

/// Analytic unit-noise first-order error vectors of all 24 Cliffords, by slot.
pub fn unit_error_table(family: Family, channel: Channel) -> &'static [Vec3; 24] {
    static TABLES: [OnceLock<[Vec3; 24]>; 8] = [const { OnceLock::new() }; 8];
    TABLES[table_slot(family, channel)].get_or_init(|| {
        let table = clifford_table();
        std::array::from_fn(|slot| {
            let e = &table.elements()[slot];
            scale(mat_vec(table.so3(e.index), right_vector(slot, family, channel)), -0.5)
        })
    })
}

/// Unit-noise steps of a sequence: each gate's first-order error carried
/// back through the ideal prefix that precedes it.
pub fn walk_steps(sequence: &CliffordSequence, family: Family, channel: Channel) -> Vec<Vec3> {
    let table = clifford_table();
    let errors = unit_error_table(family, channel);
    let mut prefix = crate::rotations::CliffordIndex::IDENTITY;
    sequence
        .indices()
        .iter()
        .map(|&g| {
            prefix = table.compose(prefix, g);
            // O_{P_j}ᵀ ε_left,j equals O_{P_{j-1}}ᵀ of the right-frame error
            mat_t_vec(table.so3(prefix), errors[g.slot()])
        })
        .collect()
}

/// First-order steps for an arbitrary noise trace, both channels, with the
/// per-cell part of the trace resolved inside each gate.
pub fn first_order_walk(
    sequence: &CliffordSequence,
    family: Family,
    timing: &SequenceTiming,
    trace: &NoiseTrace,
) -> Vec<Vec3> {
    let table = clifford_table();
    let schedules = schedule_table(family);
    let mut prefix = crate::rotations::CliffordIndex::IDENTITY;
    let mut out = Vec::with_capacity(sequence.len());
    for (j, &g) in sequence.indices().iter().enumerate() {
        let mut right = [0.0; 3];
        for channel in [Channel::Detuning, Channel::Amplitude] {
            let ch = trace.channel(channel);
            if ch.is_zero() {
                continue;
            }
            let schedule = &schedules[g.slot()];
            if ch.has_cells() {
                let traj = toggling_trajectory(schedule, channel);
                for (cell, v) in traj.cell_integrals(timing.starts[j]) {
                    right = add(right, scale(v, ch.value(j, cell) * FRAC_PI_2));
                }
            } else {
                right = add(right, scale(right_vector(g.slot(), family, channel), ch.gate_value(j)));
            }
        }
        out.push(scale(mat_t_vec(table.so3(prefix), right), -0.5));
        prefix = table.compose(prefix, g);
    }
    out
}

/// Accumulated walk for one noise realization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkRecord {
    pub steps: Vec<Vec3>,
    pub epsilons: Vec<f64>,
    /// `Σ ε_j r_j`.
    pub total: Vec3,
    /// `(x, y)` part of `total`.
    pub total_xy: [f64; 2],
    /// Sequence-intrinsic walk `V = Σ r_j`.
    pub intrinsic: Vec3,
}

pub fn accumulate_walk(steps: &[Vec3], epsilons: &[f64]) -> Result<WalkRecord> {
    if steps.len() != epsilons.len() {
        return Err(Error::LengthMismatch(steps.len(), epsilons.len()));
    }
    let mut total = [0.0; 3];
    let mut intrinsic = [0.0; 3];
    for (r, &e) in steps.iter().zip(epsilons) {
        total = add(total, scale(*r, e));
        intrinsic = add(intrinsic, *r);
    }
    Ok(WalkRecord {
        steps: steps.to_vec(),
        epsilons: epsilons.to_vec(),
        total,
        total_xy: [total[0], total[1]],
        intrinsic,
    })
}

/// Walk endpoint of a step list with unit weights.
pub fn walk_endpoint(steps: &[Vec3]) -> Vec3 {
    steps.iter().fold([0.0; 3], |acc, r| add(acc, *r))
}

/// Noise-averaged survival `1 − ⟨‖R_xy‖²⟩` over realizations.
pub fn survival_from_walk(walks_xy: &[[f64; 2]]) -> f64 {
    if walks_xy.is_empty() {
        return 1.0;
    }
    let mean: f64 = walks_xy.iter().map(|w| w[0] * w[0] + w[1] * w[1]).sum::<f64>() / walks_xy.len() as f64;
    1.0 - mean
}

/// Normalized autocorrelation of per-gate error magnitudes, averaged over
/// realizations: the mean is subtracted and lag 0 is scaled to one.
pub fn error_autocorrelation(magnitudes: &[Vec<f64>], max_lag: usize) -> Vec<f64> {
    let (mut sum, mut count) = (0.0, 0usize);
    for series in magnitudes {
        sum += series.iter().sum::<f64>();
        count += series.len();
    }
    if count == 0 {
        return Vec::new();
    }
    let mean = sum / count as f64;
    let mut acf = vec![0.0; max_lag + 1];
    let mut pairs = vec![0usize; max_lag + 1];
    for series in magnitudes {
        let d: Vec<f64> = series.iter().map(|x| x - mean).collect();
        for lag in 0..=max_lag.min(d.len().saturating_sub(1)) {
            for i in 0..d.len() - lag {
                acf[lag] += d[i] * d[i + lag];
            }
            pairs[lag] += d.len() - lag;
        }
    }
    let mut out: Vec<f64> = acf
        .iter()
        .zip(&pairs)
        .map(|(a, &p)| if p > 0 { a / p as f64 } else { 0.0 })
        .collect();
    let c0 = out[0];
    if c0 > 0.0 {
        out.iter_mut().for_each(|v| *v /= c0);
    }
    out
}

/// Correlation length in gates read from a normalized autocorrelation.
///
/// When lag 1 is already below `1/e` the errors are taken as uncorrelated and
/// the length is one gate. Otherwise a line is fitted to the lags from 1 up
/// to the first lag under half of the lag-1 value, and its zero crossing is
/// returned.
pub fn correlation_length(acf: &[f64]) -> Option<f64> {
    if acf.len() < 3 {
        return None;
    }
    if acf[1] < (-1.0f64).exp() {
        return Some(1.0);
    }
    let half = acf[1] / 2.0;
    let end = acf.iter().skip(1).position(|&v| v < half).map_or(acf.len() - 1, |p| p + 1);
    let pts: Vec<(f64, f64)> = (1..=end.max(2)).filter(|&l| l < acf.len()).map(|l| (l as f64, acf[l])).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    if slope >= 0.0 {
        return None;
    }
    Some(mx - my / slope)
}

/// Physical noise process behind the step moments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseProcess {
    /// A unit dephasing kick interleaved after every gate.
    Dephasing,
    /// Concurrent detuning during the gates.
    Detuning,
    /// Over-rotation proportional to the drive angle.
    Amplitude,
}

/// Time scale on which the noise value changes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Bandwidth {
    PerGate,
    PerPi2,
}

/// Moments of the projected step length `‖r_xy‖`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepMoments {
    pub e2: f64,
    pub e4: f64,
    /// `E[‖r_U‖² ‖r_C‖²] − E‖r_U‖² E‖r_C‖²`, with `r_C` the per-gate step.
    pub cov: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepMomentReport {
    pub process: NoiseProcess,
    pub bandwidth: Bandwidth,
    pub closed_form: StepMoments,
    pub brute_force: StepMoments,
}

pub fn closed_form_moments(process: NoiseProcess, bandwidth: Bandwidth) -> Result<StepMoments> {
    let pi2 = PI * PI;
    let pi4 = pi2 * pi2;
    let per_gate = |e2: f64, e4: f64| StepMoments { e2, e4, cov: e4 - e2 * e2 };
    Ok(match (process, bandwidth) {
        (NoiseProcess::Dephasing, Bandwidth::PerGate) => per_gate(2.0 / 3.0, 2.0 / 3.0),
        (NoiseProcess::Detuning, Bandwidth::PerGate) => {
            per_gate((2.0 / 3.0) * (0.5 + pi2 / 96.0), (2.0 / 3.0) * (7.0 / 24.0 + pi4 / 384.0))
        }
        (NoiseProcess::Detuning, Bandwidth::PerPi2) => StepMoments {
            e2: (2.0 / 3.0) * (0.5 + pi2 / 192.0),
            e4: (2.0 / 3.0) * (0.25 + pi4 / 1536.0),
            cov: 1.0 / 6.0 + pi4 / 1152.0 - (4.0 / 9.0) * (0.5 + pi2 / 192.0) * (0.5 + pi2 / 96.0),
        },
        (NoiseProcess::Amplitude, Bandwidth::PerGate) => per_gate(pi2 / 18.0, 5.0 * pi4 / 576.0),
        (NoiseProcess::Amplitude, Bandwidth::PerPi2) => {
            StepMoments { e2: pi2 / 24.0, e4: pi4 / 288.0, cov: 5.0 * pi4 / 1728.0 }
        }
        (p, b) => return Err(Error::UnsupportedCombination(format!("{p:?} with {b:?}"))),
    })
}

/// Unit-noise vector representing gate `slot` for the given bandwidth.
///
/// For per-π/2 noise a gate spanning several independent cells is
/// represented by the component-wise root-sum-square of its cell vectors.
fn representative_vector(process: NoiseProcess, bandwidth: Bandwidth, slot: usize) -> Vec3 {
    let channel = match process {
        NoiseProcess::Dephasing => return [0.0, 0.0, 1.0],
        NoiseProcess::Detuning => Channel::Detuning,
        NoiseProcess::Amplitude => Channel::Amplitude,
    };
    let table = clifford_table();
    let o = table.so3(table.elements()[slot].index);
    match bandwidth {
        Bandwidth::PerGate => scale(mat_vec(o, right_vector(slot, Family::Primitive, channel)), -0.5),
        Bandwidth::PerPi2 => {
            let traj = toggling_trajectory(&schedule_table(Family::Primitive)[slot], channel);
            let mut acc = [0.0; 3];
            for (_, v) in traj.cell_integrals(0.0) {
                let left = scale(mat_vec(o, v), -0.5 * FRAC_PI_2);
                for i in 0..3 {
                    acc[i] += left[i] * left[i];
                }
            }
            acc.map(f64::sqrt)
        }
    }
}

/// Step moments by enumerating every (prefix, gate) pair of primitive Cliffords.
pub fn brute_force_moments(process: NoiseProcess, bandwidth: Bandwidth) -> Result<StepMoments> {
    closed_form_moments(process, bandwidth)?;
    let table = clifford_table();
    let (mut e2u, mut e2c, mut e4, mut mixed) = (0.0, 0.0, 0.0, 0.0);
    let u: Vec<Vec3> = (0..24).map(|s| representative_vector(process, bandwidth, s)).collect();
    let c: Vec<Vec3> = (0..24).map(|s| representative_vector(process, Bandwidth::PerGate, s)).collect();
    for prefix in table.elements() {
        let o = table.so3(prefix.index);
        for slot in 0..24 {
            let pu = norm2_xy(mat_t_vec(o, u[slot]));
            let pc = norm2_xy(mat_t_vec(o, c[slot]));
            e2u += pu;
            e2c += pc;
            e4 += pu * pu;
            mixed += pu * pc;
        }
    }
    let n = 576.0;
    let (e2u, e2c) = (e2u / n, e2c / n);
    Ok(StepMoments { e2: e2u, e4: e4 / n, cov: mixed / n - e2u * e2c })
}

pub fn expected_step_moments(process: NoiseProcess, bandwidth: Bandwidth) -> Result<StepMomentReport> {
    Ok(StepMomentReport {
        process,
        bandwidth,
        closed_form: closed_form_moments(process, bandwidth)?,
        brute_force: brute_force_moments(process, bandwidth)?,
    })
}

/// Second- and fourth-order error strengths entering the variance formulas.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ErrorStrengths {
    pub sigma_c2: f64,
    pub sigma_c4: f64,
    pub sigma_u2: f64,
    pub sigma_u4: f64,
    /// The `σ_C² σ_U²` cross term.
    pub cross: f64,
}

impl ErrorStrengths {
    /// Strengths of a Gaussian error model given directly as variances.
    pub fn from_sigma(sigma_c2: f64, sigma_u2: f64) -> Self {
        Self {
            sigma_c2,
            sigma_c4: sigma_c2 * sigma_c2,
            sigma_u2,
            sigma_u4: sigma_u2 * sigma_u2,
            cross: sigma_c2 * sigma_u2,
        }
    }
}

/// Translates rms² noise strengths into error strengths for sequences of
/// `j` gates averaged over `n` realizations. The correlated part always uses
/// per-gate steps; `bandwidth` applies to the uncorrelated part.
pub fn noise_to_error(
    process: NoiseProcess,
    bandwidth: Bandwidth,
    rho_c2: f64,
    rho_u2: f64,
    j: usize,
    n: usize,
) -> Result<ErrorStrengths> {
    let c = closed_form_moments(process, Bandwidth::PerGate)?;
    let u = closed_form_moments(process, bandwidth)?;
    let (jf, nf) = (j as f64, n as f64);
    Ok(ErrorStrengths {
        sigma_c2: 1.5 * c.e2 * rho_c2,
        sigma_c4: 4.5 * (c.e4 + (jf - 2.0) * c.e2 * c.e2) / (2.0 * jf - 1.0) * rho_c2 * rho_c2,
        sigma_u2: 1.5 * u.e2 * rho_u2,
        sigma_u4: 4.5 * ((2.0 + nf) * u.e4 + (jf - 1.0 - nf) * u.e2 * u.e2) / (4.0 + 2.0 * jf + nf)
            * rho_u2
            * rho_u2,
        cross: 4.5 * u.cov * rho_c2 * rho_u2,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Correlated,
    Uncorrelated,
    Mixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaParams {
    pub shape: f64,
    pub scale: f64,
}

impl GammaParams {
    pub fn mean(&self) -> f64 {
        self.shape * self.scale
    }

    pub fn variance(&self) -> f64 {
        self.shape * self.scale * self.scale
    }

    /// Regularized lower incomplete gamma `P(a, x/b)`.
    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        statrs::function::gamma::gamma_lr(self.shape, x / self.scale)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentPrediction {
    pub regime: Regime,
    pub gates: usize,
    pub realizations: usize,
    pub strengths: ErrorStrengths,
    /// `E[1 − P]`.
    pub mean_error: f64,
    /// `Var[P]` over sequences.
    pub variance: f64,
}

/// Mean and variance of the noise-averaged survival over random sequences.
pub fn moments(regime: Regime, j: usize, n: usize, s: &ErrorStrengths) -> MomentPrediction {
    let (jf, nf) = (j as f64, n.max(1) as f64);
    let var_c = (2.0 / 9.0) * ((nf + 2.0) / nf) * jf * (2.0 * jf - 1.0) * s.sigma_c4;
    let var_u = (2.0 / (9.0 * nf)) * jf * (4.0 + 2.0 * jf + nf) * s.sigma_u4;
    let mean_c = (2.0 / 3.0) * jf * s.sigma_c2;
    let mean_u = (2.0 / 3.0) * jf * s.sigma_u2;
    let (mean_error, variance) = match regime {
        Regime::Correlated => (mean_c, var_c),
        Regime::Uncorrelated => (mean_u, var_u),
        Regime::Mixed => (mean_c + mean_u, var_c + var_u + (4.0 / 9.0) * jf * s.cross),
    };
    MomentPrediction { regime, gates: j, realizations: n, strengths: *s, mean_error, variance }
}

/// Gamma law for `1 − P`. Correlated errors give an exponential law, averaging
/// `n` uncorrelated realizations gives shape `n`, and mixed noise is matched
/// to the predicted mean and variance.
pub fn gamma_params(prediction: &MomentPrediction) -> Result<GammaParams> {
    let m = prediction.mean_error;
    if m <= 0.0 {
        return Err(Error::ZeroVariance("mean error is zero".into()));
    }
    Ok(match prediction.regime {
        Regime::Correlated => GammaParams { shape: 1.0, scale: m },
        Regime::Uncorrelated => {
            let n = prediction.realizations.max(1) as f64;
            GammaParams { shape: n, scale: m / n }
        }
        Regime::Mixed => {
            if prediction.variance <= 0.0 {
                return Err(Error::ZeroVariance("mixed variance".into()));
            }
            GammaParams { shape: m * m / prediction.variance, scale: prediction.variance / m }
        }
    })
}

/// Full prediction from physical noise strengths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub process: NoiseProcess,
    pub bandwidth: Bandwidth,
    pub rho_c2: f64,
    pub rho_u2: f64,
    pub moments: MomentPrediction,
    pub gamma: GammaParams,
    /// Set when `J ρ²` exceeds 0.1 and the leading-order walk is unreliable.
    pub strong_noise: bool,
}

pub fn predict(
    process: NoiseProcess,
    bandwidth: Bandwidth,
    rho_c2: f64,
    rho_u2: f64,
    j: usize,
    n: usize,
) -> Result<Prediction> {
    let regime = match (rho_c2 > 0.0, rho_u2 > 0.0) {
        (true, false) => Regime::Correlated,
        (false, true) => Regime::Uncorrelated,
        (true, true) => Regime::Mixed,
        (false, false) => return Err(Error::ZeroVariance("both noise strengths are zero".into())),
    };
    let strengths = noise_to_error(process, bandwidth, rho_c2, rho_u2, j, n)?;
    let m = moments(regime, j, n, &strengths);
    Ok(Prediction {
        process,
        bandwidth,
        rho_c2,
        rho_u2,
        moments: m,
        gamma: gamma_params(&m)?,
        strong_noise: j as f64 * (rho_c2 + rho_u2) > 0.1,
    })
}

/// Long-form survival variance for concurrent detuning of strength `sigma2`
/// on primitive gates, per regime.
pub fn concurrent_detuning_variance(regime: Regime, j: usize, n: usize, sigma2: f64) -> Result<f64> {
    let (jf, nf) = (j as f64, n.max(1) as f64);
    let a = 0.5 + PI * PI / 96.0;
    let b = 7.0 / 36.0 + PI.powi(4) / 576.0;
    let a2 = a * a;
    let pre = jf * jf * sigma2 * sigma2 / nf;
    Ok(match regime {
        Regime::Uncorrelated => {
            pre * ((4.0 / 9.0) * a2
                + (3.0 * b - (8.0 / 9.0) * a2) / jf
                + (nf - 1.0) / jf * (b - (4.0 / 9.0) * a2))
        }
        Regime::Correlated => {
            pre * ((12.0 / 9.0) * a2
                + (3.0 * b - (8.0 / 3.0) * a2) / jf
                + (nf - 1.0) * ((4.0 / 9.0) * a2 + (b - (8.0 / 9.0) * a2) / jf))
        }
        Regime::Mixed => return Err(Error::UnsupportedCombination("mixed long-form variance".into())),
    })
}

/// Kolmogorov–Smirnov distance between a sample and a Gamma law.
pub fn ks_distance(sample: &[f64], law: &GammaParams) -> f64 {
    let mut xs = sample.to_vec();
    xs.sort_by(|a, b| a.total_cmp(b));
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = law.cdf(x);
            (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
        })
        .fold(0.0, f64::max)
}
