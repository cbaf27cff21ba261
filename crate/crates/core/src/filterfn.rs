//! First-order filter-transfer functions of piecewise-constant schedules.
//!
//! For a gate whose ideal evolution up to time t is U(t), the first-order
//! error generated by a noise value δ(t) is `δ · (π/2) · ∫ R(t) dt` in the
//! rotation-vector convention `exp(-i a·σ/2)`, where R(t) is the noise
//! operator seen in the toggling frame:
//!
//! * detuning: the Pauli components of `U(t)† σ_z U(t)`;
//! * amplitude: `Ω_rel · U(t)† (n·σ) U(t)` on driven segments, zero on idles.
//!
//! `G(ω) = ∫ R(t) e^{iωt} dt` carries no extra prefactor, so `G_z(0) = T` for
//! an idle of length T. Within a segment R(t) is a rotating vector, so every
//! integral below is evaluated in closed form.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::Channel;
use crate::pulses::PulseSchedule;
use crate::rotations::{mat_t_vec, Unitary2};

/// One segment of the toggling-frame trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryPiece {
    pub t0: f64,
    pub t1: f64,
    /// SO(3) image of the ideal evolution at `t0`.
    pub frame: [[f64; 3]; 3],
    /// Drive axis `(cos φ, sin φ, 0)`; meaningless for idles.
    pub axis: [f64; 3],
    /// Angular precession rate in rad per π/2-time; zero for idles.
    pub rate: f64,
    pub omega_rel: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TogglingTrajectory {
    pub channel: Channel,
    pub pieces: Vec<TrajectoryPiece>,
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

impl TrajectoryPiece {
    /// Lab-frame vectors `(c, s, k)` with `R(t) = Oᵀ(c cos wτ + s sin wτ) + Oᵀk`.
    fn basis(&self, channel: Channel) -> ([f64; 3], [f64; 3], [f64; 3]) {
        let zero = [0.0; 3];
        match channel {
            Channel::Detuning if self.rate == 0.0 => (zero, zero, [0.0, 0.0, 1.0]),
            Channel::Detuning => {
                let nz = cross(self.axis, [0.0, 0.0, 1.0]);
                ([0.0, 0.0, 1.0], [-nz[0], -nz[1], -nz[2]], zero)
            }
            Channel::Amplitude if self.rate == 0.0 => (zero, zero, zero),
            Channel::Amplitude => {
                let n = self.axis.map(|v| v * self.omega_rel);
                (zero, zero, n)
            }
        }
    }

    fn value(&self, channel: Channel, t: f64) -> [f64; 3] {
        let (c, s, k) = self.basis(channel);
        let (sn, cs) = (self.rate * (t - self.t0)).sin_cos();
        let v = [0, 1, 2].map(|i| c[i] * cs + s[i] * sn + k[i]);
        mat_t_vec(&self.frame, v)
    }

    /// `∫_a^b R(t) e^{iωt} dt` for `t0 ≤ a ≤ b ≤ t1`.
    fn integral(&self, channel: Channel, a: f64, b: f64, omega: f64) -> [C64; 3] {
        let (c, s, k) = self.basis(channel);
        let len = b - a;
        let ta = a - self.t0;
        let w = self.rate;
        // with τ measured from t0: e^{iωt} = e^{iω t0} e^{iωτ}
        let base = C64::from_polar(1.0, omega * self.t0);
        let window = |nu: f64| C64::from_polar(1.0, nu * ta) * exp_integral(nu, len);
        let plain = window(omega);
        let (ic, is) = if w == 0.0 {
            (plain, C64::new(0.0, 0.0))
        } else {
            let up = window(omega + w);
            let down = window(omega - w);
            ((up + down) / 2.0, (up - down) / C64::new(0.0, 2.0))
        };
        let v = [0, 1, 2].map(|i| ic * c[i] + is * s[i] + plain * k[i]);
        let re = mat_t_vec(&self.frame, v.map(|z| z.re));
        let im = mat_t_vec(&self.frame, v.map(|z| z.im));
        [0, 1, 2].map(|i| base * C64::new(re[i], im[i]))
    }
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-6 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// `∫_0^L e^{iντ} dτ`, written so that it stays accurate as `νL → 0`.
fn exp_integral(nu: f64, len: f64) -> C64 {
    let x = nu * len;
    let h = 0.5 * x;
    C64::new(len * sinc(x), len * h * sinc(h) * sinc(h))
}

pub fn toggling_trajectory(schedule: &PulseSchedule, channel: Channel) -> TogglingTrajectory {
    let mut u = Unitary2::rz(schedule.phi_pre);
    let mut t = 0.0;
    let mut pieces = Vec::with_capacity(schedule.segments.len());
    for seg in &schedule.segments {
        let rate = if seg.is_idle() { 0.0 } else { seg.omega_rel * FRAC_PI_2 };
        pieces.push(TrajectoryPiece {
            t0: t,
            t1: t + seg.duration,
            frame: u.so3(),
            axis: seg.axis(),
            rate,
            omega_rel: seg.omega_rel,
        });
        u = seg.ideal_unitary() * u;
        t += seg.duration;
    }
    TogglingTrajectory { channel, pieces }
}

impl TogglingTrajectory {
    pub fn duration(&self) -> f64 {
        self.pieces.last().map_or(0.0, |p| p.t1)
    }

    /// R(t); at a boundary the later segment wins.
    pub fn at(&self, t: f64) -> [f64; 3] {
        let piece = self
            .pieces
            .iter()
            .rev()
            .find(|p| p.t0 <= t)
            .or(self.pieces.first());
        piece.map_or([0.0; 3], |p| p.value(self.channel, t))
    }

    /// Values just before and after each internal boundary.
    pub fn boundary_jumps(&self) -> Vec<f64> {
        self.pieces
            .windows(2)
            .map(|w| {
                let a = w[0].value(self.channel, w[0].t1);
                let b = w[1].value(self.channel, w[1].t0);
                ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
            })
            .collect()
    }

    pub fn transfer(&self, omega: f64) -> [C64; 3] {
        let mut g = [C64::new(0.0, 0.0); 3];
        for p in &self.pieces {
            let part = p.integral(self.channel, p.t0, p.t1, omega);
            for i in 0..3 {
                g[i] += part[i];
            }
        }
        g
    }

    /// `∫ R(t) dt` split over unit cells of lab time, for a gate starting
    /// at `t_start`. Returns `(cell index, integral)` pairs in time order.
    pub fn cell_integrals(&self, t_start: f64) -> Vec<(usize, [f64; 3])> {
        let mut out: Vec<(usize, [f64; 3])> = Vec::new();
        for p in &self.pieces {
            let (a_abs, b_abs) = (t_start + p.t0, t_start + p.t1);
            let mut a = a_abs;
            while a < b_abs {
                let cell = a.floor() as usize;
                let b = ((cell + 1) as f64).min(b_abs);
                let v = p.integral(self.channel, a - t_start, b - t_start, 0.0).map(|z| z.re);
                match out.last_mut() {
                    Some((c, acc)) if *c == cell => {
                        for i in 0..3 {
                            acc[i] += v[i];
                        }
                    }
                    _ => out.push((cell, v)),
                }
                a = b;
            }
        }
        out
    }

    /// `∫ ‖R(t)‖² dt`, exact per segment.
    pub fn energy(&self) -> f64 {
        self.pieces
            .iter()
            .map(|p| {
                let (c, s, k) = p.basis(self.channel);
                let norm2 = |v: [f64; 3]| v.iter().map(|x| x * x).sum::<f64>();
                // c ⟂ s ⟂ k in every case used here, and |c| = |s|
                let len = p.t1 - p.t0;
                norm2(k) * len + 0.5 * (norm2(c) + norm2(s)) * len
                    + 0.5 * (norm2(c) - norm2(s)) * if p.rate == 0.0 { len } else { (2.0 * p.rate * len).sin() / (2.0 * p.rate) }
            })
            .sum()
    }
}

/// Sampled transfer function on an ω grid (rad per π/2-time).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Spectrum {
    pub omega: Vec<f64>,
    pub g: Vec<[C64; 3]>,
}

impl Spectrum {
    pub fn magnitude(&self) -> Vec<f64> {
        self.g.iter().map(|v| v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()).collect()
    }
}

pub fn filter_transfer(schedule: &PulseSchedule, channel: Channel, omega: &[f64]) -> Spectrum {
    let traj = toggling_trajectory(schedule, channel);
    Spectrum { omega: omega.to_vec(), g: omega.iter().map(|&w| traj.transfer(w)).collect() }
}

/// Static first-order response `∫ R dt` of a schedule.
pub fn dc_response(schedule: &PulseSchedule, channel: Channel) -> [f64; 3] {
    toggling_trajectory(schedule, channel).transfer(0.0).map(|z| z.re)
}

/// Scale between `|G(0)|` and the first-order error-vector magnitude at unit noise.
pub const DC_SCALE: f64 = std::f64::consts::FRAC_PI_4;

/// How the filter and the input spectrum are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Overlap {
    /// `|G(ω)| · S(ω)`.
    #[default]
    Amplitude,
    /// `|G(ω)|² · S(ω)`.
    Power,
}

pub fn effective_error_spectrum(spectrum: &Spectrum, input: &[f64], overlap: Overlap) -> Result<Vec<f64>> {
    if input.len() != spectrum.omega.len() {
        return Err(Error::LengthMismatch(input.len(), spectrum.omega.len()));
    }
    spectrum
        .magnitude()
        .into_iter()
        .zip(input)
        .zip(&spectrum.omega)
        .map(|((g, &s), &w)| {
            if s < 0.0 {
                return Err(Error::NegativeSpectrum(w));
            }
            Ok(match overlap {
                Overlap::Amplitude => g * s,
                Overlap::Power => g * g * s,
            })
        })
        .collect()
}

/// `1/|ω|` above `cutoff`, zero below it.
pub fn one_over_f(omega: &[f64], cutoff: f64) -> Vec<f64> {
    omega.iter().map(|&w| if w.abs() >= cutoff { 1.0 / w.abs() } else { 0.0 }).collect()
}

pub fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..points).map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp()).collect()
}

/// Span `max − min` of `ln E` over the points where `E > 0`; zero means white.
pub fn flatness(effective: &[f64]) -> Option<f64> {
    let logs: Vec<f64> = effective.iter().filter(|&&e| e > 0.0).map(|e| e.ln()).collect();
    if logs.len() < 2 {
        return None;
    }
    let max = logs.iter().cloned().fold(f64::MIN, f64::max);
    let min = logs.iter().cloned().fold(f64::MAX, f64::min);
    Some(max - min)
}

/// Least-squares slope of `ln |G|` against `ln ω`.
pub fn low_frequency_slope(spectrum: &Spectrum) -> f64 {
    let xs: Vec<f64> = spectrum.omega.iter().map(|w| w.ln()).collect();
    let ys: Vec<f64> = spectrum.magnitude().iter().map(|g| g.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}
