//! Observables computed from survival tensors: variance trajectories,
//! reordering ensembles, model fits, cross-correlations and shot-noise bounds.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{levenberg_marquardt, FitOptions};
use crate::noise::{stream, tag};

/// `V(n)`: variance over sequences of the mean of the first `n` realizations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceTrajectory {
    pub values: Vec<f64>,
    pub ordering: Vec<usize>,
}

fn check_matrix(p: &[Vec<f64>]) -> Result<usize> {
    if p.len() < 2 {
        return Err(Error::TooFew { what: "sequences", need: 2, got: p.len() });
    }
    let n = p[0].len();
    if n == 0 {
        return Err(Error::TooFew { what: "realizations", need: 1, got: 0 });
    }
    if let Some(row) = p.iter().find(|r| r.len() != n) {
        return Err(Error::LengthMismatch(row.len(), n));
    }
    Ok(n)
}

fn sample_variance(xs: &[f64]) -> f64 {
    let k = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / k;
    xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0)
}

fn trajectory_unchecked(p: &[Vec<f64>], ordering: &[usize]) -> Vec<f64> {
    let mut sums = vec![0.0; p.len()];
    let mut means = vec![0.0; p.len()];
    let mut out = Vec::with_capacity(ordering.len());
    for (i, &col) in ordering.iter().enumerate() {
        for (s, (sum, mean)) in sums.iter_mut().zip(means.iter_mut()).enumerate() {
            *sum += p[s][col];
            *mean = *sum / (i + 1) as f64;
        }
        out.push(sample_variance(&means));
    }
    out
}

/// Trajectory under a given realization ordering; `p` is indexed `[k][n]`.
pub fn cumulative_variance(p: &[Vec<f64>], ordering: &[usize]) -> Result<VarianceTrajectory> {
    let n = check_matrix(p)?;
    if ordering.len() != n {
        return Err(Error::LengthMismatch(ordering.len(), n));
    }
    Ok(VarianceTrajectory { values: trajectory_unchecked(p, ordering), ordering: ordering.to_vec() })
}

/// Trajectories over `m` orderings of the realizations.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShuffleEnsemble {
    pub mean: Vec<f64>,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    /// `V(1)` of every ordering.
    pub initial: Vec<f64>,
    pub orderings: usize,
}

/// Ordering 0 is the recorded order; the others are seeded permutations.
pub fn shuffle_ensemble(p: &[Vec<f64>], m: usize, seed: u64) -> Result<ShuffleEnsemble> {
    let n = check_matrix(p)?;
    if m == 0 {
        return Err(Error::TooFew { what: "orderings", need: 1, got: 0 });
    }
    let trajectories: Vec<Vec<f64>> = (0..m)
        .into_par_iter()
        .map(|i| {
            let mut order: Vec<usize> = (0..n).collect();
            if i > 0 {
                order.shuffle(&mut stream(seed, &[tag::PERMUTATION, i as u64]));
            }
            trajectory_unchecked(p, &order)
        })
        .collect();
    let mut mean = vec![0.0; n];
    let mut min = vec![f64::INFINITY; n];
    let mut max = vec![f64::NEG_INFINITY; n];
    for t in &trajectories {
        for i in 0..n {
            mean[i] += t[i] / m as f64;
            min[i] = min[i].min(t[i]);
            max[i] = max[i].max(t[i]);
        }
    }
    let initial = trajectories.iter().map(|t| t[0]).collect();
    Ok(ShuffleEnsemble { mean, min, max, initial, orderings: m })
}

/// Mixed-noise variance `V(n)` for error strengths `σ_C²`, `σ_U²` at `j` gates.
pub fn mixed_variance_model(n: f64, j: f64, sigma_c2: f64, sigma_u2: f64) -> f64 {
    (2.0 / 9.0) * ((n + 2.0) / n) * j * (2.0 * j - 1.0) * sigma_c2 * sigma_c2
        + (2.0 / (9.0 * n)) * j * (4.0 + 2.0 * j + n) * sigma_u2 * sigma_u2
        + (4.0 / 9.0) * j * sigma_c2 * sigma_u2
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErrorComponentFit {
    pub sigma_c2: f64,
    pub sigma_u2: f64,
    /// Covariance of `(σ_C², σ_U²)`.
    pub covariance: [[f64; 2]; 2],
    /// Root-sum-square of the log residuals.
    pub residual_norm: f64,
    pub converged: bool,
    pub model: String,
}

impl ErrorComponentFit {
    pub fn sigma_c2_err(&self) -> f64 {
        self.covariance[0][0].max(0.0).sqrt()
    }

    pub fn sigma_u2_err(&self) -> f64 {
        self.covariance[1][1].max(0.0).sqrt()
    }
}

/// Fits `ln V(n)` with the mixed-noise model, keeping both strengths non-negative.
/// Four starts spread over two decades around a crude estimate are tried and
/// the lowest residual wins.
pub fn fit_error_components(ns: &[usize], values: &[f64], gates: usize) -> Result<ErrorComponentFit> {
    if ns.len() != values.len() {
        return Err(Error::LengthMismatch(ns.len(), values.len()));
    }
    if ns.len() < 3 {
        return Err(Error::TooFew { what: "trajectory points", need: 3, got: ns.len() });
    }
    if let Some(v) = values.iter().find(|&&v| !(v > 0.0)) {
        return Err(Error::FitFailed(format!("non-positive variance {v}")));
    }
    let j = gates as f64;
    let logs: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let residuals = |p: &[f64]| -> Vec<f64> {
        ns.iter()
            .zip(&logs)
            .map(|(&n, &y)| mixed_variance_model(n as f64, j, p[0], p[1]).max(1e-300).ln() - y)
            .collect()
    };
    let last = *values.last().unwrap();
    let first = values[0];
    let c0 = (last / ((2.0 / 9.0) * j * (2.0 * j - 1.0))).sqrt();
    let u0 = (first * 9.0 / (2.0 * j * (5.0 + 2.0 * j))).sqrt();
    let scale = c0.max(u0);
    let upper = [scale * 1e3, scale * 1e3];
    let mut best: Option<crate::fit::FitOutcome> = None;
    for k in 0..4 {
        let factor = 10f64.powf(-1.0 + 2.0 * k as f64 / 3.0);
        let start = [c0.max(scale * 1e-3) * factor, u0.max(scale * 1e-3) * factor];
        let Ok(out) = levenberg_marquardt(residuals, &start, &[0.0, 0.0], &upper, FitOptions::default()) else {
            continue;
        };
        if best.as_ref().is_none_or(|b| out.rss < b.rss) {
            best = Some(out);
        }
    }
    let out = best.ok_or_else(|| Error::FitFailed("no start produced a finite fit".into()))?;
    let cov = &out.covariance;
    Ok(ErrorComponentFit {
        sigma_c2: out.params[0],
        sigma_u2: out.params[1],
        covariance: [[cov[0][0], cov[0][1]], [cov[1][0], cov[1][1]]],
        residual_norm: out.rss.sqrt(),
        converged: out.converged,
        model: "mixed".into(),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecayFit {
    pub p_rb: f64,
    pub kappa: f64,
    pub p_rb_err: f64,
    pub kappa_err: f64,
    pub gates: Vec<usize>,
    pub means: Vec<f64>,
    pub converged: bool,
}

impl DecayFit {
    /// Error per gate, `(1 − e^{−p})/2`.
    pub fn epg(&self) -> f64 {
        0.5 * (1.0 - (-self.p_rb).exp())
    }

    pub fn model(&self, j: f64) -> f64 {
        0.5 + (0.5 - self.kappa) * (-self.p_rb * j).exp()
    }
}

/// Least-squares fit of `0.5 + (0.5 − κ) e^{−p J}` to per-length mean survivals.
pub fn fit_rb_decay(gates: &[usize], means: &[f64]) -> Result<DecayFit> {
    if gates.len() != means.len() {
        return Err(Error::LengthMismatch(gates.len(), means.len()));
    }
    let mut distinct = gates.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(Error::TooFew { what: "distinct sequence lengths", need: 3, got: distinct.len() });
    }
    let js: Vec<f64> = gates.iter().map(|&j| j as f64).collect();
    let residuals = |p: &[f64]| -> Vec<f64> {
        js.iter().zip(means).map(|(j, m)| 0.5 + (0.5 - p[1]) * (-p[0] * j).exp() - m).collect()
    };
    // start from the log-linear fit of 2P − 1 = (1 − 2κ) e^{−pJ}
    let pts: Vec<(f64, f64)> = js.iter().zip(means).filter(|(_, &m)| m > 0.5).map(|(&j, &m)| (j, (2.0 * m - 1.0).ln())).collect();
    let (p0, k0) = if pts.len() >= 2 {
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
        let icpt = my - slope * mx;
        ((-slope).max(0.0), ((1.0 - icpt.exp()) / 2.0).clamp(0.0, 0.49))
    } else {
        (1.0 / js.iter().cloned().fold(1.0, f64::max), 0.0)
    };
    let upper = [f64::INFINITY, 0.5 - 1e-12];
    let out = levenberg_marquardt(residuals, &[p0, k0], &[0.0, 0.0], &upper, FitOptions::default())?;
    if out.params.iter().any(|v| !v.is_finite()) {
        return Err(Error::FitFailed("decay fit diverged".into()));
    }
    Ok(DecayFit {
        p_rb: out.params[0],
        kappa: out.params[1],
        p_rb_err: out.covariance[0][0].max(0.0).sqrt(),
        kappa_err: out.covariance[1][1].max(0.0).sqrt(),
        gates: gates.to_vec(),
        means: means.to_vec(),
        converged: out.converged,
    })
}

/// Error per gate from a mean survival at length `j`, `−ln(2P − 1)/(2J)`.
pub fn epg_from_survival(mean_survival: f64, j: usize) -> Result<f64> {
    if mean_survival <= 0.5 || mean_survival > 1.0 {
        return Err(Error::InvalidProbability(mean_survival));
    }
    Ok(-(2.0 * mean_survival - 1.0).ln() / (2.0 * j as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceRatio {
    pub ratio: f64,
    /// Propagated from the standard error of the initial values.
    pub uncertainty: f64,
}

/// `V(1)/V(N)` using the mean initial value over the orderings.
pub fn variance_ratio(ensemble: &ShuffleEnsemble) -> Result<VarianceRatio> {
    let n = ensemble.mean.len();
    if n < 2 {
        return Err(Error::TooFew { what: "realizations", need: 2, got: n });
    }
    let last = ensemble.mean[n - 1];
    if last <= 0.0 {
        return Err(Error::ZeroVariance("final variance".into()));
    }
    let m = ensemble.initial.len() as f64;
    let mean = ensemble.initial.iter().sum::<f64>() / m;
    let sem = if m > 1.0 { (sample_variance(&ensemble.initial) / m).sqrt() } else { 0.0 };
    Ok(VarianceRatio { ratio: mean / last, uncertainty: sem / last })
}

/// Pearson correlation matrix of the given columns.
pub fn cross_correlation(columns: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let q = columns.len();
    if q < 2 {
        return Err(Error::TooFew { what: "qubits", need: 2, got: q });
    }
    let len = columns[0].len();
    if len < 10 {
        return Err(Error::TooFew { what: "joint observations", need: 10, got: len });
    }
    let mut centered = Vec::with_capacity(q);
    for (i, c) in columns.iter().enumerate() {
        if c.len() != len {
            return Err(Error::LengthMismatch(c.len(), len));
        }
        let mean = c.iter().sum::<f64>() / len as f64;
        let d: Vec<f64> = c.iter().map(|x| x - mean).collect();
        let norm = d.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::ZeroVariance(format!("column {i}")));
        }
        centered.push(d.into_iter().map(|x| x / norm).collect::<Vec<f64>>());
    }
    let mut out = vec![vec![0.0; q]; q];
    for a in 0..q {
        out[a][a] = 1.0;
        for b in a + 1..q {
            let c: f64 = centered[a].iter().zip(&centered[b]).map(|(x, y)| x * y).sum();
            out[a][b] = c;
            out[b][a] = c;
        }
    }
    Ok(out)
}

pub fn mean_off_diagonal(matrix: &[Vec<f64>]) -> f64 {
    let q = matrix.len();
    let mut sum = 0.0;
    for a in 0..q {
        for b in 0..q {
            if a != b {
                sum += matrix[a][b];
            }
        }
    }
    sum / (q * (q - 1)) as f64
}

/// Shot-noise reference curves for a trajectory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QpnBounds {
    pub shots: u64,
    /// `0.25 / r`.
    pub worst_case: f64,
    /// `p̄(1 − p̄)/r` at each `n`, with `p̄` the mean cumulative survival.
    pub upper: Vec<f64>,
    /// `p̄(1 − p̄)/(n r)`.
    pub lower: Vec<f64>,
}

pub fn qpn_worst_case(shots: u64) -> f64 {
    0.25 / shots as f64
}

pub fn qpn_bounds(p: &[Vec<f64>], ordering: &[usize], shots: u64) -> Result<QpnBounds> {
    let n = check_matrix(p)?;
    if shots == 0 {
        return Err(Error::TooFew { what: "shots", need: 1, got: 0 });
    }
    if ordering.len() != n {
        return Err(Error::LengthMismatch(ordering.len(), n));
    }
    let k = p.len() as f64;
    let r = shots as f64;
    let mut sums = vec![0.0; p.len()];
    let (mut upper, mut lower) = (Vec::with_capacity(n), Vec::with_capacity(n));
    for (i, &col) in ordering.iter().enumerate() {
        for (s, sum) in sums.iter_mut().enumerate() {
            *sum += p[s][col];
        }
        let count = (i + 1) as f64;
        let pbar = sums.iter().map(|s| s / count).sum::<f64>() / k;
        let v = pbar * (1.0 - pbar) / r;
        upper.push(v);
        lower.push(v / count);
    }
    Ok(QpnBounds { shots, worst_case: qpn_worst_case(shots), upper, lower })
}

/// Least-squares slope of `ln V` against `ln n` for `n` in `[lo, hi]` (1-based).
pub fn loglog_slope(values: &[f64], lo: usize, hi: usize) -> Result<f64> {
    let pts: Vec<(f64, f64)> = (lo.max(1)..=hi.min(values.len()))
        .filter(|&n| values[n - 1] > 0.0)
        .map(|n| ((n as f64).ln(), values[n - 1].ln()))
        .collect();
    if pts.len() < 2 {
        return Err(Error::TooFew { what: "slope points", need: 2, got: pts.len() });
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(sxy / sxx)
}
