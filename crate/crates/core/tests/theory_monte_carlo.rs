//! Monte Carlo checks of the analytic moment and distribution predictions.

use dcgrb::analysis::cumulative_variance;
use dcgrb::engine::{run_experiment, run_sequence, sequences_for, ExperimentConfig, Register};
use dcgrb::noise::{sample_trace, Channel, ChannelTrace, Correlation, NoiseSpec, NoiseTrace, SequenceTiming, TraceKey};
use dcgrb::pulses::Family;
use dcgrb::theory::{
    first_order_walk, ks_distance, moments, noise_to_error, predict, walk_endpoint, Bandwidth, NoiseProcess, Regime,
};

const SEED: u64 = 11;

fn detuning(k: usize, j: usize, n: usize, rho2: f64, correlation: Correlation) -> ExperimentConfig {
    ExperimentConfig {
        sequences: k,
        gates: j,
        realizations: n,
        shots: 0,
        family: Family::Primitive,
        noise: vec![NoiseSpec::single(Channel::Detuning, rho2, correlation)],
        register: Register::default(),
        spam: 0.0,
        seed: SEED,
    }
}

fn analytic_ratio(j: usize, n: usize) -> f64 {
    let s = noise_to_error(NoiseProcess::Detuning, Bandwidth::PerGate, 1e-3, 1e-3, j, n).unwrap();
    moments(Regime::Correlated, j, n, &s).variance / moments(Regime::Uncorrelated, j, n, &s).variance
}

#[test]
fn analytic_variance_ratio_grows_with_averaging() {
    let ratios: Vec<f64> = (10..=100).step_by(10).map(|n| analytic_ratio(100, n)).collect();
    assert!(ratios.windows(2).all(|w| w[1] > w[0]), "{ratios:?}");
    // Var_C/Var_U = (n + 2)(2J − 1)σ_C⁴ / ((4 + 2J + n)σ_U⁴) from the two rows
    for (i, r) in ratios.iter().enumerate() {
        let n = 10.0 * (i + 1) as f64;
        let s = noise_to_error(NoiseProcess::Detuning, Bandwidth::PerGate, 1e-3, 1e-3, 100, n as usize).unwrap();
        let expect = (n + 2.0) * 199.0 * s.sigma_c4 / ((204.0 + n) * s.sigma_u4);
        assert!((r / expect - 1.0).abs() < 1e-12, "n={n}: {r} vs {expect}");
    }
    assert!(ratios[9] / ratios[0] > 4.0);
}

#[test]
fn simulated_variance_ratio_tracks_analytic_ratio() {
    let (k, j, n, rho2) = (200, 100, 100, 2e-3);
    let corr = run_experiment(&detuning(k, j, n, rho2, Correlation::Full), None).unwrap();
    let unc = run_experiment(&detuning(k, j, n, rho2, Correlation::Block { gates: 1 }), None).unwrap();
    let order: Vec<usize> = (0..n).collect();
    let vc = *cumulative_variance(&corr.matrix(0), &order).unwrap().values.last().unwrap();
    let vu = *cumulative_variance(&unc.matrix(0), &order).unwrap().values.last().unwrap();
    let simulated = vc / vu;
    let analytic = analytic_ratio(j, n);
    eprintln!("V_C(100)/V_U(100): simulated {simulated:.2}, analytic {analytic:.2}");
    assert!(
        (simulated / analytic - 1.0).abs() <= 0.25,
        "simulated ratio {simulated:.2} vs analytic {analytic:.2}"
    );
}

fn negated(trace: &ChannelTrace) -> ChannelTrace {
    ChannelTrace {
        offset: -trace.offset,
        per_gate: trace.per_gate.iter().map(|v| -v).collect(),
        per_cell: trace.per_cell.iter().map(|v| -v).collect(),
    }
}

#[test]
fn walk_and_exact_survival_differ_at_second_order() {
    let (k, n, j) = (10usize, 10usize, 100usize);
    let sequences = sequences_for(SEED, k, j).unwrap();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for rho2 in [1e-5, 2e-5, 5e-5, 1e-4, 1.5e-4, 2e-4] {
        let spec = NoiseSpec::single(Channel::Detuning, rho2, Correlation::Full);
        let mut gap = 0.0;
        for (ki, seq) in sequences.iter().enumerate() {
            let timing = SequenceTiming::new(seq, Family::Primitive);
            for ni in 0..n {
                let key = TraceKey { seed: SEED, sequence: ki as u64, realization: ni as u64, qubit: 0 };
                let base = sample_trace(&spec, &timing, key);
                // ±δ pairs cancel the odd orders exactly
                for det in [base.clone(), negated(&base)] {
                    let trace = NoiseTrace { detuning: det, ..Default::default() };
                    let exact = run_sequence(seq, Family::Primitive, &timing, &trace).unwrap();
                    let r = walk_endpoint(&first_order_walk(seq, Family::Primitive, &timing, &trace));
                    gap += (1.0 - r[0] * r[0] - r[1] * r[1]) - exact;
                }
            }
        }
        xs.push(j as f64 * rho2);
        ys.push(gap / (2 * k * n) as f64);
    }
    // y = c x² through the origin
    let c = xs.iter().zip(&ys).map(|(x, y)| x * x * y).sum::<f64>() / xs.iter().map(|x| x.powi(4)).sum::<f64>();
    let mean = ys.iter().sum::<f64>() / ys.len() as f64;
    let ss_res: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - c * x * x).powi(2)).sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - mean).powi(2)).sum();
    let r2 = 1.0 - ss_res / ss_tot;
    eprintln!("walk − exact envelope: c = {c:.3}, R² = {r2:.4}, gaps {ys:?}");
    assert!(r2 >= 0.95, "R² = {r2}");
}

#[test]
fn correlated_error_distribution_is_exponential() {
    let (k, j, n, rho2) = (500, 100, 200, 2e-3);
    let r = run_experiment(&detuning(k, j, n, rho2, Correlation::Full), None).unwrap();
    let errors: Vec<f64> = r.matrix(0).iter().map(|row| 1.0 - row.iter().sum::<f64>() / n as f64).collect();
    let law = predict(NoiseProcess::Detuning, Bandwidth::PerGate, rho2, 0.0, j, n).unwrap().gamma;
    let ks = ks_distance(&errors, &law);
    let mean = errors.iter().sum::<f64>() / k as f64;
    eprintln!("KS {ks:.3} against Γ({}, {:.4}); sample mean {mean:.4}", law.shape, law.scale);
    assert!(ks <= 0.08, "KS distance {ks:.3}");
}
