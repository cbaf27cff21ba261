use proptest::prelude::*;

use dcgrb::analysis::{cross_correlation, cumulative_variance, shuffle_ensemble};
use dcgrb::engine::{qpn_sample, run_sequence};
use dcgrb::filterfn::filter_transfer;
use dcgrb::noise::{
    gradient_profile, sample_trace, stream, Channel, Correlation, NoiseComponent, NoiseSpec, NoiseTrace, Scope,
    SequenceTiming, TraceKey,
};
use dcgrb::pulses::{ideal_unitary, schedule_table, Family};
use dcgrb::rotations::{clifford_table, unitary_of, CliffordIndex, Rotation, Unitary2};
use dcgrb::theory::{accumulate_walk, gamma_params, moments, ErrorStrengths, Regime};

fn family() -> impl Strategy<Value = Family> {
    prop::sample::select(Family::ALL.to_vec())
}

fn clifford() -> impl Strategy<Value = CliffordIndex> {
    (1u8..=24).prop_map(|l| CliffordIndex::new(l).unwrap())
}

fn matmul(a: &[[f64; 3]; 3], b: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut c = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    c
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rotations_are_unitary(x in -1.0f64..1.0, y in -1.0f64..1.0, z in -1.0f64..1.0, angle in -6.28f64..12.5) {
        let norm = (x * x + y * y + z * z).sqrt();
        prop_assume!(norm > 1e-3);
        let r = Rotation::new([x / norm, y / norm, z / norm], angle).unwrap();
        prop_assert!(unitary_of(&r).unitarity_defect() < 1e-12);
    }

    #[test]
    fn composition_is_a_homomorphism(a in clifford(), b in clifford()) {
        let t = clifford_table();
        let ab = t.compose(a, b);
        let product = matmul(t.so3(b), t.so3(a));
        for (row, expect) in t.so3(ab).iter().zip(&product) {
            for (u, v) in row.iter().zip(expect) {
                prop_assert!((u - v).abs() < 1e-12);
            }
        }
        prop_assert_eq!(t.compose(a, t.inverse(a)), CliffordIndex::IDENTITY);
    }

    #[test]
    fn random_sequences_close_to_identity(seed in any::<u64>(), gates in 2usize..400) {
        let seq = clifford_table().generate_sequence(gates, &mut stream(seed, &[1])).unwrap();
        prop_assert_eq!(seq.len(), gates);
        prop_assert!(seq.ideal_product().infidelity(&Unitary2::IDENTITY) < 1e-10);
    }

    #[test]
    fn compiled_schedules_implement_their_clifford(f in family(), c in clifford()) {
        let s = &schedule_table(f)[c.slot()];
        let target = clifford_table().get(c).decomposed_unitary();
        let framed = Unitary2::rz(s.phi_post) * ideal_unitary(s) * Unitary2::rz(s.phi_pre);
        prop_assert!(framed.infidelity(&target) < 1e-10);
    }

    #[test]
    fn noiseless_sequences_survive(f in family(), seed in any::<u64>(), gates in 2usize..60) {
        let seq = clifford_table().generate_sequence(gates, &mut stream(seed, &[2])).unwrap();
        let timing = SequenceTiming::new(&seq, f);
        let p = run_sequence(&seq, f, &timing, &NoiseTrace::default()).unwrap();
        prop_assert!((p - 1.0).abs() < 1e-12);
    }

    #[test]
    fn traces_replay_and_respect_blocks(seed in any::<u64>(), block in 1usize..30, k in 0u64..100, n in 0u64..100) {
        let seq = clifford_table().generate_sequence(60, &mut stream(seed, &[3])).unwrap();
        let timing = SequenceTiming::new(&seq, Family::Corpse);
        let spec = NoiseSpec {
            channel: Channel::Detuning,
            components: vec![
                NoiseComponent { rms2: 1e-3, correlation: Correlation::Block { gates: block }, scope: Scope::Shared },
                NoiseComponent { rms2: 1e-4, correlation: Correlation::PerPi2Time, scope: Scope::Shared },
            ],
        };
        let key = TraceKey { seed, sequence: k, realization: n, qubit: 0 };
        let a = sample_trace(&spec, &timing, key);
        prop_assert_eq!(&a, &sample_trace(&spec, &timing, key));
        prop_assert_eq!(a.per_gate.len(), 60);
        prop_assert_eq!(a.per_cell.len(), timing.cells());
        for (j, v) in a.per_gate.iter().enumerate() {
            prop_assert_eq!(*v, a.per_gate[j - j % block]);
        }
    }

    #[test]
    fn gradient_profiles_are_linear_from_one(q in 1usize..10, gamma in -0.049f64..0.049) {
        let p = gradient_profile(q, gamma).unwrap();
        prop_assert_eq!(p.multipliers[0], 1.0);
        for (i, g) in p.multipliers.iter().enumerate() {
            prop_assert!((g - 1.0 - i as f64 * gamma).abs() < 1e-15);
        }
    }

    #[test]
    fn walk_total_is_weighted_sum(steps in prop::collection::vec(prop::array::uniform3(-1.0f64..1.0), 1..50), w in -0.1f64..0.1) {
        let eps: Vec<f64> = (0..steps.len()).map(|i| w * (i as f64 + 1.0)).collect();
        let rec = accumulate_walk(&steps, &eps).unwrap();
        for c in 0..3 {
            let direct: f64 = steps.iter().zip(&eps).map(|(s, e)| s[c] * e).sum();
            prop_assert!((rec.total[c] - direct).abs() < 1e-12);
        }
        prop_assert_eq!(rec.total_xy, [rec.total[0], rec.total[1]]);
    }

    #[test]
    fn gamma_laws_reproduce_their_moments(sc in 1e-6f64..1e-2, su in 1e-6f64..1e-2, j in 2usize..500, n in 1usize..300) {
        let s = ErrorStrengths::from_sigma(sc, su);
        for regime in [Regime::Correlated, Regime::Uncorrelated, Regime::Mixed] {
            let m = moments(regime, j, n, &s);
            prop_assert!(m.variance >= 0.0);
            let g = gamma_params(&m).unwrap();
            prop_assert!(g.shape > 0.0 && g.scale > 0.0);
            prop_assert!((g.mean() / m.mean_error - 1.0).abs() < 1e-12);
            if regime == Regime::Mixed {
                prop_assert!((g.variance() / m.variance - 1.0).abs() < 1e-12);
                let sum = moments(Regime::Correlated, j, n, &s).mean_error + moments(Regime::Uncorrelated, j, n, &s).mean_error;
                prop_assert!((m.mean_error / sum - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn trajectories_are_nonnegative_with_fixed_endpoint(
        data in prop::collection::vec(prop::collection::vec(0.0f64..1.0, 12), 2..8),
        seed in any::<u64>(),
    ) {
        let order: Vec<usize> = (0..12).collect();
        let v = cumulative_variance(&data, &order).unwrap();
        prop_assert!(v.values.iter().all(|&x| x >= 0.0));
        let ens = shuffle_ensemble(&data, 5, seed).unwrap();
        let end = v.values[11];
        prop_assert!((ens.min[11] - end).abs() <= 1e-12 * end.max(1e-300) + 1e-18);
        prop_assert!((ens.max[11] - end).abs() <= 1e-12 * end.max(1e-300) + 1e-18);
    }

    #[test]
    fn correlation_matrices_are_symmetric(cols in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 12), 2..5)) {
        prop_assume!(cols.iter().all(|c| c.iter().any(|&x| (x - c[0]).abs() > 1e-6)));
        let m = cross_correlation(&cols).unwrap();
        for i in 0..m.len() {
            prop_assert!((m[i][i] - 1.0).abs() < 1e-12);
            for j in 0..m.len() {
                prop_assert!((m[i][j] - m[j][i]).abs() < 1e-15);
                prop_assert!(m[i][j].abs() <= 1.0 + 1e-12);
            }
        }
    }

    #[test]
    fn transfer_functions_are_hermitian(f in family(), c in clifford(), w in 0.0f64..50.0) {
        let s = &schedule_table(f)[c.slot()];
        for ch in [Channel::Detuning, Channel::Amplitude] {
            let g = filter_transfer(s, ch, &[w, -w]);
            for (a, b) in g.g[0].iter().zip(&g.g[1]) {
                prop_assert!((a - b.conj()).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn shot_estimates_are_probabilities(p in 0.0f64..=1.0, r in 1u64..2000, seed in any::<u64>()) {
        let est = qpn_sample(p, r, &mut stream(seed, &[4])).unwrap();
        prop_assert!((0.0..=1.0).contains(&est));
        prop_assert!((est * r as f64 - (est * r as f64).round()).abs() < 1e-9);
    }
}
