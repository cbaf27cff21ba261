//! Repeated fits to noisy synthetic trajectories: the estimator should be
//! nearly unbiased and its reported 1σ intervals roughly calibrated.

use dcgrb::analysis::{fit_error_components, fit_rb_decay, mixed_variance_model};
use dcgrb::noise::stream;
use rand_distr::{Distribution, StandardNormal};

const REPLICATES: u64 = 200;

#[test]
fn component_fit_is_unbiased_and_calibrated() {
    let (sc, su, j) = (1.2e-3, 3e-4, 100usize);
    let ns: Vec<usize> = (1..=200).collect();
    let truth: Vec<f64> = ns.iter().map(|&n| mixed_variance_model(n as f64, j as f64, sc, su)).collect();
    let (mut est_c, mut est_u) = (Vec::new(), Vec::new());
    let (mut cover_c, mut cover_u) = (0usize, 0usize);
    for rep in 0..REPLICATES {
        let mut rng = stream(5, &[rep]);
        let noisy: Vec<f64> = truth
            .iter()
            .map(|v| {
                let z: f64 = StandardNormal.sample(&mut rng);
                v * (1.0 + 0.02 * z)
            })
            .collect();
        let fit = fit_error_components(&ns, &noisy, j).unwrap();
        cover_c += usize::from((fit.sigma_c2 - sc).abs() <= fit.sigma_c2_err());
        cover_u += usize::from((fit.sigma_u2 - su).abs() <= fit.sigma_u2_err());
        est_c.push(fit.sigma_c2);
        est_u.push(fit.sigma_u2);
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let bias_c = mean(&est_c) / sc - 1.0;
    let bias_u = mean(&est_u) / su - 1.0;
    let cov_c = cover_c as f64 / REPLICATES as f64;
    let cov_u = cover_u as f64 / REPLICATES as f64;
    eprintln!("bias σC² {bias_c:+.4}, σU² {bias_u:+.4}; coverage {cov_c:.3}, {cov_u:.3}");
    assert!(bias_c.abs() < 0.05 && bias_u.abs() < 0.05, "bias {bias_c} {bias_u}");
    assert!((0.55..=0.80).contains(&cov_c), "σC² coverage {cov_c}");
    assert!((0.55..=0.80).contains(&cov_u), "σU² coverage {cov_u}");
}

#[test]
fn decay_fit_is_unbiased_and_calibrated() {
    let (p_rb, kappa) = (1.89e-5, 3.3e-3);
    let js = [2usize, 25, 50, 100, 200, 500];
    let (mut est_p, mut est_k) = (Vec::new(), Vec::new());
    let (mut cover_p, mut cover_k) = (0usize, 0usize);
    for rep in 0..REPLICATES {
        let mut rng = stream(6, &[rep]);
        let means: Vec<f64> = js
            .iter()
            .map(|&j| {
                let z: f64 = StandardNormal.sample(&mut rng);
                0.5 + (0.5 - kappa) * (-p_rb * j as f64).exp() + 2e-5 * z
            })
            .collect();
        let fit = fit_rb_decay(&js, &means).unwrap();
        cover_p += usize::from((fit.p_rb - p_rb).abs() <= fit.p_rb_err);
        cover_k += usize::from((fit.kappa - kappa).abs() <= fit.kappa_err);
        est_p.push(fit.p_rb);
        est_k.push(fit.kappa);
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let bias_p = mean(&est_p) / p_rb - 1.0;
    let bias_k = mean(&est_k) / kappa - 1.0;
    let cov_p = cover_p as f64 / REPLICATES as f64;
    let cov_k = cover_k as f64 / REPLICATES as f64;
    eprintln!("bias p {bias_p:+.4}, κ {bias_k:+.4}; coverage {cov_p:.3}, {cov_k:.3}");
    assert!(bias_p.abs() < 0.05 && bias_k.abs() < 0.05);
    assert!((0.55..=0.80).contains(&cov_p) && (0.55..=0.80).contains(&cov_k));
}
