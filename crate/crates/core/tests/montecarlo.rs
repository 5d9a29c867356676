//! Coincidence synthesis against the closed-form prediction, blinking
//! invariance of the estimator and run-to-run determinism.

use homsim::hom::{analytic_prediction, simulate_histogram_with, simulate_hom, HomExperimentConfig, Polarization};
use homsim::overlap::SourcePair;
use homsim::parallel::Execution;
use homsim::units::{Frequency, Rate};
use homsim::wavepacket::EmitterParams;

fn noisy(t1_ps: f64, gamma_star: f64, delta_omega: f64, tau_c_ns: f64) -> EmitterParams {
    EmitterParams {
        gamma_star: Rate::new(gamma_star).unwrap(),
        delta_omega: Rate::new(delta_omega).unwrap(),
        tau_c_ns,
        brightness: 0.4,
        ..EmitterParams::ideal(t1_ps)
    }
}

/// Equal lifetimes give a unit classical overlap, where the event-wise and
/// averaged forms coincide exactly.
fn pair(gamma_star: f64, delta_omega: f64, tau_c_ns: f64, detuning: f64) -> SourcePair {
    SourcePair {
        a: noisy(150.0, gamma_star, delta_omega, tau_c_ns),
        b: noisy(150.0, 0.5 * gamma_star, 0.7 * delta_omega, 0.5 * tau_c_ns),
        mean_detuning: Frequency::new(detuning).unwrap(),
        s_classical: 1.0,
        filter: None,
    }
}

fn experiment(n_pulses: u64) -> HomExperimentConfig {
    HomExperimentConfig {
        n_pulses,
        ..HomExperimentConfig::default()
    }
}

#[test]
fn simulated_visibility_matches_prediction() {
    let cases = [
        (0.0, 0.0, 50.0, 0.0),
        (0.3, 2.0, 20.0, 0.0),
        (0.1, 4.0, 80.0, 1.5),
        (1.0, 1.0, 5.0, -3.0),
    ];
    for (k, &(gs, dw, tau, det)) in cases.iter().enumerate() {
        let p = pair(gs, dw, tau, det);
        let predicted = analytic_prediction(&p).unwrap();
        let run = simulate_hom(&p, &experiment(2_000_000), 300 + k as u64, Execution::default()).unwrap();
        let est = run.estimate;
        assert!(
            (est.v_tpi - predicted).abs() <= 3.0 * est.sigma,
            "case {k}: simulated {} ± {} vs predicted {predicted}",
            est.v_tpi,
            est.sigma
        );
    }
}

#[test]
fn sideband_photons_lower_the_visibility_as_predicted() {
    let mut p = pair(0.2, 1.0, 30.0, 0.0);
    p.a.sideband_fraction = 0.1;
    p.b.sideband_fraction = 0.05;
    let predicted = analytic_prediction(&p).unwrap();
    let est = simulate_hom(&p, &experiment(2_000_000), 41, Execution::default())
        .unwrap()
        .estimate;
    assert!(
        (est.v_tpi - predicted).abs() <= 3.0 * est.sigma,
        "{} ± {} vs {predicted}",
        est.v_tpi,
        est.sigma
    );
}

#[test]
fn blinking_leaves_the_estimator_unchanged() {
    let p = pair(0.3, 2.0, 40.0, 0.0);
    let steady = experiment(2_000_000);
    let blinking = HomExperimentConfig {
        blink_on_prob: 0.6,
        blink_dwell_ns: 200.0,
        ..steady.clone()
    };
    let a = simulate_hom(&p, &steady, 77, Execution::default()).unwrap();
    let b = simulate_hom(&p, &blinking, 77, Execution::default()).unwrap();
    // Blinking bunches the side peaks but the central ratio is untouched.
    let diff = (a.estimate.v_tpi - b.estimate.v_tpi).abs();
    let sigma = a.estimate.sigma.hypot(b.estimate.sigma);
    assert!(
        diff <= 3.0 * sigma,
        "{} vs {} (σ {sigma})",
        a.estimate.v_tpi,
        b.estimate.v_tpi
    );
}

#[test]
fn blinking_bunches_neighbouring_side_peaks() {
    let p = pair(0.0, 0.0, 50.0, 0.0);
    let cfg = HomExperimentConfig {
        blink_on_prob: 0.5,
        blink_dwell_ns: 30.0,
        window_peaks: 8,
        ..experiment(2_000_000)
    };
    let h = simulate_histogram_with(&p, &cfg, Polarization::Perpendicular, 5, Execution::default()).unwrap();
    let near = h.peak_area(1) as f64;
    let far = h.peak_area(8) as f64;
    assert!(near > far + 3.0 * (near + far).sqrt(), "near {near}, far {far}");
}

#[test]
fn histograms_do_not_depend_on_worker_count() {
    let p = pair(0.3, 2.0, 40.0, 0.5);
    let cfg = experiment(400_000);
    for pol in [Polarization::Parallel, Polarization::Perpendicular] {
        let seq = simulate_histogram_with(&p, &cfg, pol, 9, Execution::Sequential).unwrap();
        let par = simulate_histogram_with(&p, &cfg, pol, 9, Execution::Parallel { threads: Some(3) }).unwrap();
        assert_eq!(seq, par);
    }
}

#[test]
fn different_seeds_give_different_histograms() {
    let p = pair(0.3, 2.0, 40.0, 0.0);
    let cfg = experiment(200_000);
    let a = simulate_histogram_with(&p, &cfg, Polarization::Parallel, 1, Execution::Sequential).unwrap();
    let b = simulate_histogram_with(&p, &cfg, Polarization::Parallel, 2, Execution::Sequential).unwrap();
    assert_ne!(a.counts, b.counts);
}
