use photon_maxent::maxent::{solve_moments, solve_povm};
use photon_maxent::maxlik::{estimate_moments, model_off_probability};
use photon_maxent::simulate::simulate_experiment;
use photon_maxent::{
    fidelity, physicality, Efficiency, ExperimentDesign, MaxEntOptions, MaxLikOptions,
    PhotonDistribution,
};

fn design(seed: u64) -> ExperimentDesign {
    ExperimentDesign::evenly_spaced(0.01, 0.05, 5, 1_000_000, seed).unwrap()
}

#[test]
fn noiseless_two_step_reconstruction() {
    let truth = PhotonDistribution::coherent(2.0, 1e-12).unwrap();
    let (n1, n2) = (truth.moment(1).unwrap(), truth.moment(2).unwrap());
    let records: Vec<(Efficiency, f64)> = design(0)
        .efficiencies()
        .iter()
        .map(|&e| (e, model_off_probability(n1, n2, e).unwrap()))
        .collect();
    let est = estimate_moments(&records, &MaxLikOptions::default()).unwrap();
    assert!((est.n1 - n1).abs() < 1e-6 && (est.n2 - n2).abs() < 1e-6);
    let state = solve_moments(est.n1, est.n2, &MaxEntOptions::default()).unwrap();
    let f = fidelity(&truth, &state.distribution()).value();
    assert!(f > 0.998 && f <= 1.0, "{f}");
}

#[test]
fn simulated_two_step_reconstruction() {
    let truth = PhotonDistribution::coherent(1.0, 1e-12).unwrap();
    let records = simulate_experiment(&truth, &design(7)).unwrap();
    let est = estimate_moments(&records, &MaxLikOptions::default()).unwrap();
    assert!(est.converged);
    assert!(physicality(est.n1, est.n2).unwrap());
    let state = solve_moments(est.n1, est.n2, &MaxEntOptions::default()).unwrap();
    assert!(state.converged);
    let f = fidelity(&truth, &state.distribution()).value();
    assert!(f > 0.9, "{f}");
}

#[test]
fn povm_level_reconstruction_matches_data() {
    let truth = PhotonDistribution::thermal(1.0, 1e-12).unwrap();
    let probs: Vec<(Efficiency, f64)> = design(0)
        .efficiencies()
        .iter()
        .map(|&e| (e, truth.off_probability(e)))
        .collect();
    let state = solve_povm(&probs, 30, &MaxEntOptions::default()).unwrap();
    let q = state.distribution();
    for &(e, p) in &probs {
        assert!((q.off_probability(e) - p).abs() <= 1e-8);
    }
}
