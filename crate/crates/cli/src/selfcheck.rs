//! Invariant checks against closed-form oracles. Output is deterministic:
//! every random point comes from a fixed seed.

use photon_maxent::maxent::{solve_mean, solve_povm};
use photon_maxent::maxlik::{
    estimate_moments, likelihood_gradient, model_off_probability, normalized_log_likelihood,
};
use photon_maxent::simulate::channel_rng;
use photon_maxent::{
    fidelity, Efficiency, MaxEntOptions, MaxEntState, MaxLikOptions, ObservationLevel,
    PhotonDistribution,
};
use rand::Rng;

pub const THERMAL_TOL: f64 = 1e-8;
pub const GRADIENT_REL_TOL: f64 = 1e-6;
pub const MOMENT_ROUND_TRIP_TOL: f64 = 1e-6;
pub const POVM_RESIDUAL_TOL: f64 = 1e-8;
pub const MODEL_EXACTNESS_TOL: f64 = 1e-12;

const SEED: u64 = 20_240_611;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &'static str, passed: bool, detail: String) -> Self {
        Self {
            name,
            passed,
            detail,
        }
    }

    pub fn line(&self) -> String {
        format!(
            "{} {}: {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.detail
        )
    }
}

fn eta(x: f64) -> Efficiency {
    Efficiency::new(x).expect("efficiency constants lie in (0, 1)")
}

fn reference_etas() -> Vec<Efficiency> {
    [0.01, 0.02, 0.03, 0.04, 0.05].iter().map(|&x| eta(x)).collect()
}

pub fn run_all() -> Vec<Check> {
    vec![
        thermal_oracle(),
        model_exactness(),
        likelihood_gradient_check(),
        maxent_jacobian_check(),
        noiseless_moments(),
        noiseless_povm(),
        fidelity_identity(),
    ]
}

/// The mean-only solution is `mu^n / (1 + mu)^(n + 1)`.
pub fn thermal_oracle() -> Check {
    let mut worst: f64 = 0.0;
    let mut ok = true;
    for &mu in &[0.5, 1.0, 3.0] {
        match solve_mean(mu, &MaxEntOptions::default()) {
            Ok(state) => {
                let q = state.distribution();
                let r = mu / (1.0 + mu);
                for (n, &qn) in q.probs().iter().enumerate() {
                    let exact = r.powi(n as i32) / (1.0 + mu);
                    worst = worst.max((qn - exact).abs());
                }
            }
            Err(_) => ok = false,
        }
    }
    Check::new(
        "thermal oracle",
        ok && worst <= THERMAL_TOL,
        format!("max component error {worst:e} (tol {THERMAL_TOL:e}) for mu in {{0.5, 1, 3}}"),
    )
}

/// Distributions on `{0, 1, 2}` make the quadratic off-probability exact.
pub fn model_exactness() -> Check {
    let mut rng = channel_rng(SEED, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let w: [f64; 3] = [rng.random(), rng.random(), rng.random()];
        let total: f64 = w.iter().sum();
        let dist = PhotonDistribution::from_probs(w.iter().map(|x| x / total).collect(), 0.0)
            .expect("normalized weights");
        let (n1, n2) = (dist.moment(1).unwrap(), dist.moment(2).unwrap());
        for _ in 0..10 {
            let e = eta(rng.random_range(1e-6..0.2));
            let exact = dist.off_probability(e);
            let diff = match model_off_probability(n1, n2, e) {
                Ok(model) => (model - exact).abs(),
                Err(_) => f64::INFINITY,
            };
            worst = worst.max(diff);
        }
    }
    Check::new(
        "model exactness",
        worst <= MODEL_EXACTNESS_TOL,
        format!("max |p_model - p_exact| {worst:e} over 2000 (support <= 2, eta < 0.2) draws"),
    )
}

fn central_difference<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(f64::MIN_POSITIVE)
}

/// Log-likelihood gradient against central differences on 20 random
/// feasible points, with coherent `mu = 1` frequencies as data.
pub fn likelihood_gradient_check() -> Check {
    let truth = PhotonDistribution::coherent(1.0, 1e-12).expect("valid mean");
    let records: Vec<(Efficiency, f64)> = reference_etas()
        .into_iter()
        .map(|e| (e, truth.off_probability(e)))
        .collect();
    let mut rng = channel_rng(SEED, 1);
    let mut worst: f64 = 0.0;
    let mut ok = true;
    for _ in 0..20 {
        let n1: f64 = rng.random_range(0.2..5.0);
        let n2 = n1 * n1 + rng.random_range(0.0..3.0) * n1;
        let Ok(g) = likelihood_gradient(&records, n1, n2) else {
            ok = false;
            continue;
        };
        let l = |a: f64, b: f64| normalized_log_likelihood(&records, a, b).unwrap_or(f64::NAN);
        let fd1 = central_difference(|x| l(x, n2), n1, 1e-5 * n1);
        let fd2 = central_difference(|x| l(n1, x), n2, 1e-5 * n2);
        worst = worst.max(relative_error(g[0], fd1)).max(relative_error(g[1], fd2));
    }
    Check::new(
        "likelihood gradient",
        ok && worst <= GRADIENT_REL_TOL,
        format!("max relative error {worst:e} on 20 points (tol {GRADIENT_REL_TOL:e})"),
    )
}

/// Constraint Jacobian of the exponential family against central
/// differences in the multipliers.
pub fn maxent_jacobian_check() -> Check {
    let mut rng = channel_rng(SEED, 2);
    let mut worst: f64 = 0.0;
    let mut ok = true;
    for trial in 0..20 {
        let (level, lambdas, cutoff) = if trial % 2 == 0 {
            (
                ObservationLevel::two_moments(),
                vec![rng.random_range(-0.5..1.5), rng.random_range(0.01..0.5)],
                60,
            )
        } else {
            (
                ObservationLevel::Povm {
                    efficiencies: reference_etas(),
                },
                (0..5).map(|_| rng.random_range(-1.0..1.0)).collect(),
                30,
            )
        };
        let Ok(state) = MaxEntState::from_multipliers(level.clone(), lambdas.clone(), cutoff)
        else {
            ok = false;
            continue;
        };
        let jac = state.constraint_jacobian();
        let k = lambdas.len();
        for j in 0..k {
            let h = 1e-6 * lambdas[j].abs().max(1.0);
            let values = |d: f64| {
                let mut l = lambdas.clone();
                l[j] += d;
                MaxEntState::from_multipliers(level.clone(), l, cutoff)
                    .map(|s| s.constraint_values())
                    .unwrap_or_else(|_| vec![f64::NAN; k])
            };
            let (plus, minus) = (values(h), values(-h));
            for i in 0..k {
                let fd = (plus[i] - minus[i]) / (2.0 * h);
                worst = worst.max(relative_error(jac[i * k + j], fd));
            }
        }
    }
    Check::new(
        "maxent jacobian",
        ok && worst <= GRADIENT_REL_TOL,
        format!("max relative error {worst:e} on 20 multiplier vectors (tol {GRADIENT_REL_TOL:e})"),
    )
}

/// Exact model frequencies give back the moments they came from.
pub fn noiseless_moments() -> Check {
    let mut worst: f64 = 0.0;
    let mut ok = true;
    for &(n1, n2) in &[(1.0, 2.0), (2.0, 6.0), (3.0, 12.0), (2.0, 4.5), (0.5, 0.8)] {
        let records: Result<Vec<_>, _> = reference_etas()
            .into_iter()
            .map(|e| model_off_probability(n1, n2, e).map(|p| (e, p)))
            .collect();
        match records.map(|r| estimate_moments(&r, &MaxLikOptions::default())) {
            Ok(Ok(est)) if est.converged => {
                worst = worst.max((est.n1 - n1).abs()).max((est.n2 - n2).abs());
            }
            _ => ok = false,
        }
    }
    Check::new(
        "noiseless moment round trip",
        ok && worst <= MOMENT_ROUND_TRIP_TOL,
        format!("max moment error {worst:e} (tol {MOMENT_ROUND_TRIP_TOL:e})"),
    )
}

/// Off probabilities computed forward from a distribution are matched by
/// the POVM-level solve.
pub fn noiseless_povm() -> Check {
    let mut worst: f64 = 0.0;
    let mut ok = true;
    let cases = [
        PhotonDistribution::coherent(1.0, 1e-12).expect("valid mean"),
        PhotonDistribution::thermal(2.0, 1e-12).expect("valid mean"),
        PhotonDistribution::from_probs(vec![0.2, 0.3, 0.4, 0.1], 0.0).expect("normalized"),
    ];
    for dist in &cases {
        let probs: Vec<(Efficiency, f64)> = reference_etas()
            .into_iter()
            .map(|e| (e, dist.off_probability(e)))
            .collect();
        match solve_povm(&probs, 30, &MaxEntOptions::default()) {
            Ok(state) => worst = worst.max(state.max_residual()),
            Err(_) => ok = false,
        }
    }
    Check::new(
        "noiseless povm round trip",
        ok && worst <= POVM_RESIDUAL_TOL,
        format!("max residual {worst:e} (tol {POVM_RESIDUAL_TOL:e})"),
    )
}

pub fn fidelity_identity() -> Check {
    let cases = [
        PhotonDistribution::coherent(2.0, 1e-12).expect("valid mean"),
        PhotonDistribution::fock(3),
        PhotonDistribution::thermal(0.7, 1e-12).expect("valid mean"),
    ];
    let worst = cases
        .iter()
        .map(|d| (1.0 - fidelity(d, d).value()).abs())
        .fold(0.0, f64::max);
    Check::new(
        "fidelity identity",
        worst <= 1e-12,
        format!("max |1 - F(p, p)| {worst:e}"),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_checks_pass() {
        for c in run_all() {
            assert!(c.passed, "{}", c.line());
        }
    }

    #[test]
    fn output_is_deterministic() {
        assert_eq!(run_all(), run_all());
    }
}
