//! Simulate, estimate, infer, score.

use std::time::Instant;

use photon_maxent::maxent::{solve_moments, solve_povm};
use photon_maxent::maxlik::{estimate_moments, model_off_probability, third_order_term};
use photon_maxent::simulate::{simulate_experiment, RNG_ALGORITHM};
use photon_maxent::{fidelity, Efficiency, Error, MaxEntState, PhotonDistribution};

use crate::config::{ConfigError, Estimator, ExperimentConfig};
use crate::report::{ChannelReport, ExperimentReport, MaxEntReport, MomentReport, Status, Timings};

pub struct PipelineRun {
    pub report: ExperimentReport,
    pub timings: Timings,
}

/// Run the configured two-step (or POVM-level) reconstruction.
///
/// Data-dependent failures (unphysical moments, a solver running out of
/// iterations) still produce a report, flagged by its status. Only invalid
/// configurations are errors.
pub fn run_pipeline(config: &ExperimentConfig) -> Result<PipelineRun, ConfigError> {
    config.validate()?;
    let total = Instant::now();
    let mut timings = Timings::default();
    let truth = config.state.distribution(config.solver.tail_tol)?;
    let design = config.design.build()?;
    let true_n1 = truth.moment(1)?;
    let true_n2 = truth.moment(2)?;
    let true_n3 = truth.moment(3)?;

    let t = Instant::now();
    let observations: Vec<(Efficiency, f64, Option<u64>)> = if config.noiseless {
        design
            .efficiencies()
            .iter()
            .map(|&e| {
                let p = match config.estimator {
                    Estimator::TwoStepMoments => model_off_probability(true_n1, true_n2, e)?,
                    Estimator::FullPovm => truth.off_probability(e),
                };
                Ok((e, p, None))
            })
            .collect::<Result<_, Error>>()?
    } else {
        simulate_experiment(&truth, &design)?
            .into_iter()
            .map(|r| (r.efficiency(), r.frequency(), Some(r.off_count())))
            .collect()
    };
    timings.record("simulate", t.elapsed().as_secs_f64());

    let channels = observations
        .iter()
        .map(|&(e, f, off_count)| {
            let exact = truth.off_probability(e);
            let model = 1.0 + photon_maxent::maxlik::model_coefficients(e).0 * true_n1
                + photon_maxent::maxlik::model_coefficients(e).1 * true_n2;
            ChannelReport {
                eta: e.value(),
                shots: design.shots_per_channel(),
                off_count,
                frequency: f,
                exact_off_probability: exact,
                model_bias: (exact - model).abs(),
                third_order_term: third_order_term(true_n1, true_n2, true_n3, e),
            }
        })
        .collect();
    let freqs: Vec<(Efficiency, f64)> = observations.iter().map(|&(e, f, _)| (e, f)).collect();

    let mut report = ExperimentReport {
        status: Status::Success,
        message: None,
        config: config.clone(),
        seed: design.seed(),
        rng_algorithm: RNG_ALGORITHM.to_owned(),
        channels,
        moment_estimate: None,
        maxent: None,
        true_distribution: truth.probs().to_vec(),
        inferred_distribution: None,
        fidelity: None,
    };

    let maxent_opts = config.solver.maxent();
    let solved = match config.estimator {
        Estimator::TwoStepMoments => {
            let t = Instant::now();
            let estimate = match estimate_moments(&freqs, &config.solver.maxlik()) {
                Ok(e) => e,
                Err(e) => {
                    timings.record("estimate", t.elapsed().as_secs_f64());
                    report.status = Status::NotConverged;
                    report.message = Some(e.to_string());
                    return Ok(finish(report, timings, total));
                }
            };
            timings.record("estimate", t.elapsed().as_secs_f64());
            report.moment_estimate = Some(MomentReport::from(&estimate));
            if !estimate.converged {
                report.status = Status::NotConverged;
                report.message = Some("moment estimate did not converge".into());
            }
            let t = Instant::now();
            let solved = solve_moments(estimate.n1, estimate.n2, &maxent_opts);
            timings.record("maxent", t.elapsed().as_secs_f64());
            solved
        }
        Estimator::FullPovm => {
            let t = Instant::now();
            let solved = solve_povm(&freqs, config.solver.povm_cutoff, &maxent_opts);
            timings.record("maxent", t.elapsed().as_secs_f64());
            solved
        }
    };

    match solved {
        Ok(state) => attach(&mut report, &truth, &state),
        Err(Error::NotConverged(state)) => {
            attach(&mut report, &truth, &state);
            report.status = Status::NotConverged;
            report.message = Some(format!(
                "maximum-entropy solve did not converge (max residual {:e})",
                state.max_residual()
            ));
        }
        Err(
            e @ (Error::Unphysical { .. }
            | Error::NearDegenerate { .. }
            | Error::LatticeInfeasible { .. }),
        ) => {
            report.status = Status::Unphysical;
            report.message = Some(e.to_string());
        }
        Err(e) => {
            report.status = Status::NotConverged;
            report.message = Some(e.to_string());
        }
    }
    Ok(finish(report, timings, total))
}

fn attach(report: &mut ExperimentReport, truth: &PhotonDistribution, state: &MaxEntState) {
    let inferred = state.distribution();
    report.fidelity = Some(fidelity(truth, &inferred).value());
    report.inferred_distribution = Some(inferred.probs().to_vec());
    report.maxent = Some(MaxEntReport::from(state));
}

fn finish(report: ExperimentReport, mut timings: Timings, total: Instant) -> PipelineRun {
    timings.record("total", total.elapsed().as_secs_f64());
    PipelineRun { report, timings }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::StateSpec;
    use photon_maxent::states::DEFAULT_TAIL_TOL;

    #[test]
    fn fidelity_matches_embedded_distributions() {
        let config = ExperimentConfig::reference(StateSpec::Coherent { mean: 1.0 }, 3);
        let run = run_pipeline(&config).unwrap();
        let r = &run.report;
        assert_eq!(r.status, Status::Success);
        let p = PhotonDistribution::from_probs(r.true_distribution.clone(), DEFAULT_TAIL_TOL).unwrap();
        let q = PhotonDistribution::from_probs(r.inferred_distribution.clone().unwrap(), 1e-9)
            .unwrap();
        assert_eq!(r.fidelity.unwrap(), fidelity(&p, &q).value());
    }

    #[test]
    fn noiseless_coherent_recovers_moments() {
        let mut config = ExperimentConfig::reference(StateSpec::Coherent { mean: 1.0 }, 0);
        config.noiseless = true;
        let r = run_pipeline(&config).unwrap().report;
        let m = r.moment_estimate.unwrap();
        assert!((m.n1 - 1.0).abs() < 1e-6 && (m.n2 - 2.0).abs() < 1e-6);
        assert!(r.channels.iter().all(|c| c.off_count.is_none()));
        // regression baseline for how well the two-moment family mimics a
        // Poisson law with mean 1
        let f = r.fidelity.unwrap();
        assert!((f - 0.999_498_53).abs() < 1e-6, "{f}");
    }

    #[test]
    fn noiseless_fock_hits_point_mass() {
        let mut config = ExperimentConfig::reference(StateSpec::Fock { photons: 2 }, 0);
        config.noiseless = true;
        let r = run_pipeline(&config).unwrap().report;
        assert_eq!(r.maxent.unwrap().point_mass, Some(2));
        assert_eq!(r.fidelity, Some(1.0));
    }

    #[test]
    fn noiseless_povm_estimator() {
        let mut config = ExperimentConfig::reference(StateSpec::Coherent { mean: 1.0 }, 0);
        config.noiseless = true;
        config.estimator = Estimator::FullPovm;
        let r = run_pipeline(&config).unwrap().report;
        let me = r.maxent.unwrap();
        assert_eq!(me.observation_level, "povm(5)");
        assert!(r.moment_estimate.is_none());
        if r.status == Status::Success {
            assert!(me.residuals.iter().all(|x| x.abs() <= 1e-8));
        }
    }

    #[test]
    fn unphysical_estimate_is_reported() {
        // frequencies whose quadratic curvature is strongly negative
        let mut config = ExperimentConfig::reference(StateSpec::Fock { photons: 2 }, 0);
        let mut found = false;
        for seed in 0..20 {
            config.design.seed = seed;
            let r = run_pipeline(&config).unwrap().report;
            if !r.moment_estimate.as_ref().unwrap().physical {
                assert_eq!(r.status, Status::Unphysical);
                assert!(r.fidelity.is_none());
                found = true;
                break;
            }
        }
        assert!(found);
    }
}
