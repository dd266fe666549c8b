//! Photon-number distributions over a truncated Fock basis.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

/// Tail mass allowed to be dropped by the closed-form constructors.
pub const DEFAULT_TAIL_TOL: f64 = 1e-12;

/// Slack on the normalization check for explicit distributions.
const NORMALIZATION_SLACK: f64 = 1e-12;

/// Hard cap on the Fock cutoff chosen by the adaptive truncation.
const MAX_CUTOFF: usize = 1 << 20;

/// Detector quantum efficiency, strictly inside `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Efficiency(f64);

impl Efficiency {
    pub fn new(eta: f64) -> Result<Self> {
        if eta > 0.0 && eta < 1.0 {
            Ok(Self(eta))
        } else {
            Err(Error::Domain {
                what: "quantum efficiency",
                value: eta,
            })
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    /// Off-outcome POVM weight of the `n`-photon component, `(1 - eta)^n`.
    #[inline]
    pub fn off_weight(self, n: u32) -> f64 {
        math::powi(1.0 - self.0, n)
    }
}

/// Diagonal of a density matrix in the Fock basis, `probs[n] = <n|rho|n>`,
/// for `n = 0..=cutoff`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhotonDistribution {
    probs: Vec<f64>,
    tail_mass_bound: f64,
}

impl PhotonDistribution {
    /// Wrap explicit probabilities. `tail_mass_bound` states how much
    /// probability is known to be missing beyond the last entry.
    pub fn from_probs(probs: Vec<f64>, tail_mass_bound: f64) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidDistribution("no entries"));
        }
        if !(0.0..1.0).contains(&tail_mass_bound) {
            return Err(Error::Domain {
                what: "tail mass bound",
                value: tail_mass_bound,
            });
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidDistribution(
                "probabilities must be finite and nonnegative",
            ));
        }
        let total: f64 = probs.iter().sum();
        if total > 1.0 + NORMALIZATION_SLACK
            || total < 1.0 - tail_mass_bound - NORMALIZATION_SLACK
        {
            return Err(Error::InvalidDistribution(
                "total probability outside [1 - tail_mass_bound, 1]",
            ));
        }
        Ok(Self {
            probs,
            tail_mass_bound,
        })
    }

    /// Internal constructor for distributions normalized by construction.
    pub(crate) fn new_unchecked(probs: Vec<f64>, tail_mass_bound: f64) -> Self {
        debug_assert!(!probs.is_empty());
        Self {
            probs,
            tail_mass_bound,
        }
    }

    /// Poisson law with mean `mean_photons`, the photon statistics of a
    /// coherent state with `|alpha|^2 = mean_photons`.
    pub fn coherent(mean_photons: f64, tail_tol: f64) -> Result<Self> {
        check_mean(mean_photons)?;
        check_tail_tol(tail_tol)?;
        if mean_photons == 0.0 {
            return Ok(Self::fock(0));
        }
        let ln_mu = math::ln(mean_photons);
        let ln_p = |n: usize| -mean_photons + n as f64 * ln_mu - math::ln_factorial(n);
        let mut probs = Vec::new();
        let mut n = 0usize;
        loop {
            probs.push(math::exp(ln_p(n)));
            // Past the mode the terms shrink at least geometrically with
            // ratio mu / (m + 1), which bounds the remaining tail.
            let next = n + 1;
            if (next + 1) as f64 > mean_photons {
                let ratio = mean_photons / (next + 1) as f64;
                let tail = math::exp(ln_p(next)) / (1.0 - ratio);
                if tail <= tail_tol {
                    return Ok(Self::new_unchecked(probs, tail));
                }
            }
            n = next;
            if n > MAX_CUTOFF {
                return Err(Error::Domain {
                    what: "mean photon number (cutoff too large)",
                    value: mean_photons,
                });
            }
        }
    }

    /// Number state `|m>`.
    pub fn fock(m: usize) -> Self {
        let mut probs = vec![0.0; m + 1];
        probs[m] = 1.0;
        Self::new_unchecked(probs, 0.0)
    }

    /// Geometric (Bose-Einstein) law `mu^n / (1 + mu)^(n + 1)`.
    pub fn thermal(mean_photons: f64, tail_tol: f64) -> Result<Self> {
        check_mean(mean_photons)?;
        check_tail_tol(tail_tol)?;
        if mean_photons == 0.0 {
            return Ok(Self::fock(0));
        }
        let ratio = mean_photons / (1.0 + mean_photons);
        let mut probs = Vec::new();
        let mut term = 1.0 / (1.0 + mean_photons);
        // tail beyond index M is exactly ratio^(M + 1)
        let mut tail = ratio;
        loop {
            probs.push(term);
            if tail <= tail_tol {
                return Ok(Self::new_unchecked(probs, tail));
            }
            term *= ratio;
            tail *= ratio;
            if probs.len() > MAX_CUTOFF {
                return Err(Error::Domain {
                    what: "mean photon number (cutoff too large)",
                    value: mean_photons,
                });
            }
        }
    }

    #[inline]
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Highest Fock index retained.
    #[inline]
    pub fn cutoff(&self) -> usize {
        self.probs.len() - 1
    }

    #[inline]
    pub fn tail_mass_bound(&self) -> f64 {
        self.tail_mass_bound
    }

    /// Probability of `n` photons; zero beyond the cutoff.
    #[inline]
    pub fn get(&self, n: usize) -> f64 {
        self.probs.get(n).copied().unwrap_or(0.0)
    }

    pub fn total_mass(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// `N_k = sum_n n^k rho_n` over the truncated basis.
    pub fn moment(&self, k: u32) -> Result<f64> {
        if k < 1 {
            return Err(Error::Domain {
                what: "moment order",
                value: k as f64,
            });
        }
        Ok(self
            .probs
            .iter()
            .enumerate()
            .map(|(n, p)| math::powi(n as f64, k) * p)
            .sum())
    }

    pub fn mean(&self) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(n, p)| n as f64 * p)
            .sum()
    }

    /// Mandel parameter `Q = -1 + (N2 - N1^2) / N1`.
    pub fn mandel_q(&self) -> Result<f64> {
        let n1 = self.mean();
        if n1 <= 0.0 {
            return Err(Error::UndefinedMandel);
        }
        let n2 = self.moment(2)?;
        Ok(-1.0 + (n2 - n1 * n1) / n1)
    }

    /// Probability that an on/off detector of efficiency `eff` stays off:
    /// `sum_n (1 - eta)^n rho_n`.
    pub fn off_probability(&self, eff: Efficiency) -> f64 {
        let q = 1.0 - eff.value();
        let mut weight = 1.0;
        let mut acc = 0.0;
        for p in &self.probs {
            acc += weight * p;
            weight *= q;
        }
        acc
    }

    /// Complement of [`off_probability`](Self::off_probability).
    pub fn on_probability(&self, eff: Efficiency) -> f64 {
        1.0 - self.off_probability(eff)
    }

    /// Shannon entropy in nats.
    pub fn entropy(&self) -> f64 {
        self.probs
            .iter()
            .filter(|p| **p > 0.0)
            .map(|p| -p * math::ln(*p))
            .sum()
    }
}

fn check_mean(mean: f64) -> Result<()> {
    if mean.is_finite() && mean >= 0.0 {
        Ok(())
    } else {
        Err(Error::Domain {
            what: "mean photon number",
            value: mean,
        })
    }
}

fn check_tail_tol(tol: f64) -> Result<()> {
    if tol > 0.0 && tol < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain {
            what: "tail tolerance",
            value: tol,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn eta(x: f64) -> Efficiency {
        Efficiency::new(x).unwrap()
    }

    // factorial-moment identity for a Poisson law: N1 = mu, N2 = mu^2 + mu
    fn poisson_pmf(mu: f64, n: usize) -> f64 {
        let mut p = (-mu).exp();
        for k in 1..=n {
            p *= mu / k as f64;
        }
        p
    }

    #[test]
    fn efficiency_open_interval() {
        assert!(Efficiency::new(0.0).is_err());
        assert!(Efficiency::new(1.0).is_err());
        assert!(Efficiency::new(-0.1).is_err());
        assert!(Efficiency::new(f64::NAN).is_err());
        assert_eq!(eta(0.05).value(), 0.05);
    }

    #[test]
    fn coherent_values() {
        let vac = PhotonDistribution::coherent(0.0, DEFAULT_TAIL_TOL).unwrap();
        assert_eq!(vac.probs(), &[1.0]);

        let d1 = PhotonDistribution::coherent(1.0, DEFAULT_TAIL_TOL).unwrap();
        assert_abs_diff_eq!(d1.get(0), 0.367_879_441_171_442_3, epsilon = 1e-15);
        let d2 = PhotonDistribution::coherent(2.0, DEFAULT_TAIL_TOL).unwrap();
        assert_abs_diff_eq!(d2.get(2), 0.270_670_566_473_225_4, epsilon = 1e-15);

        for n in 0..=d2.cutoff() {
            assert_abs_diff_eq!(d2.get(n), poisson_pmf(2.0, n), epsilon = 1e-14);
        }
        assert!(d2.tail_mass_bound() <= DEFAULT_TAIL_TOL);
        assert!(PhotonDistribution::coherent(-1.0, DEFAULT_TAIL_TOL).is_err());
        assert!(PhotonDistribution::coherent(1.0, 0.0).is_err());
    }

    #[test]
    fn coherent_cutoff_is_minimal_for_tolerance() {
        let mu = 1.0;
        let d = PhotonDistribution::coherent(mu, 1e-6).unwrap();
        let exact_tail: f64 = (d.cutoff() + 1..200).map(|n| poisson_pmf(mu, n)).sum();
        assert!(exact_tail <= 1e-6);
        // one fewer entry would already drop more than the tolerance
        let shorter_tail = exact_tail + poisson_pmf(mu, d.cutoff());
        assert!(shorter_tail > 1e-6 * 0.1);
    }

    #[test]
    fn fock_values() {
        assert_eq!(PhotonDistribution::fock(0).probs(), &[1.0]);
        assert_eq!(PhotonDistribution::fock(2).probs(), &[0.0, 0.0, 1.0]);
        let f5 = PhotonDistribution::fock(5);
        assert_eq!(f5.get(5), 1.0);
        assert_eq!(f5.total_mass(), 1.0);
        assert_eq!(f5.tail_mass_bound(), 0.0);
    }

    #[test]
    fn thermal_values() {
        let vac = PhotonDistribution::thermal(0.0, DEFAULT_TAIL_TOL).unwrap();
        assert_eq!(vac.probs(), &[1.0]);
        let t = PhotonDistribution::thermal(1.0, DEFAULT_TAIL_TOL).unwrap();
        assert_eq!(t.get(0), 0.5);
        assert_eq!(t.get(1), 0.25);
        for n in 0..=t.cutoff() {
            assert_abs_diff_eq!(t.get(n), 0.5f64.powi(n as i32 + 1), epsilon = 1e-16);
        }
        // N2 = sum n^2 2^-(n+1), summed independently
        let n2: f64 = (0..200).map(|n| (n * n) as f64 * 0.5f64.powi(n + 1)).sum();
        assert_abs_diff_eq!(n2, 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(t.moment(2).unwrap(), 3.0, epsilon = 1e-8);
        assert!(PhotonDistribution::thermal(-0.5, DEFAULT_TAIL_TOL).is_err());
    }

    #[test]
    fn moments() {
        let f2 = PhotonDistribution::fock(2);
        assert_eq!(f2.moment(1).unwrap(), 2.0);
        assert_eq!(f2.moment(2).unwrap(), 4.0);
        assert!(f2.moment(0).is_err());

        let c = PhotonDistribution::coherent(1.0, DEFAULT_TAIL_TOL).unwrap();
        let tol = DEFAULT_TAIL_TOL * c.cutoff() as f64;
        assert_abs_diff_eq!(c.moment(1).unwrap(), 1.0, epsilon = tol.max(1e-14));
        // Poisson factorial moment: N2 = mu^2 + mu
        assert_abs_diff_eq!(c.moment(2).unwrap(), 2.0, epsilon = 1e-9);

        let t = PhotonDistribution::thermal(1.0, DEFAULT_TAIL_TOL).unwrap();
        assert_abs_diff_eq!(t.moment(2).unwrap(), 3.0, epsilon = 1e-8);
    }

    #[test]
    fn off_probability_values() {
        let f2 = PhotonDistribution::fock(2);
        assert_abs_diff_eq!(f2.off_probability(eta(0.05)), 0.9025, epsilon = 1e-15);

        let c = PhotonDistribution::coherent(1.0, DEFAULT_TAIL_TOL).unwrap();
        assert_abs_diff_eq!(
            c.off_probability(eta(0.05)),
            0.951_229_424_500_714,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!((-0.05f64).exp(), 0.951_229_424_500_714, epsilon = 1e-15);

        let vac = PhotonDistribution::fock(0);
        for x in [0.01, 0.5, 0.99] {
            assert_eq!(vac.off_probability(eta(x)), 1.0);
        }
    }

    #[test]
    fn mandel_values() {
        let c = PhotonDistribution::coherent(1.0, DEFAULT_TAIL_TOL).unwrap();
        assert_abs_diff_eq!(c.mandel_q().unwrap(), 0.0, epsilon = 1e-9);
        assert_eq!(PhotonDistribution::fock(2).mandel_q().unwrap(), -1.0);
        let t = PhotonDistribution::thermal(1.0, DEFAULT_TAIL_TOL).unwrap();
        assert_abs_diff_eq!(t.mandel_q().unwrap(), 1.0, epsilon = 1e-8);
        assert_eq!(
            PhotonDistribution::fock(0).mandel_q(),
            Err(Error::UndefinedMandel)
        );
    }

    #[test]
    fn explicit_distribution_validation() {
        assert!(PhotonDistribution::from_probs(vec![0.5, 0.5], 0.0).is_ok());
        assert!(PhotonDistribution::from_probs(vec![], 0.0).is_err());
        assert!(PhotonDistribution::from_probs(vec![0.5, -0.1, 0.6], 0.0).is_err());
        assert!(PhotonDistribution::from_probs(vec![0.5, 0.4], 0.0).is_err());
        assert!(PhotonDistribution::from_probs(vec![0.5, 0.4], 0.1).is_ok());
        assert!(PhotonDistribution::from_probs(vec![0.7, 0.4], 0.0).is_err());
    }

    fn any_distribution() -> impl Strategy<Value = PhotonDistribution> {
        prop_oneof![
            (0.0..8.0f64)
                .prop_map(|m| PhotonDistribution::coherent(m, DEFAULT_TAIL_TOL).unwrap()),
            (0.0..5.0f64)
                .prop_map(|m| PhotonDistribution::thermal(m, DEFAULT_TAIL_TOL).unwrap()),
            (0usize..12).prop_map(PhotonDistribution::fock),
        ]
    }

    proptest! {
        #[test]
        fn constructors_are_normalized(d in any_distribution()) {
            let total = d.total_mass();
            prop_assert!(total <= 1.0 + 1e-12);
            prop_assert!(total >= 1.0 - DEFAULT_TAIL_TOL - 1e-12);
            prop_assert!(d.probs().iter().all(|p| *p >= 0.0));
        }

        #[test]
        fn moment_ordering(d in any_distribution()) {
            let n1 = d.moment(1).unwrap();
            let n2 = d.moment(2).unwrap();
            prop_assert!(n2 >= n1 - 1e-12);
            prop_assert!(n2 >= n1 * n1 - 1e-9 * (1.0 + n2));
        }

        #[test]
        fn off_probability_strictly_decreasing(
            d in any_distribution(),
            a in 0.001..0.9f64,
            b in 0.001..0.9f64,
        ) {
            prop_assume!(d.mean() > 0.0 && (a - b).abs() > 1e-6);
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(d.off_probability(eta(lo)) > d.off_probability(eta(hi)));
        }

        #[test]
        fn povm_complete(d in any_distribution(), x in 0.001..0.999f64) {
            let e = eta(x);
            prop_assert_eq!(d.off_probability(e) + d.on_probability(e), 1.0);
        }

        #[test]
        fn coherent_off_probability_closed_form(mu in 0.0..5.0f64, x in 0.001..0.2f64) {
            let d = PhotonDistribution::coherent(mu, DEFAULT_TAIL_TOL).unwrap();
            let exact = (-x * mu).exp();
            prop_assert!((d.off_probability(eta(x)) - exact).abs() <= 2.0 * d.tail_mass_bound() + 1e-14);
        }
    }
}
