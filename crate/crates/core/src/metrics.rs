//! Comparison of photon distributions.

use crate::error::{Error, Result};
use crate::math;
use crate::states::PhotonDistribution;

/// Classical fidelity (Bhattacharyya overlap) of two photon distributions.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct FidelityScore(f64);

impl FidelityScore {
    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }
}

/// `F = sum_n sqrt(p_n q_n)`; the shorter distribution is zero-padded.
pub fn fidelity(p: &PhotonDistribution, q: &PhotonDistribution) -> FidelityScore {
    let f: f64 = p
        .probs()
        .iter()
        .zip(q.probs())
        .map(|(a, b)| math::sqrt(a * b))
        .sum();
    FidelityScore(f.clamp(0.0, 1.0))
}

/// Whether the moment pair can belong to a state: `N2 >= N1^2`.
pub fn physicality(n1: f64, n2: f64) -> Result<bool> {
    if !(n1 > 0.0) {
        return Err(Error::Domain {
            what: "first moment",
            value: n1,
        });
    }
    Ok(n2 >= n1 * n1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::DEFAULT_TAIL_TOL;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::vec;
    use std::vec::Vec;

    fn dist(probs: Vec<f64>) -> PhotonDistribution {
        PhotonDistribution::from_probs(probs, 0.0).unwrap()
    }

    #[test]
    fn fidelity_values() {
        let c = PhotonDistribution::coherent(1.5, DEFAULT_TAIL_TOL).unwrap();
        assert_abs_diff_eq!(fidelity(&c, &c).value(), 1.0, epsilon = 1e-12);
        assert_eq!(
            fidelity(&PhotonDistribution::fock(0), &PhotonDistribution::fock(1)).value(),
            0.0
        );
        let f = fidelity(&dist(vec![0.5, 0.5]), &dist(vec![1.0, 0.0])).value();
        assert_abs_diff_eq!(f, core::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-15);
    }

    #[test]
    fn physicality_values() {
        assert!(physicality(1.0, 2.0).unwrap());
        assert!(physicality(2.0, 4.0).unwrap());
        assert!(!physicality(1.0, 0.9).unwrap());
        assert!(physicality(0.0, 1.0).is_err());
        assert!(physicality(-1.0, 1.0).is_err());
    }

    fn any_probs() -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(0.0..1.0f64, 1..12).prop_filter_map("nonzero", |w| {
            let total: f64 = w.iter().sum();
            (total > 1e-3).then(|| w.iter().map(|x| x / total).collect())
        })
    }

    proptest! {
        #[test]
        fn symmetric(a in any_probs(), b in any_probs()) {
            let (p, q) = (dist(a), dist(b));
            prop_assert_eq!(fidelity(&p, &q), fidelity(&q, &p));
        }

        #[test]
        fn bounded_by_one(a in any_probs(), b in any_probs()) {
            let f = fidelity(&dist(a.clone()), &dist(b.clone())).value();
            prop_assert!((0.0..=1.0).contains(&f));
            let padded = a.len().max(b.len());
            let differ = (0..padded).any(|i| {
                (a.get(i).copied().unwrap_or(0.0) - b.get(i).copied().unwrap_or(0.0)).abs() > 1e-6
            });
            if differ {
                prop_assert!(f < 1.0);
            }
        }

        #[test]
        fn padding_invariant(a in any_probs(), b in any_probs(), extra in 1usize..6) {
            let mut padded = a.clone();
            padded.extend(core::iter::repeat_n(0.0, extra));
            prop_assert_eq!(
                fidelity(&dist(a), &dist(b.clone())),
                fidelity(&dist(padded), &dist(b))
            );
        }
    }
}
