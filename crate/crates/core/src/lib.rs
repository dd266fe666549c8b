//! Photon-number distribution inference from on/off detection at a few low
//! quantum efficiencies.
//!
//! The pipeline has two steps. First the moments `N1 = <n>` and `N2 = <n^2>`
//! are fitted by maximum likelihood to the off-event frequencies using the
//! second-order low-efficiency expansion of the off probability
//! ([`maxlik`]). Then the maximum-entropy distribution reproducing those two
//! moments is found by solving for its Lagrange multipliers ([`maxent`]).
//!
//! The crate is `no_std` and only needs `alloc`. File formats, configuration
//! and the command-line driver live in the companion `photon-maxent-cli`
//! crate.
#![no_std]
// negated comparisons are how NaN inputs get rejected
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

mod error;
mod linalg;
mod math;

pub mod maxent;
pub mod maxlik;
pub mod metrics;
pub mod simulate;
pub mod states;

pub use error::{Error, Result};
pub use maxent::{MaxEntOptions, MaxEntState, ObservationLevel};
pub use maxlik::{MaxLikOptions, MomentEstimate, OffFrequency};
pub use metrics::{fidelity, physicality, FidelityScore};
pub use simulate::{ExperimentDesign, OnOffRecord};
pub use states::{Efficiency, PhotonDistribution};
