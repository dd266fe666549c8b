use alloc::boxed::Box;

use crate::maxent::MaxEntState;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("{what} out of domain: {value}")]
    Domain { what: &'static str, value: f64 },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(&'static str),

    #[error("invalid experiment design: {0}")]
    InvalidDesign(&'static str),

    #[error("Mandel parameter undefined for zero mean photon number")]
    UndefinedMandel,

    #[error("second-order model gives off probability {p} outside (0, 1) at eta = {eta}")]
    ModelOutOfRange { eta: f64, p: f64 },

    #[error("likelihood gradient singular: off probability {p} at eta = {eta}")]
    Singular { eta: f64, p: f64 },

    #[error("need at least two distinct efficiencies, got {0}")]
    Underdetermined(usize),

    #[error("no feasible interior starting point for the moment fit")]
    Infeasible,

    #[error("unphysical moments: N2 = {n2} < N1^2 = {}", n1 * n1)]
    Unphysical { n1: f64, n2: f64 },

    #[error("near-degenerate moments (N1 = {n1}, N2 = {n2}): variance at the number-state limit with non-integer mean")]
    NearDegenerate { n1: f64, n2: f64 },

    #[error("moments N1 = {n1}, N2 = {n2} need variance >= {min_variance} on the integer lattice")]
    LatticeInfeasible { n1: f64, n2: f64, min_variance: f64 },

    #[error("maximum-entropy solve did not converge after {} iterations", .0.iterations)]
    NotConverged(Box<MaxEntState>),
}
