//! Maximum-entropy photon distributions.
//!
//! Every operator in play is diagonal in the Fock basis, so the
//! maximum-entropy state reduces to a distribution
//!
//! ```text
//! q_n = exp(-sum_k lambda_k g_k(n)) / Z
//! ```
//!
//! over `n = 0..=cutoff`, with `g_k(n) = n^k` for the moments observation
//! level and `g_k(n) = (1 - eta_k)^n` for the POVM level. The multipliers
//! are found by Newton's method on the convex dual `log Z(lambda) +
//! lambda . t`, whose gradient is `t - <g>` and whose Hessian is the
//! covariance matrix of the `g_k` under `q`.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg;
use crate::math;
use crate::states::{Efficiency, PhotonDistribution};

/// Which expectation values the distribution is constrained to reproduce.
#[derive(Debug, Clone, PartialEq)]
pub enum ObservationLevel {
    /// `<n>, <n^2>, ..., <n^order>`.
    Moments { order: u32 },
    /// Off probabilities `<(1 - eta_k)^n>` at each efficiency.
    Povm { efficiencies: Vec<Efficiency> },
}

impl ObservationLevel {
    pub fn two_moments() -> Self {
        Self::Moments { order: 2 }
    }

    pub fn mean_only() -> Self {
        Self::Moments { order: 1 }
    }

    /// Number of constraints (and multipliers).
    pub fn len(&self) -> usize {
        match self {
            Self::Moments { order } => *order as usize,
            Self::Povm { efficiencies } => efficiencies.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Fill `out[k]` with `g_k(n)` for every `n = 0..=cutoff` in turn.
    fn for_each_weight<F: FnMut(usize, &[f64])>(&self, cutoff: usize, mut f: F) {
        let k = self.len();
        let mut g = vec![0.0; k];
        match self {
            Self::Moments { .. } => {
                for n in 0..=cutoff {
                    let x = n as f64;
                    let mut p = 1.0;
                    for slot in g.iter_mut() {
                        p *= x;
                        *slot = p;
                    }
                    f(n, &g);
                }
            }
            Self::Povm { efficiencies } => {
                g.iter_mut().for_each(|v| *v = 1.0);
                for n in 0..=cutoff {
                    f(n, &g);
                    for (slot, eff) in g.iter_mut().zip(efficiencies) {
                        *slot *= 1.0 - eff.value();
                    }
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaxEntOptions {
    /// Absolute tolerance on every constraint residual.
    pub tol: f64,
    /// Newton iterations allowed per cutoff.
    pub max_iter: usize,
    /// Variance threshold (relative to `n1`) for the number-state limit.
    pub boundary_tol: f64,
    /// Largest acceptable untruncated mass beyond the cutoff.
    pub tail_tol: f64,
    pub max_cutoff: usize,
}

impl Default for MaxEntOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 100,
            boundary_tol: 1e-6,
            tail_tol: 1e-12,
            max_cutoff: 4096,
        }
    }
}

/// Lagrange multipliers and diagnostics of a maximum-entropy solve.
#[derive(Debug, Clone, PartialEq)]
pub struct MaxEntState {
    pub lambdas: Vec<f64>,
    pub level: ObservationLevel,
    pub cutoff: usize,
    /// `log Z` over the truncated basis.
    pub log_partition: f64,
    pub targets: Vec<f64>,
    /// `constraint_values - targets`.
    pub residuals: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// Mass the untruncated family would put beyond the cutoff (a geometric
    /// proxy when `truncation_dependent`); `None` when no bound exists.
    pub tail_mass: Option<f64>,
    /// The solution exists only inside the truncated basis (a negative
    /// `lambda_2`, or any POVM-level solution).
    pub truncation_dependent: bool,
    /// Set when the targets sit at the number-state limit `Q = -1`; the
    /// distribution is then a point mass and `lambdas` is empty.
    pub point_mass: Option<usize>,
}

struct Evaluation {
    log_z: f64,
    probs: Vec<f64>,
    means: Vec<f64>,
    /// Row-major `k x k` covariance of the weights.
    cov: Vec<f64>,
}

fn evaluate(level: &ObservationLevel, lambdas: &[f64], cutoff: usize) -> Evaluation {
    let k = level.len();
    let mut exponents = vec![0.0; cutoff + 1];
    level.for_each_weight(cutoff, |n, g| {
        exponents[n] = -g.iter().zip(lambdas).map(|(a, l)| a * l).sum::<f64>();
    });
    let top = exponents.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut probs: Vec<f64> = exponents.iter().map(|e| math::exp(e - top)).collect();
    let z: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= z);
    let log_z = top + math::ln(z);

    let mut means = vec![0.0; k];
    level.for_each_weight(cutoff, |n, g| {
        for (m, a) in means.iter_mut().zip(g) {
            *m += probs[n] * a;
        }
    });
    let mut cov = vec![0.0; k * k];
    level.for_each_weight(cutoff, |n, g| {
        let q = probs[n];
        for i in 0..k {
            let di = g[i] - means[i];
            for j in 0..=i {
                cov[i * k + j] += q * di * (g[j] - means[j]);
            }
        }
    });
    for i in 0..k {
        for j in 0..i {
            cov[j * k + i] = cov[i * k + j];
        }
    }
    Evaluation {
        log_z,
        probs,
        means,
        cov,
    }
}

impl MaxEntState {
    /// State for given multipliers, with its own constraint values as
    /// targets.
    pub fn from_multipliers(
        level: ObservationLevel,
        lambdas: Vec<f64>,
        cutoff: usize,
    ) -> Result<Self> {
        if lambdas.len() != level.len() || level.is_empty() {
            return Err(Error::Domain {
                what: "number of multipliers",
                value: lambdas.len() as f64,
            });
        }
        let eval = evaluate(&level, &lambdas, cutoff);
        let k = level.len();
        let mut state = Self {
            lambdas,
            level,
            cutoff,
            log_partition: eval.log_z,
            targets: eval.means,
            residuals: vec![0.0; k],
            converged: false,
            iterations: 0,
            tail_mass: None,
            truncation_dependent: false,
            point_mass: None,
        };
        state.refresh_tail();
        Ok(state)
    }

    fn point(m: usize, n1: f64, n2: f64) -> Self {
        let m_f = m as f64;
        Self {
            lambdas: Vec::new(),
            level: ObservationLevel::two_moments(),
            cutoff: m,
            log_partition: 0.0,
            targets: vec![n1, n2],
            residuals: vec![m_f - n1, m_f * m_f - n2],
            converged: true,
            iterations: 0,
            tail_mass: Some(0.0),
            truncation_dependent: false,
            point_mass: Some(m),
        }
    }

    /// The implied distribution `q_n` for `n = 0..=cutoff`.
    pub fn distribution(&self) -> PhotonDistribution {
        if let Some(m) = self.point_mass {
            return PhotonDistribution::fock(m);
        }
        let eval = evaluate(&self.level, &self.lambdas, self.cutoff);
        let tail = self.tail_mass.unwrap_or(0.0).clamp(0.0, 0.5);
        PhotonDistribution::new_unchecked(eval.probs, tail)
    }

    /// Constraint expectations under the current multipliers.
    pub fn constraint_values(&self) -> Vec<f64> {
        if self.point_mass.is_some() {
            return self
                .residuals
                .iter()
                .zip(&self.targets)
                .map(|(r, t)| r + t)
                .collect();
        }
        evaluate(&self.level, &self.lambdas, self.cutoff).means
    }

    /// `d <g_k> / d lambda_j = -Cov(g_k, g_j)`, row-major.
    pub fn constraint_jacobian(&self) -> Vec<f64> {
        if self.point_mass.is_some() {
            return vec![0.0; 4];
        }
        evaluate(&self.level, &self.lambdas, self.cutoff)
            .cov
            .into_iter()
            .map(|c| -c)
            .collect()
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().fold(0.0, |m, r| m.max(r.abs()))
    }

    fn refresh_tail(&mut self) {
        let (l1, l2) = match &self.level {
            ObservationLevel::Povm { .. } => {
                self.tail_mass = None;
                self.truncation_dependent = true;
                return;
            }
            ObservationLevel::Moments { order: 1 } => (self.lambdas[0], 0.0),
            ObservationLevel::Moments { order: 2 } => (self.lambdas[0], self.lambdas[1]),
            // higher orders are not produced by the solvers
            ObservationLevel::Moments { .. } => {
                self.tail_mass = None;
                self.truncation_dependent = true;
                return;
            }
        };
        self.truncation_dependent = l2 < 0.0;
        self.tail_mass = moments_tail(l1, l2, self.cutoff, self.log_partition);
    }
}

// Untruncated mass beyond `cutoff` for weights exp(-l1 n - l2 n^2). With
// l2 >= 0 successive ratios shrink, so a geometric series bounds the tail.
// A negative l2 makes the untruncated family diverge; the bound is then
// taken with the quadratic term dropped from the ratio, which decides when
// growing the cutoff stops mattering to the linear part.
fn moments_tail(l1: f64, l2: f64, cutoff: usize, log_z: f64) -> Option<f64> {
    let n = (cutoff + 1) as f64;
    let ratio = math::exp(-l1 - l2.max(0.0) * (2.0 * n + 1.0));
    if !(ratio < 1.0) {
        return None;
    }
    let first = math::exp(-l1 * n - l2 * n * n - log_z);
    Some(first / (1.0 - ratio))
}

fn newton(
    level: &ObservationLevel,
    targets: &[f64],
    mut lambdas: Vec<f64>,
    cutoff: usize,
    options: &MaxEntOptions,
) -> MaxEntState {
    let dual = |eval: &Evaluation, lambdas: &[f64]| {
        eval.log_z + lambdas.iter().zip(targets).map(|(l, t)| l * t).sum::<f64>()
    };
    let residual = |eval: &Evaluation| -> Vec<f64> {
        eval.means.iter().zip(targets).map(|(m, t)| m - t).collect()
    };
    let max_abs = |r: &[f64]| r.iter().fold(0.0f64, |m, x| m.max(x.abs()));

    let mut eval = evaluate(level, &lambdas, cutoff);
    let mut res = residual(&eval);
    let mut iterations = 0;
    while max_abs(&res) > options.tol && iterations < options.max_iter {
        iterations += 1;
        let Some((step, _)) = linalg::solve_spd_damped(&eval.cov, &res) else {
            break;
        };
        let d0 = dual(&eval, &lambdas);
        let slope: f64 = -res.iter().zip(&step).map(|(r, s)| r * s).sum::<f64>();
        let r0 = max_abs(&res);
        let mut alpha = 1.0;
        let mut accepted = None;
        while alpha > 1e-14 {
            let trial: Vec<f64> = lambdas
                .iter()
                .zip(&step)
                .map(|(l, s)| l + alpha * s)
                .collect();
            let trial_eval = evaluate(level, &trial, cutoff);
            let d1 = dual(&trial_eval, &trial);
            let trial_res = residual(&trial_eval);
            if d1.is_finite() && (d1 <= d0 + 1e-4 * alpha * slope || max_abs(&trial_res) < r0) {
                accepted = Some((trial, trial_eval, trial_res));
                break;
            }
            alpha *= 0.5;
        }
        let Some((l, e, r)) = accepted else {
            break;
        };
        lambdas = l;
        eval = e;
        res = r;
    }

    let converged = max_abs(&res) <= options.tol;
    let mut state = MaxEntState {
        lambdas,
        level: level.clone(),
        cutoff,
        log_partition: eval.log_z,
        targets: targets.to_vec(),
        residuals: res,
        converged,
        iterations,
        tail_mass: None,
        truncation_dependent: false,
        point_mass: None,
    };
    state.refresh_tail();
    state
}

fn finish(state: MaxEntState) -> Result<MaxEntState> {
    if state.converged {
        Ok(state)
    } else {
        Err(Error::NotConverged(Box::new(state)))
    }
}

// Solve at a starting cutoff, doubling it until the tail is below
// tolerance or the cutoff cap is reached. A truncation-dependent solution
// is kept if the larger basis no longer converges.
fn solve_with_growing_cutoff(
    level: ObservationLevel,
    targets: &[f64],
    lambdas: Vec<f64>,
    start_cutoff: usize,
    options: &MaxEntOptions,
) -> Result<MaxEntState> {
    let mut cutoff = start_cutoff.min(options.max_cutoff);
    let mut state = newton(&level, targets, lambdas, cutoff, options);
    let mut iterations = state.iterations;
    loop {
        let tail_ok = matches!(state.tail_mass, Some(t) if t < options.tail_tol);
        if tail_ok || cutoff >= options.max_cutoff {
            break;
        }
        cutoff = (cutoff * 2).min(options.max_cutoff);
        let next = newton(&level, targets, state.lambdas.clone(), cutoff, options);
        iterations += next.iterations;
        // a divergent family can stop being solvable as the basis grows
        if state.converged && state.truncation_dependent && !next.converged {
            break;
        }
        state = next;
    }
    state.iterations = iterations;
    finish(state)
}

/// Maximum-entropy distribution with `<n> = n1` and `<n^2> = n2`.
///
/// Targets at the number-state limit (`n2 - n1^2` within `boundary_tol *
/// n1` and `n1` within `1e-3` of an integer `m`) return the point mass at
/// `m`.
pub fn solve_moments(n1: f64, n2: f64, options: &MaxEntOptions) -> Result<MaxEntState> {
    if !(n1 > 0.0) || !n1.is_finite() {
        return Err(Error::Domain {
            what: "first moment",
            value: n1,
        });
    }
    if !n2.is_finite() {
        return Err(Error::Domain {
            what: "second moment",
            value: n2,
        });
    }
    let variance = n2 - n1 * n1;
    let band = options.boundary_tol * n1;
    let nearest = math::round(n1);
    if variance.abs() <= band && (n1 - nearest).abs() <= 1e-3 && nearest >= 1.0 {
        return Ok(MaxEntState::point(nearest as usize, n1, n2));
    }
    if variance < 0.0 {
        return Err(Error::Unphysical { n1, n2 });
    }
    if variance <= band {
        return Err(Error::NearDegenerate { n1, n2 });
    }
    // the narrowest integer-valued law with mean n1 sits on its two
    // neighbouring integers
    let frac = n1 - libm::floor(n1);
    let min_variance = frac * (1.0 - frac);
    if variance < min_variance {
        return Err(Error::LatticeInfeasible {
            n1,
            n2,
            min_variance,
        });
    }

    let start = 20usize.max(math::ceil(n1 + 10.0 * math::sqrt(variance + n1)) as usize);
    let lambdas = vec![math::ln_1p(1.0 / n1), 0.0];
    solve_with_growing_cutoff(ObservationLevel::two_moments(), &[n1, n2], lambdas, start, options)
}

/// Maximum-entropy distribution constrained only by `<n> = n1`; the answer
/// is the thermal law.
pub fn solve_mean(n1: f64, options: &MaxEntOptions) -> Result<MaxEntState> {
    if !(n1 > 0.0) || !n1.is_finite() {
        return Err(Error::Domain {
            what: "first moment",
            value: n1,
        });
    }
    let start = 20usize.max(math::ceil(n1 + 10.0 * math::sqrt(n1 * n1 + n1)) as usize);
    solve_with_growing_cutoff(
        ObservationLevel::mean_only(),
        &[n1],
        vec![math::ln_1p(1.0 / n1)],
        start,
        options,
    )
}

/// Maximum-entropy distribution on `0..=cutoff` reproducing the off
/// probabilities `p_k` at efficiencies `eta_k`.
pub fn solve_povm(
    probs: &[(Efficiency, f64)],
    cutoff: usize,
    options: &MaxEntOptions,
) -> Result<MaxEntState> {
    if probs.is_empty() {
        return Err(Error::Underdetermined(0));
    }
    for &(_, p) in probs {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Domain {
                what: "off probability",
                value: p,
            });
        }
    }
    let mut effs: Vec<f64> = probs.iter().map(|(e, _)| e.value()).collect();
    effs.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    if effs.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidDesign("efficiencies must be distinct"));
    }
    let level = ObservationLevel::Povm {
        efficiencies: probs.iter().map(|(e, _)| *e).collect(),
    };
    let targets: Vec<f64> = probs.iter().map(|(_, p)| *p).collect();
    let state = newton(&level, &targets, vec![0.0; probs.len()], cutoff, options);
    finish(state)
}
