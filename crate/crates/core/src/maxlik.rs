//! Maximum-likelihood estimation of the first two photon-number moments.
//!
//! At low efficiency the off probability is expanded to second order in
//! `eta`:
//!
//! ```text
//! p(eta) = 1 - N1 (eta + eta^2 / 2) + N2 eta^2 / 2
//! ```
//!
//! which is linear in `(N1, N2)` with constant coefficients. The normalized
//! log-likelihood `sum f log p + (1 - f) log (1 - p)` is therefore concave in
//! the moments, and its Hessian is a sum of rank-one terms.

use crate::error::{Error, Result};
use crate::linalg;
use crate::math;
use crate::simulate::OnOffRecord;
use crate::states::Efficiency;

/// Offset keeping the transformed coordinate `log(n2 - c n1)` finite at the
/// boundary `n2 = n1`.
const BOUNDARY_SHRINK: f64 = 1.0 - 1e-9;

/// Anything that carries an efficiency and an observed off frequency.
pub trait OffFrequency {
    fn efficiency(&self) -> Efficiency;
    fn off_frequency(&self) -> f64;
}

impl OffFrequency for OnOffRecord {
    fn efficiency(&self) -> Efficiency {
        OnOffRecord::efficiency(self)
    }

    fn off_frequency(&self) -> f64 {
        self.frequency()
    }
}

/// Exact (noiseless) frequency attached to an efficiency.
impl OffFrequency for (Efficiency, f64) {
    fn efficiency(&self) -> Efficiency {
        self.0
    }

    fn off_frequency(&self) -> f64 {
        self.1
    }
}

/// `(dp/dN1, dp/dN2)` of the second-order model at efficiency `eff`.
#[inline]
pub fn model_coefficients(eff: Efficiency) -> (f64, f64) {
    let eta = eff.value();
    (-(eta + 0.5 * eta * eta), 0.5 * eta * eta)
}

/// Second-order off probability `1 - n1 (eta + eta^2/2) + n2 eta^2/2`.
pub fn model_off_probability(n1: f64, n2: f64, eff: Efficiency) -> Result<f64> {
    if !(n1 >= 0.0) {
        return Err(Error::Domain {
            what: "first moment",
            value: n1,
        });
    }
    if !(n2 >= 0.0) {
        return Err(Error::Domain {
            what: "second moment",
            value: n2,
        });
    }
    let p = unchecked_model(n1, n2, eff);
    if p > 0.0 && p < 1.0 || (n1 == 0.0 && n2 == 0.0) {
        Ok(p)
    } else {
        Err(Error::ModelOutOfRange {
            eta: eff.value(),
            p,
        })
    }
}

#[inline]
fn unchecked_model(n1: f64, n2: f64, eff: Efficiency) -> f64 {
    let (a1, a2) = model_coefficients(eff);
    1.0 + a1 * n1 + a2 * n2
}

/// The cubic term of the expansion, `-(N3 - 3 N2 + 2 N1) eta^3 / 6`. Only
/// used to bound the bias of the second-order model.
pub fn third_order_term(n1: f64, n2: f64, n3: f64, eff: Efficiency) -> f64 {
    let eta = eff.value();
    -(n3 - 3.0 * n2 + 2.0 * n1) * eta * eta * eta / 6.0
}

fn interior_probability(n1: f64, n2: f64, eff: Efficiency) -> Result<f64> {
    let p = unchecked_model(n1, n2, eff);
    if p > 0.0 && p < 1.0 {
        Ok(p)
    } else {
        Err(Error::ModelOutOfRange {
            eta: eff.value(),
            p,
        })
    }
}

/// Normalized log-likelihood `L / N` of the records at `(n1, n2)`.
///
/// A frequency of exactly 0 or 1 drops the matching log term.
pub fn normalized_log_likelihood<R: OffFrequency>(records: &[R], n1: f64, n2: f64) -> Result<f64> {
    let mut acc = 0.0;
    for r in records {
        let p = interior_probability(n1, n2, r.efficiency())?;
        let f = r.off_frequency();
        if f > 0.0 {
            acc += f * math::ln(p);
        }
        if f < 1.0 {
            acc += (1.0 - f) * math::ln_1p(-p);
        }
    }
    Ok(acc)
}

/// `(1/N) dL/dN1` and `(1/N) dL/dN2`.
pub fn likelihood_gradient<R: OffFrequency>(records: &[R], n1: f64, n2: f64) -> Result<[f64; 2]> {
    let mut g = [0.0; 2];
    for r in records {
        let eff = r.efficiency();
        let p = unchecked_model(n1, n2, eff);
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Singular {
                eta: eff.value(),
                p,
            });
        }
        let f = r.off_frequency();
        let bracket = f / p - (1.0 - f) / (1.0 - p);
        let (a1, a2) = model_coefficients(eff);
        g[0] += bracket * a1;
        g[1] += bracket * a2;
    }
    Ok(g)
}

/// Second derivatives `-(sum) [f/p^2 + (1-f)/(1-p)^2] a_j a_k`.
pub fn likelihood_hessian<R: OffFrequency>(
    records: &[R],
    n1: f64,
    n2: f64,
) -> Result<[[f64; 2]; 2]> {
    let mut h = [[0.0; 2]; 2];
    for r in records {
        let eff = r.efficiency();
        let p = unchecked_model(n1, n2, eff);
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Singular {
                eta: eff.value(),
                p,
            });
        }
        let f = r.off_frequency();
        let w = f / (p * p) + (1.0 - f) / ((1.0 - p) * (1.0 - p));
        let (a1, a2) = model_coefficients(eff);
        h[0][0] -= w * a1 * a1;
        h[0][1] -= w * a1 * a2;
        h[1][1] -= w * a2 * a2;
    }
    h[1][0] = h[0][1];
    Ok(h)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaxLikOptions {
    /// Convergence threshold on the Euclidean norm of the gradient.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for MaxLikOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iter: 200,
        }
    }
}

/// Fitted moments and solver diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentEstimate {
    pub n1: f64,
    pub n2: f64,
    /// `L / N` at the returned point.
    pub loglik: f64,
    pub converged: bool,
    /// The maximum lies on the edge `n2 = n1` of the feasible region;
    /// `gradient_norm` is then the gradient projected onto that edge.
    pub on_boundary: bool,
    pub iterations: usize,
    pub gradient_norm: f64,
}

impl MomentEstimate {
    /// `N2 >= N1^2`, i.e. Mandel `Q >= -1`.
    pub fn is_physical(&self) -> bool {
        self.n2 >= self.n1 * self.n1
    }

    pub fn mandel_q(&self) -> f64 {
        -1.0 + (self.n2 - self.n1 * self.n1) / self.n1
    }
}

// Iterates live in (u, v) = (log n1, log(n2 - c n1)); every such point has
// n1 > 0 and n2 > c n1.
#[derive(Debug, Clone, Copy)]
struct Point {
    u: f64,
    v: f64,
}

impl Point {
    fn from_moments(n1: f64, n2: f64) -> Self {
        Self {
            u: math::ln(n1),
            v: math::ln(n2 - BOUNDARY_SHRINK * n1),
        }
    }

    fn moments(self) -> (f64, f64) {
        let n1 = math::exp(self.u);
        (n1, BOUNDARY_SHRINK * n1 + math::exp(self.v))
    }
}

/// Maximize the normalized log-likelihood over `n1 > 0`, `n2 >= n1` with
/// every model probability inside `(0, 1)`.
///
/// Damped Newton in log coordinates with an analytic Hessian; when the
/// transformed Hessian is not negative definite the step falls back to
/// gradient ascent preconditioned by the (always negative definite)
/// Gauss-Newton part. Each step is backtracked until it stays feasible and
/// does not lose likelihood.
pub fn estimate_moments<R: OffFrequency>(
    records: &[R],
    options: &MaxLikOptions,
) -> Result<MomentEstimate> {
    let mut distinct: alloc::vec::Vec<f64> =
        records.iter().map(|r| r.efficiency().value()).collect();
    distinct.sort_by(|a, b| a.partial_cmp(b).expect("efficiencies are finite"));
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(Error::Underdetermined(distinct.len()));
    }

    let mut point = initial_point(records)?;
    let (n1, n2) = point.moments();
    let mut loglik = normalized_log_likelihood(records, n1, n2)?;
    let mut grad = likelihood_gradient(records, n1, n2)?;
    let mut iterations = 0;

    while iterations < options.max_iter {
        let (n1, n2) = point.moments();
        let gnorm = norm(grad);
        let w = math::exp(point.v);

        let hess = likelihood_hessian(records, n1, n2)?;
        // d(n1, n2)/d(u, v)
        let jac = [[n1, 0.0], [BOUNDARY_SHRINK * n1, w]];
        let g_uv = [
            jac[0][0] * grad[0] + jac[1][0] * grad[1],
            jac[1][1] * grad[1],
        ];
        let gauss_newton = congruence(&hess, &jac);
        let mut h_uv = gauss_newton;
        h_uv[0][0] += n1 * grad[0] + BOUNDARY_SHRINK * n1 * grad[1];
        h_uv[1][1] += w * grad[1];

        let dir = newton_ascent(&h_uv, g_uv)
            .or_else(|| newton_ascent(&gauss_newton, g_uv))
            .unwrap_or(g_uv);

        iterations += 1;
        let Some((next, next_ll, next_grad)) =
            line_search(records, point, dir, loglik, gnorm)
        else {
            break;
        };
        let (m1, m2) = next.moments();
        let step = libm::hypot(m1 - n1, m2 - n2);
        point = next;
        loglik = next_ll;
        grad = next_grad;

        let gnorm = norm(grad);
        if gnorm <= options.tol && step <= 1e-12 * (1.0 + m2.abs()) {
            break;
        }
        // pinned against n2 = n1: stop at the boundary value
        if math::exp(point.v) < 1e-12 * m1 {
            point.v = f64::NEG_INFINITY;
            break;
        }
    }

    if point.v == f64::NEG_INFINITY {
        let (n1, _) = point.moments();
        return boundary_fit(records, n1, iterations, options);
    }

    let (n1, n2) = point.moments();
    let loglik = normalized_log_likelihood(records, n1, n2)?;
    let gradient_norm = norm(likelihood_gradient(records, n1, n2)?);
    Ok(MomentEstimate {
        n1,
        n2,
        loglik,
        converged: gradient_norm <= options.tol,
        on_boundary: false,
        iterations,
        gradient_norm,
    })
}

// Newton along the edge n2 = n1 (support on {0, 1}). Converged when the
// gradient along the edge vanishes and the likelihood still pushes
// outward, i.e. the constraint is active.
fn boundary_fit<R: OffFrequency>(
    records: &[R],
    start: f64,
    mut iterations: usize,
    options: &MaxLikOptions,
) -> Result<MomentEstimate> {
    let edge = |t: f64| -> Result<(f64, f64, f64, [f64; 2])> {
        let g = likelihood_gradient(records, t, t)?;
        let h = likelihood_hessian(records, t, t)?;
        let ll = normalized_log_likelihood(records, t, t)?;
        Ok((ll, g[0] + g[1], h[0][0] + 2.0 * h[0][1] + h[1][1], g))
    };
    let mut t = start;
    let (mut ll, mut slope, mut curv, mut grad) = edge(t)?;
    while iterations < options.max_iter {
        iterations += 1;
        let step = if curv < 0.0 { -slope / curv } else { slope * t };
        let mut alpha = 1.0;
        let mut moved = false;
        for _ in 0..60 {
            let trial = t + alpha * step;
            if trial > 0.0 {
                if let Ok((tll, ts, tc, tg)) = edge(trial) {
                    if tll > ll || (tll >= ll - 1e-15 * ll.abs() && ts.abs() < slope.abs()) {
                        t = trial;
                        (ll, slope, curv, grad) = (tll, ts, tc, tg);
                        moved = true;
                        break;
                    }
                }
            }
            alpha *= 0.5;
        }
        if !moved || (slope.abs() <= options.tol && (alpha * step).abs() <= 1e-12 * (1.0 + t)) {
            break;
        }
    }
    // projected gradient: component along the edge direction (1, 1)/sqrt(2)
    let gradient_norm = slope.abs() / core::f64::consts::SQRT_2;
    let active = grad[1] - grad[0] <= 0.0;
    Ok(MomentEstimate {
        n1: t,
        n2: t,
        loglik: ll,
        converged: gradient_norm <= options.tol && active,
        on_boundary: true,
        iterations,
        gradient_norm,
    })
}

fn norm(g: [f64; 2]) -> f64 {
    libm::hypot(g[0], g[1])
}

// J^T H J
fn congruence(h: &[[f64; 2]; 2], j: &[[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let mut out = [[0.0; 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            let mut s = 0.0;
            for i in 0..2 {
                for k in 0..2 {
                    s += j[i][a] * h[i][k] * j[k][b];
                }
            }
            out[a][b] = s;
        }
    }
    out
}

// Ascent direction -H^{-1} g for negative definite H.
fn newton_ascent(h: &[[f64; 2]; 2], g: [f64; 2]) -> Option<[f64; 2]> {
    let neg = [-h[0][0], -h[0][1], -h[1][0], -h[1][1]];
    let x = linalg::solve_spd(&neg, &g)?;
    Some([x[0], x[1]])
}

fn line_search<R: OffFrequency>(
    records: &[R],
    point: Point,
    dir: [f64; 2],
    loglik: f64,
    gnorm: f64,
) -> Option<(Point, f64, [f64; 2])> {
    // keep log-coordinate jumps bounded
    let longest = dir[0].abs().max(dir[1].abs());
    let mut alpha = if longest > 2.0 { 2.0 / longest } else { 1.0 };
    for _ in 0..60 {
        let trial = Point {
            u: point.u + alpha * dir[0],
            v: point.v + alpha * dir[1],
        };
        let (n1, n2) = trial.moments();
        if let (Ok(ll), Ok(g)) = (
            normalized_log_likelihood(records, n1, n2),
            likelihood_gradient(records, n1, n2),
        ) {
            if ll > loglik || (ll >= loglik - 1e-15 * loglik.abs() && norm(g) < gnorm) {
                return Some((trial, ll, g));
            }
        }
        alpha *= 0.5;
    }
    None
}

// n1 from the first-order fit (1 - f)/eta averaged over channels, n2 from a
// Poissonian shape; shrunk until every model probability is interior.
fn initial_point<R: OffFrequency>(records: &[R]) -> Result<Point> {
    let n = records.len() as f64;
    let mean = records
        .iter()
        .map(|r| (1.0 - r.off_frequency()) / r.efficiency().value())
        .sum::<f64>()
        / n;
    let mut n1 = if mean.is_finite() && mean > 1e-6 { mean } else { 1e-6 };
    for _ in 0..80 {
        let n2 = n1 * (n1 + 1.0);
        let feasible = records
            .iter()
            .all(|r| interior_probability(n1, n2, r.efficiency()).is_ok());
        if feasible {
            return Ok(Point::from_moments(n1, n2));
        }
        n1 *= 0.5;
    }
    Err(Error::Infeasible)
}
