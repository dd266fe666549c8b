//! Dense solves for the handful of unknowns the solvers deal with.

use alloc::vec::Vec;

/// Solve `a x = b` for symmetric positive definite `a` (row-major, `n x n`)
/// by Cholesky factorization. Returns `None` if a pivot is not positive.
pub(crate) fn solve_spd(a: &[f64], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    debug_assert_eq!(a.len(), n * n);
    let mut l = alloc::vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if !(s > 0.0) || !s.is_finite() {
                    return None;
                }
                l[i * n + i] = crate::math::sqrt(s);
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    let mut y = alloc::vec![0.0; n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    let mut x = alloc::vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= l[k * n + i] * x[k];
        }
        x[i] = s / l[i * n + i];
    }
    Some(x)
}

/// Solve `(a + shift I) x = b`, increasing `shift` from zero until the
/// matrix factorizes. Returns the solution and the shift used.
pub(crate) fn solve_spd_damped(a: &[f64], b: &[f64]) -> Option<(Vec<f64>, f64)> {
    if let Some(x) = solve_spd(a, b) {
        return Some((x, 0.0));
    }
    let n = b.len();
    let trace: f64 = (0..n).map(|i| a[i * n + i].abs()).sum();
    let mut shift = f64::EPSILON * trace.max(f64::MIN_POSITIVE);
    let mut shifted = a.to_vec();
    for _ in 0..200 {
        for i in 0..n {
            shifted[i * n + i] = a[i * n + i] + shift;
        }
        if let Some(x) = solve_spd(&shifted, b) {
            return Some((x, shift));
        }
        shift *= 4.0;
    }
    None
}
