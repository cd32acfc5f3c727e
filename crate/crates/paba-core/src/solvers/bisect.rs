//! Shared bisection primitive for the monotone root-finding problems that
//! appear throughout the solvers.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub(crate) struct Bisection {
    pub root: f64,
    pub residual: f64,
    pub iterations: u64,
}

/// Bisects a sign change of `f` on [lo, hi] down to relative bracket width
/// `tol_rel` (floored at a few ulps so machine-precision requests terminate).
/// `f(lo)` and `f(hi)` must straddle zero in either direction.
pub(crate) fn bisect_root(
    mut f: impl FnMut(f64) -> f64,
    mut lo: f64,
    mut hi: f64,
    tol_rel: f64,
    max_iters: u64,
) -> Result<Bisection> {
    debug_assert!(lo <= hi);
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Ok(Bisection { root: lo, residual: 0.0, iterations: 0 });
    }
    if f_hi == 0.0 {
        return Ok(Bisection { root: hi, residual: 0.0, iterations: 0 });
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::SolverFailure {
            message: format!("bisection bracket [{lo}, {hi}] does not straddle a root"),
            residual: f_lo.abs().min(f_hi.abs()),
        });
    }
    let tol = tol_rel.max(4.0 * f64::EPSILON);
    let mut iterations = 0;
    let mut residual = f_lo.abs().min(f_hi.abs());
    while hi - lo > tol * hi.abs().max(lo.abs()).max(f64::MIN_POSITIVE) {
        if iterations >= max_iters {
            return Err(Error::SolverFailure {
                message: format!("bisection did not converge within {max_iters} iterations"),
                residual,
            });
        }
        iterations += 1;
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break; // bracket narrower than one ulp
        }
        let f_mid = f(mid);
        residual = f_mid.abs();
        if f_mid == 0.0 {
            lo = mid;
            hi = mid;
            break;
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(Bisection { root: 0.5 * (lo + hi), residual, iterations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn finds_roots_of_monotone_functions() {
        let r = bisect_root(|x| x * x - 2.0, 0.0, 2.0, 1e-12, 1000).unwrap();
        assert_relative_eq!(r.root, 2.0_f64.sqrt(), max_relative = 1e-11);
        // Decreasing function.
        let r = bisect_root(|x| 1.0 - x, 0.0, 10.0, 1e-12, 1000).unwrap();
        assert_relative_eq!(r.root, 1.0, max_relative = 1e-11);
    }

    #[test]
    fn rejects_bracket_without_sign_change() {
        assert!(bisect_root(|x| x + 1.0, 0.0, 1.0, 1e-6, 100).is_err());
    }

    #[test]
    fn fails_when_budget_is_too_small() {
        let err = bisect_root(|x| x - 0.1234, 0.0, 1e9, 1e-15, 3);
        assert!(matches!(err, Err(crate::error::Error::SolverFailure { .. })));
    }

    #[test]
    fn machine_precision_request_terminates() {
        let r = bisect_root(|x| x - 0.3, 0.0, 1.0, 1e-30, 10_000).unwrap();
        assert_relative_eq!(r.root, 0.3, max_relative = 1e-14);
        assert!(r.iterations < 100);
    }
}
