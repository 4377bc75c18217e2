//! Left and right inverses of the Bernoulli f-divergence.
//!
//! The left inverse
//!
//! ```text
//! sup { p ∈ [0,1]  |  D_{f,B}(p || q) ≤ c }
//! ```
//!
//! converts a divergence budget c into a reward ceiling, and the right
//! inverse `sup { p ∈ [0,1) | D_{f,B}(mean || p) ≤ c }` converts an
//! empirical mean into a high-confidence upper bound on the true mean
//! (the Chernoff-Hoeffding route).
//!
//! Both problems are one-dimensional and convex: D_{f,B} is jointly convex
//! with minimum 0 on the diagonal, so the feasible set is an interval whose
//! upper endpoint lies in [q, 1] (resp. [mean, 1)) and the constraint is
//! monotone there. Bisection therefore finds the supremum to any tolerance
//! without a convex-programming dependency, and extended-real divergence
//! values (+∞ at infeasible points) bracket correctly.

use crate::divergence::{bernoulli_fdiv, FGenerator};
use crate::error::{Error, Result};

/// Default bisection tolerance.
pub const DEFAULT_TOL: f64 = 1e-9;

const MAX_ITERATIONS: usize = 200;

/// Solution of a scalar f-inverse problem.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct InverseSolution {
    /// The supremum, located to within `tolerance` (always feasible).
    pub value: f64,
    /// Constraint slack c - D at the returned value (+∞ when c = +∞).
    pub residual: f64,
    pub iterations: usize,
    pub tolerance: f64,
}

fn check_inputs(q: f64, c: f64, tol: f64, what: &str) -> Result<()> {
    if !(0.0..=1.0).contains(&q) || !q.is_finite() {
        return Err(Error::Domain(format!("{what} = {q} outside [0,1]")));
    }
    if c < 0.0 || c.is_nan() {
        return Err(Error::Domain(format!(
            "divergence budget c = {c} is negative"
        )));
    }
    if tol <= 0.0 || tol.is_nan() {
        return Err(Error::Domain(format!("tolerance {tol} must be positive")));
    }
    Ok(())
}

fn solution(value: f64, c: f64, d: f64, iterations: usize, tol: f64) -> InverseSolution {
    InverseSolution {
        value,
        residual: c - d,
        iterations,
        tolerance: tol,
    }
}

/// Bisect for sup{p in [lo, 1] : divergence(p) <= c}, assuming the
/// constraint is nondecreasing on the interval and satisfied at `lo`.
fn bisect_upper<F: Fn(f64) -> f64>(divergence: F, lo0: f64, c: f64, tol: f64) -> (f64, f64, usize) {
    let d_top = divergence(1.0);
    if d_top <= c {
        return (1.0, d_top, 0);
    }
    let mut lo = lo0;
    let mut hi = 1.0;
    let mut iterations = 0;
    while hi - lo > tol && iterations < MAX_ITERATIONS {
        let mid = 0.5 * (lo + hi);
        if divergence(mid) <= c {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    (lo, divergence(lo), iterations)
}

/// Left f-inverse: sup{p ∈ \[0,1\] : D_{f,B}(p || q) ≤ c}, within `tol`.
///
/// `c = +∞` means the constraint is vacuous and the answer is 1. `c = 0`
/// with strictly convex f pins the answer to q exactly.
pub fn f_inverse(f: &FGenerator, q: f64, c: f64, tol: f64) -> Result<InverseSolution> {
    check_inputs(q, c, tol, "q")?;
    if c == f64::INFINITY {
        return Ok(solution(1.0, c, 0.0, 0, tol));
    }
    if q == 1.0 {
        return Ok(solution(1.0, c, 0.0, 0, tol));
    }
    if c == 0.0 && f.strictly_convex() {
        return Ok(solution(q, c, 0.0, 0, tol));
    }
    let div = |p: f64| bernoulli_fdiv(f, p, q).expect("p stays inside [0,1] during bisection");
    let (value, d, iterations) = bisect_upper(div, q, c, tol);
    Ok(solution(value, c, d, iterations, tol))
}

/// Right f-inverse: sup{p ∈ [0,1) : D_{f,B}(mean || p) ≤ c}, within `tol`.
///
/// D_{f,B}(mean || ·) is convex with minimum at p = mean, so the same
/// bisection applies on [mean, 1). The p → 1 endpoint is evaluated through
/// the boundary conventions of `bernoulli_fdiv` (for KL it is +∞ whenever
/// mean < 1, so the bracket is always valid there).
pub fn f_inverse_right(
    f: &FGenerator,
    empirical_mean: f64,
    c: f64,
    tol: f64,
) -> Result<InverseSolution> {
    check_inputs(empirical_mean, c, tol, "empirical_mean")?;
    if empirical_mean == 1.0 {
        return Ok(solution(1.0, c, 0.0, 0, tol));
    }
    if c == 0.0 && f.strictly_convex() {
        return Ok(solution(empirical_mean, c, 0.0, 0, tol));
    }
    let div = |p: f64| bernoulli_fdiv(f, empirical_mean, p).expect("p stays inside [0,1]");
    let (value, d, iterations) = bisect_upper(div, empirical_mean, c, tol);
    Ok(solution(value, c, d, iterations, tol))
}
