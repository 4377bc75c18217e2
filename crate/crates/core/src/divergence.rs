//! Generator functions and f-divergences.
//!
//! An f-divergence between distributions p and q is
//!
//! ```text
//! D_f(p || q) = Σ q(x) f(p(x)/q(x))
//! ```
//!
//! for a convex generator f on ℝ⁺ with f(1) = 0. The Bernoulli special case
//!
//! ```text
//! D_{f,B}(p || q) = q f(p/q) + (1-q) f((1-p)/(1-q))
//! ```
//!
//! is the scalar workhorse behind every bound in this crate: reward upper
//! bounds are obtained by inverting it (see [`crate::finverse`]).
//!
//! Boundary conventions are the standard ones: `0·f(a/0) = a·f'(∞)` where
//! `f'(∞) = lim f(x)/x`, and `0·f(0/0) = 0`. Divergences may legitimately be
//! `+∞` (negative-log and Neyman χ² diverge when p touches {0,1}); infinity
//! is a value, not an error. All logarithms are natural, so Kullback-Leibler
//! quantities are in nats.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// A convex generator function f with f(1) = 0, plus its boundary behavior.
///
/// The seven builtins are the divergences used for bound computation; the
/// piecewise-linear variant is the family the bound optimizer searches over.
#[derive(Debug, Clone, PartialEq)]
pub enum FGenerator {
    /// Kullback-Leibler, f(x) = x ln x.
    Kl,
    /// Negative log (reverse KL), f(x) = -ln x.
    NegLog,
    /// Total variation, f(x) = |x-1|/2.
    TotalVariation,
    /// Pearson χ², f(x) = (x-1)².
    PearsonChi2,
    /// Jensen-Shannon, f(x) = -(x+1) ln((x+1)/2) + x ln x.
    JensenShannon,
    /// Squared Hellinger, f(x) = (√x - 1)².
    SquaredHellinger,
    /// Neyman χ², f(x) = 1/x - 1.
    NeymanChi2,
    /// Convex piecewise-linear generator (see [`PiecewiseLinearF`]).
    PiecewiseLinear(PiecewiseLinearF),
}

impl FGenerator {
    /// Evaluate f at x > 0.
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            FGenerator::Kl => x * x.ln(),
            FGenerator::NegLog => -x.ln(),
            FGenerator::TotalVariation => 0.5 * (x - 1.0).abs(),
            FGenerator::PearsonChi2 => (x - 1.0) * (x - 1.0),
            FGenerator::JensenShannon => -(x + 1.0) * ((x + 1.0) / 2.0).ln() + x * x.ln(),
            FGenerator::SquaredHellinger => {
                let d = x.sqrt() - 1.0;
                d * d
            }
            FGenerator::NeymanChi2 => 1.0 / x - 1.0,
            FGenerator::PiecewiseLinear(pl) => pl.eval(x),
        }
    }

    /// lim x→0⁺ f(x), possibly +∞.
    pub fn limit_at_zero(&self) -> f64 {
        match self {
            FGenerator::Kl => 0.0,
            FGenerator::NegLog => f64::INFINITY,
            FGenerator::TotalVariation => 0.5,
            FGenerator::PearsonChi2 => 1.0,
            FGenerator::JensenShannon => std::f64::consts::LN_2,
            FGenerator::SquaredHellinger => 1.0,
            FGenerator::NeymanChi2 => f64::INFINITY,
            FGenerator::PiecewiseLinear(pl) => pl.limit_at_zero(),
        }
    }

    /// lim x→∞ f(x)/x, possibly +∞.
    pub fn slope_at_infinity(&self) -> f64 {
        match self {
            FGenerator::Kl => f64::INFINITY,
            FGenerator::NegLog => 0.0,
            FGenerator::TotalVariation => 0.5,
            FGenerator::PearsonChi2 => f64::INFINITY,
            FGenerator::JensenShannon => std::f64::consts::LN_2,
            FGenerator::SquaredHellinger => 1.0,
            FGenerator::NeymanChi2 => 0.0,
            FGenerator::PiecewiseLinear(pl) => pl.slope_at_infinity(),
        }
    }

    /// Whether f is strictly convex (D_{f,B}(p||q) = 0 iff p = q).
    pub fn strictly_convex(&self) -> bool {
        !matches!(
            self,
            FGenerator::TotalVariation | FGenerator::PiecewiseLinear(_)
        )
    }

    pub fn name(&self) -> &'static str {
        match self {
            FGenerator::Kl => "kl",
            FGenerator::NegLog => "neg-log",
            FGenerator::TotalVariation => "tv",
            FGenerator::PearsonChi2 => "pearson",
            FGenerator::JensenShannon => "js",
            FGenerator::SquaredHellinger => "hellinger2",
            FGenerator::NeymanChi2 => "neyman",
            FGenerator::PiecewiseLinear(_) => "piecewise-linear",
        }
    }

    /// Look up a builtin by its CLI name.
    pub fn from_name(name: &str) -> Option<FGenerator> {
        match name {
            "kl" => Some(FGenerator::Kl),
            "neg-log" => Some(FGenerator::NegLog),
            "tv" => Some(FGenerator::TotalVariation),
            "pearson" => Some(FGenerator::PearsonChi2),
            "js" => Some(FGenerator::JensenShannon),
            "hellinger2" => Some(FGenerator::SquaredHellinger),
            "neyman" => Some(FGenerator::NeymanChi2),
            _ => None,
        }
    }
}

/// The seven generators used to compute upper bounds.
pub fn builtin_generators() -> Vec<FGenerator> {
    vec![
        FGenerator::Kl,
        FGenerator::NegLog,
        FGenerator::TotalVariation,
        FGenerator::PearsonChi2,
        FGenerator::JensenShannon,
        FGenerator::SquaredHellinger,
        FGenerator::NeymanChi2,
    ]
}

/// Convex piecewise-linear generator over n equal-width pieces of (0, 2],
/// the last piece extended to +∞, anchored so that f(1) = 0.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinearF {
    n_pieces: usize,
    width: f64,
    slopes: Vec<f64>,
    /// f evaluated at the knots k·width, k = 0..=n_pieces (already anchored).
    knot_values: Vec<f64>,
}

impl PiecewiseLinearF {
    /// Build directly from nondecreasing slopes.
    pub fn from_slopes(slopes: &[f64]) -> Result<PiecewiseLinearF> {
        if slopes.len() < 2 {
            return Err(Error::Domain(format!(
                "piecewise-linear generator needs at least 2 pieces, got {}",
                slopes.len()
            )));
        }
        for w in slopes.windows(2) {
            if w[1] < w[0] {
                return Err(Error::Domain(
                    "piecewise-linear slopes must be nondecreasing".into(),
                ));
            }
        }
        let n = slopes.len();
        let width = 2.0 / n as f64;
        // Unanchored knot values with g(0) = 0, then shift so f(1) = 0.
        let mut knots = Vec::with_capacity(n + 1);
        knots.push(0.0);
        for (k, &s) in slopes.iter().enumerate() {
            knots.push(knots[k] + s * width);
        }
        let g_at_one = {
            let pos = 1.0 / width;
            let j = (pos.ceil() as usize).clamp(1, n) - 1;
            knots[j] + slopes[j] * (1.0 - j as f64 * width)
        };
        for v in &mut knots {
            *v -= g_at_one;
        }
        Ok(PiecewiseLinearF {
            n_pieces: n,
            width,
            slopes: slopes.to_vec(),
            knot_values: knots,
        })
    }

    pub fn n_pieces(&self) -> usize {
        self.n_pieces
    }

    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.n_pieces;
        if x >= 2.0 {
            return self.knot_values[n] + self.slopes[n - 1] * (x - 2.0);
        }
        // Piece j covers (j·width, (j+1)·width].
        let j = ((x / self.width).ceil() as usize).clamp(1, n) - 1;
        self.knot_values[j] + self.slopes[j] * (x - j as f64 * self.width)
    }

    pub fn limit_at_zero(&self) -> f64 {
        self.knot_values[0]
    }

    pub fn slope_at_infinity(&self) -> f64 {
        self.slopes[self.n_pieces - 1]
    }
}

fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else {
        x.exp().ln_1p()
    }
}

/// Map unconstrained parameters to a valid convex piecewise-linear generator.
///
/// The first parameter is the first slope; each later slope is the previous
/// one plus a softplus of the corresponding parameter, which keeps the slope
/// sequence increasing without any constrained optimization.
pub fn piecewise_linear_family(n_pieces: usize, slope_params: &[f64]) -> Result<FGenerator> {
    if n_pieces < 2 {
        return Err(Error::Domain(format!(
            "piecewise-linear family needs n_pieces >= 2, got {n_pieces}"
        )));
    }
    if slope_params.len() != n_pieces {
        return Err(Error::Domain(format!(
            "expected {n_pieces} slope parameters, got {}",
            slope_params.len()
        )));
    }
    let mut slopes = Vec::with_capacity(n_pieces);
    slopes.push(slope_params[0]);
    for &raw in &slope_params[1..] {
        let prev = *slopes.last().unwrap();
        slopes.push(prev + softplus(raw));
    }
    Ok(FGenerator::PiecewiseLinear(PiecewiseLinearF::from_slopes(
        &slopes,
    )?))
}

/// One term q·f(p/q) of an f-divergence sum under the boundary conventions.
fn term(f: &FGenerator, p: f64, q: f64) -> f64 {
    if q == 0.0 {
        if p == 0.0 {
            0.0
        } else {
            p * f.slope_at_infinity()
        }
    } else if p == 0.0 {
        q * f.limit_at_zero()
    } else {
        q * f.eval(p / q)
    }
}

/// Bernoulli f-divergence D_{f,B}(p || q) = q f(p/q) + (1-q) f((1-p)/(1-q)).
///
/// `+∞` is a legal return value; only arguments outside [0, 1] are errors.
pub fn bernoulli_fdiv(f: &FGenerator, p: f64, q: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) || !p.is_finite() {
        return Err(Error::Domain(format!("p = {p} outside [0,1]")));
    }
    if !(0.0..=1.0).contains(&q) || !q.is_finite() {
        return Err(Error::Domain(format!("q = {q} outside [0,1]")));
    }
    let d = term(f, p, q) + term(f, 1.0 - p, 1.0 - q);
    // The exact value is nonnegative; rounding may leave a tiny negative.
    Ok(d.max(0.0))
}

/// f-divergence Σ q_i f(p_i/q_i) between discrete distributions on a shared support.
pub fn discrete_fdiv(f: &FGenerator, p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::SupportMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    let mut d = 0.0;
    for (&pi, &qi) in p.iter().zip(q.iter()) {
        d += term(f, pi, qi);
        if d == f64::INFINITY {
            return Ok(d);
        }
    }
    Ok(d.max(0.0))
}

/// KL divergence between two multivariate Gaussians, in nats.
///
/// ½ [tr(Σ₁⁻¹Σ₀) + (μ₁-μ₀)ᵀ Σ₁⁻¹ (μ₁-μ₀) - d + ln(det Σ₁ / det Σ₀)]
pub fn gaussian_kl(
    mean0: &DVector<f64>,
    cov0: &DMatrix<f64>,
    mean1: &DVector<f64>,
    cov1: &DMatrix<f64>,
) -> Result<f64> {
    let d = mean0.len();
    if mean1.len() != d
        || cov0.nrows() != d
        || cov0.ncols() != d
        || cov1.nrows() != d
        || cov1.ncols() != d
    {
        return Err(Error::Domain(
            "gaussian_kl arguments must share one dimension".into(),
        ));
    }
    for (name, m) in [("cov0", cov0), ("cov1", cov1)] {
        if (m - m.transpose()).amax() > 1e-9 {
            return Err(Error::Invariant(format!("{name} is not symmetric")));
        }
    }
    let chol0 = cov0
        .clone()
        .cholesky()
        .ok_or_else(|| Error::NotPositiveDefinite("cov0".into()))?;
    let chol1 = cov1
        .clone()
        .cholesky()
        .ok_or_else(|| Error::NotPositiveDefinite("cov1".into()))?;
    let log_det0 = 2.0 * chol0.l().diagonal().map(f64::ln).sum();
    let log_det1 = 2.0 * chol1.l().diagonal().map(f64::ln).sum();
    let trace = chol1.solve(cov0).trace();
    let diff = mean1 - mean0;
    let maha = diff.dot(&chol1.solve(&diff));
    Ok(0.5 * (trace + maha - d as f64 + log_det1 - log_det0))
}
