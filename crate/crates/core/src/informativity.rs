//! Computing or upper-bounding the f-informativity 𝕀_f(o; s), plus the
//! concentration inequalities that wrap sampled estimates.
//!
//! Three routes are provided, matching the three environment families:
//!
//! * exact discrete evaluation (for the KL generator this is Shannon mutual
//!   information; for other generators the observation marginal is used as
//!   the reference distribution, which upper-bounds the infimum — monotone
//!   downstream use keeps any upper bound sound);
//! * closed-form linear-Gaussian evaluation, ½ ln det(CΣCᵀ + Σ_ε) − ½ ln det Σ_ε;
//! * the sampled leave-one-out bound for black-box environments, whose batch
//!   estimates are wrapped with Hoeffding or Chernoff-Hoeffding inequalities
//!   under a union-bound confidence budget.

use crate::divergence::{discrete_fdiv, FGenerator};
use crate::env::{LinearGaussianSystem, SampledEnvironment};
use crate::error::{Error, Result};
use crate::finverse::{f_inverse_right, DEFAULT_TOL};
use crate::rng::Rng;
use nalgebra::DMatrix;

/// A state distribution paired with a row-stochastic sensor matrix — the
/// ingredients of one informativity evaluation.
#[derive(Debug, Clone)]
pub struct DiscreteJoint {
    pub state_dist: Vec<f64>,
    /// `sensor_matrix[s]` is the row σ(.|s).
    pub sensor_matrix: Vec<Vec<f64>>,
}

impl DiscreteJoint {
    pub fn new(state_dist: Vec<f64>, sensor_matrix: Vec<Vec<f64>>) -> Result<DiscreteJoint> {
        let sum: f64 = state_dist.iter().sum();
        if (sum - 1.0).abs() > 1e-12 || state_dist.iter().any(|&x| x < 0.0) {
            return Err(Error::Invariant(format!(
                "state distribution sums to {sum} or has negative mass"
            )));
        }
        if sensor_matrix.len() != state_dist.len() {
            return Err(Error::Invariant("one sensor row per state required".into()));
        }
        let width = sensor_matrix.first().map(|r| r.len()).unwrap_or(0);
        for (s, row) in sensor_matrix.iter().enumerate() {
            if row.len() != width {
                return Err(Error::Invariant(format!(
                    "sensor row {s} has inconsistent length"
                )));
            }
            let rs: f64 = row.iter().sum();
            if (rs - 1.0).abs() > 1e-12 || row.iter().any(|&x| x < 0.0) {
                return Err(Error::Invariant(format!(
                    "sensor row {s} is not stochastic"
                )));
            }
        }
        Ok(DiscreteJoint {
            state_dist,
            sensor_matrix,
        })
    }
}

/// f-informativity of a discrete joint, with q fixed to the observation
/// marginal: Σ_s p(s) D_f(σ(.|s) || m).
///
/// For KL the marginal attains the infimum, so the value is exact Shannon
/// mutual information; for other generators it is a sound upper bound.
pub fn discrete_informativity(f: &FGenerator, joint: &DiscreteJoint) -> Result<f64> {
    let n_obs = joint.sensor_matrix.first().map(|r| r.len()).unwrap_or(0);
    let mut marginal = vec![0.0; n_obs];
    for (s, &mass) in joint.state_dist.iter().enumerate() {
        if mass == 0.0 {
            continue;
        }
        for (o, &p) in joint.sensor_matrix[s].iter().enumerate() {
            marginal[o] += mass * p;
        }
    }
    let mut total = 0.0;
    for (s, &mass) in joint.state_dist.iter().enumerate() {
        if mass == 0.0 {
            continue;
        }
        total += mass * discrete_fdiv(f, &joint.sensor_matrix[s], &marginal)?;
    }
    Ok(total.max(0.0))
}

/// Shannon mutual information of the linear-Gaussian channel o = C s + ε
/// when s has covariance `belief_cov`:
///
/// ½ ln det(C Σ Cᵀ + Σ_ε) − ½ ln det Σ_ε   (nats)
pub fn gaussian_informativity(
    system: &LinearGaussianSystem,
    belief_cov: &DMatrix<f64>,
) -> Result<f64> {
    let noise_chol = system
        .noise_cov
        .clone()
        .cholesky()
        .ok_or_else(|| Error::NotPositiveDefinite("sensor noise covariance".into()))?;
    let pushed = &system.c * belief_cov * system.c.transpose() + &system.noise_cov;
    let sym = (pushed.clone() + pushed.transpose()) * 0.5;
    let obs_chol = sym
        .cholesky()
        .ok_or_else(|| Error::NotPositiveDefinite("observation covariance".into()))?;
    let log_det_obs = 2.0 * obs_chol.l().diagonal().map(f64::ln).sum();
    let log_det_noise = 2.0 * noise_chol.l().diagonal().map(f64::ln).sum();
    Ok((0.5 * (log_det_obs - log_det_noise)).max(0.0))
}

/// Per-batch leave-one-out estimates of an upper bound on 𝕀(o; s).
///
/// Each batch draws K state-observation pairs from the environment under the
/// given open-loop prefix and evaluates
///
/// ```text
/// (1/K) Σ_i [ log σ(o_i|s_i) − log( (1/(K-1)) Σ_{j≠i} σ(o_i|s_j) ) ]
/// ```
///
/// in the log domain with a max shift. The mean over batches estimates an
/// upper bound on the mutual information. Estimates are clamped to
/// [0, ln K] — informativity is nonnegative and ln K is the estimator's
/// structural maximum — so Hoeffding's boundedness precondition holds
/// downstream. Batch b uses RNG substream (seed, b), so the batch list is
/// reproducible regardless of evaluation order.
pub fn leave_one_out_mi_bound<E: SampledEnvironment>(
    env: &E,
    prefix_actions: &[usize],
    batch_size: usize,
    num_batches: usize,
    rng_seed: u64,
) -> Result<Vec<f64>> {
    if batch_size < 2 {
        return Err(Error::Domain(
            "leave-one-out needs batch size K >= 2".into(),
        ));
    }
    let k = batch_size;
    let cap = (k as f64).ln();
    let mut estimates = Vec::with_capacity(num_batches);
    let mut log_dens = vec![0.0f64; k * k];
    for batch in 0..num_batches {
        let mut rng = Rng::substream(rng_seed, batch as u64);
        let states: Vec<E::State> = (0..k)
            .map(|_| env.sample_state(prefix_actions, &mut rng))
            .collect();
        let obs: Vec<E::Obs> = states
            .iter()
            .map(|s| env.sample_observation(s, &mut rng))
            .collect();
        for (i, o) in obs.iter().enumerate() {
            for (j, s) in states.iter().enumerate() {
                let ld = env.log_density(o, s);
                if ld.is_nan() {
                    return Err(Error::Domain(format!(
                        "sensor log-density returned NaN in batch {batch}"
                    )));
                }
                log_dens[i * k + j] = ld;
            }
        }
        let mut acc = 0.0;
        for i in 0..k {
            let row = &log_dens[i * k..(i + 1) * k];
            // log of the leave-one-out mean via max-shifted log-sum-exp.
            let max = row
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, &v)| v)
                .fold(f64::NEG_INFINITY, f64::max);
            let denom = if max == f64::NEG_INFINITY {
                f64::NEG_INFINITY
            } else {
                let sum: f64 = row
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != i)
                    .map(|(_, &v)| (v - max).exp())
                    .sum();
                max + (sum / (k - 1) as f64).ln()
            };
            acc += row[i] - denom;
        }
        estimates.push((acc / k as f64).clamp(0.0, cap));
    }
    Ok(estimates)
}

fn check_concentration_inputs(samples: &[f64], delta: f64) -> Result<()> {
    if samples.is_empty() {
        return Err(Error::Domain("need at least one sample".into()));
    }
    if let Some(&bad) = samples.iter().find(|x| !(0.0..=1.0).contains(*x)) {
        return Err(Error::Domain(format!(
            "sample {bad} outside [0,1]; rescale before applying a concentration bound"
        )));
    }
    if !(0.0 < delta && delta < 1.0) {
        return Err(Error::Domain(format!("delta = {delta} outside (0,1)")));
    }
    Ok(())
}

/// Hoeffding upper bound: mean + sqrt(ln(1/δ) / (2n)) for samples in [0, 1].
pub fn hoeffding_upper(samples: &[f64], delta: f64) -> Result<f64> {
    check_concentration_inputs(samples, delta)?;
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    Ok(mean + ((1.0 / delta).ln() / (2.0 * n)).sqrt())
}

/// Chernoff-Hoeffding upper bound: the right KL-inverse of the empirical
/// mean at budget ln(2/δ)/n.
pub fn chernoff_hoeffding_upper(samples: &[f64], delta: f64) -> Result<f64> {
    check_concentration_inputs(samples, delta)?;
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let budget = (2.0 / delta).ln() / n;
    Ok(f_inverse_right(&FGenerator::Kl, mean, budget, DEFAULT_TOL)?.value)
}

/// The bound callers consume: the smaller of the Hoeffding and
/// Chernoff-Hoeffding upper bounds, both valid at confidence 1 − δ each.
pub fn mean_upper_bound(samples: &[f64], delta: f64) -> Result<f64> {
    let h = hoeffding_upper(samples, delta)?;
    let ch = chernoff_hoeffding_upper(samples, delta)?;
    Ok(h.min(ch))
}

/// A union-bound confidence budget: labelled allocations δ_i summing exactly
/// to the total failure probability δ.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ConfidenceBudget {
    pub total_delta: f64,
    pub allocations: Vec<(String, f64)>,
}

impl ConfidenceBudget {
    pub fn confidence(&self) -> f64 {
        1.0 - self.total_delta
    }

    pub fn delta_for(&self, label: &str) -> Option<f64> {
        self.allocations
            .iter()
            .find(|(l, _)| l == label)
            .map(|(_, d)| *d)
    }
}

/// Split δ equally across labels; the last allocation absorbs float
/// rounding so the sum reconstructs `total_delta` exactly.
pub fn budget_split(total_delta: f64, labels: &[&str]) -> Result<ConfidenceBudget> {
    if !(0.0 < total_delta && total_delta < 1.0) {
        return Err(Error::Domain(format!(
            "total delta {total_delta} outside (0,1)"
        )));
    }
    if labels.is_empty() {
        return Err(Error::Domain("need at least one budget label".into()));
    }
    let n = labels.len();
    let each = total_delta / n as f64;
    let mut allocations: Vec<(String, f64)> = labels[..n - 1]
        .iter()
        .map(|&l| (l.to_string(), each))
        .collect();
    let used: f64 = allocations.iter().map(|(_, d)| d).sum();
    allocations.push((labels[n - 1].to_string(), total_delta - used));
    Ok(ConfidenceBudget {
        total_delta,
        allocations,
    })
}
