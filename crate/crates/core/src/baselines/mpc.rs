//! Model-predictive control with a Kalman filter, the lower-bound policy
//! for the linear-Gaussian benchmark.
//!
//! Per step: Kalman-update the belief with the new observation, then pick
//! the first action of the sequence maximizing the belief-propagated
//! expected reward over the remaining horizon (exhaustive search; the
//! covariance schedule along the lookahead is action-independent, so only
//! means branch).

use super::RolloutSummary;
use crate::env::LinearGaussianSystem;
use crate::rng::Rng;
use nalgebra::{DMatrix, DVector};

/// Expected reward of the remaining steps after `t`, maximized over action
/// sequences, starting from belief mean `mean` at step `t`.
fn lookahead_value(
    sys: &LinearGaussianSystem,
    mean: &DVector<f64>,
    covs: &[DMatrix<f64>],
    t: usize,
) -> f64 {
    if t + 1 >= sys.horizon {
        return 0.0;
    }
    let mut best = f64::NEG_INFINITY;
    for a in 0..sys.actions.len() {
        let next = sys.step_mean(mean, a);
        let value =
            sys.expected_reward(&next, &covs[t + 1], a) + lookahead_value(sys, &next, covs, t + 1);
        if value > best {
            best = value;
        }
    }
    best
}

fn mpc_action(
    sys: &LinearGaussianSystem,
    mean: &DVector<f64>,
    cov: &DMatrix<f64>,
    t: usize,
) -> usize {
    if t + 1 >= sys.horizon {
        return 0; // No future reward depends on the last action.
    }
    // Covariances along the lookahead do not depend on the actions.
    let mut covs: Vec<DMatrix<f64>> = Vec::with_capacity(sys.horizon + 1);
    covs.resize(t + 1, cov.clone());
    for k in t + 1..sys.horizon {
        let prev = covs[k - 1].clone();
        covs.push(sys.step_cov(&prev));
    }
    let mut best_action = 0;
    let mut best_value = f64::NEG_INFINITY;
    for a in 0..sys.actions.len() {
        let next = sys.step_mean(mean, a);
        let value =
            sys.expected_reward(&next, &covs[t + 1], a) + lookahead_value(sys, &next, &covs, t + 1);
        if value > best_value {
            best_value = value;
            best_action = a;
        }
    }
    best_action
}

/// The reward actually collected in a realized state.
fn realized_reward(sys: &LinearGaussianSystem, state: &DVector<f64>) -> f64 {
    match sys.reward {
        crate::env::GaussianReward::HatOnCoordinate(i) => (1.0 - 2.0 * state[i].abs()).max(0.0),
    }
}

fn sample_gaussian(mean: &DVector<f64>, chol_l: &DMatrix<f64>, rng: &mut Rng) -> DVector<f64> {
    let z = DVector::from_iterator(mean.len(), (0..mean.len()).map(|_| rng.normal()));
    mean + chol_l * z
}

/// Simulate the MPC + Kalman controller over `n_episodes` episodes with
/// per-episode RNG substreams; returns the Monte Carlo mean cumulative
/// reward and its standard error.
pub fn mpc_kalman_rollout(
    sys: &LinearGaussianSystem,
    n_episodes: usize,
    rng_seed: u64,
) -> RolloutSummary {
    let n = sys.state_dim();
    let init_l = sys
        .init_cov
        .clone()
        .cholesky()
        .expect("validated initial covariance is positive definite")
        .l();
    // A zero noise covariance means the sensor is exact; the filter then
    // just adopts the observation.
    let noiseless = sys.noise_cov.amax() == 0.0;
    let noise_l = if noiseless {
        None
    } else {
        Some(
            sys.noise_cov
                .clone()
                .cholesky()
                .expect("nonzero sensor noise covariance must be positive definite")
                .l(),
        )
    };

    let mut totals = Vec::with_capacity(n_episodes);
    for episode in 0..n_episodes {
        let mut rng = Rng::substream(rng_seed, episode as u64);
        let mut state = sample_gaussian(&sys.init_mean, &init_l, &mut rng);
        let mut mean = sys.init_mean.clone();
        let mut cov = sys.init_cov.clone();
        let mut total = 0.0;

        for t in 0..sys.horizon {
            let obs = match &noise_l {
                None => &sys.c * &state,
                Some(l) => {
                    &sys.c * &state + sample_gaussian(&DVector::zeros(l.nrows()), l, &mut rng)
                }
            };
            if noiseless {
                mean = obs.clone();
                cov = DMatrix::zeros(n, n);
            } else {
                let innovation_cov = &sys.c * &cov * sys.c.transpose() + &sys.noise_cov;
                let chol = (innovation_cov.clone() + innovation_cov.transpose())
                    .scale(0.5)
                    .cholesky()
                    .expect("innovation covariance is positive definite for nonzero noise");
                // K = Σ Cᵀ S⁻¹, via solving S Kᵀ = C Σ.
                let gain_t = chol.solve(&(&sys.c * &cov));
                let gain = gain_t.transpose();
                mean = &mean + &gain * (&obs - &sys.c * &mean);
                cov = (DMatrix::identity(n, n) - &gain * &sys.c) * cov;
            }

            let action = mpc_action(sys, &mean, &cov, t);
            total += realized_reward(sys, &state);
            state = &sys.a * &state + &sys.b * &sys.actions[action] + &sys.drift;
            mean = sys.step_mean(&mean, action);
            cov = sys.step_cov(&cov);
        }
        totals.push(total);
    }

    let n_f = n_episodes as f64;
    let mean = totals.iter().sum::<f64>() / n_f;
    let var = totals.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n_f - 1.0).max(1.0);
    RolloutSummary {
        mean,
        stderr: (var / n_f).sqrt(),
        episodes: n_episodes,
        seed: rng_seed,
    }
}
