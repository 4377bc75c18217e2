//! [`Task`] adapters for the three environment families.

use super::Task;
use crate::divergence::FGenerator;
use crate::env::{DiscretePomdp, LinearGaussianSystem, SampledEnvironment};
use crate::error::Result;
use crate::informativity::{
    budget_split, gaussian_informativity, hoeffding_upper, leave_one_out_mi_bound,
    mean_upper_bound, ConfidenceBudget, DiscreteJoint,
};
use crate::rng::Rng;

/// Exact task view of a finite POMDP: rewards and informativities are
/// computed by propagating the initial distribution through the prefix.
#[derive(Debug, Clone)]
pub struct DiscretePomdpTask {
    pub model: DiscretePomdp,
}

impl DiscretePomdpTask {
    pub fn new(model: DiscretePomdp) -> Result<DiscretePomdpTask> {
        model.validate()?;
        Ok(DiscretePomdpTask { model })
    }
}

impl Task for DiscretePomdpTask {
    fn horizon(&self) -> usize {
        self.model.horizon
    }

    fn action_count(&self) -> usize {
        self.model.n_actions
    }

    fn open_loop_reward(&self, prefix: &[usize], action: usize) -> f64 {
        let dist = self.model.propagate_prefix(prefix);
        self.model.expected_reward(&dist, action)
    }

    fn informativity(&self, f: &FGenerator, prefix: &[usize]) -> f64 {
        let dist = self.model.propagate_prefix(prefix);
        let joint = DiscreteJoint::new(dist, self.model.sensor.clone())
            .expect("validated model rows stay stochastic under propagation");
        crate::informativity::discrete_informativity(f, &joint)
            .expect("informativity of a validated joint")
    }
}

/// Exact task view of a linear-Gaussian system.
///
/// Covariances evolve independently of the actions, so the per-step
/// informativities are precomputed once. Only the KL generator has the
/// closed Gaussian form; a noiseless sensor (zero noise covariance) yields
/// infinite informativity at every step.
#[derive(Debug, Clone)]
pub struct LinearGaussianTask {
    pub system: LinearGaussianSystem,
    covs: Vec<nalgebra::DMatrix<f64>>,
    informativities: Vec<f64>,
}

impl LinearGaussianTask {
    pub fn new(system: LinearGaussianSystem) -> Result<LinearGaussianTask> {
        system.validate()?;
        let covs = system.cov_schedule();
        let noiseless = system.noise_cov.clone().cholesky().is_none();
        let informativities = covs
            .iter()
            .take(system.horizon)
            .map(|cov| {
                if noiseless {
                    Ok(f64::INFINITY)
                } else {
                    gaussian_informativity(&system, cov)
                }
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(LinearGaussianTask {
            system,
            covs,
            informativities,
        })
    }

    fn mean_at(&self, prefix: &[usize]) -> nalgebra::DVector<f64> {
        let mut mean = self.system.init_mean.clone();
        for &a in prefix {
            mean = self.system.step_mean(&mean, a);
        }
        mean
    }
}

impl Task for LinearGaussianTask {
    fn horizon(&self) -> usize {
        self.system.horizon
    }

    fn action_count(&self) -> usize {
        self.system.actions.len()
    }

    fn open_loop_reward(&self, prefix: &[usize], action: usize) -> f64 {
        let mean = self.mean_at(prefix);
        // Σ_t depends only on t = prefix length.
        self.system
            .expected_reward(&mean, &self.covs[prefix.len()], action)
    }

    fn informativity(&self, f: &FGenerator, prefix: &[usize]) -> f64 {
        assert_eq!(
            f.name(),
            "kl",
            "the Gaussian informativity route is closed-form for KL only"
        );
        self.informativities[prefix.len()]
    }
}

/// A one-step task whose reward and informativity are sampled
/// high-confidence upper bounds, with the failure probability split across
/// one concentration application per action plus one for the mutual
/// information.
#[derive(Debug, Clone)]
pub struct SampledOneStepTask {
    pub action_uppers: Vec<f64>,
    pub informativity_upper: f64,
    pub budget: ConfidenceBudget,
    /// Raw per-action empirical means, kept for reporting.
    pub action_means: Vec<f64>,
    /// Mean of the leave-one-out batch estimates, kept for reporting.
    pub mi_batch_mean: f64,
}

impl Task for SampledOneStepTask {
    fn horizon(&self) -> usize {
        1
    }

    fn action_count(&self) -> usize {
        self.action_uppers.len()
    }

    fn open_loop_reward(&self, _prefix: &[usize], action: usize) -> f64 {
        self.action_uppers[action]
    }

    fn informativity(&self, f: &FGenerator, _prefix: &[usize]) -> f64 {
        assert_eq!(
            f.name(),
            "kl",
            "the sampled leave-one-out route bounds Shannon mutual information (KL) only"
        );
        self.informativity_upper
    }

    fn confidence(&self) -> f64 {
        self.budget.confidence()
    }
}

/// Reward-sample substreams start here; leave-one-out batches use
/// substreams 0..num_batches of the same seed, so the offset keeps the
/// two families of streams disjoint.
const REWARD_STREAM_OFFSET: u64 = 1 << 32;

/// Sample a one-step environment into a [`SampledOneStepTask`].
///
/// Per action: `reward_samples` i.i.d. scenes scored by the indicator
/// reward, wrapped with the tighter of Hoeffding and Chernoff-Hoeffding.
/// Mutual information: `num_batches` leave-one-out batches of size
/// `batch_size`, rescaled to [0, 1] by ln K and wrapped with Hoeffding.
/// δ is split uniformly across all applications by `budget_split`.
pub fn build_sampled_one_step<E>(
    env: &E,
    reward_samples: usize,
    batch_size: usize,
    num_batches: usize,
    delta: f64,
    seed: u64,
) -> Result<SampledOneStepTask>
where
    E: SampledEnvironment,
{
    let n_actions = env.action_count();
    let mut labels: Vec<String> = (0..n_actions).map(|a| format!("reward:a{a}")).collect();
    labels.push("informativity".into());
    let label_refs: Vec<&str> = labels.iter().map(|s| s.as_str()).collect();
    let budget = budget_split(delta, &label_refs)?;

    let mut action_uppers = Vec::with_capacity(n_actions);
    let mut action_means = Vec::with_capacity(n_actions);
    for a in 0..n_actions {
        let mut rng = Rng::substream(seed, REWARD_STREAM_OFFSET + a as u64);
        let samples: Vec<f64> = (0..reward_samples)
            .map(|_| {
                let state = env.sample_state(&[], &mut rng);
                env.reward(&state, a)
            })
            .collect();
        let delta_a = budget.delta_for(&format!("reward:a{a}")).unwrap();
        action_means.push(samples.iter().sum::<f64>() / samples.len() as f64);
        action_uppers.push(mean_upper_bound(&samples, delta_a)?);
    }

    let estimates = leave_one_out_mi_bound(env, &[], batch_size, num_batches, seed)?;
    let cap = (batch_size as f64).ln();
    let scaled: Vec<f64> = estimates.iter().map(|v| v / cap).collect();
    let delta_mi = budget.delta_for("informativity").unwrap();
    let informativity_upper = cap * hoeffding_upper(&scaled, delta_mi)?;
    let mi_batch_mean = estimates.iter().sum::<f64>() / estimates.len().max(1) as f64;

    Ok(SampledOneStepTask {
        action_uppers,
        informativity_upper,
        budget,
        action_means,
        mi_batch_mean,
    })
}
