//! Clearance heuristic for the obstacle world: place obstacle proxies at
//! the observed ray endpoints and execute the primitive whose path stays
//! farthest from them.

use super::RolloutSummary;
use crate::env::{ObstacleWorld, SampledEnvironment};
use crate::rng::Rng;

/// One-step rollout of the clearance heuristic; returns the Monte Carlo
/// success rate and its standard error.
pub fn heuristic_clearance_policy(
    env: &ObstacleWorld,
    n_episodes: usize,
    rng_seed: u64,
) -> RolloutSummary {
    let mut successes = 0.0f64;
    for episode in 0..n_episodes {
        let mut rng = Rng::substream(rng_seed, episode as u64);
        let scene = env.sample_scene(&mut rng);
        let obs = env.sample_observation(&scene, &mut rng);

        let proxies: Vec<(f64, f64)> = obs
            .iter()
            .zip(env.ray_angles.iter())
            .map(|(&dist, &angle)| (dist * angle.sin(), dist * angle.cos()))
            .collect();

        let mut best_primitive = 0;
        let mut best_clearance = f64::NEG_INFINITY;
        for (i, arc) in env.primitives.iter().enumerate() {
            let clearance = proxies
                .iter()
                .map(|&p| arc.distance_to_point(p))
                .fold(f64::INFINITY, f64::min);
            if clearance > best_clearance {
                best_clearance = clearance;
                best_primitive = i;
            }
        }
        successes += env.reward(&scene, best_primitive);
    }
    let n = n_episodes as f64;
    let rate = successes / n;
    RolloutSummary {
        mean: rate,
        stderr: (rate * (1.0 - rate) / n).sqrt(),
        episodes: n_episodes,
        seed: rng_seed,
    }
}
