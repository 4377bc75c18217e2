//! Upper bounds on the best achievable expected reward: the single-step
//! bound, its multi-step dynamic-programming extension, horizon sweeping,
//! the generalized-Fano comparator, and bound minimization over the
//! piecewise-linear generator family.
//!
//! The multi-step recursion, run backward over every open-loop action
//! prefix:
//!
//! ```text
//! R̄_{T→T}(a_{0:T-1}) = 0
//! R̄⊥*(a_{0:t-1})     = sup_a  E[r_t | a_{0:t-1}] + R̄_{t+1→T}(a_{0:t})
//! R̄_{t→T}(a_{0:t-1}) = (T-t) · finv( R̄⊥*/(T-t) | 𝕀_f(o_t; s_t) )
//! ```
//!
//! where the informativity is evaluated under the state distribution
//! propagated by the open-loop prefix. Any upper bound substituted for the
//! rewards or informativities keeps the output an upper bound, because the
//! f-inverse is monotone in both arguments.

mod optimize;
mod tasks;

pub use optimize::{optimize_f, NelderMeadOptions};
pub use tasks::{
    build_sampled_one_step, DiscretePomdpTask, LinearGaussianTask, SampledOneStepTask,
};

use crate::divergence::FGenerator;
use crate::error::{Error, Result};
use crate::finverse::{f_inverse, DEFAULT_TOL};
use serde::Serialize;
use std::collections::BTreeMap;

/// Default cap on the number of open-loop prefixes a bound computation may
/// enumerate. |A|^T grows fast; fail early with guidance instead of hanging.
pub const DEFAULT_PREFIX_CAP: usize = 1_000_000;

/// What a task must expose for the bound machinery: per-step open-loop
/// reward expectations and sensor informativities, both either exact or
/// high-confidence upper bounds.
pub trait Task {
    fn horizon(&self) -> usize;
    fn action_count(&self) -> usize;

    /// E[r_t(s_t, a_t)] under the state distribution propagated by the
    /// open-loop prefix `a_{0:t-1}` (t = prefix.len()). Must lie in [0, 1].
    fn open_loop_reward(&self, prefix: &[usize], action: usize) -> f64;

    /// 𝕀_f(o_t; s_t) under the same propagated distribution; nonnegative,
    /// +∞ allowed (a noiseless sensor).
    fn informativity(&self, f: &FGenerator, prefix: &[usize]) -> f64;

    /// 1.0 for exact tasks; 1 − δ when the task's quantities are sampled
    /// high-confidence upper bounds.
    fn confidence(&self) -> f64 {
        1.0
    }
}

/// One recorded informativity value; `prefix` is "*" when every prefix at
/// that time-step shares the value.
#[derive(Debug, Clone, Serialize)]
pub struct InformativityRecord {
    pub t: usize,
    pub prefix: String,
    /// Informativity in nats; +∞ for a noiseless sensor (JSON renders
    /// non-finite numbers as null).
    pub value: f64,
}

/// Output of a horizon sweep.
#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub f_name: String,
    /// H → bound(R*_{0→H}) + (T − H), one entry per truncation.
    pub per_horizon: BTreeMap<usize, f64>,
    /// min over per_horizon; the reported upper bound on R*_{0→T}.
    pub best_bound: f64,
    /// 1.0 when all task quantities are exact.
    pub confidence: f64,
    pub informativities: Vec<InformativityRecord>,
    pub runtime_ms: f64,
}

/// Single-step bound (the task-relevant information potential):
/// finv(r_perp | informativity). Always ≥ r_perp.
pub fn single_step_bound(f: &FGenerator, r_perp: f64, informativity: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&r_perp) {
        return Err(Error::Domain(format!("r_perp = {r_perp} outside [0,1]")));
    }
    if informativity < 0.0 || informativity.is_nan() {
        return Err(Error::Domain(format!(
            "informativity = {informativity} is negative"
        )));
    }
    Ok(f_inverse(f, r_perp, informativity, DEFAULT_TOL)?.value)
}

/// Generalized Fano upper bound for one-step problems:
/// (informativity + ln(1 + r_perp)) / ln(1/(1 − r_perp)).
///
/// Defined for r_perp strictly inside (0, 1); callers clamp to [0, 1] for
/// display.
pub fn generalized_fano_bound(informativity: f64, r_perp: f64) -> Result<f64> {
    if informativity < 0.0 || informativity.is_nan() {
        return Err(Error::Domain(format!(
            "informativity = {informativity} is negative"
        )));
    }
    if !(r_perp > 0.0 && r_perp < 1.0) {
        return Err(Error::Domain(format!(
            "generalized Fano bound needs r_perp strictly inside (0,1), got {r_perp}"
        )));
    }
    Ok((informativity + (1.0 + r_perp).ln()) / (1.0 / (1.0 - r_perp)).ln())
}

fn prefix_count(actions: usize, horizon: usize) -> Option<usize> {
    let mut total = 0usize;
    let mut level = 1usize;
    for _ in 0..horizon {
        total = total.checked_add(level)?;
        level = level.checked_mul(actions)?;
    }
    Some(total)
}

struct Recorder {
    enabled: bool,
    values: Vec<(usize, String, f64)>,
}

fn prefix_key(prefix: &[usize]) -> String {
    if prefix.is_empty() {
        String::new()
    } else {
        prefix
            .iter()
            .map(|a| a.to_string())
            .collect::<Vec<_>>()
            .join(".")
    }
}

fn bound_recursive<T: Task + ?Sized>(
    task: &T,
    f: &FGenerator,
    prefix: &mut Vec<usize>,
    horizon: usize,
    recorder: &mut Recorder,
) -> Result<f64> {
    let t = prefix.len();
    if t == horizon {
        return Ok(0.0);
    }
    let mut best_perp = f64::NEG_INFINITY;
    for a in 0..task.action_count() {
        let step = task.open_loop_reward(prefix, a);
        prefix.push(a);
        let tail = bound_recursive(task, f, prefix, horizon, recorder)?;
        prefix.pop();
        best_perp = best_perp.max(step + tail);
    }
    let info = task.informativity(f, prefix);
    if recorder.enabled {
        recorder.values.push((t, prefix_key(prefix), info));
    }
    let steps = (horizon - t) as f64;
    let normalized = (best_perp / steps).clamp(0.0, 1.0);
    Ok(steps * f_inverse(f, normalized, info, DEFAULT_TOL)?.value)
}

/// Multi-step performance bound at the task's full horizon.
pub fn multi_step_bound<T: Task + ?Sized>(task: &T, f: &FGenerator) -> Result<f64> {
    multi_step_bound_truncated(task, f, task.horizon(), DEFAULT_PREFIX_CAP)
}

/// Multi-step bound for the truncated problem R*_{0→H}, H ≤ task horizon.
pub fn multi_step_bound_truncated<T: Task + ?Sized>(
    task: &T,
    f: &FGenerator,
    horizon: usize,
    prefix_cap: usize,
) -> Result<f64> {
    if horizon == 0 || horizon > task.horizon() {
        return Err(Error::Domain(format!(
            "truncation horizon {horizon} outside 1..={}",
            task.horizon()
        )));
    }
    match prefix_count(task.action_count(), horizon) {
        Some(n) if n <= prefix_cap => {}
        _ => {
            return Err(Error::ResourceCap(format!(
                "enumerating |A|^t prefixes for |A| = {}, T = {horizon} exceeds the cap of {prefix_cap}; \
                 lower the horizon or the action count",
                task.action_count()
            )))
        }
    }
    let mut recorder = Recorder {
        enabled: false,
        values: Vec::new(),
    };
    bound_recursive(task, f, &mut Vec::new(), horizon, &mut recorder)
}

/// Sweep truncation horizons H = 1..=T, score each as bound(H) + (T − H),
/// and report the minimum.
pub fn horizon_sweep<T: Task + ?Sized>(task: &T, f: &FGenerator) -> Result<BoundReport> {
    let start = std::time::Instant::now();
    let t_full = task.horizon();
    match prefix_count(task.action_count(), t_full) {
        Some(n) if n <= DEFAULT_PREFIX_CAP => {}
        _ => {
            return Err(Error::ResourceCap(format!(
                "horizon sweep would enumerate more than {DEFAULT_PREFIX_CAP} prefixes"
            )))
        }
    }
    let mut per_horizon = BTreeMap::new();
    let mut informativities = Vec::new();
    for h in 1..=t_full {
        let value = if h == t_full {
            // Record informativities on the full-horizon pass.
            let mut recorder = Recorder {
                enabled: true,
                values: Vec::new(),
            };
            let v = bound_recursive(task, f, &mut Vec::new(), h, &mut recorder)?;
            informativities = compress_records(recorder.values);
            v
        } else {
            multi_step_bound_truncated(task, f, h, DEFAULT_PREFIX_CAP)?
        };
        per_horizon.insert(h, value + (t_full - h) as f64);
    }
    let best_bound = per_horizon.values().copied().fold(f64::INFINITY, f64::min);
    Ok(BoundReport {
        f_name: f.name().to_string(),
        per_horizon,
        best_bound,
        confidence: task.confidence(),
        informativities,
        runtime_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

/// Collapse a level's records to a single "*" entry when every prefix at
/// that time-step sees the same informativity.
fn compress_records(raw: Vec<(usize, String, f64)>) -> Vec<InformativityRecord> {
    let mut by_level: BTreeMap<usize, Vec<(String, f64)>> = BTreeMap::new();
    for (t, prefix, value) in raw {
        by_level.entry(t).or_default().push((prefix, value));
    }
    let mut out = Vec::new();
    for (t, mut entries) in by_level {
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        let lo = entries.iter().map(|e| e.1).fold(f64::INFINITY, f64::min);
        let hi = entries
            .iter()
            .map(|e| e.1)
            .fold(f64::NEG_INFINITY, f64::max);
        // hi - lo is NaN when both are +inf (a noiseless sensor everywhere).
        let uniform = entries.len() > 1
            && ((hi - lo).abs() <= 1e-12 || (lo.is_infinite() && hi.is_infinite()));
        if uniform {
            out.push(InformativityRecord {
                t,
                prefix: "*".into(),
                value: entries[0].1,
            });
        } else {
            out.extend(
                entries
                    .into_iter()
                    .map(|(prefix, value)| InformativityRecord { t, prefix, value }),
            );
        }
    }
    out
}
