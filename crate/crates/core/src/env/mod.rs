//! The three benchmark environments and the environment abstractions they
//! instantiate: finite POMDPs, linear-Gaussian systems, and black-box sampled
//! environments.

use crate::error::{Error, Result};
use crate::rng::Rng;
use nalgebra::{DMatrix, DVector};

mod catch;
mod lava;
mod obstacle;

pub use catch::{ball_catching, ball_catching_scaled};
pub use lava::lava_pomdp;
pub use obstacle::{obstacle_world, ArcPrimitive, ObstacleWorld, Scene};

const ROW_TOL: f64 = 1e-12;

/// A finite-horizon POMDP with per-step rewards in [0, 1].
///
/// The agent observes `o_t ~ sensor(.|s_t)` and then chooses `a_t`;
/// reward `r(s_t, a_t)` accrues for t = 0..horizon-1.
#[derive(Debug, Clone)]
pub struct DiscretePomdp {
    pub n_states: usize,
    pub n_actions: usize,
    pub n_obs: usize,
    /// `transition[a][s]` is the row P(.|s, a).
    pub transition: Vec<Vec<Vec<f64>>>,
    /// `sensor[s]` is the row σ(.|s).
    pub sensor: Vec<Vec<f64>>,
    /// `reward[s][a]` in [0, 1].
    pub reward: Vec<Vec<f64>>,
    /// Initial state distribution p₀.
    pub init: Vec<f64>,
    pub horizon: usize,
}

fn check_row(row: &[f64], what: &str) -> Result<()> {
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > ROW_TOL {
        return Err(Error::Invariant(format!("{what} sums to {sum}, not 1")));
    }
    if row.iter().any(|&x| x < 0.0) {
        return Err(Error::Invariant(format!("{what} has a negative entry")));
    }
    Ok(())
}

impl DiscretePomdp {
    /// Check all stochasticity, shape, and reward-range invariants.
    pub fn validate(&self) -> Result<()> {
        if self.transition.len() != self.n_actions
            || self.sensor.len() != self.n_states
            || self.reward.len() != self.n_states
            || self.init.len() != self.n_states
        {
            return Err(Error::Invariant(
                "tensor shapes disagree with counts".into(),
            ));
        }
        for (a, per_state) in self.transition.iter().enumerate() {
            if per_state.len() != self.n_states {
                return Err(Error::Invariant(format!(
                    "transition[{a}] has wrong state count"
                )));
            }
            for (s, row) in per_state.iter().enumerate() {
                if row.len() != self.n_states {
                    return Err(Error::Invariant(format!(
                        "transition[{a}][{s}] has wrong length"
                    )));
                }
                check_row(row, &format!("transition row (a={a}, s={s})"))?;
            }
        }
        for (s, row) in self.sensor.iter().enumerate() {
            if row.len() != self.n_obs {
                return Err(Error::Invariant(format!("sensor[{s}] has wrong length")));
            }
            check_row(row, &format!("sensor row (s={s})"))?;
        }
        for (s, row) in self.reward.iter().enumerate() {
            if row.len() != self.n_actions {
                return Err(Error::Invariant(format!("reward[{s}] has wrong length")));
            }
            for &r in row {
                if !(0.0..=1.0).contains(&r) {
                    return Err(Error::Invariant(format!(
                        "reward {r} outside [0,1] at state {s}"
                    )));
                }
            }
        }
        check_row(&self.init, "initial distribution")?;
        if self.horizon == 0 {
            return Err(Error::Invariant("horizon must be positive".into()));
        }
        Ok(())
    }

    /// Push a state distribution through one action.
    pub fn propagate(&self, dist: &[f64], action: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.n_states];
        for (s, &mass) in dist.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            for (sp, &p) in self.transition[action][s].iter().enumerate() {
                out[sp] += mass * p;
            }
        }
        out
    }

    /// State distribution after an open-loop action prefix.
    pub fn propagate_prefix(&self, prefix: &[usize]) -> Vec<f64> {
        let mut dist = self.init.clone();
        for &a in prefix {
            dist = self.propagate(&dist, a);
        }
        dist
    }

    /// E[r(s, a)] under a state distribution.
    pub fn expected_reward(&self, dist: &[f64], action: usize) -> f64 {
        dist.iter()
            .zip(self.reward.iter())
            .map(|(&mass, row)| mass * row[action])
            .sum()
    }

    /// Observation marginal Σ_s dist(s) σ(o|s).
    pub fn observation_marginal(&self, dist: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_obs];
        for (s, &mass) in dist.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            for (o, &p) in self.sensor[s].iter().enumerate() {
                out[o] += mass * p;
            }
        }
        out
    }

    /// Serialize to the documented text format, checksum line included.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str("pomdp v1\n");
        out.push_str(&format!("states {}\n", self.n_states));
        out.push_str(&format!("actions {}\n", self.n_actions));
        out.push_str(&format!("obs {}\n", self.n_obs));
        out.push_str(&format!("horizon {}\n", self.horizon));
        let push_nums = |out: &mut String, nums: &[f64]| {
            for chunk in nums.chunks(8) {
                let line: Vec<String> = chunk.iter().map(|x| format!("{x}")).collect();
                out.push_str(&line.join(" "));
                out.push('\n');
            }
        };
        out.push_str("transition\n");
        push_nums(&mut out, &self.flat_transition());
        out.push_str("sensor\n");
        push_nums(&mut out, &self.flat(&self.sensor));
        out.push_str("reward\n");
        push_nums(&mut out, &self.flat(&self.reward));
        out.push_str("init\n");
        push_nums(&mut out, &self.init);
        out.push_str(&format!("checksum {}\n", self.checksum()));
        out
    }

    /// Parse the text format, verifying shapes, stochasticity, and checksum.
    pub fn from_text(text: &str) -> Result<DiscretePomdp> {
        let mut header = std::collections::HashMap::new();
        let mut sections: std::collections::HashMap<String, Vec<f64>> =
            std::collections::HashMap::new();
        let mut current: Option<String> = None;
        let mut checksum_line: Option<(usize, u64)> = None;
        let mut version_seen = false;

        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let head = parts.next().unwrap();
            match head {
                "pomdp" => {
                    if parts.next() != Some("v1") {
                        return Err(Error::Invariant(format!(
                            "line {lineno}: unsupported format version"
                        )));
                    }
                    version_seen = true;
                }
                "states" | "actions" | "obs" | "horizon" => {
                    let v: usize = parts.next().and_then(|s| s.parse().ok()).ok_or_else(|| {
                        Error::Invariant(format!("line {lineno}: bad {head} count"))
                    })?;
                    header.insert(head.to_string(), v);
                }
                "transition" | "sensor" | "reward" | "init" => {
                    current = Some(head.to_string());
                    sections.entry(head.to_string()).or_default();
                }
                "checksum" => {
                    let v: u64 = parts
                        .next()
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(|| Error::Invariant(format!("line {lineno}: bad checksum")))?;
                    checksum_line = Some((lineno, v));
                    current = None;
                }
                _ => {
                    let section = current.clone().ok_or_else(|| {
                        Error::Invariant(format!("line {lineno}: numbers outside any section"))
                    })?;
                    let dst = sections.get_mut(&section).unwrap();
                    for tok in line.split_whitespace() {
                        let v: f64 = tok.parse().map_err(|_| {
                            Error::Invariant(format!(
                                "line {lineno}: cannot parse '{tok}' as a number"
                            ))
                        })?;
                        dst.push(v);
                    }
                }
            }
        }

        if !version_seen {
            return Err(Error::Invariant("missing 'pomdp v1' header line".into()));
        }
        let get = |k: &str| {
            header
                .get(k)
                .copied()
                .ok_or_else(|| Error::Invariant(format!("missing '{k}' header")))
        };
        let (ns, na, no, horizon) = (
            get("states")?,
            get("actions")?,
            get("obs")?,
            get("horizon")?,
        );
        let mut take = |k: &str, want: usize| -> Result<Vec<f64>> {
            let v = sections
                .remove(k)
                .ok_or_else(|| Error::Invariant(format!("missing '{k}' section")))?;
            if v.len() != want {
                return Err(Error::Invariant(format!(
                    "'{k}' section has {} numbers, expected {want}",
                    v.len()
                )));
            }
            Ok(v)
        };
        let trans_flat = take("transition", na * ns * ns)?;
        let sensor_flat = take("sensor", ns * no)?;
        let reward_flat = take("reward", ns * na)?;
        let init = take("init", ns)?;

        let transition: Vec<Vec<Vec<f64>>> = (0..na)
            .map(|a| {
                (0..ns)
                    .map(|s| trans_flat[(a * ns + s) * ns..(a * ns + s + 1) * ns].to_vec())
                    .collect()
            })
            .collect();
        let sensor: Vec<Vec<f64>> = (0..ns)
            .map(|s| sensor_flat[s * no..(s + 1) * no].to_vec())
            .collect();
        let reward: Vec<Vec<f64>> = (0..ns)
            .map(|s| reward_flat[s * na..(s + 1) * na].to_vec())
            .collect();

        let pomdp = DiscretePomdp {
            n_states: ns,
            n_actions: na,
            n_obs: no,
            transition,
            sensor,
            reward,
            init,
            horizon,
        };
        pomdp.validate()?;
        if let Some((lineno, claimed)) = checksum_line {
            let actual = pomdp.checksum();
            if claimed != actual {
                return Err(Error::Invariant(format!(
                    "line {lineno}: checksum mismatch (file says {claimed}, contents hash to {actual})"
                )));
            }
        } else {
            return Err(Error::Invariant("missing checksum line".into()));
        }
        Ok(pomdp)
    }

    fn flat(&self, rows: &[Vec<f64>]) -> Vec<f64> {
        rows.iter().flatten().copied().collect()
    }

    fn flat_transition(&self) -> Vec<f64> {
        self.transition
            .iter()
            .flatten()
            .flatten()
            .copied()
            .collect()
    }

    /// FNV-1a over the header counts and the bit patterns of every tensor
    /// entry, in file order.
    pub fn checksum(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |bytes: &[u8]| {
            for &b in bytes {
                h ^= b as u64;
                h = h.wrapping_mul(0x1000_0000_01b3);
            }
        };
        for v in [self.n_states, self.n_actions, self.n_obs, self.horizon] {
            eat(&(v as u64).to_le_bytes());
        }
        for x in self
            .flat_transition()
            .iter()
            .chain(self.flat(&self.sensor).iter())
            .chain(self.flat(&self.reward).iter())
            .chain(self.init.iter())
        {
            eat(&x.to_bits().to_le_bytes());
        }
        h
    }
}

/// How the expected per-step reward of a linear-Gaussian system is evaluated
/// under a Gaussian belief.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GaussianReward {
    /// E[max(1 - 2|s_i|, 0)] for state coordinate i, in closed form.
    HatOnCoordinate(usize),
}

fn std_normal_cdf(z: f64) -> f64 {
    0.5 * (1.0 + libm::erf(z / std::f64::consts::SQRT_2))
}

fn std_normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Closed-form E[max(1 - 2|x|, 0)] for x ~ N(mean, var).
///
/// Uses ∫_a^b x dΦ = m[Φ(β)-Φ(α)] - σ[φ(β)-φ(α)] on the two halves of the
/// hat support [-1/2, 1/2].
pub fn expected_hat_reward(mean: f64, var: f64) -> f64 {
    if var < 1e-24 {
        return (1.0 - 2.0 * mean.abs()).max(0.0);
    }
    let sigma = var.sqrt();
    let z = |x: f64| (x - mean) / sigma;
    let cdf = |x: f64| std_normal_cdf(z(x));
    // ∫_a^b x φ_{m,σ}(x) dx
    let partial_mean = |a: f64, b: f64| {
        mean * (cdf(b) - cdf(a)) - sigma * (std_normal_pdf(z(b)) - std_normal_pdf(z(a)))
    };
    let prob = cdf(0.5) - cdf(-0.5);
    let folded = partial_mean(0.0, 0.5) - partial_mean(-0.5, 0.0);
    (prob - 2.0 * folded).clamp(0.0, 1.0)
}

/// Affine dynamics s' = A s + B a + drift with a linear-Gaussian sensor
/// o = C s + ε, a Gaussian initial belief, and a finite action set.
///
/// Dynamics are deterministic (no process noise), which is all the built-in
/// benchmark needs; covariances therefore evolve as A Σ Aᵀ.
#[derive(Debug, Clone)]
pub struct LinearGaussianSystem {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub drift: DVector<f64>,
    pub c: DMatrix<f64>,
    /// Sensor noise covariance Σ_ε (may be exactly zero for a noiseless sensor).
    pub noise_cov: DMatrix<f64>,
    pub init_mean: DVector<f64>,
    pub init_cov: DMatrix<f64>,
    pub actions: Vec<DVector<f64>>,
    pub reward: GaussianReward,
    pub horizon: usize,
}

impl LinearGaussianSystem {
    pub fn validate(&self) -> Result<()> {
        if self.actions.is_empty() {
            return Err(Error::Invariant("action set must be nonempty".into()));
        }
        if self.horizon == 0 {
            return Err(Error::Invariant("horizon must be positive".into()));
        }
        let n = self.a.nrows();
        if self.a.ncols() != n
            || self.b.nrows() != n
            || self.drift.len() != n
            || self.c.ncols() != n
            || self.init_mean.len() != n
            || self.init_cov.nrows() != n
        {
            return Err(Error::Invariant("system matrix shapes disagree".into()));
        }
        if self.init_cov.clone().cholesky().is_none() {
            return Err(Error::NotPositiveDefinite("initial covariance".into()));
        }
        Ok(())
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    /// Mean propagation through one action.
    pub fn step_mean(&self, mean: &DVector<f64>, action: usize) -> DVector<f64> {
        &self.a * mean + &self.b * &self.actions[action] + &self.drift
    }

    /// Covariance propagation (action-independent; dynamics are deterministic).
    pub fn step_cov(&self, cov: &DMatrix<f64>) -> DMatrix<f64> {
        &self.a * cov * self.a.transpose()
    }

    /// E[r(s, a)] when s ~ N(mean, cov).
    pub fn expected_reward(&self, mean: &DVector<f64>, cov: &DMatrix<f64>, _action: usize) -> f64 {
        match self.reward {
            GaussianReward::HatOnCoordinate(i) => expected_hat_reward(mean[i], cov[(i, i)]),
        }
    }

    /// Open-loop belief covariances Σ_0 .. Σ_T.
    pub fn cov_schedule(&self) -> Vec<DMatrix<f64>> {
        let mut covs = Vec::with_capacity(self.horizon + 1);
        covs.push(self.init_cov.clone());
        for t in 0..self.horizon {
            let next = self.step_cov(&covs[t]);
            covs.push(next);
        }
        covs
    }
}

/// A black-box environment: states can only be sampled, but the sensor has
/// an evaluable log-density, which is exactly what the sampled
/// mutual-information machinery needs.
pub trait SampledEnvironment {
    type State;
    type Obs;

    fn horizon(&self) -> usize;
    fn action_count(&self) -> usize;
    /// Draw s_t given an open-loop action prefix a_{0..t-1}.
    fn sample_state(&self, prefix_actions: &[usize], rng: &mut Rng) -> Self::State;
    fn sample_observation(&self, state: &Self::State, rng: &mut Rng) -> Self::Obs;
    /// log σ(o | s); must be finite for pairs produced by the samplers.
    fn log_density(&self, obs: &Self::Obs, state: &Self::State) -> f64;
    /// r(s, a) ∈ [0, 1].
    fn reward(&self, state: &Self::State, action: usize) -> f64;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hat_reward_peaks_at_one_for_tight_beliefs() {
        assert!((expected_hat_reward(0.0, 1e-30) - 1.0).abs() < 1e-12);
        let near = expected_hat_reward(0.0, 1e-8);
        assert!((near - 1.0).abs() < 1e-3, "{near}");
    }

    #[test]
    fn hat_reward_vanishes_far_from_origin() {
        assert!(expected_hat_reward(10.0, 0.01) < 1e-12);
    }

    #[test]
    fn hat_reward_matches_monte_carlo() {
        let (mean, sigma) = (0.0, 0.1);
        let closed = expected_hat_reward(mean, sigma * sigma);
        let mut rng = Rng::new(2024);
        let n = 10_000_000usize;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for _ in 0..n {
            let x: f64 = mean + sigma * rng.normal();
            let r = (1.0 - 2.0 * x.abs()).max(0.0);
            sum += r;
            sumsq += r * r;
        }
        let mc = sum / n as f64;
        let var = (sumsq / n as f64 - mc * mc).max(0.0);
        let se = (var / n as f64).sqrt();
        assert!(
            (closed - mc).abs() < 3.0 * se + 1e-9,
            "closed {closed} vs mc {mc} (se {se})"
        );
    }

    #[test]
    fn pomdp_text_round_trip() {
        let m = lava_pomdp(0.7);
        let text = m.to_text();
        let back = DiscretePomdp::from_text(&text).unwrap();
        assert_eq!(back.n_states, m.n_states);
        assert_eq!(back.checksum(), m.checksum());
        assert_eq!(back.transition, m.transition);
        assert_eq!(back.init, m.init);
    }

    #[test]
    fn pomdp_text_rejects_corruption() {
        let m = lava_pomdp(0.7);
        let text = m.to_text();
        // Corrupt one sensor number without touching the checksum line.
        let corrupted = text.replacen("0.7", "0.70001", 1);
        let err = DiscretePomdp::from_text(&corrupted);
        assert!(err.is_err());
    }

    #[test]
    fn pomdp_text_requires_checksum() {
        let m = lava_pomdp(0.5);
        let text = m.to_text();
        let without: String = text
            .lines()
            .filter(|l| !l.starts_with("checksum"))
            .collect::<Vec<_>>()
            .join("\n");
        assert!(DiscretePomdp::from_text(&without).is_err());
    }

    #[test]
    fn readme_example_file_parses() {
        let text = "\
pomdp v1
states 2
actions 2
obs 2
horizon 3
transition   # n_actions x n_states x n_states, row-major P(s'|s,a)
1 0  0 1
0 1  1 0
sensor       # n_states x n_obs, row-major sigma(o|s)
0.9 0.1
0.2 0.8
reward       # n_states x n_actions, values in [0,1]
0 0.5
1 0.25
init         # n_states
0.5 0.5
checksum 3678949873048224584
";
        let m = DiscretePomdp::from_text(text).unwrap();
        assert_eq!((m.n_states, m.n_actions, m.n_obs, m.horizon), (2, 2, 2, 3));
        assert_eq!(m.sensor[1], vec![0.2, 0.8]);
    }

    #[test]
    fn propagate_conserves_mass() {
        let m = lava_pomdp(0.4);
        let mut dist = m.init.clone();
        for &a in &[0usize, 1, 1, 0, 1] {
            dist = m.propagate(&dist, a);
            let sum: f64 = dist.iter().sum();
            assert!((sum - 1.0).abs() < 1e-12);
        }
    }
}
