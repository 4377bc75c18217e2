//! Statistical behavior of the sampled-estimation pipeline on channels with
//! known closed-form information.

use sensor_limits::env::SampledEnvironment;
use sensor_limits::informativity::{hoeffding_upper, leave_one_out_mi_bound, mean_upper_bound};
use sensor_limits::rng::Rng;

/// Scalar Gaussian channel o = s + ε with s ~ N(0, σ_s²), ε ~ N(0, σ_n²);
/// mutual information is ½ ln(1 + σ_s²/σ_n²).
struct ScalarGaussianChannel {
    signal_var: f64,
    noise_var: f64,
}

impl SampledEnvironment for ScalarGaussianChannel {
    type State = f64;
    type Obs = f64;

    fn horizon(&self) -> usize {
        1
    }
    fn action_count(&self) -> usize {
        1
    }
    fn sample_state(&self, _prefix: &[usize], rng: &mut Rng) -> f64 {
        self.signal_var.sqrt() * rng.normal()
    }
    fn sample_observation(&self, state: &f64, rng: &mut Rng) -> f64 {
        state + self.noise_var.sqrt() * rng.normal()
    }
    fn log_density(&self, obs: &f64, state: &f64) -> f64 {
        let z = (obs - state) / self.noise_var.sqrt();
        -0.5 * z * z - 0.5 * (2.0 * std::f64::consts::PI * self.noise_var).ln()
    }
    fn reward(&self, _state: &f64, _action: usize) -> f64 {
        1.0
    }
}

#[test]
fn leave_one_out_brackets_the_closed_form() {
    let channel = ScalarGaussianChannel {
        signal_var: 1.0,
        noise_var: 1.0,
    };
    let true_mi = 0.5 * 2.0f64.ln();
    let batches = leave_one_out_mi_bound(&channel, &[], 100, 400, 2024).unwrap();
    let n = batches.len() as f64;
    let mean = batches.iter().sum::<f64>() / n;
    let var = batches.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    let se = (var / n).sqrt();
    // The estimator upper-bounds MI in expectation.
    assert!(
        mean >= true_mi - 3.0 * se,
        "batch mean {mean} far below MI {true_mi} (se {se})"
    );
    // And the concentration-wrapped value clears it outright.
    let cap = 100.0f64.ln();
    let scaled: Vec<f64> = batches.iter().map(|v| v / cap).collect();
    let wrapped = cap * hoeffding_upper(&scaled, 0.05).unwrap();
    assert!(wrapped > true_mi, "wrapped {wrapped} below MI {true_mi}");
}

#[test]
fn leave_one_out_shrinks_for_noisier_channels() {
    let mi_estimate = |noise_var: f64| {
        let channel = ScalarGaussianChannel {
            signal_var: 1.0,
            noise_var,
        };
        let batches = leave_one_out_mi_bound(&channel, &[], 64, 120, 5).unwrap();
        batches.iter().sum::<f64>() / batches.len() as f64
    };
    let sharp = mi_estimate(0.25);
    let noisy = mi_estimate(4.0);
    assert!(sharp > noisy, "{sharp} vs {noisy}");
}

/// Four-dimensional linear-Gaussian channel built from the ball-catching
/// sensor at a mid-horizon belief covariance, sampled through a Cholesky
/// factor so the closed-form informativity has an independent check on a
/// non-diagonal covariance.
struct CatchChannel {
    chol_l: nalgebra::DMatrix<f64>,
    noise_std: Vec<f64>,
}

impl CatchChannel {
    fn new() -> (Self, f64) {
        let sys = sensor_limits::env::ball_catching(1.0);
        let cov = sys.cov_schedule()[3].clone();
        let sym = (cov.clone() + cov.transpose()) * 0.5;
        let closed_form = sensor_limits::informativity::gaussian_informativity(&sys, &sym).unwrap();
        let chol_l = sym.cholesky().unwrap().l();
        let noise_std = (0..4).map(|i| sys.noise_cov[(i, i)].sqrt()).collect();
        (CatchChannel { chol_l, noise_std }, closed_form)
    }
}

impl SampledEnvironment for CatchChannel {
    type State = nalgebra::DVector<f64>;
    type Obs = Vec<f64>;

    fn horizon(&self) -> usize {
        1
    }
    fn action_count(&self) -> usize {
        1
    }
    fn sample_state(&self, _prefix: &[usize], rng: &mut Rng) -> nalgebra::DVector<f64> {
        let z = nalgebra::DVector::from_iterator(4, (0..4).map(|_| rng.normal()));
        &self.chol_l * z
    }
    fn sample_observation(&self, state: &nalgebra::DVector<f64>, rng: &mut Rng) -> Vec<f64> {
        (0..4)
            .map(|i| state[i] + self.noise_std[i] * rng.normal())
            .collect()
    }
    fn log_density(&self, obs: &Vec<f64>, state: &nalgebra::DVector<f64>) -> f64 {
        (0..4)
            .map(|i| {
                let z = (obs[i] - state[i]) / self.noise_std[i];
                -0.5 * z * z - 0.5 * (2.0 * std::f64::consts::PI).ln() - self.noise_std[i].ln()
            })
            .sum()
    }
    fn reward(&self, _state: &nalgebra::DVector<f64>, _action: usize) -> f64 {
        1.0
    }
}

#[test]
fn closed_form_gaussian_informativity_agrees_with_sampling() {
    let (channel, closed_form) = CatchChannel::new();
    let batches = leave_one_out_mi_bound(&channel, &[], 128, 250, 77).unwrap();
    let n = batches.len() as f64;
    let mean = batches.iter().sum::<f64>() / n;
    let var = batches.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    let se = (var / n).sqrt();
    // Leave-one-out over-estimates, so the sampled mean must clear the
    // closed form minus sampling noise.
    assert!(
        mean >= closed_form - 3.0 * se,
        "sampled {mean} far below closed form {closed_form} (se {se})"
    );
    // At this batch size the estimator bias is modest; the sampled mean
    // should not wildly exceed the closed form either.
    assert!(
        mean <= closed_form + 0.5,
        "sampled {mean} implausibly above closed form {closed_form}"
    );
}

#[test]
fn combined_mean_bound_covers_bernoulli_means() {
    // Reduced-scale coverage check of the min(Hoeffding, Chernoff) wrapper;
    // the acceptance suite runs the full-scale version.
    let p_true = 0.3;
    let (n, delta, trials) = (50usize, 0.05, 2000usize);
    let mut covered = 0usize;
    for trial in 0..trials {
        let mut rng = Rng::substream(99, trial as u64);
        let samples: Vec<f64> = (0..n)
            .map(|_| if rng.bernoulli(p_true) { 1.0 } else { 0.0 })
            .collect();
        if mean_upper_bound(&samples, delta).unwrap() >= p_true {
            covered += 1;
        }
    }
    let rate = covered as f64 / trials as f64;
    assert!(rate >= 0.92, "coverage {rate}");
}
