//! Acceptance suite: one test per criterion, each printing a PASS line with
//! its measured runtime (run with `--nocapture` to see them). Tests share a
//! mutex so they run one at a time and the per-criterion runtime limits are
//! measured faithfully.

use sensor_limits::baselines::{enumerate_policies_exact, solve_pomdp_exact};
use sensor_limits::bound::{
    generalized_fano_bound, optimize_f, single_step_bound, DiscretePomdpTask,
};
use sensor_limits::divergence::{bernoulli_fdiv, builtin_generators, FGenerator};
use sensor_limits::env::{lava_pomdp, SampledEnvironment};
use sensor_limits::finverse::{f_inverse, DEFAULT_TOL};
use sensor_limits::informativity::{
    chernoff_hoeffding_upper, discrete_informativity, hoeffding_upper, leave_one_out_mi_bound,
    DiscreteJoint,
};
use sensor_limits::rng::Rng;
use sensor_limits_cli::{run_catch_sweep, run_lava_sweep, run_obstacle_bound, RunConfig};
use std::sync::Mutex;
use std::time::{Duration, Instant};

static SERIAL: Mutex<()> = Mutex::new(());

fn timed<T>(limit: Duration, body: impl FnOnce() -> T) -> (T, Duration) {
    let _guard = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let out = body();
    let elapsed = start.elapsed();
    assert!(
        elapsed <= limit,
        "runtime {elapsed:?} exceeded the limit {limit:?}"
    );
    (out, elapsed)
}

fn p_grid() -> Vec<f64> {
    (0..=8).map(|i| 0.2 + 0.1 * i as f64).collect()
}

#[test]
fn criterion_01_lava_exact_bound() {
    let (bound, elapsed) = timed(Duration::from_secs(5), || {
        let mut cfg = RunConfig::defaults("lava-sweep");
        cfg.grid = vec![0.2];
        cfg.f_selection = "kl".into();
        let out = run_lava_sweep(&cfg).unwrap();
        let report: serde_json::Value = serde_json::from_str(&out.json).unwrap();
        report["rows"][0]["report"]["best_bound"].as_f64().unwrap()
    });
    assert!(
        (bound - 3.5).abs() <= 1e-6,
        "criterion 1: FAIL (bound {bound})"
    );
    println!("criterion 1: PASS (lava bound {bound:.9} = 3.5 within 1e-6, {elapsed:?} < 5s)");
}

#[test]
fn criterion_02_lava_sandwich() {
    let (violations, elapsed) = timed(Duration::from_secs(120), || {
        let mut cfg = RunConfig::defaults("lava-sweep");
        cfg.grid = p_grid();
        cfg.f_selection = "all".into();
        let out = run_lava_sweep(&cfg).unwrap();
        let report: serde_json::Value = serde_json::from_str(&out.json).unwrap();
        let rows = report["rows"].as_array().unwrap();
        assert_eq!(rows.len(), 9 * 7);
        rows.iter()
            .filter(|row| {
                let optimum = row["pomdp_optimum"].as_f64().unwrap();
                let bound = row["report"]["best_bound"].as_f64().unwrap();
                optimum > bound + 1e-9
            })
            .count()
    });
    assert_eq!(violations, 0, "criterion 2: FAIL ({violations} violations)");
    println!(
        "criterion 2: PASS (0 sandwich violations over 9 noise levels x 7 generators, {elapsed:?} < 2min)"
    );
}

#[test]
fn criterion_03_fano_dominance() {
    let (worst_gap, elapsed) = timed(Duration::from_secs(10), || {
        let mut worst: f64 = f64::NEG_INFINITY;
        for p in p_grid() {
            let model = lava_pomdp(p);
            let r1 = (0..model.n_actions)
                .map(|a| model.expected_reward(&model.init, a))
                .fold(f64::NEG_INFINITY, f64::max);
            let joint = DiscreteJoint::new(model.init.clone(), model.sensor.clone()).unwrap();
            let info = discrete_informativity(&FGenerator::Kl, &joint).unwrap();
            let ours = single_step_bound(&FGenerator::Kl, r1, info).unwrap();
            let fano = generalized_fano_bound(info, r1).unwrap();
            assert!(
                ours <= fano + 1e-9,
                "criterion 3: FAIL at p = {p} ({ours} > {fano})"
            );
            worst = worst.max(ours - fano);
        }
        worst
    });
    println!(
        "criterion 3: PASS (Theorem-1 bound below generalized Fano at all 9 points, max gap {worst_gap:.4}, {elapsed:?} < 10s)"
    );
}

#[test]
fn criterion_04_optimized_f_soundness_and_ceiling() {
    let ((bound, optimum), elapsed) = timed(Duration::from_secs(300), || {
        let model = lava_pomdp(0.2);
        let (_, optimum) = solve_pomdp_exact(&model).unwrap();
        let task = DiscretePomdpTask::new(model).unwrap();
        let (_, bound) = optimize_f(&task, 10, 8, 42).unwrap();
        (bound, optimum)
    });
    assert!(
        bound >= optimum - 1e-9,
        "criterion 4: FAIL (optimized bound {bound} below optimum {optimum})"
    );
    assert!(
        bound <= 3.5 + 1e-6,
        "criterion 4: FAIL (optimized bound {bound} above the KL ceiling 3.5)"
    );
    println!(
        "criterion 4: PASS (optimized bound {bound:.9} in [optimum {optimum:.6}, 3.5 + 1e-6], 8 restarts, {elapsed:?} < 5min)"
    );
}

fn catch_report() -> serde_json::Value {
    let mut cfg = RunConfig::defaults("catch-sweep");
    cfg.grid = vec![0.0, 0.25, 0.5, 1.0, 2.0, 4.0];
    cfg.episodes = 100;
    cfg.seed = 42;
    let out = run_catch_sweep(&cfg).unwrap();
    serde_json::from_str(&out.json).unwrap()
}

#[test]
fn criterion_05_ball_catching_sandwich_and_trend() {
    let (report, elapsed) = timed(Duration::from_secs(600), catch_report);
    let rows = report["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 6);
    let mut prev_bound = f64::INFINITY;
    for row in rows {
        let eta = row["eta"].as_f64().unwrap();
        let bound = row["report"]["best_bound"].as_f64().unwrap();
        let mpc = row["mpc"]["mean"].as_f64().unwrap();
        assert!(
            mpc <= bound + 1e-9,
            "criterion 5: FAIL (MPC {mpc} above bound {bound} at eta {eta})"
        );
        assert!(
            bound <= prev_bound + 1e-9,
            "criterion 5: FAIL (bound increased at eta {eta})"
        );
        prev_bound = bound;
    }
    println!(
        "criterion 5: PASS (MPC under the bound at all 6 noise scales; bound nonincreasing, {elapsed:?} < 10min)"
    );
}

#[test]
fn criterion_06_ball_catching_sensor_separation() {
    let (report, elapsed) = timed(Duration::from_secs(600), catch_report);
    let rows = report["rows"].as_array().unwrap();
    let mpc_clean = rows[0]["mpc"]["mean"].as_f64().unwrap();
    assert_eq!(rows[0]["eta"].as_f64().unwrap(), 0.0);
    let separated: Vec<f64> = rows
        .iter()
        .filter(|row| row["eta"].as_f64().unwrap() >= 1.0)
        .filter(|row| mpc_clean > row["report"]["best_bound"].as_f64().unwrap())
        .map(|row| row["eta"].as_f64().unwrap())
        .collect();
    assert!(
        !separated.is_empty(),
        "criterion 6: FAIL (noiseless MPC {mpc_clean} does not exceed any eta >= 1 bound)"
    );
    println!(
        "criterion 6: PASS (noiseless MPC {mpc_clean:.4} beats the fundamental limit at eta in {separated:?}, {elapsed:?})"
    );
}

#[test]
fn criterion_07_obstacle_bound_range() {
    let (report, elapsed) = timed(Duration::from_secs(900), || {
        let cfg = RunConfig::defaults("obstacle-bound");
        let out = run_obstacle_bound(&cfg).unwrap();
        serde_json::from_str::<serde_json::Value>(&out.json).unwrap()
    });
    let bound = report["bound"].as_f64().unwrap();
    let heuristic = report["heuristic"]["mean"].as_f64().unwrap();
    assert_eq!(report["n_rays"].as_u64().unwrap(), 5);
    assert_eq!(report["eta"].as_f64().unwrap(), 0.3);
    assert_eq!(report["p_miss"].as_f64().unwrap(), 0.05);
    assert_eq!(report["delta"].as_f64().unwrap(), 0.05);
    assert!(
        (0.70..=0.88).contains(&bound),
        "criterion 7: FAIL (bound {bound} outside [0.70, 0.88])"
    );
    assert!(
        heuristic <= bound + 1e-9,
        "criterion 7: FAIL (heuristic {heuristic} above bound {bound})"
    );
    println!(
        "criterion 7: PASS (sampled bound {bound:.4} in [0.70, 0.88] at 95% confidence; heuristic {heuristic:.4} below it, {elapsed:?} < 15min)"
    );
}

/// Brute-force oracle: largest feasible p on a 1e-6 grid, scanned upward
/// from q (exact to one step by monotonicity on [q, 1]).
fn grid_inverse(f: &FGenerator, q: f64, c: f64) -> f64 {
    let step = 1e-6;
    let mut best = q;
    let mut k = 1u64;
    loop {
        let p = (q + k as f64 * step).min(1.0);
        if bernoulli_fdiv(f, p, q).unwrap() <= c {
            best = p;
        } else {
            break;
        }
        if p >= 1.0 {
            break;
        }
        k += 1;
    }
    best
}

#[test]
fn criterion_08_finverse_oracle_suite() {
    let ((max_err, violations), elapsed) = timed(Duration::from_secs(30), || {
        let generators = builtin_generators();
        let mut rng = Rng::new(2718);
        let mut max_err = 0.0f64;
        for _ in 0..200 {
            let f = &generators[(rng.next_u64() % 7) as usize];
            let q = rng.uniform_in(0.01, 0.99);
            let c = rng.uniform_in(0.0, 2.5);
            let solved = f_inverse(f, q, c, DEFAULT_TOL).unwrap().value;
            let oracle = grid_inverse(f, q, c);
            max_err = max_err.max((solved - oracle).abs());
        }

        // Proposition-1 monotonicity grids, both arguments, all generators.
        let mut violations = 0usize;
        for f in &generators {
            for qi in 0..=20 {
                let q = qi as f64 / 20.0;
                let mut prev = -1.0;
                for c in [0.0, 0.01, 0.05, 0.2, 0.5, 1.0, 2.0] {
                    let v = f_inverse(f, q, c, DEFAULT_TOL).unwrap().value;
                    if v < prev - 1e-9 {
                        violations += 1;
                    }
                    prev = v;
                }
            }
            for c in [0.0, 0.05, 0.3, 1.0] {
                let mut prev = -1.0;
                for qi in 0..=20 {
                    let q = qi as f64 / 20.0;
                    let v = f_inverse(f, q, c, DEFAULT_TOL).unwrap().value;
                    if v < prev - 1e-9 {
                        violations += 1;
                    }
                    prev = v;
                }
            }
        }
        (max_err, violations)
    });
    assert!(
        max_err <= 2e-6,
        "criterion 8: FAIL (max |bisection - grid| = {max_err})"
    );
    assert_eq!(
        violations, 0,
        "criterion 8: FAIL ({violations} monotonicity violations)"
    );
    println!(
        "criterion 8: PASS (200 triples, max error {max_err:.2e} <= 2e-6; monotonicity grids clean, {elapsed:?} < 30s)"
    );
}

#[test]
fn criterion_09_chernoff_coverage() {
    let (rate, elapsed) = timed(Duration::from_secs(30), || {
        let (p_true, n, delta, trials) = (0.3, 50usize, 0.05, 10_000usize);
        let mut covered = 0usize;
        for trial in 0..trials {
            let mut rng = Rng::substream(31415, trial as u64);
            let samples: Vec<f64> = (0..n)
                .map(|_| if rng.bernoulli(p_true) { 1.0 } else { 0.0 })
                .collect();
            if chernoff_hoeffding_upper(&samples, delta).unwrap() >= p_true {
                covered += 1;
            }
        }
        covered as f64 / trials as f64
    });
    assert!(
        rate >= 0.94,
        "criterion 9: FAIL (coverage {rate} below 94%)"
    );
    println!(
        "criterion 9: PASS (Chernoff-Hoeffding covered the true mean in {:.2}% of 10,000 trials, {elapsed:?} < 30s)",
        rate * 100.0
    );
}

/// Scalar Gaussian channel with known mutual information ½ ln(1 + SNR).
struct ScalarChannel;

impl SampledEnvironment for ScalarChannel {
    type State = f64;
    type Obs = f64;
    fn horizon(&self) -> usize {
        1
    }
    fn action_count(&self) -> usize {
        1
    }
    fn sample_state(&self, _prefix: &[usize], rng: &mut Rng) -> f64 {
        rng.normal()
    }
    fn sample_observation(&self, state: &f64, rng: &mut Rng) -> f64 {
        state + rng.normal()
    }
    fn log_density(&self, obs: &f64, state: &f64) -> f64 {
        let z = obs - state;
        -0.5 * z * z - 0.5 * (2.0 * std::f64::consts::PI).ln()
    }
    fn reward(&self, _state: &f64, _action: usize) -> f64 {
        1.0
    }
}

#[test]
fn criterion_10_gaussian_mi_cross_check() {
    let ((mean, se, wrapped), elapsed) = timed(Duration::from_secs(60), || {
        let batches = leave_one_out_mi_bound(&ScalarChannel, &[], 200, 2000, 11).unwrap();
        let n = batches.len() as f64;
        let mean = batches.iter().sum::<f64>() / n;
        let var = batches.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
        let se = (var / n).sqrt();
        let cap = 200.0f64.ln();
        let scaled: Vec<f64> = batches.iter().map(|v| v / cap).collect();
        let wrapped = cap * hoeffding_upper(&scaled, 0.05).unwrap();
        (mean, se, wrapped)
    });
    let true_mi = 0.5 * 2.0f64.ln();
    assert!(
        mean >= true_mi - 3.0 * se,
        "criterion 10: FAIL (batch mean {mean} below MI {true_mi} - 3se)"
    );
    assert!(
        wrapped > true_mi,
        "criterion 10: FAIL (wrapped bound {wrapped} below MI {true_mi})"
    );
    println!(
        "criterion 10: PASS (batch mean {mean:.4} >= {true_mi:.4} - 3x{se:.4}; wrapped {wrapped:.4} clears it, {elapsed:?} < 1min)"
    );
}

#[test]
fn criterion_11_tiny_instance_exactness() {
    let (max_gap, elapsed) = timed(Duration::from_secs(60), || {
        let mut max_gap = 0.0f64;
        for p in p_grid() {
            for horizon in 1..=2usize {
                let mut model = lava_pomdp(p);
                model.horizon = horizon;
                let by_enum = enumerate_policies_exact(&model, horizon).unwrap();
                let (_, by_solve) = solve_pomdp_exact(&model).unwrap();
                max_gap = max_gap.max((by_enum - by_solve).abs());
            }
        }
        max_gap
    });
    assert!(
        max_gap <= 1e-10,
        "criterion 11: FAIL (max |enumeration - solver| = {max_gap})"
    );
    println!(
        "criterion 11: PASS (policy enumeration matches the exact solver to {max_gap:.2e} <= 1e-10, {elapsed:?} < 1min)"
    );
}
