//! Experiment runners behind the `sensor-limits` binary: each one produces
//! a CSV table and a JSON report as strings, so outputs are byte-stable for
//! a fixed configuration and directly testable.

pub mod config;

use sensor_limits::baselines::{
    heuristic_clearance_policy, mpc_kalman_rollout, solve_pomdp_exact, RolloutSummary,
};
use sensor_limits::bound::{
    build_sampled_one_step, generalized_fano_bound, horizon_sweep, multi_step_bound, optimize_f,
    single_step_bound, BoundReport, DiscretePomdpTask, LinearGaussianTask, Task,
};
use sensor_limits::divergence::FGenerator;
use sensor_limits::env::{ball_catching_scaled, lava_pomdp, obstacle_world, DiscretePomdp};
use sensor_limits::finverse::{f_inverse, f_inverse_right};
use sensor_limits::informativity::{discrete_informativity, DiscreteJoint};
use serde::Serialize;

pub use config::{CliError, FSelection, RunConfig};

/// Slack for re-asserting `baseline <= bound` at emit time: exact pipelines
/// can meet the bound with equality up to accumulation order.
const SANDWICH_SLACK: f64 = 1e-9;

fn fmt(x: f64) -> String {
    format!("{x}")
}

/// What an experiment runner hands back: the experiment's CSV table, the
/// JSON report, and (when a baseline policy ran) its rows in the shared
/// `param,policy,mean,stderr,episodes,seed` format.
#[derive(Debug)]
pub struct RunOutput {
    pub csv: String,
    pub json: String,
    pub baselines_csv: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct LavaEntry {
    pub p_correct: f64,
    pub f: String,
    pub report: BoundReport,
    pub pomdp_optimum: f64,
    /// Theorem-1 bound for the one-step problem (same generator).
    pub one_step_bound: f64,
    /// Generalized-Fano comparator for the one-step problem (KL information).
    pub fano_one_step: f64,
    /// Slopes of the optimized generator, present only under --f optimize.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub optimized_slopes: Option<Vec<f64>>,
}

#[derive(Debug, Serialize)]
pub struct LavaSweepReport {
    pub horizon: usize,
    pub seed: u64,
    pub rows: Vec<LavaEntry>,
}

/// One-step open-loop reward and f-informativity of a POMDP at its initial
/// distribution.
fn one_step_quantities(model: &DiscretePomdp, f: &FGenerator) -> Result<(f64, f64), CliError> {
    let r1 = (0..model.n_actions)
        .map(|a| model.expected_reward(&model.init, a))
        .fold(f64::NEG_INFINITY, f64::max);
    let joint = DiscreteJoint::new(model.init.clone(), model.sensor.clone())?;
    Ok((r1, discrete_informativity(f, &joint)?))
}

/// Lava experiment: per (p_correct, generator), the horizon-sweep bound, the
/// exact POMDP optimum, and the one-step comparison against generalized Fano.
pub fn run_lava_sweep(cfg: &RunConfig) -> Result<RunOutput, CliError> {
    let generators = cfg.generator_list()?;
    let mut rows = Vec::new();
    for &p in &cfg.grid {
        if !(0.0..=1.0).contains(&p) {
            return Err(CliError::Config(format!("p_correct = {p} outside [0,1]")));
        }
        let mut model = lava_pomdp(p);
        model.horizon = cfg.horizon;
        let (_, optimum) = solve_pomdp_exact(&model)?;
        let task = DiscretePomdpTask::new(model.clone())?;
        let (r1, kl_info) = one_step_quantities(&model, &FGenerator::Kl)?;
        let fano = generalized_fano_bound(kl_info, r1)?;

        match &generators {
            FSelection::Named(list) => {
                for f in list {
                    let report = horizon_sweep(&task, f)?;
                    let (_, f_info) = one_step_quantities(&model, f)?;
                    let one_step = single_step_bound(f, r1, f_info)?;
                    rows.push(LavaEntry {
                        p_correct: p,
                        f: f.name().to_string(),
                        report,
                        pomdp_optimum: optimum,
                        one_step_bound: one_step,
                        fano_one_step: fano,
                        optimized_slopes: None,
                    });
                }
            }
            FSelection::Optimize { n_pieces, restarts } => {
                let (pl, _) = optimize_f(&task, *n_pieces, *restarts, cfg.seed)?;
                let f = FGenerator::PiecewiseLinear(pl.clone());
                let report = horizon_sweep(&task, &f)?;
                let (_, f_info) = one_step_quantities(&model, &f)?;
                let one_step = single_step_bound(&f, r1, f_info)?;
                rows.push(LavaEntry {
                    p_correct: p,
                    f: f.name().to_string(),
                    report,
                    pomdp_optimum: optimum,
                    one_step_bound: one_step,
                    fano_one_step: fano,
                    optimized_slopes: Some(pl.slopes().to_vec()),
                });
            }
        }
    }
    rows.sort_by(|a, b| {
        a.p_correct
            .partial_cmp(&b.p_correct)
            .unwrap()
            .then(a.f.cmp(&b.f))
    });

    // Emit-time invariant: the optimum never exceeds any emitted bound.
    for row in &rows {
        if row.pomdp_optimum > row.report.best_bound + SANDWICH_SLACK {
            return Err(CliError::Core(sensor_limits::Error::Invariant(format!(
                "emitted bound {} for (p={}, f={}) is below the exact optimum {}",
                row.report.best_bound, row.p_correct, row.f, row.pomdp_optimum
            ))));
        }
    }

    let mut csv =
        String::from("p_correct,f,H,bound,confidence,pomdp_optimum,one_step_bound,fano_one_step\n");
    for row in &rows {
        for (h, bound) in &row.report.per_horizon {
            csv.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                fmt(row.p_correct),
                row.f,
                h,
                fmt(*bound),
                fmt(row.report.confidence),
                fmt(row.pomdp_optimum),
                fmt(row.one_step_bound),
                fmt(row.fano_one_step),
            ));
        }
        csv.push_str(&format!(
            "{},{},best,{},{},{},{},{}\n",
            fmt(row.p_correct),
            row.f,
            fmt(row.report.best_bound),
            fmt(row.report.confidence),
            fmt(row.pomdp_optimum),
            fmt(row.one_step_bound),
            fmt(row.fano_one_step),
        ));
    }
    let report = LavaSweepReport {
        horizon: cfg.horizon,
        seed: cfg.seed,
        rows,
    };
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    Ok(RunOutput {
        csv,
        json,
        baselines_csv: None,
    })
}

#[derive(Debug, Serialize)]
pub struct CatchEntry {
    pub eta: f64,
    pub f: String,
    pub report: BoundReport,
    pub mpc: RolloutSummary,
}

#[derive(Debug, Serialize)]
pub struct CatchSweepReport {
    pub episodes: usize,
    pub seed: u64,
    pub eta_squared: bool,
    pub rows: Vec<CatchEntry>,
}

/// Ball-catching experiment: analytic bound vs the MPC + Kalman baseline
/// across sensor noise scales. KL only (the Gaussian informativity is
/// closed-form for KL).
pub fn run_catch_sweep(cfg: &RunConfig) -> Result<RunOutput, CliError> {
    match cfg.generator_list()? {
        FSelection::Named(list) if list.iter().all(|f| f.name() == "kl") => {}
        _ => {
            return Err(CliError::Config(
                "catch-sweep supports --f kl only (Gaussian informativity is closed-form for KL)"
                    .into(),
            ))
        }
    }
    let mut rows = Vec::new();
    for &eta in &cfg.grid {
        if eta < 0.0 {
            return Err(CliError::Config(format!("eta = {eta} must be nonnegative")));
        }
        let sys = ball_catching_scaled(eta, cfg.eta_squared);
        let task = LinearGaussianTask::new(sys.clone())?;
        let report = horizon_sweep(&task, &FGenerator::Kl)?;
        let mpc = mpc_kalman_rollout(&sys, cfg.episodes, cfg.seed);
        if mpc.mean > report.best_bound + SANDWICH_SLACK {
            return Err(CliError::Core(sensor_limits::Error::Invariant(format!(
                "MPC mean {} exceeds the bound {} at eta = {eta}",
                mpc.mean, report.best_bound
            ))));
        }
        rows.push(CatchEntry {
            eta,
            f: "kl".into(),
            report,
            mpc,
        });
    }
    rows.sort_by(|a, b| a.eta.partial_cmp(&b.eta).unwrap());

    let mut csv = String::from("eta,f,H,bound,mpc_mean,mpc_stderr\n");
    for row in &rows {
        for (h, bound) in &row.report.per_horizon {
            csv.push_str(&format!(
                "{},{},{},{},{},{}\n",
                fmt(row.eta),
                row.f,
                h,
                fmt(*bound),
                fmt(row.mpc.mean),
                fmt(row.mpc.stderr),
            ));
        }
        csv.push_str(&format!(
            "{},{},best,{},{},{}\n",
            fmt(row.eta),
            row.f,
            fmt(row.report.best_bound),
            fmt(row.mpc.mean),
            fmt(row.mpc.stderr),
        ));
    }
    let baselines = baseline_csv(&report_rows_as_baselines(&rows));
    let report = CatchSweepReport {
        episodes: cfg.episodes,
        seed: cfg.seed,
        eta_squared: cfg.eta_squared,
        rows,
    };
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    Ok(RunOutput {
        csv,
        json,
        baselines_csv: Some(baselines),
    })
}

fn report_rows_as_baselines(rows: &[CatchEntry]) -> Vec<(f64, &'static str, RolloutSummary)> {
    rows.iter().map(|r| (r.eta, "mpc_kalman", r.mpc)).collect()
}

#[derive(Debug, Serialize)]
pub struct ObstacleReport {
    pub n_rays: usize,
    pub eta: f64,
    pub p_miss: f64,
    pub max_range: f64,
    pub obstacle_radius: f64,
    pub reward_samples: usize,
    pub batch_size: usize,
    pub num_batches: usize,
    pub delta: f64,
    pub seed: u64,
    pub bound: f64,
    pub confidence: f64,
    pub informativity_upper: f64,
    pub mi_batch_mean: f64,
    pub action_means: Vec<f64>,
    pub action_uppers: Vec<f64>,
    pub budget: sensor_limits::informativity::ConfidenceBudget,
    pub heuristic: RolloutSummary,
}

/// Obstacle-avoidance experiment: sampled one-step bound for the
/// depth-sensor world, with the clearance heuristic as the lower-bound
/// policy.
pub fn run_obstacle_bound(cfg: &RunConfig) -> Result<RunOutput, CliError> {
    let env = obstacle_world(cfg.n_rays, cfg.eta, cfg.p_miss, cfg.max_range, cfg.seed)?
        .with_obstacle_radius(cfg.obstacle_radius);
    let task = build_sampled_one_step(
        &env,
        cfg.reward_samples,
        cfg.batch_size,
        cfg.num_batches,
        cfg.delta,
        cfg.seed,
    )?;
    let bound = multi_step_bound(&task, &FGenerator::Kl)?;
    let heuristic = heuristic_clearance_policy(&env, cfg.episodes, cfg.seed.wrapping_add(1));
    if heuristic.mean > bound + SANDWICH_SLACK {
        return Err(CliError::Core(sensor_limits::Error::Invariant(format!(
            "heuristic success rate {} exceeds the sampled bound {bound}",
            heuristic.mean
        ))));
    }

    let report = ObstacleReport {
        n_rays: cfg.n_rays,
        eta: cfg.eta,
        p_miss: cfg.p_miss,
        max_range: cfg.max_range,
        obstacle_radius: cfg.obstacle_radius,
        reward_samples: cfg.reward_samples,
        batch_size: cfg.batch_size,
        num_batches: cfg.num_batches,
        delta: cfg.delta,
        seed: cfg.seed,
        bound,
        confidence: task.confidence(),
        informativity_upper: task.informativity_upper,
        mi_batch_mean: task.mi_batch_mean,
        action_means: task.action_means.clone(),
        action_uppers: task.action_uppers.clone(),
        budget: task.budget.clone(),
        heuristic,
    };
    let mut csv = String::from(
        "n_rays,eta,p_miss,delta,bound,confidence,heuristic_mean,heuristic_stderr,mi_upper,reward_upper_max\n",
    );
    csv.push_str(&format!(
        "{},{},{},{},{},{},{},{},{},{}\n",
        report.n_rays,
        fmt(report.eta),
        fmt(report.p_miss),
        fmt(report.delta),
        fmt(report.bound),
        fmt(report.confidence),
        fmt(report.heuristic.mean),
        fmt(report.heuristic.stderr),
        fmt(report.informativity_upper),
        fmt(report.action_uppers.iter().cloned().fold(0.0f64, f64::max)),
    ));
    let baselines = baseline_csv(&[(report.eta, "heuristic_clearance", report.heuristic)]);
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    Ok(RunOutput {
        csv,
        json,
        baselines_csv: Some(baselines),
    })
}

/// Baseline rows in the shared CSV format `param,policy,mean,stderr,episodes,seed`.
pub fn baseline_csv(rows: &[(f64, &str, RolloutSummary)]) -> String {
    let mut csv = String::from("param,policy,mean,stderr,episodes,seed\n");
    for (param, policy, summary) in rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            fmt(*param),
            policy,
            fmt(summary.mean),
            fmt(summary.stderr),
            summary.episodes,
            summary.seed,
        ));
    }
    csv
}

/// `finverse` subcommand: left (default) or right f-inverse, as JSON.
pub fn run_finverse(
    f_name: &str,
    q: f64,
    c: f64,
    tol: f64,
    right: bool,
) -> Result<String, CliError> {
    let f = FGenerator::from_name(f_name)
        .ok_or_else(|| CliError::Config(format!("unknown generator '{f_name}'")))?;
    let solution = if right {
        f_inverse_right(&f, q, c, tol)?
    } else {
        f_inverse(&f, q, c, tol)?
    };
    #[derive(Serialize)]
    struct Out<'a> {
        f: &'a str,
        q: f64,
        c: f64,
        right: bool,
        #[serde(flatten)]
        solution: sensor_limits::finverse::InverseSolution,
    }
    Ok(serde_json::to_string_pretty(&Out {
        f: f_name,
        q,
        c,
        right,
        solution,
    })
    .expect("solution serializes"))
}

#[derive(Debug, Serialize)]
pub struct OptimizeFReport {
    pub p_correct: f64,
    pub horizon: usize,
    pub n_pieces: usize,
    pub restarts: usize,
    pub seed: u64,
    pub bound: f64,
    pub slopes: Vec<f64>,
}

/// `optimize-f` subcommand: minimize the lava bound over piecewise-linear
/// generators at one sensor noise level.
pub fn run_optimize_f(
    p_correct: f64,
    horizon: usize,
    n_pieces: usize,
    restarts: usize,
    seed: u64,
) -> Result<String, CliError> {
    if !(0.0..=1.0).contains(&p_correct) {
        return Err(CliError::Config(format!(
            "p_correct = {p_correct} outside [0,1]"
        )));
    }
    let mut model = lava_pomdp(p_correct);
    model.horizon = horizon;
    let task = DiscretePomdpTask::new(model)?;
    let (pl, bound) = optimize_f(&task, n_pieces, restarts, seed)?;
    Ok(serde_json::to_string_pretty(&OptimizeFReport {
        p_correct,
        horizon,
        n_pieces,
        restarts,
        seed,
        bound,
        slopes: pl.slopes().to_vec(),
    })
    .expect("report serializes"))
}

#[derive(Debug, Serialize)]
pub struct PomdpBoundReport {
    pub file_checksum: u64,
    pub rows: Vec<PomdpBoundEntry>,
}

#[derive(Debug, Serialize)]
pub struct PomdpBoundEntry {
    pub f: String,
    pub report: BoundReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pomdp_optimum: Option<f64>,
}

/// `pomdp-bound` subcommand: bound a user-supplied POMDP file; the exact
/// optimum is included when the belief tree fits the solver cap.
pub fn run_pomdp_bound(text: &str, cfg: &RunConfig) -> Result<RunOutput, CliError> {
    let model = DiscretePomdp::from_text(text)?;
    let checksum = model.checksum();
    let optimum = solve_pomdp_exact(&model).ok().map(|(_, v)| v);
    let task = DiscretePomdpTask::new(model)?;
    let list = match cfg.generator_list()? {
        FSelection::Named(list) => list,
        FSelection::Optimize { .. } => {
            return Err(CliError::Config(
                "pomdp-bound expects named generators (use optimize-f for optimization)".into(),
            ))
        }
    };
    let mut rows = Vec::new();
    for f in &list {
        let report = horizon_sweep(&task, f)?;
        if let Some(opt) = optimum {
            if opt > report.best_bound + SANDWICH_SLACK {
                return Err(CliError::Core(sensor_limits::Error::Invariant(format!(
                    "bound {} for f={} is below the exact optimum {opt}",
                    report.best_bound,
                    f.name()
                ))));
            }
        }
        rows.push(PomdpBoundEntry {
            f: f.name().to_string(),
            report,
            pomdp_optimum: optimum,
        });
    }
    let mut csv = String::from("param,f_name,H,bound,confidence\n");
    for row in &rows {
        for (h, bound) in &row.report.per_horizon {
            csv.push_str(&format!(
                "pomdp,{},{},{},{}\n",
                row.f,
                h,
                fmt(*bound),
                fmt(row.report.confidence)
            ));
        }
    }
    let report = PomdpBoundReport {
        file_checksum: checksum,
        rows,
    };
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    Ok(RunOutput {
        csv,
        json,
        baselines_csv: None,
    })
}
