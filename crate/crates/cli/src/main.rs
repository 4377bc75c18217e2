use sensor_limits_cli::config::{parse_flags, CliError, RunConfig};
use sensor_limits_cli::{
    run_catch_sweep, run_finverse, run_lava_sweep, run_obstacle_bound, run_optimize_f,
    run_pomdp_bound, RunOutput,
};
use std::io::Write;
use std::path::Path;

const USAGE: &str = "\
sensor-limits: information-theoretic upper bounds on sensor-based control

USAGE:
  sensor-limits <SUBCOMMAND> [--config FILE] [--key value ...]

SUBCOMMANDS:
  lava-sweep       bounds vs exact optimum for the lava benchmark
                   keys: p-correct LIST, f NAMES|all|optimize, horizon N,
                         pieces N, restarts N, seed N, out DIR
  catch-sweep      analytic bounds vs MPC+Kalman for ball catching
                   keys: eta-grid LIST, episodes N, seed N, eta-squared, out DIR
  obstacle-bound   sampled one-step bound for the depth-sensor world
                   keys: n-rays N, eta X, p-miss X, max-range X, radius X,
                         delta X, reward-samples N, batch-size N,
                         num-batches N, episodes N, seed N, out DIR
  finverse         solve one f-inverse; flags: --f NAME --q X --c X
                   [--tol X] [--right true]
  optimize-f       minimize the lava bound over piecewise-linear generators
                   keys: p-correct X, horizon N, pieces N, restarts N, seed N
  pomdp-bound FILE bound a POMDP loaded from the documented text format
                   keys: f NAMES|all, out DIR

Generator names: kl, neg-log, tv, pearson, js, hellinger2, neyman.

EXIT CODES:
  0 success   2 config error   3 invariant violation   4 resource cap
";

fn write_outputs(cfg: &RunConfig, stem: &str, output: &RunOutput) -> Result<(), CliError> {
    match &cfg.out_dir {
        Some(dir) => {
            std::fs::create_dir_all(dir)
                .map_err(|e| CliError::Config(format!("cannot create '{dir}': {e}")))?;
            let write = |name: String, contents: &str| -> Result<(), CliError> {
                let path = Path::new(dir).join(name);
                std::fs::write(&path, contents).map_err(|e| {
                    CliError::Config(format!("cannot write '{}': {e}", path.display()))
                })?;
                println!("wrote {}", path.display());
                Ok(())
            };
            write(format!("{stem}.csv"), &output.csv)?;
            write(format!("{stem}.json"), &output.json)?;
            if let Some(baselines) = &output.baselines_csv {
                write(format!("{stem}_baselines.csv"), baselines)?;
            }
        }
        None => {
            print!("{}", output.csv);
        }
    }
    Ok(())
}

fn build_config(experiment: &str, args: &[String]) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::defaults(experiment);
    let flags = parse_flags(args)?;
    if let Some(path) = flags.get("config") {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config '{path}': {e}")))?;
        cfg.apply_config_text(&text, path)?;
    }
    for (key, value) in flags.iter().filter(|(k, _)| k.as_str() != "config") {
        cfg.set(key, value, "flags")?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn flag_value(
    flags: &std::collections::BTreeMap<String, String>,
    key: &str,
) -> Result<f64, CliError> {
    flags
        .get(key)
        .ok_or_else(|| CliError::Config(format!("missing required flag --{key}")))?
        .parse()
        .map_err(|_| CliError::Config(format!("flag --{key} must be a number")))
}

fn run() -> Result<(), CliError> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let Some(subcommand) = args.first() else {
        eprint!("{USAGE}");
        return Err(CliError::Config("missing subcommand".into()));
    };
    let rest = &args[1..];

    match subcommand.as_str() {
        "lava-sweep" => {
            let cfg = build_config("lava-sweep", rest)?;
            let output = run_lava_sweep(&cfg)?;
            write_outputs(&cfg, "lava_sweep", &output)
        }
        "catch-sweep" => {
            let cfg = build_config("catch-sweep", rest)?;
            let output = run_catch_sweep(&cfg)?;
            write_outputs(&cfg, "catch_sweep", &output)
        }
        "obstacle-bound" => {
            let cfg = build_config("obstacle-bound", rest)?;
            let output = run_obstacle_bound(&cfg)?;
            write_outputs(&cfg, "obstacle_bound", &output)
        }
        "finverse" => {
            let flags = parse_flags(rest)?;
            let f = flags
                .get("f")
                .ok_or_else(|| CliError::Config("missing required flag --f".into()))?;
            let q = flag_value(&flags, "q")?;
            let c = flag_value(&flags, "c")?;
            let tol = flags
                .get("tol")
                .map(|v| v.parse::<f64>())
                .transpose()
                .map_err(|_| CliError::Config("flag --tol must be a number".into()))?
                .unwrap_or(sensor_limits::finverse::DEFAULT_TOL);
            let right = flags
                .get("right")
                .map(|v| v.parse::<bool>())
                .transpose()
                .map_err(|_| CliError::Config("flag --right must be true or false".into()))?
                .unwrap_or(false);
            println!("{}", run_finverse(f, q, c, tol, right)?);
            Ok(())
        }
        "optimize-f" => {
            let cfg = build_config("optimize-f", rest)?;
            let p = *cfg
                .grid
                .first()
                .ok_or_else(|| CliError::Config("optimize-f needs --p-correct".into()))?;
            println!(
                "{}",
                run_optimize_f(p, cfg.horizon, cfg.n_pieces, cfg.restarts, cfg.seed)?
            );
            Ok(())
        }
        "pomdp-bound" => {
            let Some(path) = rest.first().filter(|a| !a.starts_with("--")) else {
                return Err(CliError::Config("pomdp-bound needs a file argument".into()));
            };
            let cfg = build_config("pomdp-bound", &rest[1..])?;
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read '{path}': {e}")))?;
            let output = run_pomdp_bound(&text, &cfg)?;
            write_outputs(&cfg, "pomdp_bound", &output)
        }
        "--help" | "help" | "-h" => {
            print!("{USAGE}");
            Ok(())
        }
        other => {
            eprint!("{USAGE}");
            Err(CliError::Config(format!("unknown subcommand '{other}'")))
        }
    }
}

fn main() {
    if let Err(err) = run() {
        let mut stderr = std::io::stderr();
        let _ = writeln!(stderr, "error: {err}");
        std::process::exit(err.exit_code());
    }
}
