//! Run configuration: defaults per experiment, a `key = value` config file,
//! and flag overrides applied on top.

use sensor_limits::divergence::{builtin_generators, FGenerator};
use std::collections::BTreeMap;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, bad config file, bad parameter values. Exit code 2.
    Config(String),
    /// A library-level failure. Invariant violations exit 3, resource caps 4.
    Core(sensor_limits::Error),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "config error: {msg}"),
            CliError::Core(err) => write!(f, "{err}"),
        }
    }
}

impl From<sensor_limits::Error> for CliError {
    fn from(err: sensor_limits::Error) -> Self {
        CliError::Core(err)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Core(sensor_limits::Error::ResourceCap(_)) => 4,
            CliError::Core(_) => 3,
        }
    }
}

/// Which generators a sweep runs with.
#[derive(Debug, Clone)]
pub enum FSelection {
    Named(Vec<FGenerator>),
    Optimize { n_pieces: usize, restarts: usize },
}

/// Parameters shared by the experiment runners. Defaults mirror the
/// benchmark settings; desk-scale sampling counts are documented per field.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub experiment: String,
    /// p_correct values (lava) or η values (catch).
    pub grid: Vec<f64>,
    /// Generator selection: named list, "all", or "optimize".
    pub f_selection: String,
    pub horizon: usize,
    /// Scene samples per action for the sampled reward upper bound.
    pub reward_samples: usize,
    /// Leave-one-out batch size K.
    pub batch_size: usize,
    pub num_batches: usize,
    /// Rollout episodes for baselines.
    pub episodes: usize,
    pub delta: f64,
    pub seed: u64,
    pub n_pieces: usize,
    pub restarts: usize,
    /// Obstacle-world sensor geometry.
    pub n_rays: usize,
    pub eta: f64,
    pub p_miss: f64,
    pub max_range: f64,
    pub obstacle_radius: f64,
    /// Scale the catch sensor covariance by η² instead of η.
    pub eta_squared: bool,
    /// Output directory; None prints to stdout only.
    pub out_dir: Option<String>,
}

impl RunConfig {
    pub fn defaults(experiment: &str) -> RunConfig {
        let grid = match experiment {
            "lava-sweep" => (0..=8).map(|i| 0.2 + 0.1 * i as f64).collect(),
            "catch-sweep" => vec![0.0, 0.25, 0.5, 1.0, 2.0, 4.0],
            _ => vec![],
        };
        RunConfig {
            experiment: experiment.to_string(),
            grid,
            f_selection: "kl".into(),
            horizon: 5,
            reward_samples: 2000,
            batch_size: 200,
            num_batches: 2000,
            episodes: if experiment == "catch-sweep" {
                100
            } else {
                2000
            },
            delta: 0.05,
            seed: 42,
            n_pieces: 10,
            restarts: 8,
            n_rays: 5,
            eta: 0.3,
            p_miss: 0.05,
            max_range: 1.5,
            obstacle_radius: 0.26,
            eta_squared: false,
            out_dir: None,
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if !(0.0 < self.delta && self.delta < 1.0) {
            return Err(CliError::Config(format!(
                "delta = {} outside (0,1)",
                self.delta
            )));
        }
        if self.grid.is_empty() && matches!(self.experiment.as_str(), "lava-sweep" | "catch-sweep")
        {
            return Err(CliError::Config("parameter grid is empty".into()));
        }
        if self.horizon == 0 {
            return Err(CliError::Config("horizon must be positive".into()));
        }
        Ok(())
    }

    pub fn generator_list(&self) -> Result<FSelection, CliError> {
        match self.f_selection.as_str() {
            "all" => Ok(FSelection::Named(builtin_generators())),
            "optimize" => Ok(FSelection::Optimize {
                n_pieces: self.n_pieces,
                restarts: self.restarts,
            }),
            names => {
                let list = names
                    .split(',')
                    .map(|n| {
                        FGenerator::from_name(n.trim()).ok_or_else(|| {
                            CliError::Config(format!(
                                "unknown generator '{}' (expected one of: {}, or all/optimize)",
                                n.trim(),
                                builtin_generators()
                                    .iter()
                                    .map(|f| f.name())
                                    .collect::<Vec<_>>()
                                    .join(", ")
                            ))
                        })
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(FSelection::Named(list))
            }
        }
    }

    /// Apply one `key = value` setting (from a config file or a flag).
    pub fn set(&mut self, key: &str, value: &str, where_: &str) -> Result<(), CliError> {
        let bad = |what: &str| {
            CliError::Config(format!(
                "{where_}: cannot parse '{value}' as {what} for '{key}'"
            ))
        };
        match key {
            "grid" | "p-correct" | "eta-grid" => {
                self.grid = value
                    .split(',')
                    .map(|v| v.trim().parse::<f64>().map_err(|_| bad("a number list")))
                    .collect::<Result<Vec<_>, _>>()?;
            }
            "f" => self.f_selection = value.to_string(),
            "horizon" => self.horizon = value.parse().map_err(|_| bad("an integer"))?,
            "reward-samples" => {
                self.reward_samples = value.parse().map_err(|_| bad("an integer"))?
            }
            "batch-size" => self.batch_size = value.parse().map_err(|_| bad("an integer"))?,
            "num-batches" => self.num_batches = value.parse().map_err(|_| bad("an integer"))?,
            "episodes" => self.episodes = value.parse().map_err(|_| bad("an integer"))?,
            "delta" => self.delta = value.parse().map_err(|_| bad("a number"))?,
            "seed" => self.seed = value.parse().map_err(|_| bad("an integer"))?,
            "pieces" => self.n_pieces = value.parse().map_err(|_| bad("an integer"))?,
            "restarts" => self.restarts = value.parse().map_err(|_| bad("an integer"))?,
            "n-rays" => self.n_rays = value.parse().map_err(|_| bad("an integer"))?,
            "eta" => self.eta = value.parse().map_err(|_| bad("a number"))?,
            "p-miss" => self.p_miss = value.parse().map_err(|_| bad("a number"))?,
            "max-range" => self.max_range = value.parse().map_err(|_| bad("a number"))?,
            "radius" => self.obstacle_radius = value.parse().map_err(|_| bad("a number"))?,
            "eta-squared" => self.eta_squared = value.parse().map_err(|_| bad("a boolean"))?,
            "out" => self.out_dir = Some(value.to_string()),
            _ => return Err(CliError::Config(format!("{where_}: unknown key '{key}'"))),
        }
        Ok(())
    }

    /// Load `key = value` lines ('#' starts a comment) on top of the
    /// current values, reporting errors with line numbers.
    pub fn apply_config_text(&mut self, text: &str, path: &str) -> Result<(), CliError> {
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Config(format!(
                    "{path}:{}: expected 'key = value', got '{line}'",
                    idx + 1
                ))
            })?;
            self.set(key.trim(), value.trim(), &format!("{path}:{}", idx + 1))?;
        }
        Ok(())
    }
}

/// Parse `--key value` pairs into an ordered map, with `--config FILE`
/// handled by the caller.
pub fn parse_flags(args: &[String]) -> Result<BTreeMap<String, String>, CliError> {
    let mut flags = BTreeMap::new();
    let mut it = args.iter().peekable();
    while let Some(arg) = it.next() {
        let key = arg
            .strip_prefix("--")
            .ok_or_else(|| CliError::Config(format!("expected a --flag, got '{arg}'")))?;
        // Boolean flags may appear bare.
        if key == "eta-squared" && it.peek().map(|v| v.starts_with("--")).unwrap_or(true) {
            flags.insert(key.to_string(), "true".to_string());
            continue;
        }
        let value = it
            .next()
            .ok_or_else(|| CliError::Config(format!("flag --{key} needs a value")))?;
        flags.insert(key.to_string(), value.clone());
    }
    Ok(flags)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        for exp in ["lava-sweep", "catch-sweep", "obstacle-bound"] {
            RunConfig::defaults(exp).validate().unwrap();
        }
    }

    #[test]
    fn config_text_overrides_with_line_numbers() {
        let mut cfg = RunConfig::defaults("lava-sweep");
        cfg.apply_config_text("# comment\nseed = 7\nf = tv,kl\n", "test.cfg")
            .unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.f_selection, "tv,kl");

        let err = cfg
            .apply_config_text("horizon = x\n", "test.cfg")
            .unwrap_err();
        let msg = format!("{err}");
        assert!(msg.contains("test.cfg:1"), "{msg}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let mut cfg = RunConfig::defaults("lava-sweep");
        assert!(cfg.set("nonsense", "1", "flags").is_err());
    }

    #[test]
    fn generator_selection_parses() {
        let mut cfg = RunConfig::defaults("lava-sweep");
        cfg.f_selection = "all".into();
        assert!(matches!(cfg.generator_list().unwrap(), FSelection::Named(v) if v.len() == 7));
        cfg.f_selection = "kl, tv".into();
        assert!(matches!(cfg.generator_list().unwrap(), FSelection::Named(v) if v.len() == 2));
        cfg.f_selection = "optimize".into();
        assert!(matches!(
            cfg.generator_list().unwrap(),
            FSelection::Optimize { .. }
        ));
        cfg.f_selection = "bogus".into();
        assert!(cfg.generator_list().is_err());
    }

    #[test]
    fn flag_parsing_pairs_and_booleans() {
        let args: Vec<String> = ["--seed", "9", "--eta-squared", "--f", "kl"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let flags = parse_flags(&args).unwrap();
        assert_eq!(flags["seed"], "9");
        assert_eq!(flags["eta-squared"], "true");
        assert_eq!(flags["f"], "kl");
        assert!(parse_flags(&["oops".to_string()]).is_err());
    }
}
