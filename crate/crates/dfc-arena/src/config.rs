//! Run configuration: a flat `key = value` text file.
//!
//! Lines are `key = value`; blank lines and `#` comments are ignored.
//! Unknown or repeated keys are errors. Every key has a documented default,
//! so an empty file is a valid configuration. The `DFC_ARENA_SEED`
//! environment variable overrides `master_seed`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use dfc_core::games::DEFAULT_MAX_STEPS;
use dfc_core::grpo::GrpoConfig;
use dfc_core::reward::RewardMode;
use dfc_core::schedule::MpsConfig;
use dfc_core::train::{ConquerConfig, Toggles};
use sha2::{Digest, Sha256};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Malformed { line: usize, text: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key `{key}` appears more than once")]
    DuplicateKey { line: usize, key: String },
    #[error("key `{key}`: invalid value `{value}`")]
    InvalidValue { key: String, value: String },
    #[error("key `{key}`: {reason}")]
    OutOfRange { key: String, reason: String },
    #[error("games list contains unknown game `{0}`")]
    UnknownGame(String),
}

/// Everything a run needs, with the paper-scale constants as defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub run_id: String,
    pub games: Vec<String>,
    pub feature_dim: usize,
    pub feature_seed: u64,
    pub master_seed: u64,
    pub iterations: u32,
    pub specialist_iterations: Option<u32>,
    pub seeds_per_game: u32,
    pub rollouts_per_seed: u32,
    pub mps_a: f64,
    pub mps_b: f64,
    pub mps_eps1: f64,
    pub epsilon: f64,
    pub clip_eps: f64,
    pub kl_alpha: f64,
    pub learning_rate: f64,
    pub std_floor: f64,
    pub max_steps: u32,
    pub probe_trials: u32,
    pub probe_seeds: u32,
    pub eval_seeds: u32,
    pub reward_mode: RewardMode,
    pub fr: bool,
    pub mps: bool,
    pub hn: bool,
    pub eg: bool,
    pub rs: bool,
    pub distractors: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            run_id: String::new(), // filled from master_seed when empty
            games: default_roster(),
            feature_dim: 256,
            feature_seed: 0,
            master_seed: 0,
            iterations: 100,
            specialist_iterations: None,
            seeds_per_game: 50,
            rollouts_per_seed: 8,
            mps_a: 0.2,
            mps_b: 0.8,
            mps_eps1: 0.1,
            epsilon: 0.05,
            clip_eps: 0.1,
            kl_alpha: 0.1,
            learning_rate: 0.05,
            std_floor: 1e-8,
            max_steps: DEFAULT_MAX_STEPS,
            probe_trials: 100,
            probe_seeds: 20,
            eval_seeds: 20,
            reward_mode: RewardMode::StepShaped,
            fr: true,
            mps: true,
            hn: true,
            eg: true,
            rs: true,
            distractors: true,
        }
    }
}

pub fn default_roster() -> Vec<String> {
    dfc_core::games::register_builtin_games()
        .ids()
        .map(String::from)
        .collect()
}

impl RunConfig {
    /// Parse a config file and apply the environment seed override.
    pub fn load(path: &Path) -> Result<RunConfig, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut cfg = RunConfig::parse(&text)?;
        cfg.apply_env_override(std::env::var("DFC_ARENA_SEED").ok().as_deref())?;
        Ok(cfg)
    }

    pub fn apply_env_override(&mut self, seed: Option<&str>) -> Result<(), ConfigError> {
        if let Some(value) = seed {
            self.master_seed = value.parse().map_err(|_| ConfigError::InvalidValue {
                key: "DFC_ARENA_SEED".into(),
                value: value.into(),
            })?;
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<RunConfig, ConfigError> {
        let mut cfg = RunConfig::default();
        let mut seen = BTreeMap::new();
        for (idx, raw_line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw_line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError::Malformed {
                    line: line_no,
                    text: raw_line.to_string(),
                });
            };
            let key = key.trim();
            let value = value.trim();
            if seen.insert(key.to_string(), line_no).is_some() {
                return Err(ConfigError::DuplicateKey {
                    line: line_no,
                    key: key.to_string(),
                });
            }
            cfg.set(key, value)
                .map_err(|e| match e {
                    SetError::Unknown => ConfigError::UnknownKey {
                        line: line_no,
                        key: key.to_string(),
                    },
                    SetError::Invalid => ConfigError::InvalidValue {
                        key: key.to_string(),
                        value: value.to_string(),
                    },
                })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn set(&mut self, key: &str, value: &str) -> Result<(), SetError> {
        fn num<T: std::str::FromStr>(value: &str) -> Result<T, SetError> {
            value.parse().map_err(|_| SetError::Invalid)
        }
        fn flag(value: &str) -> Result<bool, SetError> {
            match value {
                "true" | "on" | "1" => Ok(true),
                "false" | "off" | "0" => Ok(false),
                _ => Err(SetError::Invalid),
            }
        }
        match key {
            "run_id" => self.run_id = value.to_string(),
            "games" => {
                self.games = value
                    .split(',')
                    .map(|g| g.trim().to_string())
                    .filter(|g| !g.is_empty())
                    .collect()
            }
            "feature_dim" => self.feature_dim = num(value)?,
            "feature_seed" => self.feature_seed = num(value)?,
            "master_seed" => self.master_seed = num(value)?,
            "iterations" => self.iterations = num(value)?,
            "specialist_iterations" => self.specialist_iterations = Some(num(value)?),
            "seeds_per_game" => self.seeds_per_game = num(value)?,
            "rollouts_per_seed" => self.rollouts_per_seed = num(value)?,
            "mps_a" => self.mps_a = num(value)?,
            "mps_b" => self.mps_b = num(value)?,
            "mps_eps1" => self.mps_eps1 = num(value)?,
            "epsilon" => self.epsilon = num(value)?,
            "clip_eps" => self.clip_eps = num(value)?,
            "kl_alpha" => self.kl_alpha = num(value)?,
            "learning_rate" => self.learning_rate = num(value)?,
            "std_floor" => self.std_floor = num(value)?,
            "max_steps" => self.max_steps = num(value)?,
            "probe_trials" => self.probe_trials = num(value)?,
            "probe_seeds" => self.probe_seeds = num(value)?,
            "eval_seeds" => self.eval_seeds = num(value)?,
            "reward_mode" => {
                self.reward_mode = RewardMode::parse(value).ok_or(SetError::Invalid)?
            }
            "fr" => self.fr = flag(value)?,
            "mps" => self.mps = flag(value)?,
            "hn" => self.hn = flag(value)?,
            "eg" => self.eg = flag(value)?,
            "rs" => self.rs = flag(value)?,
            "distractors" => self.distractors = flag(value)?,
            _ => return Err(SetError::Unknown),
        }
        Ok(())
    }

    fn validate(&self) -> Result<(), ConfigError> {
        let range = |ok: bool, key: &str, reason: &str| {
            if ok {
                Ok(())
            } else {
                Err(ConfigError::OutOfRange {
                    key: key.into(),
                    reason: reason.into(),
                })
            }
        };
        range(self.feature_dim >= 1, "feature_dim", "must be >= 1")?;
        range(self.iterations >= 1, "iterations", "must be >= 1")?;
        range(self.seeds_per_game >= 1, "seeds_per_game", "must be >= 1")?;
        range(self.rollouts_per_seed >= 1, "rollouts_per_seed", "must be >= 1")?;
        range(self.mps_a >= 0.0, "mps_a", "must be >= 0")?;
        range(self.mps_b >= 0.0, "mps_b", "must be >= 0")?;
        range(self.mps_a + self.mps_b > 0.0, "mps_a", "a + b must be > 0")?;
        range(
            self.mps_eps1 > 0.0 && self.mps_eps1 <= 1.0,
            "mps_eps1",
            "must be in (0, 1]",
        )?;
        range(
            (0.0..=1.0).contains(&self.epsilon),
            "epsilon",
            "must be in [0, 1]",
        )?;
        range(
            self.clip_eps > 0.0 && self.clip_eps < 1.0,
            "clip_eps",
            "must be in (0, 1)",
        )?;
        range(self.kl_alpha >= 0.0, "kl_alpha", "must be >= 0")?;
        range(
            self.learning_rate.is_finite() && self.learning_rate >= 0.0,
            "learning_rate",
            "must be finite and >= 0",
        )?;
        range(self.std_floor > 0.0, "std_floor", "must be > 0")?;
        range(self.max_steps >= 1, "max_steps", "must be >= 1")?;
        range(self.probe_trials >= 1, "probe_trials", "must be >= 1")?;
        range(self.eval_seeds >= 1, "eval_seeds", "must be >= 1")?;
        range(!self.games.is_empty(), "games", "must name at least one game")?;
        let registry = dfc_core::games::register_builtin_games();
        for game in &self.games {
            if registry.get(game).is_err() {
                return Err(ConfigError::UnknownGame(game.clone()));
            }
        }
        Ok(())
    }

    pub fn run_id(&self) -> String {
        if self.run_id.is_empty() {
            format!("run{}", self.master_seed)
        } else {
            self.run_id.clone()
        }
    }

    /// Registry with this run's step-cap override applied.
    pub fn registry(&self) -> dfc_core::games::GameRegistry {
        let base = dfc_core::games::register_builtin_games();
        let mut reg = dfc_core::games::GameRegistry::default();
        for id in base.ids().map(String::from).collect::<Vec<_>>() {
            let mut spec = base.get(&id).expect("id from the registry").clone();
            spec.max_steps = self.max_steps;
            reg.register(spec).expect("ids stay distinct");
        }
        reg
    }

    pub fn featurizer(&self) -> dfc_core::games::Featurizer {
        dfc_core::games::Featurizer::new(self.feature_dim, self.feature_seed)
    }

    pub fn toggles(&self) -> Toggles {
        Toggles {
            format_reward: self.fr,
            mps: self.mps,
            half_negative: self.hn,
            epsilon_greedy: self.eg,
            random_seeds: self.rs,
            distractors: self.distractors,
        }
    }

    pub fn conquer_config(&self) -> ConquerConfig {
        ConquerConfig {
            iterations: self.iterations,
            rollouts_per_seed: self.rollouts_per_seed,
            epsilon: self.epsilon,
            probe_seeds: self.probe_seeds,
            reward_mode: self.reward_mode,
            mps: MpsConfig {
                a: self.mps_a,
                b: self.mps_b,
                eps1: self.mps_eps1,
                s: self.seeds_per_game,
            },
            grpo: GrpoConfig {
                clip_eps: self.clip_eps,
                kl_alpha: self.kl_alpha,
                learning_rate: self.learning_rate,
                std_floor: self.std_floor,
            },
            toggles: self.toggles(),
        }
    }

    pub fn dfc_config(&self) -> dfc_core::orchestrate::DfcConfig {
        dfc_core::orchestrate::DfcConfig {
            probe_trials: self.probe_trials,
            conquer: self.conquer_config(),
            specialist_iterations: self.specialist_iterations,
        }
    }

    /// Canonical text rendering: every key, sorted, one per line. The config
    /// hash is the SHA-256 of this rendering.
    pub fn canonical(&self) -> String {
        let mut pairs: Vec<(String, String)> = vec![
            ("run_id".into(), self.run_id()),
            ("games".into(), self.games.join(",")),
            ("feature_dim".into(), self.feature_dim.to_string()),
            ("feature_seed".into(), self.feature_seed.to_string()),
            ("master_seed".into(), self.master_seed.to_string()),
            ("iterations".into(), self.iterations.to_string()),
            (
                "specialist_iterations".into(),
                self.specialist_iterations
                    .map(|v| v.to_string())
                    .unwrap_or_else(|| "-".into()),
            ),
            ("seeds_per_game".into(), self.seeds_per_game.to_string()),
            ("rollouts_per_seed".into(), self.rollouts_per_seed.to_string()),
            ("mps_a".into(), format!("{:?}", self.mps_a)),
            ("mps_b".into(), format!("{:?}", self.mps_b)),
            ("mps_eps1".into(), format!("{:?}", self.mps_eps1)),
            ("epsilon".into(), format!("{:?}", self.epsilon)),
            ("clip_eps".into(), format!("{:?}", self.clip_eps)),
            ("kl_alpha".into(), format!("{:?}", self.kl_alpha)),
            ("learning_rate".into(), format!("{:?}", self.learning_rate)),
            ("std_floor".into(), format!("{:?}", self.std_floor)),
            ("max_steps".into(), self.max_steps.to_string()),
            ("probe_trials".into(), self.probe_trials.to_string()),
            ("probe_seeds".into(), self.probe_seeds.to_string()),
            ("eval_seeds".into(), self.eval_seeds.to_string()),
            ("reward_mode".into(), self.reward_mode.to_string()),
            ("fr".into(), self.fr.to_string()),
            ("mps".into(), self.mps.to_string()),
            ("hn".into(), self.hn.to_string()),
            ("eg".into(), self.eg.to_string()),
            ("rs".into(), self.rs.to_string()),
            ("distractors".into(), self.distractors.to_string()),
        ];
        pairs.sort();
        let mut out = String::new();
        for (k, v) in pairs {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    pub fn config_hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Debug)]
enum SetError {
    Unknown,
    Invalid,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_all_defaults() {
        let cfg = RunConfig::parse("").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(cfg.feature_dim, 256);
        assert_eq!(cfg.seeds_per_game, 50);
        assert_eq!(cfg.rollouts_per_seed, 8);
        assert_eq!(cfg.clip_eps, 0.1);
        assert_eq!(cfg.kl_alpha, 0.1);
        assert_eq!(cfg.run_id(), "run0");
    }

    #[test]
    fn unknown_keys_fail_loud() {
        let err = RunConfig::parse("learning_rte = 0.1").unwrap_err();
        assert!(matches!(err, ConfigError::UnknownKey { .. }));
        let err = RunConfig::parse("epsilon = 0.1\nepsilon = 0.2").unwrap_err();
        assert!(matches!(err, ConfigError::DuplicateKey { .. }));
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let cfg = RunConfig::parse("# a comment\n\nepsilon = 0.2 # trailing\n").unwrap();
        assert_eq!(cfg.epsilon, 0.2);
    }

    #[test]
    fn ranges_are_validated() {
        assert!(RunConfig::parse("epsilon = 1.5").is_err());
        assert!(RunConfig::parse("clip_eps = 0").is_err());
        assert!(RunConfig::parse("mps_eps1 = 0").is_err());
        assert!(RunConfig::parse("games = tictactoe,unknown_game").is_err());
        assert!(RunConfig::parse("reward_mode = env_only").is_ok());
        assert!(RunConfig::parse("reward_mode = bogus").is_err());
    }

    #[test]
    fn env_override_replaces_master_seed() {
        let mut cfg = RunConfig::default();
        cfg.apply_env_override(Some("99")).unwrap();
        assert_eq!(cfg.master_seed, 99);
        assert!(cfg.apply_env_override(Some("not a number")).is_err());
    }

    #[test]
    fn config_hash_tracks_content() {
        let a = RunConfig::parse("").unwrap();
        let b = RunConfig::parse("epsilon = 0.2").unwrap();
        assert_ne!(a.config_hash(), b.config_hash());
        assert_eq!(a.config_hash(), RunConfig::parse("").unwrap().config_hash());
    }

    #[test]
    fn registry_applies_step_cap_override() {
        let cfg = RunConfig::parse("max_steps = 60").unwrap();
        let reg = cfg.registry();
        assert_eq!(reg.get("hanoi3").unwrap().max_steps, 60);
    }
}
