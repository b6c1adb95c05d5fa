//! Experiment configuration and the flat `key = value` config file format.
//!
//! Keys are exactly the long CLI flag names without the leading dashes, so a
//! file line `batch-size = 128` and the flag `--batch-size 128` are the same
//! setting. Lines starting with `#` (after optional whitespace) are comments,
//! as is anything after a ` #` on a value line.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cluster::{
    KMeansParams, DEFAULT_FGB_CAPACITY, DEFAULT_K, DEFAULT_MAX_ITERS, DEFAULT_TOL,
};
use crate::envs::EnvId;
use crate::error::{Error, Result};
use crate::learner::TrainConfig;
use crate::replay::DEFAULT_CAPACITY;
use crate::sampling::{
    Algo, SamplerConfig, DEFAULT_BATCH_SIZE, DEFAULT_ENERGY_EPSILON, DEFAULT_FUTURE_P,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub env: EnvId,
    /// One entry for `run`; several for `compare`.
    pub algos: Vec<Algo>,
    pub epochs: usize,
    pub cycles_per_epoch: usize,
    pub episodes_per_cycle: usize,
    pub optimizer_steps_per_cycle: usize,
    pub eval_episodes: usize,
    pub seeds: Vec<u64>,
    pub buffer_capacity: usize,
    pub batch_size: usize,
    pub k: usize,
    pub future_p: f64,
    pub energy_epsilon: f64,
    pub fgb_capacity: usize,
    pub kmeans_max_iters: usize,
    pub kmeans_tol: f64,
    pub train: TrainConfig,
    /// Fill the `wall_time_ms` CSV column. Off by default so that outputs
    /// are byte-reproducible.
    pub wall_time: bool,
    /// Worker threads for independent seed runs; 0 means one per core.
    pub threads: usize,
    pub out: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            env: EnvId::BitFlip(10),
            algos: vec![Algo::Her],
            epochs: 50,
            cycles_per_epoch: 10,
            episodes_per_cycle: 4,
            optimizer_steps_per_cycle: 40,
            eval_episodes: 20,
            seeds: vec![1, 2, 3, 4, 5],
            buffer_capacity: DEFAULT_CAPACITY,
            batch_size: DEFAULT_BATCH_SIZE,
            k: DEFAULT_K,
            future_p: DEFAULT_FUTURE_P,
            energy_epsilon: DEFAULT_ENERGY_EPSILON,
            fgb_capacity: DEFAULT_FGB_CAPACITY,
            kmeans_max_iters: DEFAULT_MAX_ITERS,
            kmeans_tol: DEFAULT_TOL,
            train: TrainConfig::default(),
            wall_time: false,
            threads: 0,
            out: PathBuf::from("out"),
        }
    }
}

/// Every key accepted by [`ExperimentConfig::set`].
pub const KEYS: &[&str] = &[
    "env",
    "algo",
    "epochs",
    "cycles",
    "episodes-per-cycle",
    "optimizer-steps",
    "eval-episodes",
    "seeds",
    "buffer-capacity",
    "batch-size",
    "k",
    "future-p",
    "energy-epsilon",
    "fgb-capacity",
    "kmeans-max-iters",
    "kmeans-tol",
    "gamma",
    "lr-actor",
    "lr-critic",
    "tau",
    "exploration-eps",
    "action-noise",
    "action-l2",
    "target-clip",
    "hidden",
    "wall-time",
    "threads",
    "out",
];

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("invalid value '{value}' for {key}")))
}

fn parse_list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(|v| parse(key, v))
        .collect()
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        other => Err(Error::Config(format!("invalid value '{other}' for {key}"))),
    }
}

impl ExperimentConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "env" => self.env = v.parse()?,
            "algo" => {
                self.algos = v
                    .split(',')
                    .map(str::trim)
                    .filter(|a| !a.is_empty())
                    .map(str::parse)
                    .collect::<Result<_>>()?
            }
            "epochs" => self.epochs = parse(key, v)?,
            "cycles" => self.cycles_per_epoch = parse(key, v)?,
            "episodes-per-cycle" => self.episodes_per_cycle = parse(key, v)?,
            "optimizer-steps" => self.optimizer_steps_per_cycle = parse(key, v)?,
            "eval-episodes" => self.eval_episodes = parse(key, v)?,
            "seeds" => self.seeds = parse_list(key, v)?,
            "buffer-capacity" => self.buffer_capacity = parse(key, v)?,
            "batch-size" => self.batch_size = parse(key, v)?,
            "k" => self.k = parse(key, v)?,
            "future-p" => self.future_p = parse(key, v)?,
            "energy-epsilon" => self.energy_epsilon = parse(key, v)?,
            "fgb-capacity" => self.fgb_capacity = parse(key, v)?,
            "kmeans-max-iters" => self.kmeans_max_iters = parse(key, v)?,
            "kmeans-tol" => self.kmeans_tol = parse(key, v)?,
            "gamma" => self.train.gamma = parse(key, v)?,
            "lr-actor" => self.train.lr_actor = parse(key, v)?,
            "lr-critic" => self.train.lr_critic = parse(key, v)?,
            "tau" => self.train.polyak_tau = parse(key, v)?,
            "exploration-eps" => self.train.exploration_eps = parse(key, v)?,
            "action-noise" => self.train.action_noise_sigma = parse(key, v)?,
            "action-l2" => self.train.action_l2 = parse(key, v)?,
            "target-clip" => self.train.target_clip = parse_bool(key, v)?,
            "hidden" => self.train.hidden = parse_list(key, v)?,
            "wall-time" => self.wall_time = parse_bool(key, v)?,
            "threads" => self.threads = parse(key, v)?,
            "out" => self.out = PathBuf::from(v),
            other => return Err(Error::Config(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    /// Applies every `key = value` line of `text`.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = match raw.find(" #") {
                Some(i) => &raw[..i],
                None => raw,
            }
            .trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!(
                    "line {}: expected 'key = value', got '{line}'",
                    n + 1
                ))
            })?;
            self.set(key.trim(), value)
                .map_err(|e| Error::Config(format!("line {}: {}", n + 1, strip_prefix(e))))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        self.apply_text(&text)
    }

    /// Renders every key in the config file format.
    pub fn to_text(&self) -> String {
        let join = |v: Vec<String>| v.join(",");
        let t = &self.train;
        let rows: Vec<(&str, String)> = vec![
            ("env", self.env.to_string()),
            (
                "algo",
                join(self.algos.iter().map(|a| a.to_string()).collect()),
            ),
            ("epochs", self.epochs.to_string()),
            ("cycles", self.cycles_per_epoch.to_string()),
            ("episodes-per-cycle", self.episodes_per_cycle.to_string()),
            (
                "optimizer-steps",
                self.optimizer_steps_per_cycle.to_string(),
            ),
            ("eval-episodes", self.eval_episodes.to_string()),
            (
                "seeds",
                join(self.seeds.iter().map(|s| s.to_string()).collect()),
            ),
            ("buffer-capacity", self.buffer_capacity.to_string()),
            ("batch-size", self.batch_size.to_string()),
            ("k", self.k.to_string()),
            ("future-p", self.future_p.to_string()),
            ("energy-epsilon", self.energy_epsilon.to_string()),
            ("fgb-capacity", self.fgb_capacity.to_string()),
            ("kmeans-max-iters", self.kmeans_max_iters.to_string()),
            ("kmeans-tol", self.kmeans_tol.to_string()),
            ("gamma", t.gamma.to_string()),
            ("lr-actor", t.lr_actor.to_string()),
            ("lr-critic", t.lr_critic.to_string()),
            ("tau", t.polyak_tau.to_string()),
            ("exploration-eps", t.exploration_eps.to_string()),
            ("action-noise", t.action_noise_sigma.to_string()),
            ("action-l2", t.action_l2.to_string()),
            ("target-clip", t.target_clip.to_string()),
            (
                "hidden",
                join(t.hidden.iter().map(|h| h.to_string()).collect()),
            ),
            ("wall-time", self.wall_time.to_string()),
            ("threads", self.threads.to_string()),
            ("out", self.out.display().to_string()),
        ];
        rows.into_iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    pub fn sampler(&self, algo: Algo) -> SamplerConfig {
        SamplerConfig {
            algo,
            batch_size: self.batch_size,
            k: self.k,
            future_p: self.future_p,
            energy_epsilon: self.energy_epsilon,
        }
    }

    pub fn kmeans(&self) -> KMeansParams {
        KMeansParams {
            k: self.k,
            max_iters: self.kmeans_max_iters,
            tol: self.kmeans_tol,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.algos.is_empty() {
            return Err(Error::Config("at least one algo is required".into()));
        }
        for (i, a) in self.algos.iter().enumerate() {
            if self.algos[..i].contains(a) {
                return Err(Error::Config(format!("algo '{a}' listed twice")));
            }
            self.sampler(*a).validate()?;
        }
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if self.cycles_per_epoch == 0 || self.episodes_per_cycle == 0 {
            return Err(Error::Config(
                "cycles and episodes-per-cycle must be at least 1".into(),
            ));
        }
        if self.eval_episodes == 0 {
            return Err(Error::Config("eval-episodes must be at least 1".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("seeds must be non-empty".into()));
        }
        for (i, s) in self.seeds.iter().enumerate() {
            if self.seeds[..i].contains(s) {
                return Err(Error::Config(format!(
                    "seeds must be distinct ({s} repeated)"
                )));
            }
        }
        if self.buffer_capacity == 0 {
            return Err(Error::Config("buffer-capacity must be positive".into()));
        }
        if self.fgb_capacity == 0 {
            return Err(Error::Config("fgb-capacity must be positive".into()));
        }
        if !(self.kmeans_tol >= 0.0) {
            return Err(Error::Config("kmeans-tol must be nonnegative".into()));
        }
        self.train.validate()
    }
}

fn strip_prefix(e: Error) -> String {
    match e {
        Error::Config(msg) => msg,
        other => other.to_string(),
    }
}
