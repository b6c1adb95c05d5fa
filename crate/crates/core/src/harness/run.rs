use std::time::Instant;

use serde::Serialize;

use super::config::ExperimentConfig;
use crate::cluster::{GoalClustering, RefitEvent};
use crate::envs::Env;
use crate::error::{Error, Result};
use crate::learner::Agent;
use crate::replay::{rollout, EpisodeBuffer};
use crate::rng::{indexed_rng, stream_rng, SimRng, Stream};
use crate::sampling::{sample_batch, Algo, SamplerConfig};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochMetrics {
    pub seed: u64,
    pub epoch: usize,
    pub successes: usize,
    pub eval_episodes: usize,
    /// `successes / eval_episodes`.
    pub success_rate: f64,
    pub cluster_version: u64,
    pub bucket_sizes: Vec<usize>,
    pub wall_time_ms: u128,
    pub mean_critic_loss: f64,
}

/// Running extrema of TD targets seen by the learner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetRange {
    pub min: f64,
    pub max: f64,
}

impl Default for TargetRange {
    fn default() -> Self {
        TargetRange {
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
        }
    }
}

/// All mutable state of one (algo, seed) training run.
pub struct RunState {
    pub seed: u64,
    pub sampler: SamplerConfig,
    pub env: Box<dyn Env>,
    pub eval_env: Box<dyn Env>,
    pub replay: EpisodeBuffer,
    /// Present for the cluster-based algorithms only.
    pub clustering: Option<GoalClustering>,
    pub agent: Agent,
    pub epoch: usize,
    pub target_range: TargetRange,
    rollout_rng: SimRng,
    explore_rng: SimRng,
    sampling_rng: SimRng,
}

impl RunState {
    pub fn new(cfg: &ExperimentConfig, algo: Algo, seed: u64) -> Result<Self> {
        let env = cfg.env.make();
        let spec = env.spec().clone();
        let sampler = cfg.sampler(algo);
        sampler.validate()?;
        let clustering = if algo.uses_clusters() {
            Some(GoalClustering::new(cfg.kmeans(), cfg.fgb_capacity, seed)?)
        } else {
            None
        };
        let agent = Agent::for_env(
            &spec,
            cfg.train.clone(),
            &mut stream_rng(seed, Stream::Init),
        )?;
        Ok(RunState {
            seed,
            sampler,
            eval_env: cfg.env.make(),
            replay: EpisodeBuffer::new(cfg.buffer_capacity, &spec)?,
            env,
            clustering,
            agent,
            epoch: 0,
            target_range: TargetRange::default(),
            rollout_rng: stream_rng(seed, Stream::Rollout),
            explore_rng: stream_rng(seed, Stream::Exploration),
            sampling_rng: stream_rng(seed, Stream::Sampling),
        })
    }

    pub fn cluster_version(&self) -> u64 {
        self.clustering.as_ref().map_or(0, |c| c.model().version())
    }

    pub fn refit_events(&self) -> &[RefitEvent] {
        self.clustering.as_ref().map_or(&[], |c| c.events())
    }

    /// Rolls out one exploratory episode and files it.
    pub fn collect_episode(&mut self) -> Result<()> {
        let agent = &self.agent;
        let explore_rng = &mut self.explore_rng;
        let episode = rollout(self.env.as_mut(), &mut self.rollout_rng, |obs| {
            agent.act(obs, true, explore_rng)
        })?;
        let stored = self.replay.store_episode(episode)?;
        if let Some(clustering) = &mut self.clustering {
            clustering.on_episode_stored(&mut self.replay, stored, self.epoch)?;
        }
        Ok(())
    }

    pub fn optimize(&mut self) -> Result<f64> {
        let spec = self.env.spec();
        let index = self.clustering.as_ref().and_then(|c| c.index());
        let batch = sample_batch(
            &self.sampler,
            &self.replay,
            index,
            spec,
            &mut self.sampling_rng,
        )?;
        let stats = self.agent.q_update(&batch)?;
        self.target_range.min = self.target_range.min.min(stats.target_min);
        self.target_range.max = self.target_range.max.max(stats.target_max);
        Ok(stats.critic_loss)
    }

    /// Training cycles followed by evaluation.
    pub fn run_epoch(&mut self, cfg: &ExperimentConfig) -> Result<EpochMetrics> {
        let start = Instant::now();
        let mut loss_sum = 0.0;
        let mut updates = 0usize;
        for _ in 0..cfg.cycles_per_epoch {
            for _ in 0..cfg.episodes_per_cycle {
                self.collect_episode()?;
            }
            for _ in 0..cfg.optimizer_steps_per_cycle {
                loss_sum += self.optimize()?;
                updates += 1;
            }
            self.agent.sync_targets()?;
        }
        if !self.agent.is_finite() {
            return Err(Error::Diverged);
        }
        let mut eval_rng = indexed_rng(self.seed, Stream::Evaluation, self.epoch as u64);
        let successes = evaluate(
            &self.agent,
            self.eval_env.as_mut(),
            cfg.eval_episodes,
            &mut eval_rng,
        )?;
        let metrics = EpochMetrics {
            seed: self.seed,
            epoch: self.epoch,
            successes,
            eval_episodes: cfg.eval_episodes,
            success_rate: successes as f64 / cfg.eval_episodes as f64,
            cluster_version: self.cluster_version(),
            bucket_sizes: self
                .clustering
                .as_ref()
                .and_then(|c| c.index())
                .map(|ix| ix.bucket_sizes())
                .unwrap_or_default(),
            wall_time_ms: start.elapsed().as_millis(),
            mean_critic_loss: if updates > 0 {
                loss_sum / updates as f64
            } else {
                0.0
            },
        };
        self.epoch += 1;
        Ok(metrics)
    }
}

/// Runs `episodes` greedy episodes and counts those whose final step meets
/// the goal.
pub fn evaluate(
    agent: &Agent,
    env: &mut dyn Env,
    episodes: usize,
    rng: &mut SimRng,
) -> Result<usize> {
    // greedy actions never draw from this stream
    let mut unused = stream_rng(0, Stream::Exploration);
    let mut successes = 0;
    for _ in 0..episodes {
        let episode = rollout(env, rng, |obs| agent.act(obs, false, &mut unused))?;
        if episode.final_success() {
            successes += 1;
        }
    }
    Ok(successes)
}

pub fn success_rate(
    agent: &Agent,
    env: &mut dyn Env,
    episodes: usize,
    rng: &mut SimRng,
) -> Result<f64> {
    if episodes == 0 {
        return Err(Error::Config("eval-episodes must be at least 1".into()));
    }
    Ok(evaluate(agent, env, episodes, rng)? as f64 / episodes as f64)
}

#[derive(Debug, Clone)]
pub struct SeedRun {
    pub algo: Algo,
    pub seed: u64,
    pub metrics: Vec<EpochMetrics>,
    pub refits: Vec<RefitEvent>,
    pub target_range: TargetRange,
}

pub fn run_seed(cfg: &ExperimentConfig, algo: Algo, seed: u64) -> Result<SeedRun> {
    let mut state = RunState::new(cfg, algo, seed)?;
    let mut metrics = Vec::with_capacity(cfg.epochs);
    for _ in 0..cfg.epochs {
        let m = state.run_epoch(cfg)?;
        log::info!(
            "{} seed={} epoch={} success_rate={:.2} cluster_version={}",
            algo,
            seed,
            m.epoch,
            m.success_rate,
            m.cluster_version
        );
        metrics.push(m);
    }
    Ok(SeedRun {
        algo,
        seed,
        refits: state.refit_events().to_vec(),
        target_range: state.target_range,
        metrics,
    })
}
