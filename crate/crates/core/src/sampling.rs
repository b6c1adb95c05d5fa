//! Training-batch construction.
//!
//! Every strategy follows the same three stages: (1) pick episodes from the
//! replay buffer, (2) pick one step uniformly from each picked episode, and
//! (3) with probability `future_p` replace that step's desired goal with an
//! achieved goal from later in the same episode. The strategies differ only
//! in stage 1:
//!
//! | algo         | stage 1                                                   |
//! |--------------|-----------------------------------------------------------|
//! | `vanilla`    | uniform, and stage 3 is disabled                          |
//! | `her`        | uniform                                                   |
//! | `her-cs`     | fixed per-cluster quotas, uniform within each cluster     |
//! | `her-ebp`    | proportional to trajectory energy                         |
//! | `her-ebp-cs` | per-cluster quotas, energy-proportional within clusters   |
//!
//! The cluster-based variants fall back to their non-clustered stage 1 until
//! the first cluster model has been fit.

use std::fmt;
use std::str::FromStr;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cluster::ClusteredIndex;
use crate::envs::{Action, EnvSpec, GoalVector};
use crate::error::{Error, Result};
use crate::replay::{relabel, sample_future_offset, Episode, EpisodeBuffer, EpisodeId};
use crate::rng::SimRng;

pub const DEFAULT_BATCH_SIZE: usize = 256;
pub const DEFAULT_FUTURE_P: f64 = 0.8;
pub const DEFAULT_ENERGY_EPSILON: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Algo {
    Vanilla,
    Her,
    HerCs,
    HerEbp,
    HerEbpCs,
}

impl Algo {
    pub const ALL: [Algo; 5] = [
        Algo::Vanilla,
        Algo::Her,
        Algo::HerCs,
        Algo::HerEbp,
        Algo::HerEbpCs,
    ];

    pub fn uses_clusters(self) -> bool {
        matches!(self, Algo::HerCs | Algo::HerEbpCs)
    }

    pub fn uses_energy(self) -> bool {
        matches!(self, Algo::HerEbp | Algo::HerEbpCs)
    }

    pub fn relabels(self) -> bool {
        self != Algo::Vanilla
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Algo::Vanilla => "vanilla",
            Algo::Her => "her",
            Algo::HerCs => "her-cs",
            Algo::HerEbp => "her-ebp",
            Algo::HerEbpCs => "her-ebp-cs",
        }
    }
}

impl FromStr for Algo {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algo::ALL
            .into_iter()
            .find(|a| a.as_str() == s.trim())
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown algo '{s}' (expected vanilla, her, her-cs, her-ebp or her-ebp-cs)"
                ))
            })
    }
}

impl TryFrom<String> for Algo {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Algo> for String {
    fn from(a: Algo) -> String {
        a.as_str().to_owned()
    }
}

impl fmt::Display for Algo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub algo: Algo,
    pub batch_size: usize,
    pub k: usize,
    pub future_p: f64,
    pub energy_epsilon: f64,
}

impl SamplerConfig {
    pub fn new(algo: Algo) -> Self {
        SamplerConfig {
            algo,
            batch_size: DEFAULT_BATCH_SIZE,
            k: crate::cluster::DEFAULT_K,
            future_p: DEFAULT_FUTURE_P,
            energy_epsilon: DEFAULT_ENERGY_EPSILON,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch-size must be positive".into()));
        }
        if self.k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        if self.algo.uses_clusters() && self.batch_size < self.k {
            return Err(Error::Config(format!(
                "batch-size ({}) must be >= k ({}) for {}",
                self.batch_size, self.k, self.algo
            )));
        }
        if !(0.0..=1.0).contains(&self.future_p) {
            return Err(Error::Config(format!(
                "future-p ({}) must lie in [0, 1]",
                self.future_p
            )));
        }
        if !(self.energy_epsilon > 0.0 && self.energy_epsilon.is_finite()) {
            return Err(Error::Config("energy-epsilon must be positive".into()));
        }
        Ok(())
    }

    /// Substitution probability actually applied in stage 3.
    pub fn effective_future_p(&self) -> f64 {
        if self.algo.relabels() {
            self.future_p
        } else {
            0.0
        }
    }
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self::new(Algo::Her)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchItem {
    pub state: Vec<f64>,
    pub action: Action,
    pub next_state: Vec<f64>,
    /// Achieved goal of `next_state`; the reward is a function of this and
    /// `goal`.
    pub achieved_goal: GoalVector,
    pub goal: GoalVector,
    pub reward: f64,
    pub relabeled: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Batch {
    pub items: Vec<BatchItem>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn relabeled_fraction(&self) -> f64 {
        if self.items.is_empty() {
            return 0.0;
        }
        self.items.iter().filter(|i| i.relabeled).count() as f64 / self.items.len() as f64
    }
}

pub fn stage1_uniform(
    replay: &EpisodeBuffer,
    n: usize,
    rng: &mut SimRng,
) -> Result<Vec<EpisodeId>> {
    if replay.is_empty() {
        return Err(Error::EmptyBuffer);
    }
    let oldest = replay.oldest_id();
    let len = replay.len() as u64;
    Ok((0..n).map(|_| oldest + rng.random_range(0..len)).collect())
}

/// Per-cluster episode counts. Every non-empty cluster starts with
/// `batch_size / k`; the `batch_size % k` remainder plus the quotas of empty
/// clusters are then dealt one at a time round-robin over the non-empty
/// clusters in index order. Empty clusters get zero.
pub fn cs_quotas(bucket_sizes: &[usize], batch_size: usize) -> Result<Vec<usize>> {
    let k = bucket_sizes.len();
    if k == 0 {
        return Err(Error::contract("no clusters"));
    }
    let live: Vec<usize> = (0..k).filter(|&i| bucket_sizes[i] > 0).collect();
    if live.is_empty() {
        return Err(Error::EmptyBuffer);
    }
    let base = batch_size / k;
    let mut quotas = vec![0; k];
    for &i in &live {
        quotas[i] = base;
    }
    let extra = batch_size - base * live.len();
    for j in 0..extra {
        quotas[live[j % live.len()]] += 1;
    }
    Ok(quotas)
}

fn check_index(index: &ClusteredIndex, replay: &EpisodeBuffer, k: usize) -> Result<()> {
    if index.model_version() == 0 {
        return Err(Error::ModelNotFit);
    }
    if index.k() != k {
        return Err(Error::contract(format!(
            "index has {} clusters, expected {k}",
            index.k()
        )));
    }
    if replay.is_empty() {
        return Err(Error::EmptyBuffer);
    }
    Ok(())
}

pub fn stage1_cs(
    index: &ClusteredIndex,
    replay: &EpisodeBuffer,
    batch_size: usize,
    k: usize,
    rng: &mut SimRng,
) -> Result<Vec<EpisodeId>> {
    check_index(index, replay, k)?;
    let quotas = cs_quotas(&index.bucket_sizes(), batch_size)?;
    let mut refs = Vec::with_capacity(batch_size);
    for (bucket, quota) in index.buckets().iter().zip(quotas) {
        for _ in 0..quota {
            refs.push(bucket[rng.random_range(0..bucket.len())]);
        }
    }
    Ok(refs)
}

/// Sum of squared achieved-goal displacements between consecutive steps,
/// starting from the achieved goal at reset. Cached on the episode.
pub fn trajectory_energy(episode: &Episode) -> f64 {
    *episode.energy.get_or_init(|| {
        let goals: Vec<&GoalVector> = episode.achieved_goals().collect();
        goals
            .windows(2)
            .map(|w| crate::cluster::squared_distance(w[0], w[1]))
            .sum()
    })
}

fn energy_weights<'a>(episodes: impl Iterator<Item = &'a Episode>, epsilon: f64) -> Vec<f64> {
    episodes.map(|e| trajectory_energy(e) + epsilon).collect()
}

pub fn stage1_ebp(
    replay: &EpisodeBuffer,
    n: usize,
    energy_epsilon: f64,
    rng: &mut SimRng,
) -> Result<Vec<EpisodeId>> {
    if replay.is_empty() {
        return Err(Error::EmptyBuffer);
    }
    let weights = energy_weights(replay.iter(), energy_epsilon);
    let dist = WeightedIndex::new(&weights).map_err(|e| Error::contract(e.to_string()))?;
    let oldest = replay.oldest_id();
    Ok((0..n).map(|_| oldest + dist.sample(rng) as u64).collect())
}

pub fn stage1_ebp_cs(
    index: &ClusteredIndex,
    replay: &EpisodeBuffer,
    batch_size: usize,
    k: usize,
    energy_epsilon: f64,
    rng: &mut SimRng,
) -> Result<Vec<EpisodeId>> {
    check_index(index, replay, k)?;
    let quotas = cs_quotas(&index.bucket_sizes(), batch_size)?;
    let mut refs = Vec::with_capacity(batch_size);
    for (bucket, quota) in index.buckets().iter().zip(quotas) {
        if quota == 0 {
            continue;
        }
        let weights = energy_weights(
            bucket
                .iter()
                .map(|id| replay.get(*id).expect("index tracks live episodes")),
            energy_epsilon,
        );
        let dist = WeightedIndex::new(&weights).map_err(|e| Error::contract(e.to_string()))?;
        for _ in 0..quota {
            refs.push(bucket[dist.sample(rng)]);
        }
    }
    Ok(refs)
}

/// Stages 2 and 3 for a list of episode refs.
pub fn make_batch(
    refs: &[EpisodeId],
    replay: &EpisodeBuffer,
    spec: &EnvSpec,
    config: &SamplerConfig,
    rng: &mut SimRng,
) -> Result<Batch> {
    let future_p = config.effective_future_p();
    let mut items = Vec::with_capacity(refs.len());
    for &id in refs {
        let episode = replay
            .get(id)
            .ok_or_else(|| Error::contract(format!("dangling episode ref {id}")))?;
        let horizon = episode.horizon();
        let t = rng.random_range(0..horizon);
        let original = &episode.transitions()[t];
        let substitute = future_p > 0.0 && rng.random_bool(future_p);
        let transition = if substitute {
            let future = sample_future_offset(t, horizon, rng)?;
            let goal = &episode.transitions()[future - 1].achieved_goal;
            relabel(original, goal, spec)?
        } else {
            original.clone()
        };
        items.push(BatchItem {
            state: transition.state,
            action: transition.action,
            next_state: transition.next_state,
            achieved_goal: transition.achieved_goal,
            goal: transition.desired_goal,
            reward: transition.reward,
            relabeled: substitute,
        });
    }
    Ok(Batch { items })
}

/// Stage 1 for the configured algorithm. `index` is the live clustered index
/// if a model has been fit.
pub fn sample_episode_refs(
    config: &SamplerConfig,
    replay: &EpisodeBuffer,
    index: Option<&ClusteredIndex>,
    rng: &mut SimRng,
) -> Result<Vec<EpisodeId>> {
    let n = config.batch_size;
    let live_index = index.filter(|ix| ix.model_version() > 0);
    match (config.algo, live_index) {
        (Algo::HerCs, Some(ix)) => stage1_cs(ix, replay, n, config.k, rng),
        (Algo::HerEbpCs, Some(ix)) => {
            stage1_ebp_cs(ix, replay, n, config.k, config.energy_epsilon, rng)
        }
        (Algo::HerEbp | Algo::HerEbpCs, _) => stage1_ebp(replay, n, config.energy_epsilon, rng),
        (Algo::Vanilla | Algo::Her | Algo::HerCs, _) => stage1_uniform(replay, n, rng),
    }
}

pub fn sample_batch(
    config: &SamplerConfig,
    replay: &EpisodeBuffer,
    index: Option<&ClusteredIndex>,
    spec: &EnvSpec,
    rng: &mut SimRng,
) -> Result<Batch> {
    let refs = sample_episode_refs(config, replay, index, rng)?;
    make_batch(&refs, replay, spec, config, rng)
}
