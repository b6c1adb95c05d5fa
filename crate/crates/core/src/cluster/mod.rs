//! Failed-goal clustering.
//!
//! Desired goals of failed episodes accumulate in a [`FailedGoalBuffer`].
//! Each time the buffer has been completely overwritten since the last fit,
//! a k-means [`ClusterModel`] is refit on its contents and every stored
//! episode is reassigned by its last achieved goal, producing the clustered
//! buffers of a [`ClusteredIndex`]. Episodes stored between refits are
//! assigned individually.

mod kmeans;

use std::collections::VecDeque;

use serde::Serialize;

pub use kmeans::{
    kmeans_fit, kmeans_plus_plus, lloyd, nearest, squared_distance, KMeansFit, KMeansParams,
    DEFAULT_MAX_ITERS, DEFAULT_TOL,
};

use crate::envs::GoalVector;
use crate::error::{check_dim, Error, Result};
use crate::replay::{ClusterTag, Episode, EpisodeBuffer, EpisodeId, Stored};
use crate::rng::{indexed_rng, Stream};

pub const DEFAULT_K: usize = 4;
pub const DEFAULT_FGB_CAPACITY: usize = 100;

#[derive(Debug, Clone)]
pub struct FailedGoalBuffer {
    capacity: usize,
    goals: VecDeque<GoalVector>,
    new_since_refit: usize,
    total_pushed: u64,
}

impl FailedGoalBuffer {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::Config("fgb-capacity must be positive".into()));
        }
        Ok(FailedGoalBuffer {
            capacity,
            goals: VecDeque::with_capacity(capacity),
            new_since_refit: 0,
            total_pushed: 0,
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.goals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.goals.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.goals.len() == self.capacity
    }

    pub fn new_since_refit(&self) -> usize {
        self.new_since_refit
    }

    pub fn total_pushed(&self) -> u64 {
        self.total_pushed
    }

    pub fn goals(&self) -> impl Iterator<Item = &GoalVector> + '_ {
        self.goals.iter()
    }

    pub fn push(&mut self, goal: GoalVector) {
        if self.goals.len() == self.capacity {
            self.goals.pop_front();
        }
        self.goals.push_back(goal);
        self.new_since_refit = (self.new_since_refit + 1).min(self.capacity);
        self.total_pushed += 1;
    }

    /// Pushes the desired goal of an episode that never reached it.
    pub fn record_episode_outcome(&mut self, episode: &Episode) -> bool {
        if episode.succeeded() {
            false
        } else {
            self.push(episode.desired_goal().clone());
            true
        }
    }

    /// Every slot has been written since the last refit.
    pub fn refit_due(&self) -> bool {
        self.is_full() && self.new_since_refit >= self.capacity
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterModel {
    k: usize,
    centroids: Vec<GoalVector>,
    version: u64,
}

impl ClusterModel {
    /// An unfit model (version 0).
    pub fn new(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        Ok(ClusterModel {
            k,
            centroids: Vec::new(),
            version: 0,
        })
    }

    /// A fitted model with explicit centroids.
    pub fn with_centroids(centroids: Vec<GoalVector>, version: u64) -> Result<Self> {
        if centroids.is_empty() || version == 0 {
            return Err(Error::contract(
                "a fitted model needs centroids and version >= 1",
            ));
        }
        let dim = centroids[0].dim();
        for c in &centroids {
            check_dim("centroid", c.dim(), dim)?;
        }
        Ok(ClusterModel {
            k: centroids.len(),
            centroids,
            version,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn is_fit(&self) -> bool {
        self.version > 0
    }

    pub fn centroids(&self) -> &[GoalVector] {
        &self.centroids
    }

    /// Replaces the centroids and bumps the version.
    pub fn install(&mut self, centroids: Vec<Vec<f64>>) -> Result<()> {
        if centroids.len() != self.k {
            return Err(Error::contract(format!(
                "expected {} centroids, got {}",
                self.k,
                centroids.len()
            )));
        }
        self.centroids = centroids
            .into_iter()
            .map(GoalVector::new)
            .collect::<Result<_>>()?;
        self.version += 1;
        Ok(())
    }

    /// Nearest centroid by Euclidean distance, lowest index on ties.
    pub fn assign(&self, goal: &[f64]) -> Result<usize> {
        if !self.is_fit() {
            return Err(Error::ModelNotFit);
        }
        check_dim("goal", goal.len(), self.centroids[0].dim())?;
        let mut best = (0, f64::INFINITY);
        for (i, c) in self.centroids.iter().enumerate() {
            let d = squared_distance(goal, c);
            if d < best.1 {
                best = (i, d);
            }
        }
        Ok(best.0)
    }
}

/// Partition of the live episode ids into `k` clustered buffers. Within a
/// bucket ids are kept in increasing order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusteredIndex {
    model_version: u64,
    buckets: Vec<VecDeque<EpisodeId>>,
}

impl ClusteredIndex {
    pub fn model_version(&self) -> u64 {
        self.model_version
    }

    pub fn k(&self) -> usize {
        self.buckets.len()
    }

    pub fn bucket(&self, i: usize) -> &VecDeque<EpisodeId> {
        &self.buckets[i]
    }

    pub fn buckets(&self) -> &[VecDeque<EpisodeId>] {
        &self.buckets
    }

    pub fn bucket_sizes(&self) -> Vec<usize> {
        self.buckets.iter().map(VecDeque::len).collect()
    }

    pub fn len(&self) -> usize {
        self.buckets.iter().map(VecDeque::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Checks that the buckets are disjoint and cover exactly the live ids.
    pub fn is_partition_of(&self, replay: &EpisodeBuffer) -> bool {
        let mut ids: Vec<EpisodeId> = self.buckets.iter().flatten().copied().collect();
        ids.sort_unstable();
        ids.iter().copied().eq(replay.ids())
    }

    /// Assigns a freshly stored episode and drops ids the replay buffer has
    /// evicted since the last update.
    pub fn index_new_episode(
        &mut self,
        model: &ClusterModel,
        replay: &mut EpisodeBuffer,
        id: EpisodeId,
    ) -> Result<usize> {
        if self.model_version != model.version() {
            return Err(Error::VersionMismatch {
                index: self.model_version,
                model: model.version(),
            });
        }
        let oldest = replay.oldest_id();
        for bucket in &mut self.buckets {
            while bucket.front().is_some_and(|&front| front < oldest) {
                bucket.pop_front();
            }
        }
        let episode = replay
            .get_mut(id)
            .ok_or_else(|| Error::contract(format!("episode {id} is not in the buffer")))?;
        let index = model.assign(episode.last_achieved_goal())?;
        episode.cluster = Some(ClusterTag {
            index,
            version: model.version(),
        });
        self.buckets[index].push_back(id);
        Ok(index)
    }
}

/// Assigns every stored episode under `model` and rebuilds the partition.
pub fn reassign_all(model: &ClusterModel, replay: &mut EpisodeBuffer) -> Result<ClusteredIndex> {
    if !model.is_fit() {
        return Err(Error::ModelNotFit);
    }
    let mut buckets = vec![VecDeque::new(); model.k()];
    for episode in replay.iter_mut() {
        let index = model.assign(episode.last_achieved_goal())?;
        episode.cluster = Some(ClusterTag {
            index,
            version: model.version(),
        });
        buckets[index].push_back(episode.id());
    }
    Ok(ClusteredIndex {
        model_version: model.version(),
        buckets,
    })
}

/// Refits the model when the failed-goal buffer has turned over completely.
/// Returns the rebuilt index when a refit happened. The k-means seed for
/// version `v` is derived from `seed` and `v`.
pub fn maybe_refit(
    fgb: &mut FailedGoalBuffer,
    model: &mut ClusterModel,
    replay: &mut EpisodeBuffer,
    params: &KMeansParams,
    seed: u64,
) -> Result<Option<ClusteredIndex>> {
    if !fgb.refit_due() {
        return Ok(None);
    }
    let points: Vec<Vec<f64>> = fgb.goals().map(|g| g.to_vec()).collect();
    let mut rng = indexed_rng(seed, Stream::Clustering, model.version() + 1);
    let fit = kmeans_fit(&points, params, &mut rng)?;
    model.install(fit.centroids)?;
    fgb.new_since_refit = 0;
    reassign_all(model, replay).map(Some)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RefitEvent {
    pub epoch: usize,
    pub version: u64,
    pub failed_goals_pushed: u64,
    pub bucket_sizes: Vec<usize>,
}

/// Owns the failed-goal buffer, model and live index of one training run.
#[derive(Debug, Clone)]
pub struct GoalClustering {
    params: KMeansParams,
    seed: u64,
    fgb: FailedGoalBuffer,
    model: ClusterModel,
    index: Option<ClusteredIndex>,
    events: Vec<RefitEvent>,
}

impl GoalClustering {
    pub fn new(params: KMeansParams, fgb_capacity: usize, seed: u64) -> Result<Self> {
        if params.k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        Ok(GoalClustering {
            fgb: FailedGoalBuffer::new(fgb_capacity)?,
            model: ClusterModel::new(params.k)?,
            params,
            seed,
            index: None,
            events: Vec::new(),
        })
    }

    pub fn fgb(&self) -> &FailedGoalBuffer {
        &self.fgb
    }

    pub fn model(&self) -> &ClusterModel {
        &self.model
    }

    /// The live index, once a model has been fit.
    pub fn index(&self) -> Option<&ClusteredIndex> {
        self.index.as_ref()
    }

    pub fn events(&self) -> &[RefitEvent] {
        &self.events
    }

    /// Bookkeeping after `stored` was written to `replay`: record its failed
    /// goal, index it under the current model and refit if due. Returns true
    /// when a refit happened.
    pub fn on_episode_stored(
        &mut self,
        replay: &mut EpisodeBuffer,
        stored: Stored,
        epoch: usize,
    ) -> Result<bool> {
        let episode = replay.get(stored.id).ok_or_else(|| {
            Error::contract(format!("episode {} is not in the buffer", stored.id))
        })?;
        self.fgb.record_episode_outcome(episode);
        if let Some(index) = &mut self.index {
            index.index_new_episode(&self.model, replay, stored.id)?;
        }
        match maybe_refit(
            &mut self.fgb,
            &mut self.model,
            replay,
            &self.params,
            self.seed,
        )? {
            Some(index) => {
                let event = RefitEvent {
                    epoch,
                    version: self.model.version(),
                    failed_goals_pushed: self.fgb.total_pushed(),
                    bucket_sizes: index.bucket_sizes(),
                };
                log::debug!(
                    "refit epoch={} version={} buckets={:?}",
                    event.epoch,
                    event.version,
                    event.bucket_sizes
                );
                self.events.push(event);
                self.index = Some(index);
                Ok(true)
            }
            None => Ok(false),
        }
    }
}
