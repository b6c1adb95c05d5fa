//! Episodic replay storage and hindsight relabeling.

use std::collections::VecDeque;
use std::io::Write;
use std::path::Path;
use std::sync::OnceLock;

use rand::Rng;
use serde::Serialize;

use crate::envs::{compute_reward, Action, Env, EnvSpec, GoalVector, Observation};
use crate::error::{check_dim, Error, Result};
use crate::rng::SimRng;

pub type EpisodeId = u64;

pub const DEFAULT_CAPACITY: usize = 1_000;

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: Action,
    pub next_state: Vec<f64>,
    /// Achieved goal of `next_state`.
    pub achieved_goal: GoalVector,
    pub desired_goal: GoalVector,
    pub reward: f64,
}

/// Cluster assignment stamped with the model version that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClusterTag {
    pub index: usize,
    pub version: u64,
}

#[derive(Debug)]
pub struct Episode {
    id: EpisodeId,
    initial_achieved_goal: GoalVector,
    transitions: Vec<Transition>,
    succeeded: bool,
    pub(crate) cluster: Option<ClusterTag>,
    pub(crate) energy: OnceLock<f64>,
}

impl Clone for Episode {
    fn clone(&self) -> Self {
        Episode {
            id: self.id,
            initial_achieved_goal: self.initial_achieved_goal.clone(),
            transitions: self.transitions.clone(),
            succeeded: self.succeeded,
            cluster: self.cluster,
            energy: self.energy.clone(),
        }
    }
}

impl Episode {
    /// Builds an episode from a full trajectory, checking the horizon, goal
    /// dimensions, a constant desired goal and stored rewards.
    pub fn new(
        initial_achieved_goal: GoalVector,
        transitions: Vec<Transition>,
        spec: &EnvSpec,
    ) -> Result<Self> {
        if transitions.len() != spec.horizon {
            return Err(Error::contract(format!(
                "episode has {} transitions, horizon is {}",
                transitions.len(),
                spec.horizon
            )));
        }
        check_dim(
            "initial achieved goal",
            initial_achieved_goal.dim(),
            spec.goal_dim,
        )?;
        let desired = &transitions[0].desired_goal;
        let mut succeeded = false;
        for (t, tr) in transitions.iter().enumerate() {
            if tr.desired_goal != *desired {
                return Err(Error::contract(format!(
                    "desired goal changes at transition {t}"
                )));
            }
            check_dim("transition state", tr.state.len(), spec.state_dim)?;
            check_dim("transition next_state", tr.next_state.len(), spec.state_dim)?;
            let expected = compute_reward(&tr.achieved_goal, &tr.desired_goal, spec)?;
            if tr.reward != expected {
                return Err(Error::contract(format!(
                    "stored reward {} at transition {t} disagrees with goals ({expected})",
                    tr.reward
                )));
            }
            succeeded |= expected == 0.0;
        }
        Ok(Episode {
            id: 0,
            initial_achieved_goal,
            transitions,
            succeeded,
            cluster: None,
            energy: OnceLock::new(),
        })
    }

    /// Zero until the episode is stored in a buffer.
    pub fn id(&self) -> EpisodeId {
        self.id
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn horizon(&self) -> usize {
        self.transitions.len()
    }

    pub fn desired_goal(&self) -> &GoalVector {
        &self.transitions[0].desired_goal
    }

    /// Achieved goal at reset, before the first transition.
    pub fn initial_achieved_goal(&self) -> &GoalVector {
        &self.initial_achieved_goal
    }

    pub fn last_achieved_goal(&self) -> &GoalVector {
        &self.transitions[self.transitions.len() - 1].achieved_goal
    }

    /// True iff some transition reached the desired goal.
    pub fn succeeded(&self) -> bool {
        self.succeeded
    }

    /// Whether the final state satisfies the desired goal.
    pub fn final_success(&self) -> bool {
        self.transitions[self.transitions.len() - 1].reward == 0.0
    }

    pub fn cluster(&self) -> Option<ClusterTag> {
        self.cluster
    }

    /// Achieved goals in time order, starting with the one at reset.
    pub fn achieved_goals(&self) -> impl Iterator<Item = &GoalVector> + '_ {
        std::iter::once(&self.initial_achieved_goal)
            .chain(self.transitions.iter().map(|t| &t.achieved_goal))
    }
}

/// Runs one full episode, choosing actions with `policy`.
pub fn rollout<P>(env: &mut dyn Env, rng: &mut SimRng, mut policy: P) -> Result<Episode>
where
    P: FnMut(&Observation) -> Result<Action>,
{
    let mut obs = env.reset(rng);
    let initial = obs.achieved_goal.clone();
    let horizon = env.spec().horizon;
    let mut transitions = Vec::with_capacity(horizon);
    loop {
        let action = policy(&obs)?;
        let step = env.step(&action)?;
        transitions.push(Transition {
            state: std::mem::take(&mut obs.state),
            action,
            next_state: step.observation.state.clone(),
            achieved_goal: step.observation.achieved_goal.clone(),
            desired_goal: step.observation.desired_goal.clone(),
            reward: step.reward,
        });
        obs = step.observation;
        if step.is_terminal {
            break;
        }
    }
    Episode::new(initial, transitions, env.spec())
}

/// Fixed-capacity ring of episodes with oldest-first eviction. Ids are dense
/// and strictly increasing starting at 1, so the live ids always form the
/// range `oldest_id()..=newest_id()`.
#[derive(Debug, Clone)]
pub struct EpisodeBuffer {
    capacity: usize,
    storage: VecDeque<Episode>,
    next_id: EpisodeId,
    horizon: usize,
    goal_dim: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Stored {
    pub id: EpisodeId,
    pub evicted: Option<EpisodeId>,
}

impl EpisodeBuffer {
    pub fn new(capacity: usize, spec: &EnvSpec) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::Config("replay capacity must be positive".into()));
        }
        Ok(EpisodeBuffer {
            capacity,
            storage: VecDeque::with_capacity(capacity),
            next_id: 1,
            horizon: spec.horizon,
            goal_dim: spec.goal_dim,
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.storage.len()
    }

    pub fn is_empty(&self) -> bool {
        self.storage.is_empty()
    }

    pub fn store_episode(&mut self, mut episode: Episode) -> Result<Stored> {
        if episode.horizon() != self.horizon {
            return Err(Error::contract(format!(
                "episode horizon {} does not match buffer horizon {}",
                episode.horizon(),
                self.horizon
            )));
        }
        check_dim("episode goal", episode.desired_goal().dim(), self.goal_dim)?;
        let evicted = if self.storage.len() == self.capacity {
            self.storage.pop_front().map(|e| e.id)
        } else {
            None
        };
        episode.id = self.next_id;
        episode.cluster = None;
        self.next_id += 1;
        let id = episode.id;
        self.storage.push_back(episode);
        Ok(Stored { id, evicted })
    }

    /// Id of the oldest live episode, or the id the next store will get when
    /// empty.
    pub fn oldest_id(&self) -> EpisodeId {
        self.storage.front().map_or(self.next_id, |e| e.id)
    }

    pub fn newest_id(&self) -> Option<EpisodeId> {
        self.storage.back().map(|e| e.id)
    }

    pub fn contains(&self, id: EpisodeId) -> bool {
        self.slot(id).is_some()
    }

    fn slot(&self, id: EpisodeId) -> Option<usize> {
        let front = self.storage.front()?.id;
        let offset = id.checked_sub(front)? as usize;
        (offset < self.storage.len()).then_some(offset)
    }

    pub fn get(&self, id: EpisodeId) -> Option<&Episode> {
        self.slot(id).map(|i| &self.storage[i])
    }

    pub(crate) fn get_mut(&mut self, id: EpisodeId) -> Option<&mut Episode> {
        self.slot(id).map(move |i| &mut self.storage[i])
    }

    /// Episode at position `i` in storage order (0 = oldest).
    pub fn at(&self, i: usize) -> Option<&Episode> {
        self.storage.get(i)
    }

    /// Oldest first.
    pub fn iter(&self) -> impl DoubleEndedIterator<Item = &Episode> + ExactSizeIterator + '_ {
        self.storage.iter()
    }

    pub(crate) fn iter_mut(&mut self) -> impl Iterator<Item = &mut Episode> + '_ {
        self.storage.iter_mut()
    }

    pub fn ids(&self) -> impl Iterator<Item = EpisodeId> + '_ {
        self.storage.iter().map(|e| e.id)
    }

    /// Writes one JSON object per episode (id, goals, rewards, cluster tag).
    /// Debugging aid only.
    pub fn write_snapshot(&self, path: &Path) -> Result<()> {
        #[derive(Serialize)]
        struct Row<'a> {
            episode_id: EpisodeId,
            desired_goal: &'a [f64],
            last_achieved_goal: &'a [f64],
            rewards: Vec<f64>,
            cluster_index: Option<usize>,
            cluster_version: Option<u64>,
        }
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = std::io::BufWriter::new(file);
        for ep in &self.storage {
            let row = Row {
                episode_id: ep.id,
                desired_goal: ep.desired_goal(),
                last_achieved_goal: ep.last_achieved_goal(),
                rewards: ep.transitions.iter().map(|t| t.reward).collect(),
                cluster_index: ep.cluster.map(|c| c.index),
                cluster_version: ep.cluster.map(|c| c.version),
            };
            serde_json::to_writer(&mut out, &row)?;
            out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
        }
        out.flush().map_err(|e| Error::io(path, e))
    }
}

/// Draws the 1-based transition index whose achieved goal becomes the
/// hindsight goal for the experience at 0-based step `t`: uniform over
/// `t+1..=horizon`, i.e. an achieved goal at or after step `t`.
pub fn sample_future_offset(t: usize, horizon: usize, rng: &mut SimRng) -> Result<usize> {
    if t >= horizon {
        return Err(Error::contract(format!(
            "step {t} out of range for horizon {horizon}"
        )));
    }
    Ok(rng.random_range(t + 1..=horizon))
}

/// Substitutes `hindsight_goal` for the desired goal and recomputes the
/// reward from goals alone.
pub fn relabel(
    transition: &Transition,
    hindsight_goal: &GoalVector,
    spec: &EnvSpec,
) -> Result<Transition> {
    check_dim("hindsight goal", hindsight_goal.dim(), spec.goal_dim)?;
    let reward = compute_reward(&transition.achieved_goal, hindsight_goal, spec)?;
    Ok(Transition {
        desired_goal: hindsight_goal.clone(),
        reward,
        ..transition.clone()
    })
}
