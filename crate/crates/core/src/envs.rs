//! Small multi-goal environments with sparse binary rewards.
//!
//! All three environments run for a fixed horizon with no early termination.
//! Rewards depend only on `(achieved_goal, desired_goal)`, which is what makes
//! hindsight relabeling possible: any achieved goal can be substituted for the
//! desired goal and the reward recomputed without touching the simulator.

use std::fmt;
use std::ops::Deref;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::rng::SimRng;

/// Absolute slack on the Euclidean success threshold. Distances that equal the
/// threshold in exact arithmetic can land a few ulps above it after rounding.
pub const THRESHOLD_SLACK: f64 = 1e-9;

/// A point in goal space. For BitFlip the components are bits encoded as
/// `0.0` / `1.0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GoalVector(Vec<f64>);

impl GoalVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().all(|v| v.is_finite()) {
            Ok(GoalVector(values))
        } else {
            Err(Error::contract("goal vector has non-finite components"))
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for GoalVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<GoalVector> for Vec<f64> {
    fn from(g: GoalVector) -> Self {
        g.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GoalMetric {
    Hamming,
    Euclidean,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ActionSpace {
    Discrete {
        count: usize,
    },
    /// Each component lies in `[-bound, bound]`.
    Continuous {
        dim: usize,
        bound: f64,
    },
}

impl ActionSpace {
    pub fn is_discrete(&self) -> bool {
        matches!(self, ActionSpace::Discrete { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvSpec {
    pub state_dim: usize,
    pub goal_dim: usize,
    pub action_space: ActionSpace,
    pub horizon: usize,
    pub distance_threshold: f64,
    pub metric: GoalMetric,
}

impl EnvSpec {
    pub fn validate(&self) -> Result<()> {
        if self.state_dim == 0 || self.goal_dim == 0 {
            return Err(Error::contract("state_dim and goal_dim must be positive"));
        }
        if self.horizon == 0 {
            return Err(Error::contract("horizon must be at least 1"));
        }
        if !(self.distance_threshold >= 0.0) {
            return Err(Error::contract("distance_threshold must be nonnegative"));
        }
        match self.action_space {
            ActionSpace::Discrete { count: 0 } => Err(Error::contract("empty action space")),
            ActionSpace::Continuous { dim: 0, .. } => Err(Error::contract("empty action space")),
            ActionSpace::Continuous { bound, .. } if !(bound > 0.0) => {
                Err(Error::contract("action bound must be positive"))
            }
            _ => Ok(()),
        }
    }
}

/// Distance under the environment's metric. Hamming counts components that differ
/// by more than one half, so `0.0`/`1.0` bit encodings compare exactly.
pub fn goal_distance(a: &[f64], b: &[f64], metric: GoalMetric) -> f64 {
    match metric {
        GoalMetric::Hamming => a
            .iter()
            .zip(b)
            .filter(|(x, y)| (*x - *y).abs() > 0.5)
            .count() as f64,
        GoalMetric::Euclidean => a
            .iter()
            .zip(b)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt(),
    }
}

pub fn goal_reached(achieved: &[f64], desired: &[f64], spec: &EnvSpec) -> Result<bool> {
    check_dim("achieved goal", achieved.len(), spec.goal_dim)?;
    check_dim("desired goal", desired.len(), spec.goal_dim)?;
    let d = goal_distance(achieved, desired, spec.metric);
    Ok(match spec.metric {
        GoalMetric::Hamming => d <= spec.distance_threshold,
        GoalMetric::Euclidean => d <= spec.distance_threshold + THRESHOLD_SLACK,
    })
}

/// Sparse reward: `0.0` when the achieved goal is within threshold of the
/// desired goal, `-1.0` otherwise.
pub fn compute_reward(achieved: &[f64], desired: &[f64], spec: &EnvSpec) -> Result<f64> {
    Ok(if goal_reached(achieved, desired, spec)? {
        0.0
    } else {
        -1.0
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Action {
    Discrete(usize),
    Continuous(Vec<f64>),
}

impl Action {
    /// Flat numeric encoding used as critic input: the index for discrete
    /// actions, the components for continuous ones.
    pub fn as_vec(&self) -> Vec<f64> {
        match self {
            Action::Discrete(i) => vec![*i as f64],
            Action::Continuous(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub state: Vec<f64>,
    pub achieved_goal: GoalVector,
    pub desired_goal: GoalVector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub observation: Observation,
    pub reward: f64,
    pub is_success: bool,
    pub is_terminal: bool,
}

pub trait Env: Send {
    fn spec(&self) -> &EnvSpec;

    /// Starts a new episode with a freshly sampled desired goal.
    fn reset(&mut self, rng: &mut SimRng) -> Observation;

    fn step(&mut self, action: &Action) -> Result<StepResult>;

    /// Goal-space projection of a state vector.
    fn achieved_goal_of(&self, state: &[f64]) -> GoalVector;
}

/// Step counter shared by the environments.
#[derive(Debug, Clone)]
struct Clock {
    t: usize,
    horizon: usize,
    started: bool,
}

impl Clock {
    fn new(horizon: usize) -> Self {
        Clock {
            t: 0,
            horizon,
            started: false,
        }
    }

    fn reset(&mut self) {
        self.t = 0;
        self.started = true;
    }

    fn tick(&mut self) -> Result<bool> {
        if !self.started {
            return Err(Error::contract("step called before reset"));
        }
        if self.t >= self.horizon {
            return Err(Error::contract("step called after terminal step"));
        }
        self.t += 1;
        Ok(self.t == self.horizon)
    }
}

fn finish_step(
    spec: &EnvSpec,
    state: Vec<f64>,
    achieved_goal: GoalVector,
    desired_goal: &GoalVector,
    is_terminal: bool,
) -> Result<StepResult> {
    let is_success = goal_reached(&achieved_goal, desired_goal, spec)?;
    Ok(StepResult {
        observation: Observation {
            state,
            achieved_goal,
            desired_goal: desired_goal.clone(),
        },
        reward: if is_success { 0.0 } else { -1.0 },
        is_success,
        is_terminal,
    })
}

fn continuous_action(action: &Action, spec: &EnvSpec) -> Result<Vec<f64>> {
    let ActionSpace::Continuous { dim, bound } = spec.action_space else {
        unreachable!("continuous env with discrete action space")
    };
    match action {
        Action::Continuous(v) => {
            check_dim("action", v.len(), dim)?;
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::contract("action has non-finite components"));
            }
            Ok(v.iter().map(|x| x.clamp(-bound, bound)).collect())
        }
        Action::Discrete(_) => Err(Error::contract(
            "discrete action passed to a continuous environment",
        )),
    }
}

fn clip_unit(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}

/// `n` bits; action `i < n` flips bit `i` and action `n` leaves the bits
/// alone. Horizon `n`, success only on exact match.
///
/// Without the extra action every step would flip a bit, so the Hamming
/// distance to the goal would change parity each step and half of all goals
/// could never be matched on the final step.
#[derive(Debug, Clone)]
pub struct BitFlip {
    spec: EnvSpec,
    bits: Vec<f64>,
    goal: GoalVector,
    clock: Clock,
}

impl BitFlip {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::contract("bitflip needs at least one bit"));
        }
        let spec = EnvSpec {
            state_dim: n,
            goal_dim: n,
            action_space: ActionSpace::Discrete { count: n + 1 },
            horizon: n,
            distance_threshold: 0.0,
            metric: GoalMetric::Hamming,
        };
        Ok(BitFlip {
            spec,
            bits: vec![0.0; n],
            goal: GoalVector(vec![0.0; n]),
            clock: Clock::new(n),
        })
    }

    fn random_bits(n: usize, rng: &mut SimRng) -> Vec<f64> {
        (0..n)
            .map(|_| if rng.random::<bool>() { 1.0 } else { 0.0 })
            .collect()
    }
}

impl Env for BitFlip {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&mut self, rng: &mut SimRng) -> Observation {
        let n = self.spec.state_dim;
        self.bits = Self::random_bits(n, rng);
        self.goal = GoalVector(Self::random_bits(n, rng));
        self.clock.reset();
        Observation {
            state: self.bits.clone(),
            achieved_goal: GoalVector(self.bits.clone()),
            desired_goal: self.goal.clone(),
        }
    }

    fn step(&mut self, action: &Action) -> Result<StepResult> {
        let n = self.spec.state_dim;
        let bit = match action {
            Action::Discrete(i) if *i <= n => *i,
            Action::Discrete(i) => {
                return Err(Error::contract(format!("action {i} out of range 0..={n}")))
            }
            Action::Continuous(_) => {
                return Err(Error::contract("continuous action passed to bitflip"))
            }
        };
        let terminal = self.clock.tick()?;
        if bit < n {
            self.bits[bit] = 1.0 - self.bits[bit];
        }
        finish_step(
            &self.spec,
            self.bits.clone(),
            GoalVector(self.bits.clone()),
            &self.goal,
            terminal,
        )
    }

    fn achieved_goal_of(&self, state: &[f64]) -> GoalVector {
        GoalVector(state.to_vec())
    }
}

/// Point mass in the unit square; the action is a position delta.
#[derive(Debug, Clone)]
pub struct PointReach2D {
    spec: EnvSpec,
    pos: [f64; 2],
    goal: GoalVector,
    clock: Clock,
}

impl PointReach2D {
    pub const HORIZON: usize = 50;
    pub const THRESHOLD: f64 = 0.05;
    pub const MAX_DELTA: f64 = 0.05;

    pub fn new() -> Self {
        PointReach2D {
            spec: EnvSpec {
                state_dim: 2,
                goal_dim: 2,
                action_space: ActionSpace::Continuous {
                    dim: 2,
                    bound: Self::MAX_DELTA,
                },
                horizon: Self::HORIZON,
                distance_threshold: Self::THRESHOLD,
                metric: GoalMetric::Euclidean,
            },
            pos: [0.5, 0.5],
            goal: GoalVector(vec![0.5, 0.5]),
            clock: Clock::new(Self::HORIZON),
        }
    }

    fn observation(&self) -> Observation {
        Observation {
            state: self.pos.to_vec(),
            achieved_goal: GoalVector(self.pos.to_vec()),
            desired_goal: self.goal.clone(),
        }
    }
}

impl Default for PointReach2D {
    fn default() -> Self {
        Self::new()
    }
}

impl Env for PointReach2D {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&mut self, rng: &mut SimRng) -> Observation {
        self.pos = [rng.random::<f64>(), rng.random::<f64>()];
        self.goal = GoalVector(vec![rng.random::<f64>(), rng.random::<f64>()]);
        self.clock.reset();
        self.observation()
    }

    fn step(&mut self, action: &Action) -> Result<StepResult> {
        let delta = continuous_action(action, &self.spec)?;
        let terminal = self.clock.tick()?;
        self.pos = [
            clip_unit(self.pos[0] + delta[0]),
            clip_unit(self.pos[1] + delta[1]),
        ];
        finish_step(
            &self.spec,
            self.pos.to_vec(),
            GoalVector(self.pos.to_vec()),
            &self.goal,
            terminal,
        )
    }

    fn achieved_goal_of(&self, state: &[f64]) -> GoalVector {
        GoalVector(state[..2].to_vec())
    }
}

/// An agent disc pushes a box disc around the unit square. The achieved goal
/// is the box position, which only changes through contact.
///
/// State layout: `[agent_x, agent_y, box_x, box_y, box_x - agent_x, box_y - agent_y]`.
#[derive(Debug, Clone)]
pub struct PointPush2D {
    spec: EnvSpec,
    agent: [f64; 2],
    block: [f64; 2],
    goal: GoalVector,
    clock: Clock,
}

impl PointPush2D {
    pub const HORIZON: usize = 60;
    pub const THRESHOLD: f64 = 0.05;
    pub const MAX_DELTA: f64 = 0.05;
    pub const AGENT_RADIUS: f64 = 0.03;
    /// Centre distance at or below which the agent is in contact with the box.
    pub const CONTACT_DISTANCE: f64 = 0.06;
    /// Initial box positions are drawn from `[BOX_LO, BOX_HI]²`.
    pub const BOX_LO: f64 = 0.25;
    pub const BOX_HI: f64 = 0.75;
    /// The agent starts out of contact but close to the box, at a centre
    /// distance drawn from `[START_GAP_LO, START_GAP_HI)` in a random direction.
    pub const START_GAP_LO: f64 = 0.07;
    pub const START_GAP_HI: f64 = 0.15;
    /// Goals are drawn uniformly from the square of this half-width around
    /// the initial box position (clipped to the unit square).
    pub const GOAL_RANGE: f64 = 0.15;

    pub fn new() -> Self {
        PointPush2D {
            spec: EnvSpec {
                state_dim: 6,
                goal_dim: 2,
                action_space: ActionSpace::Continuous {
                    dim: 2,
                    bound: Self::MAX_DELTA,
                },
                horizon: Self::HORIZON,
                distance_threshold: Self::THRESHOLD,
                metric: GoalMetric::Euclidean,
            },
            agent: [0.0; 2],
            block: [0.5; 2],
            goal: GoalVector(vec![0.5, 0.5]),
            clock: Clock::new(Self::HORIZON),
        }
    }

    fn state(&self) -> Vec<f64> {
        vec![
            self.agent[0],
            self.agent[1],
            self.block[0],
            self.block[1],
            self.block[0] - self.agent[0],
            self.block[1] - self.agent[1],
        ]
    }

    pub fn agent_position(&self) -> [f64; 2] {
        self.agent
    }

    pub fn box_position(&self) -> [f64; 2] {
        self.block
    }

    /// Places agent and box directly; the desired goal is kept.
    pub fn set_positions(&mut self, agent: [f64; 2], block: [f64; 2]) {
        self.agent = agent;
        self.block = block;
    }
}

impl Default for PointPush2D {
    fn default() -> Self {
        Self::new()
    }
}

impl Env for PointPush2D {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&mut self, rng: &mut SimRng) -> Observation {
        self.block = [
            rng.random_range(Self::BOX_LO..Self::BOX_HI),
            rng.random_range(Self::BOX_LO..Self::BOX_HI),
        ];
        let angle = rng.random_range(0.0..std::f64::consts::TAU);
        let r = rng.random_range(Self::START_GAP_LO..Self::START_GAP_HI);
        self.agent = [
            clip_unit(self.block[0] + r * angle.cos()),
            clip_unit(self.block[1] + r * angle.sin()),
        ];
        let goal = loop {
            let g = [
                clip_unit(self.block[0] + rng.random_range(-Self::GOAL_RANGE..Self::GOAL_RANGE)),
                clip_unit(self.block[1] + rng.random_range(-Self::GOAL_RANGE..Self::GOAL_RANGE)),
            ];
            if goal_distance(&g, &self.block, GoalMetric::Euclidean) > Self::THRESHOLD {
                break g;
            }
        };
        self.goal = GoalVector(goal.to_vec());
        self.clock.reset();
        Observation {
            state: self.state(),
            achieved_goal: GoalVector(self.block.to_vec()),
            desired_goal: self.goal.clone(),
        }
    }

    fn step(&mut self, action: &Action) -> Result<StepResult> {
        let delta = continuous_action(action, &self.spec)?;
        let terminal = self.clock.tick()?;
        let prev = self.agent;
        self.agent = [clip_unit(prev[0] + delta[0]), clip_unit(prev[1] + delta[1])];
        let moved = [self.agent[0] - prev[0], self.agent[1] - prev[1]];
        let to_box = [self.block[0] - self.agent[0], self.block[1] - self.agent[1]];
        let gap = (to_box[0] * to_box[0] + to_box[1] * to_box[1]).sqrt();
        if gap <= Self::CONTACT_DISTANCE && gap > 0.0 {
            let dir = [to_box[0] / gap, to_box[1] / gap];
            let push = moved[0] * dir[0] + moved[1] * dir[1];
            // contact can only push, never pull
            if push > 0.0 {
                self.block = [
                    clip_unit(self.block[0] + push * dir[0]),
                    clip_unit(self.block[1] + push * dir[1]),
                ];
            }
        }
        finish_step(
            &self.spec,
            self.state(),
            GoalVector(self.block.to_vec()),
            &self.goal,
            terminal,
        )
    }

    fn achieved_goal_of(&self, state: &[f64]) -> GoalVector {
        GoalVector(state[2..4].to_vec())
    }
}

/// Environment selector: `bitflip:<n>`, `reach2d` or `push2d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum EnvId {
    BitFlip(usize),
    Reach2D,
    Push2D,
}

impl EnvId {
    pub fn make(&self) -> Box<dyn Env> {
        match *self {
            EnvId::BitFlip(n) => Box::new(BitFlip::new(n).expect("EnvId::BitFlip holds n >= 1")),
            EnvId::Reach2D => Box::new(PointReach2D::new()),
            EnvId::Push2D => Box::new(PointPush2D::new()),
        }
    }

    pub fn spec(&self) -> EnvSpec {
        self.make().spec().clone()
    }
}

impl FromStr for EnvId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "reach2d" => Ok(EnvId::Reach2D),
            "push2d" => Ok(EnvId::Push2D),
            other => {
                let n = other
                    .strip_prefix("bitflip:")
                    .and_then(|n| n.parse::<usize>().ok())
                    .filter(|n| *n >= 1)
                    .ok_or_else(|| {
                        Error::Config(format!(
                            "unknown env '{other}' (expected bitflip:<n>, reach2d or push2d)"
                        ))
                    })?;
                Ok(EnvId::BitFlip(n))
            }
        }
    }
}

impl TryFrom<String> for EnvId {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<EnvId> for String {
    fn from(id: EnvId) -> String {
        id.to_string()
    }
}

impl fmt::Display for EnvId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EnvId::BitFlip(n) => write!(f, "bitflip:{n}"),
            EnvId::Reach2D => f.write_str("reach2d"),
            EnvId::Push2D => f.write_str("push2d"),
        }
    }
}
