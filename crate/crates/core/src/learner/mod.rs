//! Goal-conditioned off-policy learners: DQN for discrete action spaces and
//! a DDPG-style actor-critic for continuous ones, both with Polyak-averaged
//! target networks. Inputs are the concatenation `[state ‖ goal]`, plus the
//! normalised action for the DDPG critic.

mod adam;
mod mlp;

use std::path::Path;

use ndarray::{s, Array2};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

pub use adam::AdamState;
pub use mlp::{
    Checkpoint, Dense, LayerParams, Mlp, MlpGrads, OutputActivation, Tape, CHECKPOINT_FORMAT,
};

use crate::envs::{Action, ActionSpace, EnvSpec, Observation};
use crate::error::{check_dim, Error, Result};
use crate::rng::SimRng;
use crate::sampling::Batch;
use mlp::hstack;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub gamma: f64,
    pub lr_actor: f64,
    pub lr_critic: f64,
    pub polyak_tau: f64,
    /// Epsilon-greedy rate for discrete actions.
    pub exploration_eps: f64,
    /// Gaussian action noise, as a fraction of the action bound.
    pub action_noise_sigma: f64,
    /// Clip TD targets to `[-1/(1-gamma), 0]`.
    pub target_clip: bool,
    pub hidden: Vec<usize>,
    /// Penalty on squared normalised actor output.
    pub action_l2: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            gamma: 0.98,
            lr_actor: 1e-3,
            lr_critic: 1e-3,
            polyak_tau: 0.05,
            exploration_eps: 0.2,
            action_noise_sigma: 0.1,
            target_clip: true,
            hidden: vec![64, 64],
            action_l2: 0.1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::Config(format!(
                "gamma ({}) must lie in (0, 1)",
                self.gamma
            )));
        }
        if !(self.lr_actor > 0.0 && self.lr_critic > 0.0) {
            return Err(Error::Config("learning rates must be positive".into()));
        }
        if !(self.polyak_tau > 0.0 && self.polyak_tau <= 1.0) {
            return Err(Error::Config(format!(
                "tau ({}) must lie in (0, 1]",
                self.polyak_tau
            )));
        }
        if !(0.0..=1.0).contains(&self.exploration_eps) {
            return Err(Error::Config("exploration-eps must lie in [0, 1]".into()));
        }
        if !(self.action_noise_sigma >= 0.0) || !(self.action_l2 >= 0.0) {
            return Err(Error::Config(
                "noise sigma and action l2 must be nonnegative".into(),
            ));
        }
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return Err(Error::Config("hidden layer sizes must be positive".into()));
        }
        Ok(())
    }

    /// Lower end of the TD-target clip range.
    pub fn clip_low(&self) -> f64 {
        -1.0 / (1.0 - self.gamma)
    }

    fn clip_target(&self, y: f64) -> f64 {
        if self.target_clip {
            y.clamp(self.clip_low(), 0.0)
        } else {
            y
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UpdateStats {
    /// Critic loss before the optimizer step.
    pub critic_loss: f64,
    pub actor_loss: Option<f64>,
    pub target_min: f64,
    pub target_max: f64,
}

fn concat_input(state: &[f64], goal: &[f64]) -> Vec<f64> {
    let mut x = Vec::with_capacity(state.len() + goal.len());
    x.extend_from_slice(state);
    x.extend_from_slice(goal);
    x
}

/// `[state ‖ goal]` and `[next_state ‖ goal]` matrices of a batch.
fn batch_inputs(
    batch: &Batch,
    state_dim: usize,
    goal_dim: usize,
) -> Result<(Array2<f64>, Array2<f64>)> {
    let n = batch.len();
    let width = state_dim + goal_dim;
    let mut x = Array2::zeros((n, width));
    let mut x_next = Array2::zeros((n, width));
    for (i, item) in batch.items.iter().enumerate() {
        check_dim("batch state", item.state.len(), state_dim)?;
        check_dim("batch next_state", item.next_state.len(), state_dim)?;
        check_dim("batch goal", item.goal.dim(), goal_dim)?;
        let mut row = x.row_mut(i);
        for (j, v) in item.state.iter().chain(item.goal.iter()).enumerate() {
            row[j] = *v;
        }
        let mut row = x_next.row_mut(i);
        for (j, v) in item.next_state.iter().chain(item.goal.iter()).enumerate() {
            row[j] = *v;
        }
    }
    Ok((x, x_next))
}

fn argmax_low(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Goal-conditioned DQN with one Q output per discrete action.
#[derive(Debug, Clone)]
pub struct DqnAgent {
    cfg: TrainConfig,
    state_dim: usize,
    goal_dim: usize,
    actions: usize,
    pub q: Mlp,
    pub target: Mlp,
    opt: AdamState,
}

impl DqnAgent {
    pub fn new(spec: &EnvSpec, cfg: TrainConfig, rng: &mut SimRng) -> Result<Self> {
        cfg.validate()?;
        let ActionSpace::Discrete { count } = spec.action_space else {
            return Err(Error::contract("DQN needs a discrete action space"));
        };
        let mut sizes = vec![spec.state_dim + spec.goal_dim];
        sizes.extend(&cfg.hidden);
        sizes.push(count);
        let q = Mlp::new(&sizes, OutputActivation::Identity, rng)?;
        let opt = AdamState::new(&q, cfg.lr_critic);
        Ok(DqnAgent {
            state_dim: spec.state_dim,
            goal_dim: spec.goal_dim,
            actions: count,
            target: q.clone(),
            q,
            opt,
            cfg,
        })
    }

    pub fn config(&self) -> &TrainConfig {
        &self.cfg
    }

    pub fn q_values(&self, obs: &Observation) -> Result<Vec<f64>> {
        self.q.forward(&concat_input(&obs.state, &obs.desired_goal))
    }

    /// Epsilon-greedy; greedy ties go to the lowest action index.
    pub fn act(&self, obs: &Observation, explore: bool, rng: &mut SimRng) -> Result<Action> {
        if explore && self.cfg.exploration_eps > 0.0 && rng.random_bool(self.cfg.exploration_eps) {
            return Ok(Action::Discrete(rng.random_range(0..self.actions)));
        }
        Ok(Action::Discrete(argmax_low(&self.q_values(obs)?)))
    }

    fn targets(&self, batch: &Batch, x_next: &Array2<f64>) -> Result<Vec<f64>> {
        let q_next = self.target.forward_batch(x_next.view())?;
        Ok(batch
            .items
            .iter()
            .zip(q_next.rows())
            .map(|(item, row)| {
                let best = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                self.cfg.clip_target(item.reward + self.cfg.gamma * best)
            })
            .collect())
    }

    fn loss_parts(
        &self,
        batch: &Batch,
    ) -> Result<(Array2<f64>, Array2<f64>, Array2<f64>, Vec<f64>)> {
        let (x, x_next) = batch_inputs(batch, self.state_dim, self.goal_dim)?;
        let y = self.targets(batch, &x_next)?;
        let n = batch.len();
        let mut targets = Array2::zeros((n, self.actions));
        let mut mask = Array2::zeros((n, self.actions));
        for (i, item) in batch.items.iter().enumerate() {
            let a = match item.action {
                Action::Discrete(a) if a < self.actions => a,
                _ => {
                    return Err(Error::contract(
                        "batch action is not a valid discrete index",
                    ))
                }
            };
            targets[[i, a]] = y[i];
            mask[[i, a]] = 1.0;
        }
        Ok((x, targets, mask, y))
    }

    /// Mean squared TD error of `batch` under the current networks.
    pub fn td_loss(&self, batch: &Batch) -> Result<f64> {
        let (x, targets, mask, _) = self.loss_parts(batch)?;
        self.q.mse_loss(x.view(), &targets, Some(&mask))
    }

    /// One Adam step on the mean squared TD error; returns the pre-step loss.
    pub fn q_update(&mut self, batch: &Batch) -> Result<UpdateStats> {
        if batch.is_empty() {
            return Err(Error::contract("empty batch"));
        }
        let (x, targets, mask, y) = self.loss_parts(batch)?;
        let (loss, grads) = self.q.mse_loss_grad(x, &targets, Some(&mask))?;
        if !loss.is_finite() {
            return Err(Error::Diverged);
        }
        self.opt.step(&mut self.q, &grads)?;
        Ok(UpdateStats {
            critic_loss: loss,
            actor_loss: None,
            target_min: y.iter().copied().fold(f64::INFINITY, f64::min),
            target_max: y.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        })
    }

    pub fn sync_target(&mut self) -> Result<()> {
        self.target.polyak_update(&self.q, self.cfg.polyak_tau)
    }
}

/// DDPG-style actor-critic. The actor outputs `bound * tanh(·)`; the critic
/// sees actions divided by the bound.
#[derive(Debug, Clone)]
pub struct DdpgAgent {
    cfg: TrainConfig,
    state_dim: usize,
    goal_dim: usize,
    action_dim: usize,
    bound: f64,
    pub actor: Mlp,
    pub actor_target: Mlp,
    pub critic: Mlp,
    pub critic_target: Mlp,
    actor_opt: AdamState,
    critic_opt: AdamState,
}

impl DdpgAgent {
    pub fn new(spec: &EnvSpec, cfg: TrainConfig, rng: &mut SimRng) -> Result<Self> {
        cfg.validate()?;
        let ActionSpace::Continuous { dim, bound } = spec.action_space else {
            return Err(Error::contract("DDPG needs a continuous action space"));
        };
        let obs_dim = spec.state_dim + spec.goal_dim;
        let mut actor_sizes = vec![obs_dim];
        actor_sizes.extend(&cfg.hidden);
        actor_sizes.push(dim);
        let mut critic_sizes = vec![obs_dim + dim];
        critic_sizes.extend(&cfg.hidden);
        critic_sizes.push(1);
        let actor = Mlp::new(&actor_sizes, OutputActivation::Tanh { scale: bound }, rng)?;
        let critic = Mlp::new(&critic_sizes, OutputActivation::Identity, rng)?;
        Ok(DdpgAgent {
            actor_opt: AdamState::new(&actor, cfg.lr_actor),
            critic_opt: AdamState::new(&critic, cfg.lr_critic),
            actor_target: actor.clone(),
            critic_target: critic.clone(),
            actor,
            critic,
            state_dim: spec.state_dim,
            goal_dim: spec.goal_dim,
            action_dim: dim,
            bound,
            cfg,
        })
    }

    pub fn config(&self) -> &TrainConfig {
        &self.cfg
    }

    pub fn policy(&self, obs: &Observation) -> Result<Vec<f64>> {
        self.actor
            .forward(&concat_input(&obs.state, &obs.desired_goal))
    }

    /// Actor output plus Gaussian noise with standard deviation
    /// `action_noise_sigma * bound`, clipped to the bounds.
    pub fn act(&self, obs: &Observation, explore: bool, rng: &mut SimRng) -> Result<Action> {
        let mut a = self.policy(obs)?;
        let sigma = if explore {
            self.cfg.action_noise_sigma * self.bound
        } else {
            0.0
        };
        if sigma > 0.0 {
            let noise = Normal::new(0.0, sigma).map_err(|e| Error::contract(e.to_string()))?;
            for v in &mut a {
                *v += noise.sample(rng);
            }
        }
        Ok(Action::Continuous(
            a.into_iter()
                .map(|v| v.clamp(-self.bound, self.bound))
                .collect(),
        ))
    }

    fn batch_actions(&self, batch: &Batch) -> Result<Array2<f64>> {
        let mut a = Array2::zeros((batch.len(), self.action_dim));
        for (i, item) in batch.items.iter().enumerate() {
            match &item.action {
                Action::Continuous(v) if v.len() == self.action_dim => {
                    for (j, x) in v.iter().enumerate() {
                        a[[i, j]] = x / self.bound;
                    }
                }
                _ => {
                    return Err(Error::contract(
                        "batch action is not a valid continuous vector",
                    ))
                }
            }
        }
        Ok(a)
    }

    fn critic_parts(&self, batch: &Batch) -> Result<(Array2<f64>, Array2<f64>, Array2<f64>)> {
        let (x, x_next) = batch_inputs(batch, self.state_dim, self.goal_dim)?;
        let a_next = self.actor_target.forward_batch(x_next.view())? / self.bound;
        let q_next = self
            .critic_target
            .forward_batch(hstack(&x_next, &a_next).view())?;
        let y = Array2::from_shape_fn((batch.len(), 1), |(i, _)| {
            self.cfg
                .clip_target(batch.items[i].reward + self.cfg.gamma * q_next[[i, 0]])
        });
        let critic_in = hstack(&x, &self.batch_actions(batch)?);
        Ok((x, critic_in, y))
    }

    pub fn td_loss(&self, batch: &Batch) -> Result<f64> {
        let (_, critic_in, y) = self.critic_parts(batch)?;
        self.critic.mse_loss(critic_in.view(), &y, None)
    }

    /// Critic step on the TD error, then actor step on `-Q(s, g, π(s, g))`
    /// plus the action penalty.
    pub fn q_update(&mut self, batch: &Batch) -> Result<UpdateStats> {
        if batch.is_empty() {
            return Err(Error::contract("empty batch"));
        }
        let (x, critic_in, y) = self.critic_parts(batch)?;
        let (critic_loss, grads) = self.critic.mse_loss_grad(critic_in, &y, None)?;
        if !critic_loss.is_finite() {
            return Err(Error::Diverged);
        }
        self.critic_opt.step(&mut self.critic, &grads)?;

        let n = batch.len() as f64;
        let obs_dim = self.state_dim + self.goal_dim;
        let actor_tape = self.actor.forward_train(x.clone())?;
        let a_norm = &actor_tape.output / self.bound;
        let critic_tape = self.critic.forward_train(hstack(&x, &a_norm))?;
        let q_mean = critic_tape.output.sum() / n;
        let penalty = self.cfg.action_l2 * a_norm.iter().map(|v| v * v).sum::<f64>() / n;
        let actor_loss = -q_mean + penalty;
        let d_q = Array2::from_elem((batch.len(), 1), -1.0 / n);
        let (_, d_critic_in) = self.critic.backward(&critic_tape, &d_q)?;
        let d_a_norm = d_critic_in.slice(s![.., obs_dim..]).to_owned()
            + &a_norm * (2.0 * self.cfg.action_l2 / n);
        let d_action = d_a_norm / self.bound;
        let (actor_grads, _) = self.actor.backward(&actor_tape, &d_action)?;
        self.actor_opt.step(&mut self.actor, &actor_grads)?;

        Ok(UpdateStats {
            critic_loss,
            actor_loss: Some(actor_loss),
            target_min: y.iter().copied().fold(f64::INFINITY, f64::min),
            target_max: y.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        })
    }

    pub fn sync_targets(&mut self) -> Result<()> {
        self.actor_target
            .polyak_update(&self.actor, self.cfg.polyak_tau)?;
        self.critic_target
            .polyak_update(&self.critic, self.cfg.polyak_tau)
    }
}

#[derive(Debug, Clone)]
pub enum Agent {
    Dqn(DqnAgent),
    Ddpg(DdpgAgent),
}

impl Agent {
    /// DQN for discrete action spaces, DDPG otherwise.
    pub fn for_env(spec: &EnvSpec, cfg: TrainConfig, rng: &mut SimRng) -> Result<Self> {
        Ok(if spec.action_space.is_discrete() {
            Agent::Dqn(DqnAgent::new(spec, cfg, rng)?)
        } else {
            Agent::Ddpg(DdpgAgent::new(spec, cfg, rng)?)
        })
    }

    pub fn act(&self, obs: &Observation, explore: bool, rng: &mut SimRng) -> Result<Action> {
        match self {
            Agent::Dqn(a) => a.act(obs, explore, rng),
            Agent::Ddpg(a) => a.act(obs, explore, rng),
        }
    }

    pub fn q_update(&mut self, batch: &Batch) -> Result<UpdateStats> {
        match self {
            Agent::Dqn(a) => a.q_update(batch),
            Agent::Ddpg(a) => a.q_update(batch),
        }
    }

    pub fn td_loss(&self, batch: &Batch) -> Result<f64> {
        match self {
            Agent::Dqn(a) => a.td_loss(batch),
            Agent::Ddpg(a) => a.td_loss(batch),
        }
    }

    pub fn sync_targets(&mut self) -> Result<()> {
        match self {
            Agent::Dqn(a) => a.sync_target(),
            Agent::Ddpg(a) => a.sync_targets(),
        }
    }

    pub fn config(&self) -> &TrainConfig {
        match self {
            Agent::Dqn(a) => a.config(),
            Agent::Ddpg(a) => a.config(),
        }
    }

    pub fn is_finite(&self) -> bool {
        match self {
            Agent::Dqn(a) => a.q.is_finite() && a.target.is_finite(),
            Agent::Ddpg(a) => {
                a.actor.is_finite()
                    && a.critic.is_finite()
                    && a.actor_target.is_finite()
                    && a.critic_target.is_finite()
            }
        }
    }

    /// Networks under stable names (`q`, or `actor` and `critic`).
    pub fn networks(&self) -> Vec<(&'static str, &Mlp)> {
        match self {
            Agent::Dqn(a) => vec![("q", &a.q)],
            Agent::Ddpg(a) => vec![("actor", &a.actor), ("critic", &a.critic)],
        }
    }

    /// Writes each online network to `<dir>/<name>.json`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (name, net) in self.networks() {
            net.save(&dir.join(format!("{name}.json")))?;
        }
        Ok(())
    }

    /// Loads networks written by [`Agent::save`]; targets are reset to the
    /// loaded online networks.
    pub fn load(&mut self, dir: &Path) -> Result<()> {
        match self {
            Agent::Dqn(a) => {
                let q = Mlp::load(&dir.join("q.json"))?;
                check_dim(
                    "q layer sizes",
                    q.layer_sizes().len(),
                    a.q.layer_sizes().len(),
                )?;
                a.q = q.clone();
                a.target = q;
            }
            Agent::Ddpg(a) => {
                let actor = Mlp::load(&dir.join("actor.json"))?;
                let critic = Mlp::load(&dir.join("critic.json"))?;
                a.actor_target = actor.clone();
                a.critic_target = critic.clone();
                a.actor = actor;
                a.critic = critic;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::{EnvId, GoalVector};
    use crate::rng::{stream_rng, Stream};
    use crate::sampling::BatchItem;

    fn obs(state: Vec<f64>, goal: Vec<f64>) -> Observation {
        Observation {
            achieved_goal: GoalVector::new(state.clone()).unwrap(),
            state,
            desired_goal: GoalVector::new(goal).unwrap(),
        }
    }

    fn random_bitflip_batch(n: usize, bits: usize, rng: &mut SimRng) -> Batch {
        let items = (0..n)
            .map(|_| {
                let s: Vec<f64> = (0..bits).map(|_| rng.random_range(0..2) as f64).collect();
                let a = rng.random_range(0..bits);
                let mut ns = s.clone();
                ns[a] = 1.0 - ns[a];
                let goal: Vec<f64> = (0..bits).map(|_| rng.random_range(0..2) as f64).collect();
                let reward = if ns == goal { 0.0 } else { -1.0 };
                BatchItem {
                    state: s,
                    action: Action::Discrete(a),
                    achieved_goal: GoalVector::new(ns.clone()).unwrap(),
                    next_state: ns,
                    goal: GoalVector::new(goal).unwrap(),
                    reward,
                    relabeled: false,
                }
            })
            .collect();
        Batch { items }
    }

    #[test]
    fn greedy_ties_pick_lowest_action() {
        let spec = EnvId::BitFlip(4).spec();
        let mut rng = stream_rng(0, Stream::Init);
        let mut agent = DqnAgent::new(&spec, TrainConfig::default(), &mut rng).unwrap();
        agent.q = Mlp::zeros(agent.q.layer_sizes(), OutputActivation::Identity).unwrap();
        let o = obs(vec![0.0; 4], vec![1.0; 4]);
        assert_eq!(agent.act(&o, false, &mut rng).unwrap(), Action::Discrete(0));
    }

    #[test]
    fn full_exploration_is_uniform() {
        let spec = EnvId::BitFlip(4).spec();
        let mut rng = stream_rng(1, Stream::Init);
        let cfg = TrainConfig {
            exploration_eps: 1.0,
            ..Default::default()
        };
        let agent = DqnAgent::new(&spec, cfg, &mut rng).unwrap();
        let o = obs(vec![0.0; 4], vec![1.0; 4]);
        let mut counts = [0usize; 5];
        for _ in 0..100_000 {
            let Action::Discrete(a) = agent.act(&o, true, &mut rng).unwrap() else {
                panic!()
            };
            counts[a] += 1;
        }
        for c in counts {
            assert!((c as f64 / 1e5 - 0.2).abs() <= 0.02);
        }
    }

    #[test]
    fn zero_rewards_and_zero_q_give_zero_targets() {
        let spec = EnvId::BitFlip(3).spec();
        let mut rng = stream_rng(2, Stream::Init);
        let mut agent = DqnAgent::new(&spec, TrainConfig::default(), &mut rng).unwrap();
        agent.target = Mlp::zeros(agent.target.layer_sizes(), OutputActivation::Identity).unwrap();
        let mut batch = random_bitflip_batch(16, 3, &mut rng);
        for item in &mut batch.items {
            item.reward = 0.0;
        }
        let stats = agent.q_update(&batch).unwrap();
        assert_eq!((stats.target_min, stats.target_max), (0.0, 0.0));
    }

    #[test]
    fn clipped_targets_stay_in_range() {
        let spec = EnvId::BitFlip(3).spec();
        let mut rng = stream_rng(3, Stream::Init);
        let mut agent = DqnAgent::new(&spec, TrainConfig::default(), &mut rng).unwrap();
        // push target Q far outside the return range
        for l in agent.target.layers_mut() {
            l.bias.fill(40.0);
        }
        let batch = random_bitflip_batch(32, 3, &mut rng);
        let stats = agent.q_update(&batch).unwrap();
        assert!(stats.target_max <= 0.0 && stats.target_min >= -50.0);
        for l in agent.target.layers_mut() {
            l.bias.fill(-400.0);
        }
        let stats = agent.q_update(&batch).unwrap();
        assert!(stats.target_min >= -1.0 / (1.0 - 0.98) - 1e-12);
    }

    #[test]
    fn ddpg_deterministic_act_within_bounds() {
        let spec = EnvId::Push2D.spec();
        let mut rng = stream_rng(4, Stream::Init);
        let agent = DdpgAgent::new(&spec, TrainConfig::default(), &mut rng).unwrap();
        let o = obs(vec![0.1, 0.2, 0.5, 0.5, 0.4, 0.3], vec![0.9, 0.9]);
        let a = agent.act(&o, false, &mut rng).unwrap();
        let b = agent.act(&o, false, &mut rng).unwrap();
        assert_eq!(a, b);
        let Action::Continuous(v) = a else { panic!() };
        assert!(v.iter().all(|x| x.abs() <= 0.05));
        for _ in 0..100 {
            let Action::Continuous(v) = agent.act(&o, true, &mut rng).unwrap() else {
                panic!()
            };
            assert!(v.iter().all(|x| x.abs() <= 0.05));
        }
    }

    #[test]
    fn ddpg_update_runs_and_stays_finite() {
        let spec = EnvId::Reach2D.spec();
        let mut rng = stream_rng(5, Stream::Init);
        let mut agent = Agent::for_env(&spec, TrainConfig::default(), &mut rng).unwrap();
        let items = (0..64)
            .map(|_| {
                let s = vec![rng.random::<f64>(), rng.random::<f64>()];
                let a = vec![rng.random_range(-0.05..0.05), rng.random_range(-0.05..0.05)];
                let ns = vec![s[0] + a[0], s[1] + a[1]];
                let goal = vec![rng.random::<f64>(), rng.random::<f64>()];
                BatchItem {
                    reward: crate::envs::compute_reward(&ns, &goal, &spec).unwrap(),
                    state: s,
                    action: Action::Continuous(a),
                    achieved_goal: GoalVector::new(ns.clone()).unwrap(),
                    next_state: ns,
                    goal: GoalVector::new(goal).unwrap(),
                    relabeled: false,
                }
            })
            .collect();
        let batch = Batch { items };
        for _ in 0..20 {
            let stats = agent.q_update(&batch).unwrap();
            assert!(stats.actor_loss.unwrap().is_finite());
            agent.sync_targets().unwrap();
        }
        assert!(agent.is_finite());
    }

    #[test]
    fn save_and_load_agent() {
        let spec = EnvId::Push2D.spec();
        let mut rng = stream_rng(6, Stream::Init);
        let agent = Agent::for_env(&spec, TrainConfig::default(), &mut rng).unwrap();
        let dir = tempfile::tempdir().unwrap();
        agent.save(dir.path()).unwrap();
        let mut other = Agent::for_env(
            &spec,
            TrainConfig::default(),
            &mut stream_rng(7, Stream::Init),
        )
        .unwrap();
        other.load(dir.path()).unwrap();
        let o = obs(vec![0.1, 0.2, 0.5, 0.5, 0.4, 0.3], vec![0.9, 0.9]);
        assert_eq!(
            agent.act(&o, false, &mut rng).unwrap(),
            other.act(&o, false, &mut rng).unwrap()
        );
    }
}
