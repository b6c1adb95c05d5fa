#![allow(dead_code)]

use hercs::envs::{Action, ActionSpace, Env, EnvId, EnvSpec, GoalVector};
use hercs::learner::Mlp;
use hercs::replay::{rollout, Episode, EpisodeBuffer, Transition};
use hercs::rng::{stream_rng, SimRng, Stream};
use ndarray::Array2;
use rand::Rng;

/// Episode driven by uniformly random actions.
pub fn random_episode(env: &mut dyn Env, rng: &mut SimRng) -> Episode {
    let space = env.spec().action_space;
    let mut actions = stream_rng(rng.random(), Stream::Exploration);
    rollout(env, rng, |_| {
        Ok(match space {
            ActionSpace::Discrete { count } => Action::Discrete(actions.random_range(0..count)),
            ActionSpace::Continuous { dim, bound } => Action::Continuous(
                (0..dim)
                    .map(|_| actions.random_range(-bound..=bound))
                    .collect(),
            ),
        })
    })
    .unwrap()
}

pub fn filled_buffer(
    id: EnvId,
    episodes: usize,
    capacity: usize,
    seed: u64,
) -> (EpisodeBuffer, EnvSpec) {
    let mut env = id.make();
    let spec = env.spec().clone();
    let mut rng = stream_rng(seed, Stream::Rollout);
    let mut replay = EpisodeBuffer::new(capacity, &spec).unwrap();
    for _ in 0..episodes {
        replay
            .store_episode(random_episode(env.as_mut(), &mut rng))
            .unwrap();
    }
    (replay, spec)
}

/// Episode that sits still at `at` with a fixed desired goal `desired`.
pub fn parked_episode(spec: &EnvSpec, at: &[f64], desired: &[f64]) -> Episode {
    let achieved = GoalVector::new(at.to_vec()).unwrap();
    let desired = GoalVector::new(desired.to_vec()).unwrap();
    let reward = reward_oracle(spec, &achieved, &desired);
    let state: Vec<f64> = at
        .iter()
        .copied()
        .chain(std::iter::repeat(0.0))
        .take(spec.state_dim)
        .collect();
    let action = match spec.action_space {
        ActionSpace::Discrete { .. } => Action::Discrete(0),
        ActionSpace::Continuous { dim, .. } => Action::Continuous(vec![0.0; dim]),
    };
    let transitions = (0..spec.horizon)
        .map(|_| Transition {
            state: state.clone(),
            action: action.clone(),
            next_state: state.clone(),
            achieved_goal: achieved.clone(),
            desired_goal: desired.clone(),
            reward,
        })
        .collect();
    Episode::new(achieved.clone(), transitions, spec).unwrap()
}

/// Sparse reward written out from the environment definitions: exact match
/// for bit vectors, a 0.05 radius (plus a 1e-9 rounding allowance) for points.
pub fn reward_oracle(spec: &EnvSpec, achieved: &[f64], desired: &[f64]) -> f64 {
    let hit = match spec.action_space {
        ActionSpace::Discrete { .. } => achieved
            .iter()
            .zip(desired)
            .all(|(a, d)| (a.round() as i64) == (d.round() as i64)),
        ActionSpace::Continuous { .. } => {
            let dx = achieved[0] - desired[0];
            let dy = achieved[1] - desired[1];
            dx.hypot(dy) <= 0.05 + 1e-9
        }
    };
    if hit {
        0.0
    } else {
        -1.0
    }
}

/// Textbook Lloyd iteration: assign to the nearest centroid (lowest index on
/// ties), move each non-empty centroid to its mean, stop when nothing moves.
pub fn plain_lloyd(points: &[Vec<f64>], init: &[Vec<f64>], max_iters: usize) -> Vec<usize> {
    let mut centroids = init.to_vec();
    let mut assign = vec![usize::MAX; points.len()];
    for _ in 0..=max_iters {
        let next: Vec<usize> = points
            .iter()
            .map(|p| {
                let mut best = 0;
                let mut best_d = f64::INFINITY;
                for (i, c) in centroids.iter().enumerate() {
                    let d = (p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2);
                    if d < best_d {
                        best = i;
                        best_d = d;
                    }
                }
                best
            })
            .collect();
        if next == assign {
            break;
        }
        assign = next;
        for (i, c) in centroids.iter_mut().enumerate() {
            let members: Vec<&Vec<f64>> = points
                .iter()
                .zip(&assign)
                .filter(|(_, a)| **a == i)
                .map(|(p, _)| p)
                .collect();
            if !members.is_empty() {
                let n = members.len() as f64;
                *c = vec![
                    members.iter().map(|p| p[0]).sum::<f64>() / n,
                    members.iter().map(|p| p[1]).sum::<f64>() / n,
                ];
            }
        }
    }
    assign
}

/// Location of one scalar parameter inside an [`Mlp`].
#[derive(Debug, Clone, Copy)]
pub enum Param {
    Weight {
        layer: usize,
        row: usize,
        col: usize,
    },
    Bias {
        layer: usize,
        col: usize,
    },
}

pub fn random_param(net: &Mlp, rng: &mut SimRng) -> Param {
    let layer = rng.random_range(0..net.layers().len());
    let (rows, cols) = net.layers()[layer].weights.dim();
    if rng.random_bool(0.8) {
        Param::Weight {
            layer,
            row: rng.random_range(0..rows),
            col: rng.random_range(0..cols),
        }
    } else {
        Param::Bias {
            layer,
            col: rng.random_range(0..cols),
        }
    }
}

pub fn param_mut(net: &mut Mlp, p: Param) -> &mut f64 {
    match p {
        Param::Weight { layer, row, col } => &mut net.layers_mut()[layer].weights[[row, col]],
        Param::Bias { layer, col } => &mut net.layers_mut()[layer].bias[col],
    }
}

/// Result of comparing one analytic partial derivative with a central
/// difference.
#[derive(Debug, Clone, Copy)]
pub struct Probe {
    pub analytic: f64,
    pub numeric: f64,
    pub rel_error: f64,
}

/// Checks `d loss / d p` for the batch MSE loss at `p` with step `h`.
pub fn probe(net: &Mlp, x: &Array2<f64>, y: &Array2<f64>, p: Param, h: f64) -> Probe {
    let (_, grads) = net.mse_loss_grad(x.clone(), y, None).unwrap();
    let analytic = match p {
        Param::Weight { layer, row, col } => grads.layers[layer].weights[[row, col]],
        Param::Bias { layer, col } => grads.layers[layer].bias[col],
    };
    let loss_at = |delta: f64| {
        let mut shifted = net.clone();
        *param_mut(&mut shifted, p) += delta;
        shifted.mse_loss(x.view(), y, None).unwrap()
    };
    let numeric = (loss_at(h) - loss_at(-h)) / (2.0 * h);
    let scale = analytic.abs().max(numeric.abs());
    let rel_error = if scale < 1e-10 {
        0.0
    } else {
        (analytic - numeric).abs() / scale
    };
    Probe {
        analytic,
        numeric,
        rel_error,
    }
}

pub fn random_matrix(rows: usize, cols: usize, rng: &mut SimRng) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| rng.random_range(-1.0..1.0))
}

/// Two-dimensional goal space with a short horizon, for hand-built episodes.
pub fn plane_spec(horizon: usize) -> EnvSpec {
    EnvSpec {
        state_dim: 2,
        goal_dim: 2,
        action_space: ActionSpace::Continuous { dim: 2, bound: 1.0 },
        horizon,
        distance_threshold: 0.05,
        metric: hercs::envs::GoalMetric::Euclidean,
    }
}

/// Episode whose achieved goal starts at `initial` and then visits `path`
/// (one point per step).
pub fn path_episode(
    spec: &EnvSpec,
    initial: [f64; 2],
    path: &[[f64; 2]],
    desired: [f64; 2],
) -> Episode {
    let desired = GoalVector::new(desired.to_vec()).unwrap();
    let mut prev = initial;
    let transitions = path
        .iter()
        .map(|p| {
            let achieved = GoalVector::new(p.to_vec()).unwrap();
            let t = Transition {
                state: prev.to_vec(),
                action: Action::Continuous(vec![p[0] - prev[0], p[1] - prev[1]]),
                next_state: p.to_vec(),
                reward: reward_oracle(spec, &achieved, &desired),
                achieved_goal: achieved,
                desired_goal: desired.clone(),
            };
            prev = *p;
            t
        })
        .collect();
    Episode::new(
        GoalVector::new(initial.to_vec()).unwrap(),
        transitions,
        spec,
    )
    .unwrap()
}
