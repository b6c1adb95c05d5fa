//! Stratified episode sampling over goal clusters.
//!
//! A buffer dominated by one region of goal space is sampled uniformly and
//! then by cluster. The uniform sampler mirrors the imbalance; the cluster
//! sampler hands every non-empty cluster the same share of the batch.

use hercs::cluster::{reassign_all, ClusterModel};
use hercs::envs::{Action, ActionSpace, EnvSpec, GoalMetric, GoalVector};
use hercs::replay::{Episode, EpisodeBuffer, Transition};
use hercs::rng::{stream_rng, Stream};
use hercs::sampling::{cs_quotas, stage1_cs, stage1_uniform};

fn parked(spec: &EnvSpec, at: [f64; 2]) -> hercs::Result<Episode> {
    let goal = GoalVector::new(at.to_vec())?;
    let desired = GoalVector::new(vec![0.5, 0.5])?;
    let step = Transition {
        state: at.to_vec(),
        action: Action::Continuous(vec![0.0, 0.0]),
        next_state: at.to_vec(),
        achieved_goal: goal.clone(),
        desired_goal: desired,
        reward: -1.0,
    };
    Episode::new(goal, vec![step], spec)
}

fn main() -> hercs::Result<()> {
    let spec = EnvSpec {
        state_dim: 2,
        goal_dim: 2,
        action_space: ActionSpace::Continuous { dim: 2, bound: 1.0 },
        horizon: 1,
        distance_threshold: 0.05,
        metric: GoalMetric::Euclidean,
    };
    let corners = [[0.1, 0.1], [0.9, 0.1], [0.1, 0.9], [0.9, 0.9]];
    // 70% of the episodes end near the first corner
    let mix = [70, 15, 10, 5];
    let mut replay = EpisodeBuffer::new(100, &spec)?;
    for (corner, n) in corners.iter().zip(mix) {
        for _ in 0..n {
            replay.store_episode(parked(&spec, *corner)?)?;
        }
    }

    let model = ClusterModel::with_centroids(
        corners
            .iter()
            .map(|c| GoalVector::new(c.to_vec()))
            .collect::<Result<_, _>>()?,
        1,
    )?;
    let index = reassign_all(&model, &mut replay)?;
    println!("bucket sizes     {:?}", index.bucket_sizes());
    println!(
        "quotas for 64    {:?}",
        cs_quotas(&index.bucket_sizes(), 64)?
    );
    println!("quotas for 66    {:?}", cs_quotas(&[70, 0, 10, 5], 66)?);

    let mut rng = stream_rng(5, Stream::Sampling);
    let count = |ids: Vec<u64>| -> hercs::Result<[usize; 4]> {
        let mut c = [0; 4];
        for id in ids {
            c[model.assign(replay.get(id).unwrap().last_achieved_goal())?] += 1;
        }
        Ok(c)
    };
    println!(
        "uniform draw     {:?}",
        count(stage1_uniform(&replay, 64, &mut rng)?)?
    );
    println!(
        "cluster draw     {:?}",
        count(stage1_cs(&index, &replay, 64, 4, &mut rng)?)?
    );
    Ok(())
}
