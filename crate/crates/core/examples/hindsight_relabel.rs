//! One random PointReach2D episode, replayed with hindsight goals.
//!
//! The agent wanders without ever reaching its goal, so every stored reward
//! is -1. Swapping in an achieved goal from later in the same episode turns
//! some of those transitions into successes.
//!
//! ```text
//! cargo run --example hindsight_relabel
//! ```

use hercs::envs::{Action, EnvId};
use hercs::replay::{relabel, rollout, sample_future_offset};
use hercs::rng::{stream_rng, Stream};
use rand::Rng;

fn main() -> hercs::Result<()> {
    let mut env = EnvId::Reach2D.make();
    let spec = env.spec().clone();
    let mut rng = stream_rng(3, Stream::Rollout);
    let mut noise = stream_rng(3, Stream::Exploration);

    let episode = rollout(env.as_mut(), &mut rng, |_| {
        Ok(Action::Continuous(vec![
            noise.random_range(-1.0..=1.0),
            noise.random_range(-1.0..=1.0),
        ]))
    })?;
    let stored: f64 = episode.transitions().iter().map(|t| t.reward).sum();
    println!(
        "desired goal ({:.3}, {:.3}), final position ({:.3}, {:.3}), return {stored}",
        episode.desired_goal()[0],
        episode.desired_goal()[1],
        episode.last_achieved_goal()[0],
        episode.last_achieved_goal()[1],
    );

    let mut sampler = stream_rng(3, Stream::Sampling);
    let horizon = episode.horizon();
    println!("\n step  future  hindsight goal        reward");
    let mut successes = 0;
    for t in (0..horizon).step_by(5) {
        let f = sample_future_offset(t, horizon, &mut sampler)?;
        let goal = &episode.transitions()[f - 1].achieved_goal;
        let relabeled = relabel(&episode.transitions()[t], goal, &spec)?;
        successes += usize::from(relabeled.reward == 0.0);
        println!(
            " {t:>4}  {f:>6}  ({:.3}, {:.3})  {:>10}",
            goal[0], goal[1], relabeled.reward
        );
    }
    println!(
        "\n{successes} of {} relabeled steps now carry reward 0",
        horizon.div_ceil(5)
    );

    // the last step relabeled with its own achieved goal is always a success
    let last = episode.transitions().last().unwrap();
    let own = relabel(last, &last.achieved_goal, &spec)?;
    assert_eq!(own.reward, 0.0);
    Ok(())
}
