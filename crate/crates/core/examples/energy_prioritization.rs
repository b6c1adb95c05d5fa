//! Trajectory energy and energy-proportional episode sampling.
//!
//! Energy is the sum of squared steps between consecutive achieved goals,
//! so episodes in which the object actually moves are replayed more often.

use hercs::envs::{Action, EnvId};
use hercs::replay::{rollout, EpisodeBuffer};
use hercs::rng::{stream_rng, Stream};
use hercs::sampling::{stage1_ebp, trajectory_energy, DEFAULT_ENERGY_EPSILON};
use rand::Rng;

fn main() -> hercs::Result<()> {
    let mut env = EnvId::Push2D.make();
    let spec = env.spec().clone();
    let mut replay = EpisodeBuffer::new(12, &spec)?;
    let mut rng = stream_rng(2, Stream::Rollout);
    let mut noise = stream_rng(2, Stream::Exploration);
    for i in 0..12 {
        // half the episodes push steadily in one direction, half jitter
        let steady = i % 2 == 0;
        let episode = rollout(env.as_mut(), &mut rng, |obs| {
            if steady {
                let dx = obs.state[4];
                let dy = obs.state[5];
                let norm = dx.hypot(dy).max(1e-9);
                Ok(Action::Continuous(vec![dx / norm, dy / norm]))
            } else {
                Ok(Action::Continuous(vec![
                    noise.random_range(-1.0..=1.0),
                    noise.random_range(-1.0..=1.0),
                ]))
            }
        })?;
        replay.store_episode(episode)?;
    }

    let draws = 20_000;
    let ids = stage1_ebp(
        &replay,
        draws,
        DEFAULT_ENERGY_EPSILON,
        &mut stream_rng(2, Stream::Sampling),
    )?;
    let total: f64 = replay
        .iter()
        .map(|e| trajectory_energy(e) + DEFAULT_ENERGY_EPSILON)
        .sum();
    println!(" id  energy    expected  observed");
    for episode in replay.iter() {
        let e = trajectory_energy(episode);
        let hits = ids.iter().filter(|id| **id == episode.id()).count();
        println!(
            "{:>3}  {:.5}   {:.3}     {:.3}",
            episode.id(),
            e,
            (e + DEFAULT_ENERGY_EPSILON) / total,
            hits as f64 / draws as f64
        );
    }
    Ok(())
}
