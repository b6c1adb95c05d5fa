//! Feeding PointPush2D episodes through the clustering pipeline.
//!
//! Each episode that never reaches its goal donates that goal to the
//! failed-goal buffer. Once the buffer has turned over, k-means is refit on
//! it and every stored episode is re-bucketed by its final achieved goal.

use hercs::cluster::{GoalClustering, KMeansParams};
use hercs::envs::{Action, EnvId};
use hercs::replay::{rollout, EpisodeBuffer};
use hercs::rng::{stream_rng, Stream};
use rand::Rng;

fn main() -> hercs::Result<()> {
    let mut env = EnvId::Push2D.make();
    let spec = env.spec().clone();
    let mut replay = EpisodeBuffer::new(200, &spec)?;
    let mut clustering = GoalClustering::new(
        KMeansParams {
            k: 4,
            ..KMeansParams::default()
        },
        50,
        11,
    )?;
    let mut rng = stream_rng(11, Stream::Rollout);
    let mut noise = stream_rng(11, Stream::Exploration);

    for _ in 0..400 {
        let episode = rollout(env.as_mut(), &mut rng, |_| {
            Ok(Action::Continuous(vec![
                noise.random_range(-1.0..=1.0),
                noise.random_range(-1.0..=1.0),
            ]))
        })?;
        let stored = replay.store_episode(episode)?;
        clustering.on_episode_stored(&mut replay, stored, 0)?;
    }

    println!(
        "{} failed goals pushed, {} refits",
        clustering.fgb().total_pushed(),
        clustering.events().len()
    );
    for event in clustering.events() {
        println!(
            "  version {:>2}: bucket sizes {:?}",
            event.version, event.bucket_sizes
        );
    }
    println!("centroids of version {}:", clustering.model().version());
    for (i, c) in clustering.model().centroids().iter().enumerate() {
        println!("  {i}: ({:.3}, {:.3})", c[0], c[1]);
    }

    let index = clustering.index().expect("at least one refit");
    assert!(index.is_partition_of(&replay));
    println!("index covers all {} stored episodes", index.len());
    Ok(())
}
