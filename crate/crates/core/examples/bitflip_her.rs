//! DQN on BitFlip, with and without hindsight relabeling.
//!
//! With 8 bits a random goal is almost never hit by exploration, so plain
//! replay only ever sees reward -1. Relabeling gives the learner successes
//! from the first epoch on.
//!
//! ```text
//! cargo run --release --example bitflip_her -- 8 12
//! ```
//! Arguments: number of bits (default 8), epochs (default 12).

use hercs::envs::EnvId;
use hercs::harness::{run_seed, ExperimentConfig};
use hercs::sampling::Algo;

fn main() -> hercs::Result<()> {
    let mut args = std::env::args().skip(1);
    let bits: usize = args.next().map_or(8, |a| a.parse().expect("bits"));
    let epochs: usize = args.next().map_or(12, |a| a.parse().expect("epochs"));

    let cfg = ExperimentConfig {
        env: EnvId::BitFlip(bits),
        epochs,
        ..ExperimentConfig::default()
    };
    let her = run_seed(&cfg, Algo::Her, 1)?;
    let vanilla = run_seed(&cfg, Algo::Vanilla, 1)?;

    println!(
        "bitflip:{bits}, seed 1, {} eval episodes per epoch",
        cfg.eval_episodes
    );
    println!("epoch  her   vanilla");
    for (h, v) in her.metrics.iter().zip(&vanilla.metrics) {
        println!(
            "{:>5}  {:.2}  {:.2}",
            h.epoch, h.success_rate, v.success_rate
        );
    }
    Ok(())
}
