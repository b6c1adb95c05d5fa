//! Hindsight experience replay with cluster-based episode sampling.
//!
//! The crate is organised along the data path of a training run:
//!
//! - [`envs`]: small multi-goal environments with sparse `{-1, 0}` rewards
//!   (`bitflip:<n>`, `reach2d`, `push2d`).
//! - [`replay`]: episodic replay buffer, hindsight goal selection and
//!   relabeling.
//! - [`cluster`]: failed-goal buffer, k-means cluster model and the clustered
//!   partition of the replay buffer.
//! - [`sampling`]: batch construction for `vanilla`, `her`, `her-cs`,
//!   `her-ebp` and `her-ebp-cs`.
//! - [`learner`]: MLPs with hand-written backprop, Adam, DQN and DDPG.
//! - [`harness`]: epochs, evaluation, multi-seed suites, CSV/SVG output.
//! - [`cli`]: the `hercs` command line (`run`, `compare`, `validate-config`).
//!
//! Runnable walkthroughs of each part live in `examples/`.

pub mod cli;
pub mod cluster;
pub mod envs;
pub mod error;
pub mod harness;
pub mod learner;
pub mod replay;
pub mod rng;
pub mod sampling;

pub use error::{Error, Result};
