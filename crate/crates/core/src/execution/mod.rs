//! Intra-policy learning: deterministic actor-critic with replay and ε-greedy exploration.

mod ddpg;
mod replay;
mod schedule;

pub use ddpg::{
    run_episode, train_episode, DdpgAgent, DdpgConfig, EpisodeOptions, EpisodeOutcome, Subgoal, UpdateStats,
};
pub use replay::{ReplayBuffer, Transition};
pub use schedule::EpsilonSchedule;
