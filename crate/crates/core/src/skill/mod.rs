//! Backward skill chaining: options learned from the goal toward the start.

mod chain;
mod ocsvm;
mod termination;

pub use chain::{
    build_chain, build_chain_observed, collect_labels, fit_initiation, random_walk, reaches_within, train_option_policy, ChainParams,
    LabeledState, LinkReport,
};
pub use ocsvm::{median_bandwidth, InitiationClassifier, MIN_POSITIVES};
pub use termination::{GoalDisk, TerminationSet};
