//! Option-level decision layer: double Q-learning over semi-Markov transitions.

mod agent;
mod option;

pub use agent::{DecisionAgent, DecisionConfig, SmdpTransition};
pub use option::{execute_option, OptionRun};
