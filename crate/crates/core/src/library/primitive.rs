use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::execution::DdpgAgent;
use crate::skill::{InitiationClassifier, TerminationSet};

/// Bookkeeping carried with every primitive.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrimitiveMeta {
    /// Subtask the primitive's chain was built for.
    pub subtask: String,
    /// Curriculum phase during which it was created.
    pub phase: String,
    /// Position in its chain, 0 being the link that ends at the goal.
    pub link: usize,
    pub training_episodes: usize,
}

/// An option: where it may start, how it drives, where it stops.
#[derive(Debug, Clone)]
pub struct MotionPrimitive {
    pub id: usize,
    pub initiation: Arc<InitiationClassifier>,
    pub policy: DdpgAgent,
    pub termination: TerminationSet,
    pub meta: PrimitiveMeta,
}

impl MotionPrimitive {
    pub fn can_start(&self, s: &[f64]) -> bool {
        self.initiation.contains(s)
    }
}

impl PartialEq for MotionPrimitive {
    /// Value equality of everything that is persisted: regions, the four
    /// policy networks and metadata.
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id
            && self.initiation == other.initiation
            && self.termination == other.termination
            && self.meta == other.meta
            && self.policy.actor == other.policy.actor
            && self.policy.actor_target == other.policy.actor_target
            && self.policy.critic == other.policy.critic
            && self.policy.critic_target == other.policy.critic_target
            && self.policy.config == other.policy.config
            && self.policy.action_space == other.policy.action_space
    }
}
