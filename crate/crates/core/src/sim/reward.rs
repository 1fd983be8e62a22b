use serde::{Deserialize, Serialize};

use super::vehicle::VehicleState;

pub const TARGET_SPEED: f64 = 5.0;
pub const LIVING_PENALTY: f64 = -0.5;
pub const COLLISION_PENALTY: f64 = -100.0;
pub const GOAL_BONUS: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Events {
    pub collision: bool,
    pub goal: bool,
}

/// The four reward terms, logged individually.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub velocity: f64,
    pub living: f64,
    pub collision: f64,
    pub goal: f64,
}

impl RewardBreakdown {
    pub fn total(&self) -> f64 {
        self.velocity + self.living + self.collision + self.goal
    }

    pub fn accumulate(&mut self, other: &RewardBreakdown) {
        self.velocity += other.velocity;
        self.living += other.living;
        self.collision += other.collision;
        self.goal += other.goal;
    }
}

/// Speed term: rises linearly up to the target speed, then falls off and
/// turns negative beyond twice the target.
pub fn velocity_reward(v: f64) -> f64 {
    if v <= TARGET_SPEED {
        0.25 * v
    } else {
        0.25 * (10.0 - v)
    }
}

/// Per-step reward, evaluated on the post-step speed.
pub fn reward_terms(_prev: &VehicleState, next: &VehicleState, events: Events) -> RewardBreakdown {
    RewardBreakdown {
        velocity: velocity_reward(next.v),
        living: LIVING_PENALTY,
        collision: if events.collision { COLLISION_PENALTY } else { 0.0 },
        goal: if events.goal { GOAL_BONUS } else { 0.0 },
    }
}

pub fn reward(prev: &VehicleState, next: &VehicleState, events: Events) -> f64 {
    reward_terms(prev, next, events).total()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn at(v: f64) -> VehicleState {
        VehicleState::new(0.0, 0.0, 0.0, v)
    }

    #[test]
    fn worked_examples() {
        let none = Events::default();
        assert!((reward(&at(0.0), &at(4.0), none) - 0.5).abs() < 1e-12);
        let col = Events { collision: true, goal: false };
        assert!((reward(&at(0.0), &at(5.0), col) + 99.25).abs() < 1e-12);
        let goal = Events { collision: false, goal: true };
        assert!((reward(&at(0.0), &at(5.0), goal) - 10.75).abs() < 1e-12);
        assert!((velocity_reward(12.0) + 0.5).abs() < 1e-12);
    }

    #[test]
    fn breakdown_sums_to_total() {
        let t = reward_terms(&at(1.0), &at(7.5), Events { collision: true, goal: true });
        assert_eq!(t.total(), t.velocity + t.living + t.collision + t.goal);
    }
}
