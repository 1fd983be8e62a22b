//! Deterministic 2D intersection micro-simulator.

pub mod control;
pub mod env;
pub mod geometry;
pub mod reward;
pub mod scenario;
pub mod trajectory;
pub mod vehicle;
pub mod world;

pub use control::{pursuit_angle, pursuit_steer, PidSpeed, PurePursuit, PursuitCommand};
pub use env::IntersectionEnv;
pub use geometry::{check_collision, Path};
pub use reward::{reward, reward_terms, Events, RewardBreakdown};
pub use scenario::{GoalRegion, Layout, ScenarioConfig, Subtask, SubtaskToggles};
pub use vehicle::{integrate, wrap_angle, Action, VehicleParams, VehicleState};
pub use world::{observe, spawn_scenario, step_env, Presence, SimInfo, WorldState};
