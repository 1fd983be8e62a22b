use rand::Rng;

use super::scenario::ScenarioConfig;
use super::vehicle::{Action, VehicleState};
use super::world::{advance_others, observe, spawn_scenario, step_env, Presence, SimInfo, WorldState, OBSERVATION_DIM};
use crate::env::{ActionSpace, ChainEnvironment, Environment, Step};
use crate::error::Result;

/// The intersection task behind the generic environment interface.
///
/// The agent's action is a single longitudinal command `u ∈ [-1, 1]`:
/// positive values are throttle, negative values brake. Steering always
/// comes from the route follower.
#[derive(Debug, Clone)]
pub struct IntersectionEnv {
    config: ScenarioConfig,
    presence: Presence,
    world: WorldState,
}

impl IntersectionEnv {
    pub fn new(config: ScenarioConfig, presence: Presence) -> Result<Self> {
        let mut cfg = config;
        if let Presence::Fixed(t) = presence {
            cfg.subtasks = t;
        }
        let world = spawn_scenario(&cfg, cfg.canonical_seed)?;
        Ok(Self { config: cfg, presence, world })
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn presence(&self) -> Presence {
        self.presence
    }

    pub fn world(&self) -> &WorldState {
        &self.world
    }

    pub fn world_mut(&mut self) -> &mut WorldState {
        &mut self.world
    }

    /// Resets to the world spawned from `seed` with the given presence draw.
    pub fn reset_with_seed(&mut self, seed: u64) -> Vec<f64> {
        self.world = spawn_scenario(&self.config, seed).expect("configuration validated at construction");
        observe(&self.world)
    }

    pub fn step_action(&mut self, action: Action) -> Result<Step<SimInfo>> {
        let (observation, reward, done, info) = step_env(&mut self.world, &self.config, action)?;
        let truncated = done && !info.events.collision && !info.events.goal;
        Ok(Step { observation, reward, done, truncated, info })
    }
}

impl Environment for IntersectionEnv {
    type Info = SimInfo;

    fn observation_dim(&self) -> usize {
        OBSERVATION_DIM
    }

    fn action_space(&self) -> ActionSpace {
        ActionSpace::symmetric(1)
    }

    fn reset<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Vec<f64> {
        if let Presence::Random(p) = self.presence {
            for s in super::scenario::Subtask::ALL {
                self.config.subtasks.set(s, rng.gen_bool(p));
            }
        }
        let seed = rng.gen::<u64>();
        self.reset_with_seed(seed)
    }

    fn observe(&self) -> Vec<f64> {
        observe(&self.world)
    }

    fn step(&mut self, action: &[f64]) -> Result<Step<SimInfo>> {
        self.step_action(Action::longitudinal(action[0]))
    }
}

impl ChainEnvironment for IntersectionEnv {
    fn reset_canonical(&mut self) -> Vec<f64> {
        self.reset_with_seed(self.config.canonical_seed)
    }

    /// Places the host on its route with a random speed up to the goal speed.
    /// Other vehicles are advanced by the time a cruising host would have
    /// needed to get there.
    fn reset_in_window<R: Rng + ?Sized>(&mut self, lo: f64, hi: f64, rng: &mut R) -> Vec<f64> {
        self.reset(rng);
        let (lo, hi) = (lo.clamp(0.0, 1.0), hi.clamp(0.0, 1.0));
        let progress = if hi > lo { rng.gen_range(lo..=hi) } else { lo };
        let speed = rng.gen_range(0.0..=self.config.goal_speed);
        let station = progress * self.world.layout.goal_station;
        let (x, y, heading) = self.world.layout.host_route.pose_at(station);
        self.world.host = VehicleState::new(x, y, heading, speed);
        self.world.host_follower.station = station;
        for (k, s) in self.world.layout.zone_stations.iter().enumerate() {
            self.world.zones_passed[k] = station >= *s;
        }
        let cruise = 0.8 * self.config.goal_speed.max(1e-6);
        let skip = (station / cruise / self.config.dt).round() as usize;
        for _ in 0..skip {
            advance_others(&mut self.world, &self.config);
        }
        observe(&self.world)
    }

    fn progress(&self) -> f64 {
        (self.world.host_station() / self.world.layout.goal_station).clamp(0.0, 1.0)
    }
}
