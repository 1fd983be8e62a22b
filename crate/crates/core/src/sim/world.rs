use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::sync::Arc;

use super::control::{PidSpeed, PurePursuit};
use super::geometry::{check_collision, Path};
use super::reward::{reward_terms, Events, RewardBreakdown};
use super::scenario::{parked_offset, subtask_path, Layout, ScenarioConfig, Subtask, SubtaskToggles};
use super::vehicle::{integrate, Action, VehicleState};
use crate::error::{Error, Result};

/// Observation scaling: positions, yaw and speed.
pub const POSITION_SCALE: f64 = 60.0;
pub const ANGLE_SCALE: f64 = PI;
pub const SPEED_SCALE: f64 = 10.0;
/// Distance of the placeholder vehicle used when no other vehicle is active.
pub const SENTINEL_DISTANCE: f64 = 60.0;
pub const OBSERVATION_DIM: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct OtherVehicle {
    pub task: Subtask,
    pub state: VehicleState,
    pub path: Path,
    pub follower: PurePursuit,
    pub pid: PidSpeed,
    pub moving: bool,
    /// Inactive vehicles have left the map and are ignored.
    pub active: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorldState {
    pub host: VehicleState,
    pub host_follower: PurePursuit,
    pub others: Vec<OtherVehicle>,
    pub step: usize,
    pub events: Events,
    /// Subtask zones the host has passed this episode.
    pub zones_passed: [bool; 3],
    pub present: [bool; 3],
    pub done: bool,
    pub layout: Arc<Layout>,
}

/// Per-step diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SimInfo {
    pub reward: RewardBreakdown,
    pub events: Events,
    pub zones_passed: [bool; 3],
    pub present: [bool; 3],
    pub action: Action,
    pub host: Option<VehicleState>,
    pub nearest_other: Option<VehicleState>,
}

impl WorldState {
    pub fn host_station(&self) -> f64 {
        self.host_follower.station
    }

    pub fn nearest_other(&self) -> Option<&OtherVehicle> {
        self.others
            .iter()
            .filter(|o| o.active)
            .min_by(|a, b| {
                let (da, db) = (self.host.distance_to(&a.state), self.host.distance_to(&b.state));
                da.partial_cmp(&db).expect("finite distances")
            })
    }
}

fn place_other(config: &ScenarioConfig, task: Subtask, moving: bool, offset: f64, speed: f64) -> Result<OtherVehicle> {
    let (offset, speed) = if moving { (offset, speed) } else { (parked_offset(config), 0.0) };
    let path = subtask_path(config, task, offset, speed)?;
    let (x, y, heading) = path.pose_at(0.0);
    Ok(OtherVehicle {
        task,
        state: VehicleState::new(x, y, heading, speed),
        path,
        follower: PurePursuit::new(config.other_lookahead),
        pid: PidSpeed::default(),
        moving,
        active: true,
    })
}

/// Builds the initial world for `seed`. The host starts at rest at the
/// beginning of its route; each enabled subtask adds one vehicle that moves
/// with `move_probability` (random offset and speed) and is parked otherwise.
pub fn spawn_scenario(config: &ScenarioConfig, seed: u64) -> Result<WorldState> {
    config.validate()?;
    let layout = Arc::new(Layout::new(config)?);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (x, y, heading) = layout.host_route.pose_at(0.0);
    let mut others = Vec::new();
    let mut present = [false; 3];
    for task in Subtask::ALL {
        if !config.subtasks.get(task) {
            continue;
        }
        present[task.index()] = true;
        let moving = rng.gen_bool(config.move_probability);
        let offset = rng.gen_range(config.start_offset_range[0]..=config.start_offset_range[1]);
        let speed = rng.gen_range(config.speed_range[0]..=config.speed_range[1]);
        others.push(place_other(config, task, moving, offset, speed)?);
    }
    Ok(WorldState {
        host: VehicleState::new(x, y, heading, 0.0),
        host_follower: PurePursuit::new(config.host_lookahead),
        others,
        step: 0,
        events: Events::default(),
        zones_passed: [false; 3],
        present,
        done: false,
        layout,
    })
}

fn encode(state: &VehicleState) -> [f64; 4] {
    [state.x / POSITION_SCALE, state.y / POSITION_SCALE, state.theta / ANGLE_SCALE, state.v / SPEED_SCALE]
}

/// Normalized `[host ‖ nearest other]` observation. Without an active other
/// vehicle the second slot holds a stationary placeholder `SENTINEL_DISTANCE`
/// meters ahead of the host.
pub fn observe(world: &WorldState) -> Vec<f64> {
    let other = match world.nearest_other() {
        Some(o) => o.state,
        None => {
            let h = &world.host;
            VehicleState {
                x: h.x + SENTINEL_DISTANCE * h.theta.cos(),
                y: h.y + SENTINEL_DISTANCE * h.theta.sin(),
                theta: h.theta,
                v: 0.0,
            }
        }
    };
    let mut obs = Vec::with_capacity(OBSERVATION_DIM);
    obs.extend_from_slice(&encode(&world.host));
    obs.extend_from_slice(&encode(&other));
    obs
}

/// Advances every active subtask vehicle by one step.
pub fn advance_others(world: &mut WorldState, config: &ScenarioConfig) {
    for o in world.others.iter_mut().filter(|o| o.active) {
        if !o.moving {
            continue;
        }
        let cmd = o.follower.command(&o.state, &o.path, &config.vehicle);
        if cmd.path_complete {
            o.active = false;
            continue;
        }
        let (throttle, brake) = o.pid.command(o.state.v, o.path.target_speed, config.dt);
        o.state = integrate(&o.state, &Action::new(throttle, brake, cmd.steer), &config.vehicle, config.dt);
    }
}

/// One simulation step. The host's steering is replaced by pure pursuit on
/// its route; only throttle and brake come from `host_action`.
pub fn step_env(
    world: &mut WorldState,
    config: &ScenarioConfig,
    host_action: Action,
) -> Result<(Vec<f64>, f64, bool, SimInfo)> {
    if world.done {
        return Err(Error::EpisodeDone);
    }
    let prev = world.host;
    let pursuit = world.host_follower.command(&world.host, &world.layout.host_route, &config.vehicle);
    let action = host_action.with_steer(pursuit.steer);
    world.host = integrate(&world.host, &action, &config.vehicle, config.dt);
    advance_others(world, config);
    world.step += 1;

    // Refresh the route projection so zone flags track the new pose.
    let route = &world.layout.host_route;
    world.host_follower.station =
        route.project(world.host.x, world.host.y, world.host_follower.station, 3.0 * config.host_lookahead + 5.0);

    let dims = (config.vehicle.length, config.vehicle.width);
    let collision = world.others.iter().filter(|o| o.active).any(|o| check_collision(&world.host, dims, &o.state, dims));
    let goal = !collision
        && config.goal.is_some_and(|g| (world.host.x - g.center[0]).hypot(world.host.y - g.center[1]) <= g.radius);
    let events = Events { collision, goal };
    for (k, s) in world.layout.zone_stations.iter().enumerate() {
        if world.host_follower.station >= *s {
            world.zones_passed[k] = true;
        }
    }
    let terms = reward_terms(&prev, &world.host, events);
    world.events = events;
    world.done = collision || goal || world.step >= config.max_steps;
    let info = SimInfo {
        reward: terms,
        events,
        zones_passed: world.zones_passed,
        present: world.present,
        action,
        host: Some(world.host),
        nearest_other: world.nearest_other().map(|o| o.state),
    };
    Ok((observe(world), terms.total(), world.done, info))
}

/// How subtask presence is decided at each reset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Presence {
    Fixed(SubtaskToggles),
    /// Each subtask appears independently with this probability.
    Random(f64),
}
