//! Map geometry and scenario configuration for the four-way intersection.
//!
//! World frame: intersection center at the origin, x east, y north,
//! right-hand traffic with two lanes per direction. The host approaches from
//! the south in the inner northbound lane, turns left and exits west.

use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

use super::geometry::Path;
use super::vehicle::VehicleParams;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subtask {
    LaneChange,
    LeftTurn,
    TurnAround,
}

impl Subtask {
    pub const ALL: [Subtask; 3] = [Subtask::LaneChange, Subtask::LeftTurn, Subtask::TurnAround];

    pub fn index(self) -> usize {
        match self {
            Subtask::LaneChange => 0,
            Subtask::LeftTurn => 1,
            Subtask::TurnAround => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Subtask::LaneChange => "lane_change",
            Subtask::LeftTurn => "left_turn",
            Subtask::TurnAround => "turn_around",
        }
    }
}

/// Which subtask vehicles take part in an episode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SubtaskToggles {
    pub lane_change: bool,
    pub left_turn_oncoming: bool,
    pub turn_around: bool,
}

impl SubtaskToggles {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn all() -> Self {
        Self { lane_change: true, left_turn_oncoming: true, turn_around: true }
    }

    pub fn only(s: Subtask) -> Self {
        let mut t = Self::none();
        t.set(s, true);
        t
    }

    pub fn get(&self, s: Subtask) -> bool {
        match s {
            Subtask::LaneChange => self.lane_change,
            Subtask::LeftTurn => self.left_turn_oncoming,
            Subtask::TurnAround => self.turn_around,
        }
    }

    pub fn set(&mut self, s: Subtask, on: bool) {
        match s {
            Subtask::LaneChange => self.lane_change = on,
            Subtask::LeftTurn => self.left_turn_oncoming = on,
            Subtask::TurnAround => self.turn_around = on,
        }
    }

    pub fn as_array(&self) -> [bool; 3] {
        [self.lane_change, self.left_turn_oncoming, self.turn_around]
    }

    pub fn any(&self) -> bool {
        self.as_array().iter().any(|&b| b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GoalRegion {
    pub center: [f64; 2],
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub lane_width: f64,
    pub arm_length: f64,
    pub vehicle: VehicleParams,
    pub subtasks: SubtaskToggles,
    /// Chance that a present subtask vehicle drives rather than stays parked.
    pub move_probability: f64,
    /// Speed range of moving subtask vehicles (m/s).
    pub speed_range: [f64; 2],
    /// Start-offset range of moving subtask vehicles along their paths (m).
    pub start_offset_range: [f64; 2],
    pub dt: f64,
    pub max_steps: usize,
    pub goal: Option<GoalRegion>,
    pub goal_speed: f64,
    /// Host start position on the south arm (y coordinate).
    pub host_start_y: f64,
    pub host_lookahead: f64,
    pub other_lookahead: f64,
    /// Seed of the canonical start state used by skill chaining.
    pub canonical_seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            lane_width: 3.5,
            arm_length: 50.0,
            vehicle: VehicleParams::default(),
            subtasks: SubtaskToggles::none(),
            move_probability: 0.5,
            speed_range: [2.0, 6.0],
            start_offset_range: [0.0, 20.0],
            dt: 0.05,
            max_steps: 1000,
            goal: Some(GoalRegion { center: [-25.0, 1.75], radius: 3.0 }),
            goal_speed: 5.0,
            host_start_y: -30.0,
            host_lookahead: 4.0,
            other_lookahead: 3.0,
            canonical_seed: 0,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        #[allow(clippy::neg_cmp_op_on_partial_ord)] // also rejects NaN
        if !(self.dt > 0.0) {
            return Err(Error::InvalidConfig("dt must be positive".into()));
        }
        if self.max_steps == 0 {
            return Err(Error::InvalidConfig("max_steps must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.move_probability) {
            return Err(Error::InvalidConfig("move probability must lie in [0, 1]".into()));
        }
        if !self.subtasks.any() && self.goal.is_none() {
            return Err(Error::InvalidConfig("no subtask enabled and no goal region".into()));
        }
        if self.speed_range[0] > self.speed_range[1] || self.start_offset_range[0] > self.start_offset_range[1] {
            return Err(Error::InvalidConfig("empty sampling range".into()));
        }
        let box_half = 2.0 * self.lane_width;
        if self.host_start_y >= -box_half {
            return Err(Error::InvalidConfig("host must start south of the intersection box".into()));
        }
        Ok(())
    }

    fn box_half(&self) -> f64 {
        2.0 * self.lane_width
    }

    fn inner(&self) -> f64 {
        0.5 * self.lane_width
    }

    fn outer(&self) -> f64 {
        1.5 * self.lane_width
    }
}

/// Route geometry derived from a configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    pub host_route: Path,
    /// Host arc length at which each subtask zone is passed.
    pub zone_stations: [f64; 3],
    /// Host arc length of the goal center.
    pub goal_station: f64,
}

fn arc(center: [f64; 2], radius: f64, from: f64, to: f64, spacing: f64) -> Vec<[f64; 2]> {
    let n = (((to - from).abs() * radius) / spacing).ceil().max(2.0) as usize;
    (1..=n)
        .map(|k| {
            let a = from + (to - from) * k as f64 / n as f64;
            [center[0] + radius * a.cos(), center[1] + radius * a.sin()]
        })
        .collect()
}

impl Layout {
    pub fn new(config: &ScenarioConfig) -> Result<Self> {
        let b = config.box_half();
        let inner = config.inner();
        let mut pts = vec![[inner, config.host_start_y], [inner, -b]];
        // Left turn: quarter circle from heading north to heading west.
        let center = [-b, -b];
        let radius = b + inner;
        pts.extend(arc(center, radius, 0.0, FRAC_PI_2, 0.5));
        pts.push([-config.arm_length, inner]);
        let host_route = Path::new(pts, config.goal_speed)?;
        let s_box = -b - config.host_start_y;
        // Stations come from the polyline itself, not the ideal arc length.
        let s_turn = host_route.project(-b, inner, s_box, f64::INFINITY);
        let goal_x = config.goal.map_or(-3.0 * b, |g| g.center[0]);
        let goal_station = s_turn + (-b - goal_x).max(0.0);
        let zone_stations = [s_box, s_turn, s_turn + b + 1.0];
        Ok(Self { host_route, zone_stations, goal_station })
    }
}

/// Scripted path of a subtask vehicle starting `offset` meters into its range.
pub fn subtask_path(config: &ScenarioConfig, task: Subtask, offset: f64, speed: f64) -> Result<Path> {
    let (inner, outer) = (config.inner(), config.outer());
    let far = config.arm_length;
    let pts = match task {
        Subtask::LaneChange => {
            // Outer northbound lane just ahead of the host, merging into the host lane.
            let y0 = config.host_start_y + 3.0 + offset;
            let mut pts = vec![[outer, y0], [outer, y0 + 4.0]];
            let n = 24;
            for k in 1..=n {
                let t = k as f64 / n as f64;
                let blend = 0.5 - 0.5 * (PI * t).cos();
                pts.push([outer + (inner - outer) * blend, y0 + 4.0 + 12.0 * t]);
            }
            pts.push([inner, far]);
            pts
        }
        Subtask::LeftTurn => {
            // Oncoming straight-through traffic in the inner southbound lane.
            let y0 = far - 10.0 - offset;
            vec![[-inner, y0], [-inner, -far]]
        }
        Subtask::TurnAround => {
            // Eastbound outer lane, U-turn inside the box into the westbound inner lane.
            let x0 = -(far - 15.0 - offset);
            let r = 0.5 * (outer + inner);
            let cx = -1.0;
            let mut pts = vec![[x0, -outer], [cx, -outer]];
            pts.extend(arc([cx, -0.5 * (outer - inner)], r, -FRAC_PI_2, FRAC_PI_2, 0.4));
            pts.push([-far, inner]);
            pts
        }
    };
    Path::new(pts, speed)
}

/// Parked position uses the middle of the offset range.
pub fn parked_offset(config: &ScenarioConfig) -> f64 {
    0.5 * (config.start_offset_range[0] + config.start_offset_range[1])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_layout_stations_are_ordered() {
        let c = ScenarioConfig::default();
        let l = Layout::new(&c).unwrap();
        let z = l.zone_stations;
        assert!(z[0] < z[1] && z[1] < z[2] && z[2] < l.goal_station);
        assert!(l.goal_station < l.host_route.length());
        let (gx, gy, _) = l.host_route.pose_at(l.goal_station);
        let g = c.goal.unwrap();
        assert!((gx - g.center[0]).abs() < 1e-9 && (gy - g.center[1]).abs() < 1e-9);
    }

    #[test]
    fn host_route_turn_ends_in_west_exit_lane() {
        let c = ScenarioConfig::default();
        let l = Layout::new(&c).unwrap();
        let (x, y, h) = l.host_route.pose_at(l.zone_stations[1]);
        assert!((x + 7.0).abs() < 1e-9 && (y - 1.75).abs() < 1e-9);
        assert!((h.abs() - PI).abs() < 0.1);
    }

    #[test]
    fn empty_scenario_without_goal_is_invalid() {
        let c = ScenarioConfig { goal: None, ..ScenarioConfig::default() };
        assert!(matches!(c.validate(), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn subtask_paths_build() {
        let c = ScenarioConfig::default();
        for t in Subtask::ALL {
            for off in [0.0, 10.0, 20.0] {
                assert!(subtask_path(&c, t, off, 3.0).is_ok());
            }
        }
    }
}
