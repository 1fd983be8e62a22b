use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Wraps an angle into `(-π, π]`.
pub fn wrap_angle(theta: f64) -> f64 {
    let mut a = theta.rem_euclid(2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    }
    a
}

/// Planar pose and speed of one vehicle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    pub x: f64,
    pub y: f64,
    /// Yaw in the world frame, wrapped to `(-π, π]`.
    pub theta: f64,
    /// Forward speed, never negative.
    pub v: f64,
}

impl VehicleState {
    pub fn new(x: f64, y: f64, theta: f64, v: f64) -> Self {
        Self { x, y, theta: wrap_angle(theta), v: v.max(0.0) }
    }

    pub fn distance_to(&self, other: &VehicleState) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Host control input. Components are clamped on construction.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Action {
    pub throttle: f64,
    pub brake: f64,
    pub steer: f64,
}

impl Action {
    pub fn new(throttle: f64, brake: f64, steer: f64) -> Self {
        Self {
            throttle: clamp_finite(throttle, 0.0, 1.0),
            brake: clamp_finite(brake, 0.0, 1.0),
            steer: clamp_finite(steer, -1.0, 1.0),
        }
    }

    /// Maps a single longitudinal command `u ∈ [-1, 1]` to throttle (u > 0)
    /// or brake (u < 0). Steering is left at zero.
    pub fn longitudinal(u: f64) -> Self {
        let u = clamp_finite(u, -1.0, 1.0);
        Self::new(u.max(0.0), (-u).max(0.0), 0.0)
    }

    pub fn with_steer(self, steer: f64) -> Self {
        Self::new(self.throttle, self.brake, steer)
    }
}

fn clamp_finite(v: f64, lo: f64, hi: f64) -> f64 {
    if v.is_nan() {
        0.0_f64.clamp(lo, hi)
    } else {
        v.clamp(lo, hi)
    }
}

/// Kinematic bicycle constants and body dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleParams {
    pub wheelbase: f64,
    /// Radians.
    pub max_steer: f64,
    pub max_accel: f64,
    pub max_brake: f64,
    /// Linear drag coefficient (1/s).
    pub drag: f64,
    pub length: f64,
    pub width: f64,
}

impl Default for VehicleParams {
    fn default() -> Self {
        Self {
            wheelbase: 2.9,
            max_steer: 35f64.to_radians(),
            max_accel: 3.0,
            max_brake: 8.0,
            drag: 0.05,
            length: 4.5,
            width: 1.8,
        }
    }
}

/// One forward-Euler step of the kinematic bicycle. Position and heading
/// advance with the current speed before the speed itself is updated.
pub fn integrate(state: &VehicleState, action: &Action, params: &VehicleParams, dt: f64) -> VehicleState {
    let delta = action.steer * params.max_steer;
    let accel = params.max_accel * action.throttle - params.max_brake * action.brake - params.drag * state.v;
    let x = state.x + state.v * state.theta.cos() * dt;
    let y = state.y + state.v * state.theta.sin() * dt;
    let theta = wrap_angle(state.theta + state.v / params.wheelbase * delta.tan() * dt);
    let v = (state.v + accel * dt).max(0.0);
    VehicleState { x, y, theta, v }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coasting_straight() {
        let p = VehicleParams::default();
        let s = VehicleState::new(0.0, 0.0, 0.0, 5.0);
        let n = integrate(&s, &Action::default(), &p, 0.05);
        assert_eq!(n.x, 0.25);
        assert_eq!(n.y, 0.0);
        assert!((n.v - (5.0 - 0.05 * 5.0 * 0.05)).abs() < 1e-15);
    }

    #[test]
    fn standing_still_stays_still() {
        let p = VehicleParams::default();
        let s = VehicleState::new(3.0, -2.0, 1.0, 0.0);
        assert_eq!(integrate(&s, &Action::default(), &p, 0.05), s);
    }

    #[test]
    fn braking_never_reverses() {
        let p = VehicleParams::default();
        let s = VehicleState::new(0.0, 0.0, 0.0, 0.1);
        let n = integrate(&s, &Action::new(0.0, 1.0, 0.0), &p, 0.05);
        assert_eq!(n.v, 0.0);
    }

    #[test]
    fn action_components_are_clamped() {
        let a = Action::new(2.0, -1.0, -3.0);
        assert_eq!((a.throttle, a.brake, a.steer), (1.0, 0.0, -1.0));
        let l = Action::longitudinal(-0.4);
        assert_eq!((l.throttle, l.brake), (0.0, 0.4));
    }

    #[test]
    fn angles_wrap_into_half_open_interval() {
        assert_eq!(wrap_angle(PI), PI);
        assert!((wrap_angle(-PI) - PI).abs() < 1e-15);
        assert!((wrap_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-12);
    }
}
