use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;

use super::geometry::Path;
use super::vehicle::{wrap_angle, VehicleParams, VehicleState};

/// Output of the pursuit law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PursuitCommand {
    /// Normalized steering in `[-1, 1]`.
    pub steer: f64,
    pub path_complete: bool,
}

/// Geometric pursuit wheel angle `atan(2·L·sin α / ld)` in radians, or
/// `None` when the target lies behind the vehicle.
pub fn pursuit_angle(state: &VehicleState, target: [f64; 2], ld: f64, params: &VehicleParams) -> Option<f64> {
    let bearing = (target[1] - state.y).atan2(target[0] - state.x);
    let alpha = wrap_angle(bearing - state.theta);
    (alpha.abs() <= FRAC_PI_2).then(|| (2.0 * params.wheelbase * alpha.sin() / ld).atan())
}

/// Normalized steering toward a target point at nominal lookahead `ld`.
/// Targets behind the vehicle saturate toward the side they lie on.
pub fn pursuit_steer(state: &VehicleState, target: [f64; 2], ld: f64, params: &VehicleParams) -> f64 {
    match pursuit_angle(state, target, ld, params) {
        Some(delta) => (delta / params.max_steer).clamp(-1.0, 1.0),
        None => {
            let bearing = (target[1] - state.y).atan2(target[0] - state.x);
            wrap_angle(bearing - state.theta).signum()
        }
    }
}

/// Progress-tracking pure pursuit follower for one path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PurePursuit {
    pub lookahead: f64,
    /// Arc length of the last projection onto the path.
    pub station: f64,
}

impl PurePursuit {
    pub fn new(lookahead: f64) -> Self {
        assert!(lookahead > 0.0, "lookahead must be positive");
        Self { lookahead, station: 0.0 }
    }

    pub fn command(&mut self, state: &VehicleState, path: &Path, params: &VehicleParams) -> PursuitCommand {
        self.station = path.project(state.x, state.y, self.station, 3.0 * self.lookahead + 5.0);
        if self.station >= path.length() - 1e-6 {
            return PursuitCommand { steer: 0.0, path_complete: true };
        }
        let (tx, ty, _) = path.pose_at(self.station + self.lookahead);
        PursuitCommand { steer: pursuit_steer(state, [tx, ty], self.lookahead, params), path_complete: false }
    }
}

/// PID speed controller with integral anti-windup.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PidSpeed {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    /// Bound on the magnitude of the accumulated integral.
    pub integral_limit: f64,
    pub integral: f64,
    pub prev_error: Option<f64>,
}

impl Default for PidSpeed {
    fn default() -> Self {
        Self { kp: 0.6, ki: 0.1, kd: 0.0, integral_limit: 2.0, integral: 0.0, prev_error: None }
    }
}

impl PidSpeed {
    /// Returns `(throttle, brake)`, each in `[0, 1]`.
    pub fn command(&mut self, v: f64, v_ref: f64, dt: f64) -> (f64, f64) {
        let error = v_ref - v;
        self.integral = (self.integral + error * dt).clamp(-self.integral_limit, self.integral_limit);
        let derivative = self.prev_error.map_or(0.0, |p| (error - p) / dt);
        self.prev_error = Some(error);
        let u = self.kp * error + self.ki * self.integral + self.kd * derivative;
        (u.clamp(0.0, 1.0), (-u).clamp(0.0, 1.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    #[test]
    fn straight_ahead_target_needs_no_steer() {
        let p = VehicleParams::default();
        let s = VehicleState::new(0.0, 0.0, 0.0, 3.0);
        assert_eq!(pursuit_steer(&s, [5.0, 0.0], 5.0, &p), 0.0);
    }

    #[test]
    fn target_at_right_angle_gives_quarter_pi_before_normalization() {
        let p = VehicleParams::default();
        let s = VehicleState::new(0.0, 0.0, 0.0, 3.0);
        let delta = pursuit_angle(&s, [0.0, 5.8], 5.8, &p).unwrap();
        assert!((delta - FRAC_PI_4).abs() < 1e-12);
        // π/4 exceeds the 35° limit, so the normalized command saturates.
        assert_eq!(pursuit_steer(&s, [0.0, 5.8], 5.8, &p), 1.0);
    }

    #[test]
    fn target_behind_saturates_toward_its_side() {
        let p = VehicleParams::default();
        let s = VehicleState::new(0.0, 0.0, 0.0, 3.0);
        assert_eq!(pursuit_steer(&s, [-5.0, 1.0], 5.0, &p), 1.0);
        assert_eq!(pursuit_steer(&s, [-5.0, -1.0], 5.0, &p), -1.0);
    }

    #[test]
    fn follower_reports_completion_at_path_end() {
        let p = VehicleParams::default();
        let path = Path::new(vec![[0.0, 0.0], [10.0, 0.0]], 3.0).unwrap();
        let mut pp = PurePursuit::new(3.0);
        assert!(!pp.command(&VehicleState::new(1.0, 0.0, 0.0, 1.0), &path, &p).path_complete);
        let done = pp.command(&VehicleState::new(10.5, 0.0, 0.0, 1.0), &path, &p);
        assert!(done.path_complete);
        assert_eq!(done.steer, 0.0);
    }

    #[test]
    fn pid_at_reference_is_idle() {
        let mut pid = PidSpeed::default();
        assert_eq!(pid.command(4.0, 4.0, 0.05), (0.0, 0.0));
    }

    #[test]
    fn pid_below_reference_throttles() {
        let mut pid = PidSpeed::default();
        let (t, b) = pid.command(1.0, 4.0, 0.05);
        assert!(t > 0.0);
        assert_eq!(b, 0.0);
    }

    #[test]
    fn pid_integral_is_bounded() {
        let mut pid = PidSpeed::default();
        for _ in 0..10_000 {
            let (t, _) = pid.command(0.0, 50.0, 0.05);
            assert!(t <= 1.0);
        }
        assert_eq!(pid.integral, pid.integral_limit);
    }
}
