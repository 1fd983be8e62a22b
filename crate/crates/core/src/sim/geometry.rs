use serde::{Deserialize, Serialize};

use super::vehicle::VehicleState;
use crate::error::{Error, Result};

/// Polyline reference path with a target speed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Path {
    waypoints: Vec<[f64; 2]>,
    /// Arc length at each waypoint.
    stations: Vec<f64>,
    pub target_speed: f64,
}

impl Path {
    pub fn new(waypoints: Vec<[f64; 2]>, target_speed: f64) -> Result<Self> {
        if waypoints.len() < 2 {
            return Err(Error::InvalidConfig("a path needs at least two waypoints".into()));
        }
        let mut stations = Vec::with_capacity(waypoints.len());
        stations.push(0.0);
        for w in waypoints.windows(2) {
            let d = (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]);
            if d == 0.0 {
                return Err(Error::InvalidConfig("consecutive waypoints must differ".into()));
            }
            stations.push(stations.last().unwrap() + d);
        }
        Ok(Self { waypoints, stations, target_speed })
    }

    pub fn waypoints(&self) -> &[[f64; 2]] {
        &self.waypoints
    }

    pub fn length(&self) -> f64 {
        *self.stations.last().unwrap()
    }

    /// Point and tangent heading at arc length `s` (clamped to the path).
    pub fn pose_at(&self, s: f64) -> (f64, f64, f64) {
        let s = s.clamp(0.0, self.length());
        let i = match self.stations.binary_search_by(|st| st.partial_cmp(&s).unwrap()) {
            Ok(i) => i.min(self.waypoints.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.waypoints.len() - 2),
        };
        let (a, b) = (self.waypoints[i], self.waypoints[i + 1]);
        let seg = self.stations[i + 1] - self.stations[i];
        let t = ((s - self.stations[i]) / seg).clamp(0.0, 1.0);
        let heading = (b[1] - a[1]).atan2(b[0] - a[0]);
        (a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]), heading)
    }

    /// Arc length of the closest point, searching segments whose start lies
    /// within `window` meters after `hint`. The hint keeps the projection
    /// from jumping across self-approaching paths such as U-turns.
    pub fn project(&self, x: f64, y: f64, hint: f64, window: f64) -> f64 {
        let mut best = (f64::INFINITY, hint);
        for i in 0..self.waypoints.len() - 1 {
            if self.stations[i + 1] < hint - 1e-9 || self.stations[i] > hint + window {
                continue;
            }
            let (a, b) = (self.waypoints[i], self.waypoints[i + 1]);
            let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
            let seg2 = dx * dx + dy * dy;
            let t = (((x - a[0]) * dx + (y - a[1]) * dy) / seg2).clamp(0.0, 1.0);
            let (px, py) = (a[0] + t * dx, a[1] + t * dy);
            let d = (x - px).hypot(y - py);
            let s = self.stations[i] + t * seg2.sqrt();
            if d < best.0 && s >= hint - 1e-9 {
                best = (d, s);
            }
        }
        best.1
    }
}

/// Corners of an oriented rectangle centered on the pose.
pub fn rectangle_corners(pose: &VehicleState, length: f64, width: f64) -> [[f64; 2]; 4] {
    let (c, s) = (pose.theta.cos(), pose.theta.sin());
    let (hl, hw) = (length / 2.0, width / 2.0);
    let mut out = [[0.0; 2]; 4];
    for (k, (sl, sw)) in [(1.0, 1.0), (1.0, -1.0), (-1.0, -1.0), (-1.0, 1.0)].iter().enumerate() {
        out[k] = [pose.x + sl * hl * c - sw * hw * s, pose.y + sl * hl * s + sw * hw * c];
    }
    out
}

/// Separating-axis overlap test for two oriented rectangles `(length, width)`.
pub fn check_collision(a: &VehicleState, dims_a: (f64, f64), b: &VehicleState, dims_b: (f64, f64)) -> bool {
    let ca = rectangle_corners(a, dims_a.0, dims_a.1);
    let cb = rectangle_corners(b, dims_b.0, dims_b.1);
    let axes = [
        [a.theta.cos(), a.theta.sin()],
        [-a.theta.sin(), a.theta.cos()],
        [b.theta.cos(), b.theta.sin()],
        [-b.theta.sin(), b.theta.cos()],
    ];
    axes.iter().all(|axis| {
        let project = |corners: &[[f64; 2]; 4]| {
            corners.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                let d = p[0] * axis[0] + p[1] * axis[1];
                (lo.min(d), hi.max(d))
            })
        };
        let (lo_a, hi_a) = project(&ca);
        let (lo_b, hi_b) = project(&cb);
        hi_a >= lo_b && hi_b >= lo_a
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_boxes_collide() {
        let p = VehicleState::new(1.0, 2.0, 0.3, 0.0);
        assert!(check_collision(&p, (4.5, 1.8), &p, (4.5, 1.8)));
    }

    #[test]
    fn distant_boxes_do_not_collide() {
        let a = VehicleState::new(0.0, 0.0, 0.0, 0.0);
        let b = VehicleState::new(100.0, 0.0, 1.0, 0.0);
        assert!(!check_collision(&a, (5.0, 2.0), &b, (5.0, 2.0)));
    }

    #[test]
    fn rotated_box_in_the_diagonal_gap() {
        // Axis-aligned bounding boxes overlap, the oriented boxes do not.
        let a = VehicleState::new(0.0, 0.0, std::f64::consts::FRAC_PI_4, 0.0);
        let b = VehicleState::new(2.2, -2.2, std::f64::consts::FRAC_PI_4, 0.0);
        assert!(!check_collision(&a, (4.0, 1.0), &b, (4.0, 1.0)));
    }

    #[test]
    fn path_pose_and_projection() {
        let p = Path::new(vec![[0.0, 0.0], [10.0, 0.0], [10.0, 10.0]], 5.0).unwrap();
        assert_eq!(p.length(), 20.0);
        let (x, y, h) = p.pose_at(15.0);
        assert_eq!((x, y), (10.0, 5.0));
        assert!((h - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        assert!((p.project(4.0, 1.0, 0.0, 100.0) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_paths_are_rejected() {
        assert!(Path::new(vec![[0.0, 0.0]], 1.0).is_err());
        assert!(Path::new(vec![[0.0, 0.0], [0.0, 0.0]], 1.0).is_err());
    }
}
