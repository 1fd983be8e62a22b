//! Optional per-episode trajectory logs.

use std::io::Write;

use super::world::SimInfo;
use crate::error::Result;

pub const TRAJECTORY_HEADER: &str =
    "step,t,host_x,host_y,host_theta,host_v,other_x,other_y,other_theta,other_v,throttle,brake,steer,reward,done";

/// Formats with nine significant digits.
pub fn sig9(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let s = format!("{:.8e}", v);
    // Normalize e.g. "1.23400000e0" to a form every CSV reader parses.
    s.parse::<f64>().map(|p| format!("{p}")).unwrap_or(s)
}

#[derive(Debug, Default, Clone)]
pub struct TrajectoryRecorder {
    rows: Vec<String>,
}

impl TrajectoryRecorder {
    pub fn record(&mut self, step: usize, dt: f64, info: &SimInfo, reward: f64, done: bool) {
        let h = info.host.unwrap_or(crate::sim::VehicleState::new(0.0, 0.0, 0.0, 0.0));
        let (ox, oy, ot, ov) = info.nearest_other.map_or((f64::NAN, f64::NAN, f64::NAN, f64::NAN), |o| (o.x, o.y, o.theta, o.v));
        let fields = [
            step.to_string(),
            sig9(step as f64 * dt),
            sig9(h.x),
            sig9(h.y),
            sig9(h.theta),
            sig9(h.v),
            sig9(ox),
            sig9(oy),
            sig9(ot),
            sig9(ov),
            sig9(info.action.throttle),
            sig9(info.action.brake),
            sig9(info.action.steer),
            sig9(reward),
            u8::from(done).to_string(),
        ];
        self.rows.push(fields.join(","));
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{TRAJECTORY_HEADER}")?;
        for r in &self.rows {
            writeln!(w, "{r}")?;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(sig9(1.0 / 3.0), "0.333333333");
        assert_eq!(sig9(123456.789123), "123456.789");
        assert_eq!(sig9(0.0), "0");
    }
}
