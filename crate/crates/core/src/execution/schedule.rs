use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Linear ε decay from `start` to `end` over `horizon` episodes, then held.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSchedule {
    pub start: f64,
    pub end: f64,
    pub horizon: usize,
}

impl EpsilonSchedule {
    pub fn new(start: f64, end: f64, horizon: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&end) || !(end..=1.0).contains(&start) {
            return Err(Error::InvalidConfig(format!("epsilon schedule {start} -> {end} is not within 0 <= end <= start <= 1")));
        }
        Ok(Self { start, end, horizon })
    }

    /// Decays over the first `fraction` of a phase of `episodes` episodes.
    pub fn for_phase(start: f64, end: f64, fraction: f64, episodes: usize) -> Result<Self> {
        Self::new(start, end, (fraction * episodes as f64).ceil() as usize)
    }

    pub fn constant(eps: f64) -> Self {
        Self { start: eps, end: eps, horizon: 0 }
    }

    pub fn value(&self, episode: usize) -> f64 {
        if self.horizon == 0 || episode >= self.horizon {
            return self.end;
        }
        self.start + (self.end - self.start) * episode as f64 / self.horizon as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decays_then_holds() {
        let s = EpsilonSchedule::for_phase(1.0, 0.05, 0.25, 400).unwrap();
        assert_eq!(s.horizon, 100);
        assert_eq!(s.value(0), 1.0);
        assert!((s.value(50) - 0.525).abs() < 1e-12);
        assert_eq!(s.value(100), 0.05);
        assert_eq!(s.value(399), 0.05);
    }

    #[test]
    fn rejects_inverted_bounds() {
        assert!(EpsilonSchedule::new(0.1, 0.5, 10).is_err());
    }
}
