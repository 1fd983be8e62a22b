//! Environment interfaces shared by the simulator, the toy tasks and the learners.

use rand::Rng;

use crate::error::Result;

/// Box bounds of a continuous action vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionSpace {
    pub low: Vec<f64>,
    pub high: Vec<f64>,
}

impl ActionSpace {
    pub fn symmetric(dim: usize) -> Self {
        Self { low: vec![-1.0; dim], high: vec![1.0; dim] }
    }

    pub fn dim(&self) -> usize {
        self.low.len()
    }

    pub fn contains(&self, a: &[f64]) -> bool {
        a.len() == self.dim() && a.iter().zip(&self.low).zip(&self.high).all(|((v, lo), hi)| v >= lo && v <= hi)
    }

    /// Maps `u ∈ [-1, 1]ᵈ` affinely onto the bounds.
    pub fn from_unit(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .zip(&self.low)
            .zip(&self.high)
            .map(|((u, lo), hi)| (lo + (u.clamp(-1.0, 1.0) + 1.0) * 0.5 * (hi - lo)).clamp(*lo, *hi))
            .collect()
    }

    /// Derivative of [`ActionSpace::from_unit`] per component.
    pub fn unit_scale(&self) -> Vec<f64> {
        self.low.iter().zip(&self.high).map(|(lo, hi)| 0.5 * (hi - lo)).collect()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.low.iter().zip(&self.high).map(|(lo, hi)| rng.gen_range(*lo..=*hi)).collect()
    }
}

/// Result of one environment step.
#[derive(Debug, Clone, PartialEq)]
pub struct Step<I> {
    pub observation: Vec<f64>,
    pub reward: f64,
    /// The episode is over, for any reason.
    pub done: bool,
    /// The episode ended only because the step limit was hit.
    pub truncated: bool,
    pub info: I,
}

impl<I> Step<I> {
    /// Ended on a genuine terminal event; value bootstrapping must stop here.
    pub fn terminal(&self) -> bool {
        self.done && !self.truncated
    }
}

/// Episodic task with continuous observations and actions.
pub trait Environment {
    type Info: Clone + std::fmt::Debug + Default;

    fn observation_dim(&self) -> usize;
    fn action_space(&self) -> ActionSpace;
    fn reset<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Vec<f64>;
    fn observe(&self) -> Vec<f64>;
    /// Errors when the episode is already finished.
    fn step(&mut self, action: &[f64]) -> Result<Step<Self::Info>>;
}

/// Tasks with a notion of progress from a canonical start toward the goal,
/// which backward skill chaining uses to place start states.
pub trait ChainEnvironment: Environment {
    /// The canonical start state; deterministic.
    fn reset_canonical(&mut self) -> Vec<f64>;
    /// A start state whose progress is drawn from `[lo, hi]` (0 = start, 1 = goal).
    fn reset_in_window<R: Rng + ?Sized>(&mut self, lo: f64, hi: f64, rng: &mut R) -> Vec<f64>;
    /// Progress of the current state in `[0, 1]`.
    fn progress(&self) -> f64;
}
