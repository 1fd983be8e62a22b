//! Small deterministic tasks with known answers, used to verify the learners.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::{ActionSpace, ChainEnvironment, Environment, Step};
use crate::error::{Error, Result};

/// Corridor parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorridorConfig {
    pub dt: f64,
    pub accel: f64,
    pub max_speed: f64,
    pub length: f64,
    /// The goal is the interval `[goal_start, length]`.
    pub goal_start: f64,
    pub max_steps: usize,
    pub step_penalty: f64,
    pub goal_reward: f64,
}

impl Default for CorridorConfig {
    fn default() -> Self {
        Self {
            dt: 0.1,
            accel: 1.0,
            max_speed: 2.0,
            length: 10.0,
            goal_start: 9.0,
            max_steps: 200,
            step_penalty: -0.1,
            goal_reward: 10.0,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CorridorInfo {
    pub x: f64,
    pub v: f64,
    pub reached: bool,
}

/// Deterministic 1-D point mass: `v ← clamp(v + a·accel·dt, 0, vmax)`,
/// `x ← clamp(x + v·dt, 0, length)`; the episode ends inside the goal interval.
/// Observations are `(x / length, v / vmax)`.
#[derive(Debug, Clone)]
pub struct Corridor {
    pub config: CorridorConfig,
    x: f64,
    v: f64,
    steps: usize,
    done: bool,
}

impl Corridor {
    pub fn new(config: CorridorConfig) -> Self {
        Self { config, x: 0.0, v: 0.0, steps: 0, done: false }
    }

    pub fn state(&self) -> (f64, f64) {
        (self.x, self.v)
    }

    /// Places the mass anywhere; the step counter restarts.
    pub fn set_state(&mut self, x: f64, v: f64) -> Vec<f64> {
        self.x = x.clamp(0.0, self.config.length);
        self.v = v.clamp(0.0, self.config.max_speed);
        self.steps = 0;
        self.done = false;
        self.observe()
    }

    /// Inverse of the observation encoding.
    pub fn decode(&self, obs: &[f64]) -> (f64, f64) {
        (obs[0] * self.config.length, obs[1] * self.config.max_speed)
    }

    pub fn in_goal(&self, x: f64) -> bool {
        x >= self.config.goal_start
    }
}

impl Environment for Corridor {
    type Info = CorridorInfo;

    fn observation_dim(&self) -> usize {
        2
    }

    fn action_space(&self) -> ActionSpace {
        ActionSpace::symmetric(1)
    }

    fn reset<R: Rng + ?Sized>(&mut self, _rng: &mut R) -> Vec<f64> {
        self.reset_canonical()
    }

    fn observe(&self) -> Vec<f64> {
        vec![self.x / self.config.length, self.v / self.config.max_speed]
    }

    fn step(&mut self, action: &[f64]) -> Result<Step<CorridorInfo>> {
        if self.done {
            return Err(Error::EpisodeDone);
        }
        let c = &self.config;
        let a = action[0].clamp(-1.0, 1.0);
        self.v = (self.v + a * c.accel * c.dt).clamp(0.0, c.max_speed);
        self.x = (self.x + self.v * c.dt).clamp(0.0, c.length);
        self.steps += 1;
        let reached = self.in_goal(self.x);
        let truncated = !reached && self.steps >= c.max_steps;
        self.done = reached || truncated;
        let reward = c.step_penalty + if reached { c.goal_reward } else { 0.0 };
        Ok(Step {
            observation: self.observe(),
            reward,
            done: self.done,
            truncated,
            info: CorridorInfo { x: self.x, v: self.v, reached },
        })
    }
}

impl ChainEnvironment for Corridor {
    fn reset_canonical(&mut self) -> Vec<f64> {
        self.set_state(0.0, 0.0)
    }

    fn reset_in_window<R: Rng + ?Sized>(&mut self, lo: f64, hi: f64, rng: &mut R) -> Vec<f64> {
        let (lo, hi) = (lo.clamp(0.0, 1.0), hi.clamp(0.0, 1.0));
        let p = if hi > lo { rng.gen_range(lo..=hi) } else { lo };
        let v = rng.gen_range(0.0..=self.config.max_speed);
        self.set_state(p * self.config.goal_start, v)
    }

    fn progress(&self) -> f64 {
        (self.x / self.config.goal_start).clamp(0.0, 1.0)
    }
}

/// Point reach parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointReachConfig {
    pub max_step: f64,
    pub tolerance: f64,
    /// Minimum initial distance to the target.
    pub min_start_distance: f64,
    pub max_steps: usize,
    pub success_reward: f64,
}

impl Default for PointReachConfig {
    fn default() -> Self {
        Self { max_step: 0.1, tolerance: 0.05, min_start_distance: 0.3, max_steps: 50, success_reward: 10.0 }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PointReachInfo {
    pub success: bool,
}

/// Move a point on `[-1, 1]` onto a target with one continuous action:
/// `x ← clamp(x + max_step·a)`. Observations are `(x, target)`; the reward
/// is the negative distance after the move plus a bonus on success.
#[derive(Debug, Clone)]
pub struct PointReach {
    pub config: PointReachConfig,
    x: f64,
    target: f64,
    steps: usize,
    done: bool,
}

impl PointReach {
    pub fn new(config: PointReachConfig) -> Self {
        Self { config, x: -1.0, target: 0.0, steps: 0, done: false }
    }

    pub fn set_state(&mut self, x: f64, target: f64) -> Vec<f64> {
        self.x = x;
        self.target = target;
        self.steps = 0;
        self.done = false;
        self.observe()
    }
}

impl Environment for PointReach {
    type Info = PointReachInfo;

    fn observation_dim(&self) -> usize {
        2
    }

    fn action_space(&self) -> ActionSpace {
        ActionSpace::symmetric(1)
    }

    fn reset<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Vec<f64> {
        let target = rng.gen_range(-0.5..=0.5);
        let x = loop {
            let x: f64 = rng.gen_range(-1.0..=1.0);
            if (x - target).abs() >= self.config.min_start_distance {
                break x;
            }
        };
        self.set_state(x, target)
    }

    fn observe(&self) -> Vec<f64> {
        vec![self.x, self.target]
    }

    fn step(&mut self, action: &[f64]) -> Result<Step<PointReachInfo>> {
        if self.done {
            return Err(Error::EpisodeDone);
        }
        self.x = (self.x + self.config.max_step * action[0].clamp(-1.0, 1.0)).clamp(-1.0, 1.0);
        self.steps += 1;
        let distance = (self.x - self.target).abs();
        let success = distance <= self.config.tolerance;
        let truncated = !success && self.steps >= self.config.max_steps;
        self.done = success || truncated;
        let reward = -distance + if success { self.config.success_reward } else { 0.0 };
        Ok(Step { observation: self.observe(), reward, done: self.done, truncated, info: PointReachInfo { success } })
    }
}

/// Two temporally extended choices per state of a 5-state chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChainOption {
    Advance = 0,
    Exit = 1,
}

/// Result of invoking one option in the chain MDP.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainOutcome {
    /// Discounted reward accumulated while the option ran.
    pub reward: f64,
    pub duration: u32,
    pub next: usize,
    pub done: bool,
}

/// A 5-state, 2-option semi-Markov chain.
///
/// *Advance* moves `s → s+1` with no reward; it takes 3 steps from state 2
/// and 1 step elsewhere, and from the last state it collects `+1` and ends.
/// *Exit* ends the episode at once with a state-dependent payoff.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainMdp {
    pub gamma: f64,
    pub exit_rewards: [f64; 5],
    pub advance_durations: [u32; 5],
    pub final_reward: f64,
}

impl Default for ChainMdp {
    fn default() -> Self {
        Self {
            gamma: 0.9,
            exit_rewards: [0.2, 0.2, 0.8, 0.2, 0.2],
            advance_durations: [1, 1, 3, 1, 1],
            final_reward: 1.0,
        }
    }
}

impl ChainMdp {
    pub const STATES: usize = 5;
    pub const OPTIONS: usize = 2;

    pub fn start(&self) -> usize {
        0
    }

    /// One-hot observation of a state.
    pub fn encode(&self, s: usize) -> Vec<f64> {
        let mut v = vec![0.0; Self::STATES];
        v[s] = 1.0;
        v
    }

    pub fn step(&self, s: usize, option: ChainOption) -> ChainOutcome {
        match option {
            ChainOption::Exit => ChainOutcome { reward: self.exit_rewards[s], duration: 1, next: s, done: true },
            ChainOption::Advance if s + 1 == Self::STATES => {
                ChainOutcome { reward: self.final_reward, duration: 1, next: s, done: true }
            }
            ChainOption::Advance => {
                ChainOutcome { reward: 0.0, duration: self.advance_durations[s], next: s + 1, done: false }
            }
        }
    }

    pub fn option(index: usize) -> ChainOption {
        if index == 0 {
            ChainOption::Advance
        } else {
            ChainOption::Exit
        }
    }

    /// Optimal values by value iteration; continuation from an option of
    /// duration `d` is discounted by `γ^d` (or a plain `γ` when
    /// `gamma_power` is false). Returns `(V, Q, sweeps)`.
    pub fn value_iteration(&self, gamma_power: bool, tolerance: f64) -> (Vec<f64>, Vec<[f64; 2]>, usize) {
        let mut v = vec![0.0; Self::STATES];
        let mut q = vec![[0.0; 2]; Self::STATES];
        for sweep in 1..=10_000 {
            let mut delta: f64 = 0.0;
            for s in 0..Self::STATES {
                #[allow(clippy::needless_range_loop)]
                for o in 0..Self::OPTIONS {
                    let out = self.step(s, Self::option(o));
                    let discount = if gamma_power { self.gamma.powi(out.duration as i32) } else { self.gamma };
                    q[s][o] = out.reward + if out.done { 0.0 } else { discount * v[out.next] };
                }
                let best = q[s][0].max(q[s][1]);
                delta = delta.max((best - v[s]).abs());
                v[s] = best;
            }
            if delta < tolerance {
                return (v, q, sweep);
            }
        }
        (v, q, 10_000)
    }

    /// Greedy option per state (ties to the lower index).
    pub fn greedy(q: &[[f64; 2]]) -> Vec<usize> {
        q.iter().map(|row| if row[1] > row[0] { 1 } else { 0 }).collect()
    }
}

/// The three verification substrates with their default parameters.
pub fn toy_envs() -> (Corridor, PointReach, ChainMdp) {
    (Corridor::new(CorridorConfig::default()), PointReach::new(PointReachConfig::default()), ChainMdp::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn full_throttle_reaches_goal_in_55_steps() {
        // v_k = 0.1k until the 2 m/s cap at k = 20, x_20 = 0.005·20·21 = 2.1;
        // afterwards 0.2 m per step, so x ≥ 9 first at k = 20 + 35 = 55.
        let mut c = Corridor::new(CorridorConfig::default());
        c.reset_canonical();
        let mut n = 0;
        loop {
            let s = c.step(&[1.0]).unwrap();
            n += 1;
            if s.done {
                assert!(s.info.reached);
                break;
            }
        }
        assert_eq!(n, 55);
    }

    #[test]
    fn window_reset_respects_progress() {
        let mut c = Corridor::new(CorridorConfig::default());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            c.reset_in_window(0.5, 0.7, &mut rng);
            assert!((0.5..=0.7 + 1e-12).contains(&c.progress()));
        }
    }

    #[test]
    fn zero_action_never_reaches() {
        let mut p = PointReach::new(PointReachConfig::default());
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            p.reset(&mut rng);
            loop {
                let s = p.step(&[0.0]).unwrap();
                assert!(!s.info.success);
                if s.done {
                    assert!(s.truncated);
                    break;
                }
            }
        }
    }

    #[test]
    fn chain_values_converge_to_the_fixture() {
        let mdp = ChainMdp::default();
        let (v, q, _) = mdp.value_iteration(true, 1e-10);
        let expected = [0.648, 0.72, 0.8, 0.9, 1.0];
        for (a, b) in v.iter().zip(expected) {
            assert!((a - b).abs() < 1e-10, "{v:?}");
        }
        assert_eq!(ChainMdp::greedy(&q), vec![0, 0, 1, 0, 0]);
        // Pricing the slow advance with a single γ flips the decision in state 2.
        let (_, q_plain, _) = mdp.value_iteration(false, 1e-10);
        assert_eq!(ChainMdp::greedy(&q_plain)[2], 0);
    }
}
