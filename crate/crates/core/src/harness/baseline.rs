use std::f64::consts::PI;
use std::path::Path;
use std::time::Instant;

use rand::Rng;

use super::config::{RunConfig, TabularConfig};
use super::log::{save_episodes, EpisodeLog, EPISODES_FILE};
use super::run::{agent_rng, env_rng, phase_env, schedule, Method, RunSummary};
use crate::env::Environment;
use crate::error::{Error, Result};
use crate::execution::{run_episode, DdpgAgent, EpisodeOptions, EpsilonSchedule};
use crate::sim::world::{ANGLE_SCALE, OBSERVATION_DIM, POSITION_SCALE, SPEED_SCALE};
use crate::sim::wrap_angle;

/// Q-table over a coarse discretization of the host/other-vehicle geometry
/// and a handful of longitudinal commands. Every entry starts at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularQ {
    pub config: TabularConfig,
    table: Vec<f64>,
}

fn bin(value: f64, lo: f64, hi: f64, bins: usize) -> usize {
    let t = ((value - lo) / (hi - lo) * bins as f64).floor();
    if t.is_nan() {
        0
    } else {
        (t.max(0.0) as usize).min(bins - 1)
    }
}

impl TabularQ {
    pub fn new(config: TabularConfig) -> Self {
        let n = config.position_bins * config.position_bins * config.speed_bins * config.yaw_bins * config.actions.len();
        Self { config, table: vec![0.0; n] }
    }

    pub fn state_count(&self) -> usize {
        self.table.len() / self.config.actions.len()
    }

    /// Cell of an observation: other-vehicle offset in the host frame, host
    /// speed and relative heading.
    pub fn state_index(&self, obs: &[f64]) -> usize {
        let c = &self.config;
        let (hx, hy, ht, hv) = (obs[0] * POSITION_SCALE, obs[1] * POSITION_SCALE, obs[2] * ANGLE_SCALE, obs[3] * SPEED_SCALE);
        let (ox, oy, ot) = (obs[4] * POSITION_SCALE, obs[5] * POSITION_SCALE, obs[6] * ANGLE_SCALE);
        let (dx, dy) = (ox - hx, oy - hy);
        let (sin, cos) = ht.sin_cos();
        let ahead = cos * dx + sin * dy;
        let left = -sin * dx + cos * dy;
        let r = c.position_range;
        let i = bin(ahead, -r, r, c.position_bins);
        let j = bin(left, -r, r, c.position_bins);
        let v = bin(hv, 0.0, c.max_speed, c.speed_bins);
        let yaw = bin(wrap_angle(ot - ht), -PI, PI, c.yaw_bins);
        ((i * c.position_bins + j) * c.speed_bins + v) * c.yaw_bins + yaw
    }

    pub fn q(&self, obs: &[f64]) -> &[f64] {
        let n = self.config.actions.len();
        let s = self.state_index(obs);
        &self.table[s * n..(s + 1) * n]
    }

    /// Greedy action index; ties go to the lowest index.
    pub fn greedy(&self, obs: &[f64]) -> usize {
        let q = self.q(obs);
        (1..q.len()).fold(0, |best, a| if q[a] > q[best] { a } else { best })
    }

    pub fn select<R: Rng + ?Sized>(&self, obs: &[f64], epsilon: f64, rng: &mut R) -> usize {
        if epsilon > 0.0 && rng.gen::<f64>() < epsilon {
            rng.gen_range(0..self.config.actions.len())
        } else {
            self.greedy(obs)
        }
    }

    /// `Q(s,a) += α·(r + γ(1−terminal)·maxₐ' Q(s',a') − Q(s,a))`.
    pub fn update(&mut self, s: &[f64], a: usize, r: f64, s_next: &[f64], terminal: bool) {
        let next = if terminal { 0.0 } else { self.q(s_next).iter().copied().fold(f64::NEG_INFINITY, f64::max) };
        let n = self.config.actions.len();
        let cell = self.state_index(s) * n + a;
        let target = r + self.config.gamma * next;
        self.table[cell] += self.config.alpha * (target - self.table[cell]);
    }
}

fn check_observation(dim: usize) -> Result<()> {
    if dim != OBSERVATION_DIM {
        return Err(Error::Shape(format!("tabular baseline expects {OBSERVATION_DIM} observations, got {dim}")));
    }
    Ok(())
}

/// Trains one flat learner through every phase of the schedule, test phases
/// included, and logs each episode exactly like the motion-primitive method.
/// Offline phases decay ε over their first part; test phases hold the final ε
/// and keep learning.
pub fn run_baseline(config: &RunConfig, method: Method, seed: u64) -> Result<Vec<EpisodeLog>> {
    config.validate()?;
    let mut rng = agent_rng(seed, 0);
    enum Learner {
        Flat(Box<DdpgAgent>),
        Table(TabularQ),
    }
    let env0 = phase_env(config, &config.phases[0])?;
    check_observation(env0.observation_dim())?;
    let mut learner = match method {
        Method::FlatDdpg => {
            Learner::Flat(Box::new(DdpgAgent::new(config.ddpg.clone(), OBSERVATION_DIM, env0.action_space(), &mut rng)?))
        }
        Method::TabularQ => Learner::Table(TabularQ::new(config.tabular.clone())),
        Method::Mp => return Err(Error::Contract("the motion-primitive method is not a baseline".into())),
    };
    let mut logs = Vec::new();
    for (index, phase, episodes) in schedule(config) {
        let mut env = phase_env(config, phase)?;
        let mut envs = env_rng(seed, index);
        let eps = match (&learner, phase.kind.is_test()) {
            (Learner::Flat(_), false) => config.ddpg.epsilon_schedule(episodes),
            (Learner::Flat(_), true) => EpsilonSchedule::constant(config.ddpg.epsilon_end),
            (Learner::Table(_), false) => EpsilonSchedule::for_phase(
                config.tabular.epsilon_start,
                config.tabular.epsilon_end,
                config.tabular.epsilon_decay_fraction,
                episodes,
            )?,
            (Learner::Table(_), true) => EpsilonSchedule::constant(config.tabular.epsilon_end),
        };
        for i in 0..episodes {
            let clock = Instant::now();
            let mut log = EpisodeLog::new(phase.kind.name(), logs.len(), seed);
            let start = env.reset(&mut envs);
            match &mut learner {
                Learner::Flat(agent) => {
                    let opts = EpisodeOptions { epsilon: eps.value(i), learn: true, max_steps: None, subgoal: None };
                    run_episode(agent, &mut env, start, &opts, &mut rng, |step| log.record(step))?;
                }
                Learner::Table(q) => {
                    let mut s = start;
                    loop {
                        let a = q.select(&s, eps.value(i), &mut rng);
                        let step = env.step(&[q.config.actions[a]])?;
                        log.record(&step);
                        q.update(&s, a, step.reward, &step.observation, step.terminal());
                        if step.done {
                            break;
                        }
                        s = step.observation;
                    }
                }
            }
            log.wall_time = clock.elapsed().as_secs_f64();
            logs.push(log);
        }
    }
    Ok(logs)
}

/// [`run_baseline`], then writes `episodes.csv` and `run.json` into `out`.
pub fn baseline(config: &RunConfig, method: Method, seed: u64, out: &Path) -> Result<Vec<EpisodeLog>> {
    let logs = run_baseline(config, method, seed)?;
    save_episodes(&logs, &out.join(EPISODES_FILE))?;
    RunSummary::new(method, seed, logs.len()).save(out)?;
    Ok(logs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{observe, spawn_scenario, ScenarioConfig, SubtaskToggles};

    #[test]
    fn table_starts_at_zero() {
        let q = TabularQ::new(TabularConfig::default());
        assert_eq!(q.state_count(), 7 * 7 * 5 * 8);
        let obs = [0.3, -0.2, 0.1, 0.4, 0.9, 0.9, -0.5, 0.2];
        assert_eq!(q.q(&obs), &[0.0; 5]);
        assert_eq!(q.greedy(&obs), 0);
    }

    #[test]
    fn cells_follow_the_geometry() {
        let q = TabularQ::new(TabularConfig::default());
        // Host at the origin heading east at 5 m/s; other 10 m ahead, same heading.
        let enc = |x: f64, y: f64, th: f64, v: f64| [x / POSITION_SCALE, y / POSITION_SCALE, th / ANGLE_SCALE, v / SPEED_SCALE];
        let obs = |other: [f64; 4]| {
            let mut o = enc(0.0, 0.0, 0.0, 5.0).to_vec();
            o.extend_from_slice(&other);
            o
        };
        let ahead = q.state_index(&obs(enc(10.0, 0.0, 0.0, 0.0)));
        // ahead bin (10+30)/60·7 = 4, lateral bin 3, speed bin 2, yaw bin 4.
        assert_eq!(ahead, ((4 * 7 + 3) * 5 + 2) * 8 + 4);
        // Rotating the whole scene leaves the cell unchanged.
        let th = 1.0_f64;
        let mut rotated = enc(0.0, 0.0, th, 5.0).to_vec();
        rotated.extend_from_slice(&enc(10.0 * th.cos(), 10.0 * th.sin(), th, 0.0));
        assert_eq!(q.state_index(&rotated), ahead);
        // Far away clamps into the edge cell.
        assert_eq!(q.state_index(&obs(enc(500.0, 0.0, 0.0, 0.0))) / (5 * 8), 6 * 7 + 3);
    }

    #[test]
    fn update_moves_toward_target() {
        let mut q = TabularQ::new(TabularConfig::default());
        let cfg = ScenarioConfig { subtasks: SubtaskToggles::none(), ..ScenarioConfig::default() };
        let s = observe(&spawn_scenario(&cfg, 0).unwrap());
        q.update(&s, 3, 2.0, &s, true);
        assert!((q.q(&s)[3] - 0.2).abs() < 1e-15);
        q.update(&s, 1, 0.0, &s, false);
        assert!((q.q(&s)[1] - 0.1 * 0.99 * 0.2).abs() < 1e-15);
    }
}
