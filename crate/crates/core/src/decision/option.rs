use super::agent::SmdpTransition;
use crate::env::{Environment, Step};
use crate::error::Result;
use crate::library::MotionPrimitive;

/// Result of running one option to its end.
#[derive(Debug, Clone, PartialEq)]
pub struct OptionRun {
    pub transition: SmdpTransition,
    /// Undiscounted per-step rewards, in order.
    pub rewards: Vec<f64>,
    /// The episode ended, for any reason (the transition's `done` is only
    /// set for genuine terminals).
    pub episode_over: bool,
    pub reached_termination: bool,
}

/// Runs `mp`'s greedy policy from the environment's current state for at
/// least one step, until its termination set holds, the episode ends, or
/// `t_max` steps have passed. `on_step` sees every environment step.
pub fn execute_option<E, F>(env: &mut E, mp: &MotionPrimitive, gamma: f64, t_max: usize, mut on_step: F) -> Result<OptionRun>
where
    E: Environment,
    F: FnMut(&Step<E::Info>),
{
    let s0 = env.observe();
    let mut s = s0.clone();
    let mut reward = 0.0;
    let mut discount = 1.0;
    let mut rewards = Vec::new();
    let (mut done, mut episode_over, mut reached) = (false, false, false);
    while rewards.len() < t_max.max(1) {
        let step = env.step(&mp.policy.act(&s)?)?;
        on_step(&step);
        reward += discount * step.reward;
        discount *= gamma;
        rewards.push(step.reward);
        reached = mp.termination.contains(&step.observation);
        let (over, terminal) = (step.done, step.terminal());
        s = step.observation;
        if over {
            done = terminal;
            episode_over = true;
            break;
        }
        if reached {
            break;
        }
    }
    Ok(OptionRun {
        transition: SmdpTransition { s: s0, option: mp.id, reward, duration: rewards.len() as u32, s_next: s, done },
        rewards,
        episode_over,
        reached_termination: reached,
    })
}

#[cfg(test)]
mod tests {
    use rand::Rng;

    use super::*;
    use crate::env::ActionSpace;
    use crate::error::Error;
    use crate::library::tests::primitive_at;
    use crate::skill::{GoalDisk, TerminationSet};

    /// Emits the scripted rewards, one per step, then terminates. The
    /// observation is `(step, 0)`.
    struct Scripted {
        rewards: Vec<f64>,
        t: usize,
    }

    impl Environment for Scripted {
        type Info = ();
        fn observation_dim(&self) -> usize {
            2
        }
        fn action_space(&self) -> ActionSpace {
            ActionSpace::symmetric(1)
        }
        fn reset<R: Rng + ?Sized>(&mut self, _rng: &mut R) -> Vec<f64> {
            self.t = 0;
            self.observe()
        }
        fn observe(&self) -> Vec<f64> {
            vec![self.t as f64, 0.0]
        }
        fn step(&mut self, _a: &[f64]) -> crate::error::Result<Step<()>> {
            if self.t >= self.rewards.len() {
                return Err(Error::EpisodeDone);
            }
            let reward = self.rewards[self.t];
            self.t += 1;
            let done = self.t == self.rewards.len();
            Ok(Step { observation: self.observe(), reward, done, truncated: false, info: () })
        }
    }

    fn never() -> TerminationSet {
        TerminationSet::Goal(GoalDisk { center: vec![1e9], radius: 0.0, features: vec![0], scale: 1.0 })
    }

    #[test]
    fn two_step_discounted_sum() {
        let mp = primitive_at([0.0, 0.0], never(), 1);
        let mut env = Scripted { rewards: vec![1.0, 2.0], t: 0 };
        let run = execute_option(&mut env, &mp, 0.99, 200, |_| {}).unwrap();
        assert_eq!(run.transition.duration, 2);
        assert!((run.transition.reward - 2.98).abs() < 1e-12);
        assert!(run.transition.done && run.episode_over);
        let mut env = Scripted { rewards: vec![1.0, 2.0, 3.0], t: 0 };
        let run = execute_option(&mut env, &mp, 0.0, 200, |_| {}).unwrap();
        assert_eq!(run.transition.reward, 1.0);
        assert_eq!(run.rewards, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn satisfied_termination_still_takes_one_step() {
        let everywhere = TerminationSet::Goal(GoalDisk { center: vec![0.0], radius: 1e9, features: vec![0], scale: 1.0 });
        let mp = primitive_at([0.0, 0.0], everywhere, 1);
        let mut env = Scripted { rewards: vec![0.5; 10], t: 0 };
        let run = execute_option(&mut env, &mp, 0.9, 200, |_| {}).unwrap();
        assert_eq!(run.transition.duration, 1);
        assert!(run.reached_termination && !run.episode_over);
    }

    #[test]
    fn step_cap_and_reward_consistency() {
        let mp = primitive_at([0.0, 0.0], never(), 1);
        let rewards: Vec<f64> = (0..50).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut env = Scripted { rewards: rewards.clone(), t: 0 };
        let mut logged = Vec::new();
        let run = execute_option(&mut env, &mp, 0.95, 20, |s| logged.push(s.reward)).unwrap();
        assert_eq!(run.transition.duration, 20);
        let expected: f64 = logged.iter().enumerate().map(|(k, r)| 0.95f64.powi(k as i32) * r).sum();
        assert!((run.transition.reward - expected).abs() < 1e-12);
        assert!(!run.transition.done);
    }
}
