use rand::Rng;
use serde::{Deserialize, Serialize};

use super::replay::{ReplayBuffer, Transition};
use super::schedule::EpsilonSchedule;
use crate::approximator::{AdamConfig, AdamState, Gradients, Init, Matrix, Mlp, MlpSpec, Mode, OutputActivation};
use crate::env::{ActionSpace, Environment, Step};
use crate::error::{Error, Result};

/// Hyperparameters of one actor-critic learner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DdpgConfig {
    pub actor_hidden: Vec<usize>,
    pub critic_hidden: Vec<usize>,
    pub actor_batch_norm: bool,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub gamma: f64,
    pub tau: f64,
    pub batch_size: usize,
    pub replay_capacity: usize,
    /// Transitions collected before the first update.
    pub warmup: usize,
    pub clip_norm: Option<f64>,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    /// Share of a training phase over which ε decays.
    pub epsilon_decay_fraction: f64,
    /// Bound of the uniform init of the actor's output layer.
    pub actor_final_init: f64,
}

impl Default for DdpgConfig {
    fn default() -> Self {
        Self {
            actor_hidden: vec![400, 300],
            critic_hidden: vec![400, 300],
            actor_batch_norm: true,
            actor_lr: 1e-4,
            critic_lr: 1e-3,
            gamma: 0.99,
            tau: 0.01,
            batch_size: 64,
            replay_capacity: 100_000,
            warmup: 1000,
            clip_norm: Some(10.0),
            epsilon_start: 1.0,
            epsilon_end: 0.05,
            epsilon_decay_fraction: 0.25,
            actor_final_init: 3e-3,
        }
    }
}

impl DdpgConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::InvalidConfig(format!("gamma {} outside [0, 1)", self.gamma)));
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(Error::InvalidConfig(format!("tau {} outside (0, 1]", self.tau)));
        }
        if self.batch_size == 0 || (self.actor_batch_norm && self.batch_size < 2) {
            return Err(Error::InvalidConfig("batch size must be >= 2 with batch normalization".into()));
        }
        if self.replay_capacity < self.batch_size {
            return Err(Error::InvalidConfig("replay capacity smaller than the batch".into()));
        }
        if self.actor_hidden.is_empty() || self.critic_hidden.is_empty() {
            return Err(Error::InvalidConfig("actor and critic need hidden layers".into()));
        }
        EpsilonSchedule::new(self.epsilon_start, self.epsilon_end, 0)?;
        Ok(())
    }

    pub fn epsilon_schedule(&self, phase_episodes: usize) -> EpsilonSchedule {
        EpsilonSchedule::for_phase(self.epsilon_start, self.epsilon_end, self.epsilon_decay_fraction, phase_episodes)
            .expect("validated config")
    }

    pub fn actor_spec(&self, obs_dim: usize, act_dim: usize) -> MlpSpec {
        MlpSpec::new(obs_dim, &self.actor_hidden, act_dim, OutputActivation::Tanh, self.actor_batch_norm)
    }

    /// The action enters the critic concatenated with the state.
    pub fn critic_spec(&self, obs_dim: usize, act_dim: usize) -> MlpSpec {
        MlpSpec::new(obs_dim + act_dim, &self.critic_hidden, 1, OutputActivation::Linear, false)
    }
}

/// Losses of one learning step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateStats {
    pub critic_loss: f64,
    pub actor_objective: f64,
}

/// Deterministic actor-critic with target networks and its own replay memory.
#[derive(Debug, Clone)]
pub struct DdpgAgent {
    pub config: DdpgConfig,
    pub action_space: ActionSpace,
    pub actor: Mlp,
    pub actor_target: Mlp,
    pub critic: Mlp,
    pub critic_target: Mlp,
    pub actor_opt: AdamState,
    pub critic_opt: AdamState,
    pub replay: ReplayBuffer<Transition>,
    pub updates: u64,
}

impl DdpgAgent {
    pub fn new<R: Rng + ?Sized>(config: DdpgConfig, obs_dim: usize, action_space: ActionSpace, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let act_dim = action_space.dim();
        let actor = Mlp::new(
            config.actor_spec(obs_dim, act_dim),
            Init { final_layer_bound: Some(config.actor_final_init) },
            rng,
        )?;
        let critic = Mlp::new(config.critic_spec(obs_dim, act_dim), Init::default(), rng)?;
        Self::from_networks(config, action_space, actor, critic)
    }

    /// Wraps existing online networks; targets start as exact copies.
    pub fn from_networks(config: DdpgConfig, action_space: ActionSpace, actor: Mlp, critic: Mlp) -> Result<Self> {
        config.validate()?;
        let (obs_dim, act_dim) = (actor.input_dim(), action_space.dim());
        if actor.output_dim() != act_dim || critic.input_dim() != obs_dim + act_dim || critic.output_dim() != 1 {
            return Err(Error::Shape(format!(
                "actor {}->{} and critic {}->{} do not fit observation {obs_dim} / action {act_dim}",
                actor.input_dim(),
                actor.output_dim(),
                critic.input_dim(),
                critic.output_dim()
            )));
        }
        let adam = |lr| AdamConfig { clip_norm: config.clip_norm, ..AdamConfig::with_lr(lr) };
        Ok(Self {
            actor_opt: AdamState::new(adam(config.actor_lr), &actor),
            critic_opt: AdamState::new(adam(config.critic_lr), &critic),
            replay: ReplayBuffer::new(config.replay_capacity),
            actor_target: actor.clone(),
            critic_target: critic.clone(),
            actor,
            critic,
            config,
            action_space,
            updates: 0,
        })
    }

    pub fn obs_dim(&self) -> usize {
        self.actor.input_dim()
    }

    /// Greedy action of the online actor (eval mode), mapped onto the bounds.
    pub fn act(&self, s: &[f64]) -> Result<Vec<f64>> {
        let u = self.actor.predict_one(s)?;
        Ok(self.action_space.from_unit(&u))
    }

    /// ε-greedy: with probability ε a uniform action, else the greedy one.
    pub fn select_action<R: Rng + ?Sized>(&self, s: &[f64], epsilon: f64, rng: &mut R) -> Result<Vec<f64>> {
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(Error::Contract(format!("epsilon {epsilon} outside [0, 1]")));
        }
        if epsilon > 0.0 && rng.gen::<f64>() < epsilon {
            return Ok(self.action_space.sample(rng));
        }
        self.act(s)
    }

    fn batch_matrices(&self, batch: &[&Transition]) -> Result<(Matrix, Matrix, Matrix)> {
        if batch.is_empty() {
            return Err(Error::InvalidBatch("empty batch".into()));
        }
        let s = Matrix::from_rows(&batch.iter().map(|t| t.s.as_slice()).collect::<Vec<_>>())?;
        let a = Matrix::from_rows(&batch.iter().map(|t| t.a.as_slice()).collect::<Vec<_>>())?;
        let s2 = Matrix::from_rows(&batch.iter().map(|t| t.s_next.as_slice()).collect::<Vec<_>>())?;
        Ok((s, a, s2))
    }

    fn to_actions(&self, unit: &Matrix) -> Matrix {
        let mut out = unit.clone();
        for r in 0..out.rows() {
            let mapped = self.action_space.from_unit(unit.row(r));
            out.row_mut(r).copy_from_slice(&mapped);
        }
        out
    }

    /// `yᵢ = rᵢ + γ(1−doneᵢ)·Q'(s'ᵢ, π'(s'ᵢ))` with both target networks in eval mode.
    pub fn compute_targets(&self, batch: &[&Transition]) -> Result<Vec<f64>> {
        let (_, _, s2) = self.batch_matrices(batch)?;
        let a2 = self.to_actions(&self.actor_target.predict(&s2)?);
        let q2 = self.critic_target.predict(&s2.hcat(&a2)?)?;
        Ok(batch
            .iter()
            .enumerate()
            .map(|(i, t)| if t.done { t.r } else { t.r + self.config.gamma * q2.get(i, 0) })
            .collect())
    }

    /// Loss and gradient of the critic's mean squared error against fixed targets.
    pub fn critic_loss_gradient(&mut self, batch: &[&Transition], targets: &[f64]) -> Result<(f64, Gradients)> {
        let (s, a, _) = self.batch_matrices(batch)?;
        if targets.len() != batch.len() {
            return Err(Error::Shape(format!("{} targets for {} transitions", targets.len(), batch.len())));
        }
        let tape = self.critic.forward_tape(&s.hcat(&a)?, Mode::Train)?;
        let n = batch.len() as f64;
        let mut upstream = Matrix::zeros(batch.len(), 1);
        let mut loss = 0.0;
        for (i, y) in targets.iter().enumerate() {
            let err = tape.output().get(i, 0) - y;
            loss += err * err / n;
            upstream.set(i, 0, 2.0 * err / n);
        }
        let (grads, _) = self.critic.backward(&tape, &upstream)?;
        Ok((loss, grads))
    }

    /// One Adam step on the critic toward fixed targets; returns the pre-step loss.
    pub fn critic_update_with_targets(&mut self, batch: &[&Transition], targets: &[f64]) -> Result<f64> {
        let (loss, grads) = self.critic_loss_gradient(batch, targets)?;
        self.critic_opt.apply(&mut self.critic, &grads)?;
        Ok(loss)
    }

    pub fn critic_update(&mut self, batch: &[&Transition]) -> Result<f64> {
        let y = self.compute_targets(batch)?;
        self.critic_update_with_targets(batch, &y)
    }

    /// Mean critic value of the actor's actions on `states` and its gradient
    /// with respect to the actor's trainable tensors. The critic is evaluated
    /// in eval mode and never modified.
    pub fn actor_objective_gradient(&mut self, states: &Matrix, mode: Mode) -> Result<(f64, Gradients)> {
        let obs_dim = self.obs_dim();
        let tape_a = self.actor.forward_tape(states, mode)?;
        let actions = self.to_actions(tape_a.output());
        let tape_c = self.critic.eval_tape(&states.hcat(&actions)?)?;
        let n = states.rows() as f64;
        let objective = tape_c.output().as_slice().iter().sum::<f64>() / n;
        // Backpropagate ∂(−J)/∂output = −1/N per row.
        let upstream = Matrix::from_vec(states.rows(), 1, vec![-1.0 / n; states.rows()])?;
        let (_, dinput) = self.critic.backward(&tape_c, &upstream)?;
        let act_dim = self.action_space.dim();
        let scale = self.action_space.unit_scale();
        let mut du = dinput.columns(obs_dim, obs_dim + act_dim);
        for r in 0..du.rows() {
            for (j, v) in du.row_mut(r).iter_mut().enumerate() {
                *v *= scale[j];
            }
        }
        let (mut grads, _) = self.actor.backward(&tape_a, &du)?;
        // Report the gradient of J itself (the backward pass produced ∇(−J)).
        grads.scale(-1.0);
        Ok((objective, grads))
    }

    /// One deterministic-policy-gradient ascent step; returns the pre-step objective.
    pub fn actor_update(&mut self, batch: &[&Transition]) -> Result<f64> {
        let (s, _, _) = self.batch_matrices(batch)?;
        let (objective, mut grads) = self.actor_objective_gradient(&s, Mode::Train)?;
        grads.scale(-1.0);
        self.actor_opt.apply(&mut self.actor, &grads)?;
        Ok(objective)
    }

    pub fn soft_update_targets(&mut self) -> Result<()> {
        self.actor_target.soft_update_from(&self.actor, self.config.tau)?;
        self.critic_target.soft_update_from(&self.critic, self.config.tau)
    }

    /// Stores a transition after checking it is feasible.
    pub fn remember(&mut self, t: Transition) -> Result<()> {
        if !self.action_space.contains(&t.a) {
            return Err(Error::Contract(format!("action {:?} outside its bounds", t.a)));
        }
        self.replay.push(t);
        Ok(())
    }

    /// Whether enough experience has been collected to start updating.
    pub fn warm(&self) -> bool {
        self.replay.len() >= self.config.warmup.max(self.config.batch_size)
    }

    /// Critic step, actor step and target blending on one sampled minibatch,
    /// or nothing while the replay memory is still warming up.
    pub fn learn<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Option<UpdateStats>> {
        if !self.warm() {
            return Ok(None);
        }
        let owned: Vec<Transition> =
            self.replay.sample(self.config.batch_size, rng)?.into_iter().cloned().collect();
        let batch: Vec<&Transition> = owned.iter().collect();
        let critic_loss = self.critic_update(&batch)?;
        let actor_objective = self.actor_update(&batch)?;
        let stats = UpdateStats { critic_loss, actor_objective };
        self.soft_update_targets()?;
        self.updates += 1;
        Ok(Some(stats))
    }
}

/// A subgoal that ends an episode early with a bonus reward.
pub struct Subgoal<'a> {
    pub reached: &'a dyn Fn(&[f64]) -> bool,
    pub bonus: f64,
}

/// How [`run_episode`] drives the agent.
pub struct EpisodeOptions<'a> {
    pub epsilon: f64,
    /// Store transitions and update the networks after every step.
    pub learn: bool,
    /// Cap on the episode length on top of the environment's own limit.
    pub max_steps: Option<usize>,
    pub subgoal: Option<Subgoal<'a>>,
}

/// What happened in one episode.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeOutcome<I> {
    /// Undiscounted sum of the (shaped) rewards.
    pub episode_return: f64,
    pub steps: usize,
    /// Ended on a genuine terminal of the environment.
    pub terminal: bool,
    pub truncated: bool,
    pub subgoal_reached: bool,
    /// Info of the last environment step.
    pub last_info: I,
    pub updates: usize,
}

/// Runs one episode from the environment's current state, which the caller
/// has already reset. `on_step` sees every raw environment step.
pub fn run_episode<E, R, F>(
    agent: &mut DdpgAgent,
    env: &mut E,
    start: Vec<f64>,
    opts: &EpisodeOptions<'_>,
    rng: &mut R,
    mut on_step: F,
) -> Result<EpisodeOutcome<E::Info>>
where
    E: Environment,
    R: Rng + ?Sized,
    F: FnMut(&Step<E::Info>),
{
    let mut s = start;
    let mut out = EpisodeOutcome {
        episode_return: 0.0,
        steps: 0,
        terminal: false,
        truncated: false,
        subgoal_reached: false,
        last_info: E::Info::default(),
        updates: 0,
    };
    // At least one step is always taken, even when the start already lies
    // inside the subgoal.
    loop {
        let a = agent.select_action(&s, opts.epsilon, rng)?;
        let step = env.step(&a)?;
        on_step(&step);
        out.steps += 1;
        let mut reward = step.reward;
        let mut done = step.terminal();
        let mut finished = step.done;
        if let Some(g) = &opts.subgoal {
            if !step.done && (g.reached)(&step.observation) {
                reward += g.bonus;
                done = true;
                finished = true;
                out.subgoal_reached = true;
            } else if step.done {
                // The terminal step may coincide with entering the subgoal
                // (e.g. the subgoal is the task goal itself); its reward is
                // already part of the environment's.
                out.subgoal_reached = (g.reached)(&step.observation);
            }
        }
        let capped = opts.max_steps.is_some_and(|m| out.steps >= m);
        out.episode_return += reward;
        if opts.learn {
            agent.remember(Transition { s: s.clone(), a, r: reward, s_next: step.observation.clone(), done })?;
            if agent.learn(rng)?.is_some() {
                out.updates += 1;
            }
        }
        out.terminal = step.terminal();
        out.truncated = step.truncated || (capped && !finished);
        out.last_info = step.info;
        s = step.observation;
        if finished || capped {
            break;
        }
    }
    Ok(out)
}

/// One ε-greedy training episode from a fresh reset, with per-step updates
/// once the replay memory is warm.
pub fn train_episode<E, R>(
    agent: &mut DdpgAgent,
    env: &mut E,
    schedule: &EpsilonSchedule,
    episode_index: usize,
    rng: &mut R,
) -> Result<EpisodeOutcome<E::Info>>
where
    E: Environment,
    R: Rng + ?Sized,
{
    let start = env.reset(rng);
    let opts = EpisodeOptions { epsilon: schedule.value(episode_index), learn: true, max_steps: None, subgoal: None };
    run_episode(agent, env, start, &opts, rng, |_| {})
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::approximator::{MlpSpec, OutputActivation};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small_config() -> DdpgConfig {
        DdpgConfig {
            actor_hidden: vec![8],
            critic_hidden: vec![8],
            actor_batch_norm: false,
            batch_size: 4,
            warmup: 4,
            replay_capacity: 100,
            ..DdpgConfig::default()
        }
    }

    /// actor: u = tanh(0.5·relu(s)); critic: Q = 2·relu(s + a) + 0.1.
    fn hand_agent(gamma: f64) -> DdpgAgent {
        let mut actor = Mlp::zeros(MlpSpec::new(1, &[1], 1, OutputActivation::Tanh, false)).unwrap();
        actor.layers_mut()[0].weights[0] = 1.0;
        actor.layers_mut()[1].weights[0] = 0.5;
        let mut critic = Mlp::zeros(MlpSpec::new(2, &[1], 1, OutputActivation::Linear, false)).unwrap();
        critic.layers_mut()[0].weights.copy_from_slice(&[1.0, 1.0]);
        critic.layers_mut()[1].weights[0] = 2.0;
        critic.layers_mut()[1].bias[0] = 0.1;
        let config = DdpgConfig { gamma, batch_size: 1, actor_batch_norm: false, ..small_config() };
        DdpgAgent::from_networks(config, ActionSpace::symmetric(1), actor, critic).unwrap()
    }

    fn transition(s: f64, a: f64, r: f64, s2: f64, done: bool) -> Transition {
        Transition { s: vec![s], a: vec![a], r, s_next: vec![s2], done }
    }

    #[test]
    fn terminal_targets_do_not_bootstrap() {
        let agent = hand_agent(0.99);
        let t = transition(0.2, 0.1, -3.5, 0.7, true);
        assert_eq!(agent.compute_targets(&[&t]).unwrap(), vec![-3.5]);
        let zero = hand_agent(0.0);
        let t = transition(0.2, 0.1, 1.25, 0.7, false);
        assert_eq!(zero.compute_targets(&[&t]).unwrap(), vec![1.25]);
    }

    #[test]
    fn target_matches_hand_evaluation() {
        let agent = hand_agent(0.9);
        let t = transition(0.0, 0.0, 0.5, 0.8, false);
        let a2 = (0.5_f64 * 0.8).tanh();
        let expected = 0.5 + 0.9 * (2.0 * (0.8 + a2) + 0.1);
        let y = agent.compute_targets(&[&t]).unwrap();
        assert!((y[0] - expected).abs() < 1e-12);
    }

    #[test]
    fn critic_loss_is_mean_squared_error() {
        let mut agent = hand_agent(0.9);
        // Q(-5, 0) = 2·relu(-5) + 0.1 = 0.1; zero the bias to get Q = 0.
        agent.critic.layers_mut()[1].bias[0] = 0.0;
        let t = transition(-5.0, 0.0, 0.0, 0.0, true);
        let loss = agent.critic_update_with_targets(&[&t], &[2.0]).unwrap();
        assert_eq!(loss, 4.0);
    }

    #[test]
    fn critic_at_its_targets_stays_put() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut agent = DdpgAgent::new(small_config(), 3, ActionSpace::symmetric(1), &mut rng).unwrap();
        let batch: Vec<Transition> = (0..6)
            .map(|i| Transition { s: vec![0.1 * i as f64, -0.2, 0.3], a: vec![0.5], r: 0.0, s_next: vec![0.0; 3], done: true })
            .collect();
        let refs: Vec<&Transition> = batch.iter().collect();
        let s = Matrix::from_rows(&batch.iter().map(|t| t.s.as_slice()).collect::<Vec<_>>()).unwrap();
        let a = Matrix::from_rows(&batch.iter().map(|t| t.a.as_slice()).collect::<Vec<_>>()).unwrap();
        let q = agent.critic.predict(&s.hcat(&a).unwrap()).unwrap().into_vec();
        let before = agent.critic.clone();
        let (loss, grads) = agent.critic_loss_gradient(&refs, &q).unwrap();
        assert_eq!(loss, 0.0);
        assert!(grads.is_zero());
        agent.critic_update_with_targets(&refs, &q).unwrap();
        assert_eq!(agent.critic, before);
    }

    #[test]
    fn critic_descends_on_a_frozen_batch() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut agent = DdpgAgent::new(small_config(), 2, ActionSpace::symmetric(1), &mut rng).unwrap();
        let batch: Vec<Transition> = (0..16)
            .map(|_| Transition {
                s: vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)],
                a: vec![rng.gen_range(-1.0..1.0)],
                r: 0.0,
                s_next: vec![0.0, 0.0],
                done: true,
            })
            .collect();
        let y: Vec<f64> = (0..16).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let refs: Vec<&Transition> = batch.iter().collect();
        let losses: Vec<f64> = (0..100).map(|_| agent.critic_update_with_targets(&refs, &y).unwrap()).collect();
        let windows: Vec<f64> = losses.chunks(10).map(|w| w.iter().sum::<f64>() / 10.0).collect();
        for w in windows.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "windowed losses {windows:?}");
        }
    }

    #[test]
    fn critic_blind_to_actions_gives_zero_actor_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut agent = DdpgAgent::new(small_config(), 3, ActionSpace::symmetric(1), &mut rng).unwrap();
        let w = &mut agent.critic.layers_mut()[0];
        for o in 0..w.outputs {
            w.weights[o * w.inputs + 3] = 0.0;
        }
        let s = Matrix::from_rows(&[[0.1, 0.2, 0.3], [-0.5, 0.4, 0.0]]).unwrap();
        let (_, g) = agent.actor_objective_gradient(&s, Mode::Train).unwrap();
        assert!(g.is_zero());
    }

    #[test]
    fn actor_climbs_to_the_critic_maximizer() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let config = DdpgConfig {
            actor_hidden: vec![4],
            critic_hidden: vec![32, 32],
            actor_batch_norm: false,
            actor_lr: 1e-3,
            batch_size: 32,
            ..small_config()
        };
        let mut agent = DdpgAgent::new(config, 1, ActionSpace::symmetric(1), &mut rng).unwrap();
        // Fit Q(s, a) = −(a − 0.3)² first, then freeze the critic.
        for _ in 0..3000 {
            let batch: Vec<Transition> = (0..32)
                .map(|_| {
                    let a = rng.gen_range(-1.0..1.0);
                    Transition { s: vec![rng.gen_range(-1.0..1.0)], a: vec![a], r: 0.0, s_next: vec![0.0], done: true }
                })
                .collect();
            let y: Vec<f64> = batch.iter().map(|t| -(t.a[0] - 0.3f64).powi(2)).collect();
            agent.critic_update_with_targets(&batch.iter().collect::<Vec<_>>(), &y).unwrap();
        }
        let frozen = agent.critic.clone();
        let states: Vec<Transition> =
            (0..32).map(|i| transition(-1.0 + 2.0 * i as f64 / 31.0, 0.0, 0.0, 0.0, true)).collect();
        let refs: Vec<&Transition> = states.iter().collect();
        let mut reached = None;
        for step in 0..2000 {
            agent.actor_update(&refs).unwrap();
            let worst = [-0.9, 0.0, 0.7].iter().map(|s| (agent.act(&[*s]).unwrap()[0] - 0.3).abs()).fold(0.0, f64::max);
            if worst < 0.05 {
                reached = Some(step);
                break;
            }
        }
        assert!(reached.is_some(), "actor did not approach 0.3");
        assert_eq!(agent.critic, frozen);
    }

    #[test]
    fn actor_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let config = DdpgConfig { actor_hidden: vec![6, 5], critic_hidden: vec![7], actor_batch_norm: true, ..small_config() };
        let mut agent = DdpgAgent::new(config, 3, ActionSpace { low: vec![-2.0, 0.0], high: vec![2.0, 1.0] }, &mut rng).unwrap();
        // Non-trivial running statistics so eval-mode normalization matters.
        let warm = Matrix::from_rows(&(0..8).map(|_| (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect::<Vec<_>>()).collect::<Vec<_>>()).unwrap();
        for _ in 0..5 {
            agent.actor.forward(&warm, Mode::Train).unwrap();
        }
        let s = Matrix::from_rows(&[[0.3, -0.2, 0.8], [-0.6, 0.1, 0.4], [0.9, 0.5, -0.7]]).unwrap();
        let (_, g) = agent.actor_objective_gradient(&s, Mode::Eval).unwrap();
        let objective = |a: &DdpgAgent| {
            let u = a.actor.predict(&s).unwrap();
            let act = a.to_actions(&u);
            a.critic.predict(&s.hcat(&act).unwrap()).unwrap().as_slice().iter().sum::<f64>() / 3.0
        };
        let h = 1e-5;
        let n_tensors = agent.actor.trainable().len();
        for t in 0..n_tensors {
            for i in 0..agent.actor.trainable()[t].len() {
                let mut plus = agent.clone();
                plus.actor.trainable_mut()[t][i] += h;
                let mut minus = agent.clone();
                minus.actor.trainable_mut()[t][i] -= h;
                let fd = (objective(&plus) - objective(&minus)) / (2.0 * h);
                let an = g.0[t][i];
                let err = (fd - an).abs() / fd.abs().max(an.abs()).max(1e-6);
                assert!(err < 1e-3, "tensor {t} index {i}: analytic {an} vs fd {fd}");
            }
        }
    }

    /// Terminates on the first step with reward 10.
    #[derive(Debug, Default)]
    struct OneShot;

    impl Environment for OneShot {
        type Info = ();
        fn observation_dim(&self) -> usize {
            1
        }
        fn action_space(&self) -> ActionSpace {
            ActionSpace::symmetric(1)
        }
        fn reset<R: Rng + ?Sized>(&mut self, _rng: &mut R) -> Vec<f64> {
            vec![0.0]
        }
        fn observe(&self) -> Vec<f64> {
            vec![0.0]
        }
        fn step(&mut self, _a: &[f64]) -> Result<Step<()>> {
            Ok(Step { observation: vec![1.0], reward: 10.0, done: true, truncated: false, info: () })
        }
    }

    #[test]
    fn single_step_episode_is_logged() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut agent = DdpgAgent::new(small_config(), 1, ActionSpace::symmetric(1), &mut rng).unwrap();
        let out = train_episode(&mut agent, &mut OneShot, &EpsilonSchedule::constant(0.5), 0, &mut rng).unwrap();
        assert_eq!(out.episode_return, 10.0);
        assert_eq!(out.steps, 1);
        assert!(out.terminal);
    }

    #[test]
    fn no_updates_before_warmup() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let config = DdpgConfig { warmup: 50, ..small_config() };
        let mut agent = DdpgAgent::new(config, 1, ActionSpace::symmetric(1), &mut rng).unwrap();
        let (actor, critic) = (agent.actor.clone(), agent.critic.clone());
        for e in 0..49 {
            let out = train_episode(&mut agent, &mut OneShot, &EpsilonSchedule::constant(1.0), e, &mut rng).unwrap();
            assert_eq!(out.updates, 0);
        }
        assert_eq!(agent.actor, actor);
        assert_eq!(agent.critic, critic);
        let out = train_episode(&mut agent, &mut OneShot, &EpsilonSchedule::constant(1.0), 49, &mut rng).unwrap();
        assert_eq!(out.updates, 1);
        assert_ne!(agent.critic, critic);
    }

    #[test]
    fn greedy_selection_is_deterministic_and_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let space = ActionSpace { low: vec![0.0, -1.0], high: vec![1.0, 1.0] };
        let agent = DdpgAgent::new(small_config(), 2, space.clone(), &mut rng).unwrap();
        let a = agent.select_action(&[0.3, 0.1], 0.0, &mut rng).unwrap();
        assert_eq!(a, agent.select_action(&[0.3, 0.1], 0.0, &mut rng).unwrap());
        let n = 10_000;
        let mut mean = [0.0; 2];
        for _ in 0..n {
            let a = agent.select_action(&[0.3, 0.1], 1.0, &mut rng).unwrap();
            assert!(space.contains(&a));
            mean[0] += a[0] / n as f64;
            mean[1] += a[1] / n as f64;
        }
        assert!((mean[0] - 0.5).abs() < 0.05 && mean[1].abs() < 0.05, "{mean:?}");
    }
}
