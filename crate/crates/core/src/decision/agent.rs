use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::approximator::{AdamConfig, AdamState, Init, Matrix, Mlp, MlpSpec, Mode, OutputActivation};
use crate::error::{Error, Result};
use crate::execution::{EpsilonSchedule, ReplayBuffer};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DecisionConfig {
    pub hidden: Vec<usize>,
    pub lr: f64,
    pub gamma: f64,
    pub tau: f64,
    pub batch_size: usize,
    pub replay_capacity: usize,
    /// Discount continuation values by `γ^d` for an option that ran `d` steps;
    /// `false` uses a single `γ` regardless of duration.
    pub smdp_gamma_power: bool,
    /// Step cap of one option invocation.
    pub t_max: usize,
    /// Half-width of the uniform init of a newly added output unit.
    pub grow_init: f64,
    pub clip_norm: Option<f64>,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    pub epsilon_decay_fraction: f64,
}

impl Default for DecisionConfig {
    fn default() -> Self {
        Self {
            hidden: vec![256, 128],
            lr: 1e-4,
            gamma: 0.99,
            tau: 1e-3,
            batch_size: 64,
            replay_capacity: 20_000,
            smdp_gamma_power: true,
            t_max: 200,
            grow_init: 1e-3,
            clip_norm: Some(10.0),
            epsilon_start: 1.0,
            epsilon_end: 0.05,
            epsilon_decay_fraction: 0.25,
        }
    }
}

impl DecisionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.gamma) || !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(Error::InvalidConfig("decision gamma must be in [0, 1) and tau in (0, 1]".into()));
        }
        if self.batch_size == 0 || self.replay_capacity < self.batch_size || self.t_max == 0 || self.hidden.is_empty() {
            return Err(Error::InvalidConfig("decision batch, replay, step cap and hidden layers must be positive".into()));
        }
        EpsilonSchedule::new(self.epsilon_start, self.epsilon_end, 0)?;
        Ok(())
    }

    pub fn epsilon_schedule(&self, episodes: usize) -> EpsilonSchedule {
        EpsilonSchedule::for_phase(self.epsilon_start, self.epsilon_end, self.epsilon_decay_fraction, episodes)
            .expect("validated config")
    }

    pub fn spec(&self, obs_dim: usize, width: usize) -> MlpSpec {
        MlpSpec::new(obs_dim, &self.hidden, width, OutputActivation::Linear, false)
    }
}

/// Outcome of running one option to its end.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmdpTransition {
    pub s: Vec<f64>,
    pub option: usize,
    /// `Σ_{k<d} γᵏ r_k`.
    pub reward: f64,
    pub duration: u32,
    pub s_next: Vec<f64>,
    pub done: bool,
}

/// Value network over options whose output layer grows with the library.
#[derive(Debug, Clone)]
pub struct DecisionAgent {
    pub config: DecisionConfig,
    pub online: Mlp,
    pub target: Mlp,
    pub opt: AdamState,
    pub replay: ReplayBuffer<SmdpTransition>,
    /// Number of output units added since construction.
    pub grow_count: usize,
    pub updates: u64,
}

impl DecisionAgent {
    pub fn new<R: Rng + ?Sized>(config: DecisionConfig, obs_dim: usize, width: usize, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let online = Mlp::new(config.spec(obs_dim, width), Init::default(), rng)?;
        Self::from_network(config, online)
    }

    /// Wraps a (e.g. loaded) online network; the target starts as a copy.
    pub fn from_network(config: DecisionConfig, online: Mlp) -> Result<Self> {
        config.validate()?;
        let opt = AdamState::new(AdamConfig { clip_norm: config.clip_norm, ..AdamConfig::with_lr(config.lr) }, &online);
        Ok(Self {
            replay: ReplayBuffer::new(config.replay_capacity),
            target: online.clone(),
            online,
            opt,
            config,
            grow_count: 0,
            updates: 0,
        })
    }

    pub fn width(&self) -> usize {
        self.online.output_dim()
    }

    pub fn q_values(&self, s: &[f64]) -> Result<Vec<f64>> {
        self.online.predict_one(s)
    }

    /// ε-greedy over `available`: a uniform member with probability ε, else
    /// the highest online value among them (ties to the lowest id).
    pub fn select_option<R: Rng + ?Sized>(&self, s: &[f64], available: &[usize], epsilon: f64, rng: &mut R) -> Result<usize> {
        if available.is_empty() {
            return Err(Error::NoAvailableOption);
        }
        if let Some(&bad) = available.iter().find(|&&o| o >= self.width()) {
            return Err(Error::Shape(format!("option {bad} but the network has {} outputs", self.width())));
        }
        if available.len() == 1 {
            return Ok(available[0]);
        }
        if epsilon > 0.0 && rng.gen::<f64>() < epsilon {
            return Ok(available[rng.gen_range(0..available.len())]);
        }
        let q = self.q_values(s)?;
        let mut sorted = available.to_vec();
        sorted.sort_unstable();
        let mut best = sorted[0];
        for &o in &sorted[1..] {
            if q[o] > q[best] {
                best = o;
            }
        }
        Ok(best)
    }

    fn discount(&self, duration: u32) -> f64 {
        if self.config.smdp_gamma_power {
            self.config.gamma.powi(duration as i32)
        } else {
            self.config.gamma
        }
    }

    /// `yᵢ = Rᵢ + (1−doneᵢ)·γ^{dᵢ}·Q'(s'ᵢ, argmax_o Q(s'ᵢ, o))`: the online
    /// network picks the option, the target network values it.
    pub fn ddqn_target(&self, batch: &[&SmdpTransition]) -> Result<Vec<f64>> {
        if batch.is_empty() {
            return Err(Error::InvalidBatch("empty batch".into()));
        }
        let s2 = Matrix::from_rows(&batch.iter().map(|t| t.s_next.as_slice()).collect::<Vec<_>>())?;
        let q_online = self.online.predict(&s2)?;
        let q_target = self.target.predict(&s2)?;
        Ok(batch
            .iter()
            .enumerate()
            .map(|(i, t)| {
                if t.done {
                    return t.reward;
                }
                let row = q_online.row(i);
                let mut best = 0;
                for (o, v) in row.iter().enumerate() {
                    if *v > row[best] {
                        best = o;
                    }
                }
                t.reward + self.discount(t.duration) * q_target.get(i, best)
            })
            .collect())
    }

    /// Squared error on the taken options, one Adam step, then the target
    /// blends toward the online network. Returns the pre-step loss.
    pub fn decision_update(&mut self, batch: &[&SmdpTransition]) -> Result<f64> {
        let y = self.ddqn_target(batch)?;
        self.update_toward(batch, &y)
    }

    pub fn update_toward(&mut self, batch: &[&SmdpTransition], y: &[f64]) -> Result<f64> {
        let s = Matrix::from_rows(&batch.iter().map(|t| t.s.as_slice()).collect::<Vec<_>>())?;
        let tape = self.online.forward_tape(&s, Mode::Train)?;
        let n = batch.len() as f64;
        let mut upstream = Matrix::zeros(batch.len(), self.width());
        let mut loss = 0.0;
        for (i, t) in batch.iter().enumerate() {
            if t.option >= self.width() {
                return Err(Error::Shape(format!("option {} but the network has {} outputs", t.option, self.width())));
            }
            let err = tape.output().get(i, t.option) - y[i];
            loss += err * err / n;
            upstream.set(i, t.option, 2.0 * err / n);
        }
        let (grads, _) = self.online.backward(&tape, &upstream)?;
        self.opt.apply(&mut self.online, &grads)?;
        self.target.soft_update_from(&self.online, self.config.tau)?;
        self.updates += 1;
        Ok(loss)
    }

    pub fn remember(&mut self, t: SmdpTransition) {
        self.replay.push(t);
    }

    /// One update on a sampled minibatch once the replay memory holds a batch.
    pub fn learn<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Option<f64>> {
        if self.replay.len() < self.config.batch_size || self.width() == 0 {
            return Ok(None);
        }
        let owned: Vec<SmdpTransition> = self.replay.sample(self.config.batch_size, rng)?.into_iter().cloned().collect();
        let batch: Vec<&SmdpTransition> = owned.iter().collect();
        Ok(Some(self.decision_update(&batch)?))
    }

    /// Adds one output unit to both networks. Existing weights are kept
    /// bit-for-bit; the new row is drawn uniformly from `±grow_init` and
    /// copied into the target; its Adam moments start at zero.
    pub fn grow_output<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<usize> {
        let fan_in = *self.online.spec().layer_sizes.iter().rev().nth(1).expect("validated spec");
        let b = self.config.grow_init;
        let weights: Vec<f64> = (0..fan_in).map(|_| rng.gen_range(-b..=b)).collect();
        let bias = rng.gen_range(-b..=b);
        self.online.push_output_unit(&weights, bias)?;
        self.target.push_output_unit(&weights, bias)?;
        self.opt.resize_for(&self.online);
        self.grow_count += 1;
        Ok(self.width() - 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn config() -> DecisionConfig {
        DecisionConfig { hidden: vec![4], ..DecisionConfig::default() }
    }

    /// Constant outputs: zero weights everywhere, output biases `q`.
    fn constant(q: &[f64]) -> Mlp {
        let mut net = Mlp::zeros(config().spec(2, q.len())).unwrap();
        let last = net.layers().len() - 1;
        net.layers_mut()[last].bias.copy_from_slice(q);
        net
    }

    fn agent_with(online: &[f64], target: &[f64], gamma: f64) -> DecisionAgent {
        let mut a = DecisionAgent::from_network(DecisionConfig { gamma, ..config() }, constant(online)).unwrap();
        a.target = constant(target);
        a
    }

    fn t(option: usize, reward: f64, duration: u32, done: bool) -> SmdpTransition {
        SmdpTransition { s: vec![0.1, 0.2], option, reward, duration, s_next: vec![0.3, 0.4], done }
    }

    #[test]
    fn masked_argmax() {
        let a = agent_with(&[0.1, 0.9, 0.4], &[0.0; 3], 0.9);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(a.select_option(&[0.0, 0.0], &[0, 1, 2], 0.0, &mut rng).unwrap(), 1);
        assert_eq!(a.select_option(&[0.0, 0.0], &[0, 2], 0.0, &mut rng).unwrap(), 2);
        assert_eq!(a.select_option(&[0.0, 0.0], &[0], 1.0, &mut rng).unwrap(), 0);
        assert!(matches!(a.select_option(&[0.0, 0.0], &[], 0.0, &mut rng), Err(Error::NoAvailableOption)));
        let tie = agent_with(&[0.5, 0.5, 0.5], &[0.0; 3], 0.9);
        assert_eq!(tie.select_option(&[0.0, 0.0], &[2, 1], 0.0, &mut rng).unwrap(), 1);
        for _ in 0..200 {
            let o = a.select_option(&[0.0, 0.0], &[0, 2], 0.7, &mut rng).unwrap();
            assert!(o == 0 || o == 2);
        }
    }

    #[test]
    fn double_estimator_separates_choice_and_value() {
        // Online prefers option 1; the target values options at (5, 3).
        let a = agent_with(&[0.0, 1.0], &[5.0, 3.0], 0.5);
        let y = a.ddqn_target(&[&t(0, 1.0, 2, false)]).unwrap();
        assert_eq!(y, vec![1.75]);
        assert_eq!(a.ddqn_target(&[&t(0, 1.0, 2, true)]).unwrap(), vec![1.0]);
        let single = agent_with(&[0.2], &[4.0], 0.5);
        assert_eq!(single.ddqn_target(&[&t(0, 1.0, 3, false)]).unwrap(), vec![1.0 + 0.125 * 4.0]);
        let plain = DecisionAgent { config: DecisionConfig { smdp_gamma_power: false, ..a.config.clone() }, ..a };
        assert_eq!(plain.ddqn_target(&[&t(0, 1.0, 2, false)]).unwrap(), vec![2.5]);
    }

    #[test]
    fn longer_options_are_discounted_more() {
        let a = agent_with(&[0.0, 1.0], &[5.0, 3.0], 0.9);
        let ys: Vec<f64> = (1..10).map(|d| a.ddqn_target(&[&t(0, 1.0, d, false)]).unwrap()[0]).collect();
        assert!(ys.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn loss_is_squared_error_on_the_taken_option() {
        let mut a = agent_with(&[1.0, 7.0], &[0.0, 0.0], 0.9);
        assert_eq!(a.update_toward(&[&t(0, 0.0, 1, true)], &[3.0]).unwrap(), 4.0);
        let mut b = agent_with(&[1.0, 7.0], &[0.0, 0.0], 0.9);
        let before = b.online.clone();
        assert_eq!(b.update_toward(&[&t(1, 0.0, 1, true)], &[7.0]).unwrap(), 0.0);
        assert_eq!(b.online, before);
    }

    #[test]
    fn growth_preserves_old_outputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut a = DecisionAgent::new(config(), 3, 0, &mut rng).unwrap();
        for n in 1..=4 {
            a.grow_output(&mut rng).unwrap();
            assert_eq!(a.width(), n);
            assert_eq!(a.target.output_dim(), n);
        }
        let states: Vec<Vec<f64>> = (0..100).map(|_| (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let before: Vec<Vec<f64>> = states.iter().map(|s| a.q_values(s).unwrap()).collect();
        let old_weights = a.online.layers().to_vec();
        a.grow_output(&mut rng).unwrap();
        for (s, b) in states.iter().zip(&before) {
            let after = a.q_values(s).unwrap();
            assert!(after[..4].iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
        let w = &a.online.layers()[1];
        assert_eq!(&w.weights[..old_weights[1].weights.len()], &old_weights[1].weights[..]);
        assert!(w.weights[old_weights[1].weights.len()..].iter().all(|v| v.abs() <= 1e-3));
        assert!(a.opt.first.iter().zip(a.online.trainable()).all(|(m, p)| m.len() == p.len()));
        assert_eq!(a.grow_count, 5);
    }
}
