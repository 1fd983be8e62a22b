use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ocsvm::{InitiationClassifier, MIN_POSITIVES};
use super::termination::TerminationSet;
use crate::env::{ChainEnvironment, Environment};
use crate::error::{Error, Result};
use crate::execution::{run_episode, DdpgAgent, DdpgConfig, EpisodeOptions, Subgoal};
use crate::library::{MotionPrimitive, PrimitiveMeta};

/// Knobs of backward chain construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChainParams {
    /// A start is a positive label when the policy reaches the termination set within `k` steps.
    pub k: usize,
    /// Labelled starts collected per link.
    pub n: usize,
    pub nu: f64,
    pub max_chain: usize,
    /// Training episodes per link.
    pub budget: usize,
    /// Extra reward for entering the termination set.
    pub subgoal_bonus: f64,
    /// Width of the progress window that start states are drawn from.
    pub window_span: f64,
    /// Step cap of one option-training episode.
    pub episode_steps: usize,
    /// Extra labelling rounds when a round yields too few positives.
    pub label_retries: usize,
    /// Share of starts drawn from the canonical start once the window reaches it.
    pub canonical_share: f64,
    /// Observation components used by the initiation classifiers; empty = all.
    pub features: Vec<usize>,
    pub ddpg: DdpgConfig,
}

impl Default for ChainParams {
    fn default() -> Self {
        Self {
            k: 100,
            n: 200,
            nu: 0.1,
            max_chain: 8,
            budget: 100,
            subgoal_bonus: 10.0,
            window_span: 0.3,
            episode_steps: 100,
            label_retries: 3,
            canonical_share: 0.5,
            features: Vec::new(),
            ddpg: DdpgConfig::default(),
        }
    }
}

impl ChainParams {
    pub fn validate(&self) -> Result<()> {
        if self.k < 1 || self.n < 10 || self.max_chain < 1 || self.budget < 1 {
            return Err(Error::InvalidConfig("chain parameters need K >= 1, N >= 10, max chain >= 1, budget >= 1".into()));
        }
        if !(self.window_span > 0.0 && self.window_span <= 1.0) {
            return Err(Error::InvalidConfig(format!("window span {} outside (0, 1]", self.window_span)));
        }
        if !(0.0..=1.0).contains(&self.canonical_share) {
            return Err(Error::InvalidConfig("canonical share outside [0, 1]".into()));
        }
        self.ddpg.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledState {
    pub state: Vec<f64>,
    pub positive: bool,
    /// Task progress of the start state.
    pub progress: f64,
}

/// Runs the greedy policy from the environment's current state, which is `s0`,
/// and reports whether `beta` is entered within `k` steps. A start already
/// inside `beta` counts as reached after zero steps.
pub fn reaches_within<E: Environment>(env: &mut E, policy: &DdpgAgent, beta: &TerminationSet, s0: &[f64], k: usize) -> Result<bool> {
    if beta.contains(s0) {
        return Ok(true);
    }
    let mut s = s0.to_vec();
    for _ in 0..k {
        let step = env.step(&policy.act(&s)?)?;
        if beta.contains(&step.observation) {
            return Ok(true);
        }
        if step.done {
            return Ok(false);
        }
        s = step.observation;
    }
    Ok(false)
}

/// Draws `n` start states from `starts` and labels each by whether the
/// current option policy reaches `beta` from it within `k` steps.
pub fn collect_labels<E, R, F>(
    env: &mut E,
    policy: &DdpgAgent,
    beta: &TerminationSet,
    k: usize,
    n: usize,
    starts: &mut F,
    rng: &mut R,
) -> Result<Vec<LabeledState>>
where
    E: ChainEnvironment,
    R: Rng + ?Sized,
    F: FnMut(&mut E, &mut R) -> Vec<f64>,
{
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let s0 = starts(env, rng);
        let progress = env.progress();
        let positive = reaches_within(env, policy, beta, &s0, k)?;
        out.push(LabeledState { state: s0, positive, progress });
    }
    Ok(out)
}

pub fn fit_initiation(positives: &[Vec<f64>], params: &ChainParams) -> Result<InitiationClassifier> {
    InitiationClassifier::fit(positives, params.nu, &params.features)
}

/// Trains a fresh option policy for `params.budget` episodes from starts drawn
/// by `starts`; entering `beta` pays `params.subgoal_bonus` and ends the
/// episode. Returns the agent and its per-episode training returns.
pub fn train_option_policy<E, R, F>(
    env: &mut E,
    beta: &TerminationSet,
    params: &ChainParams,
    starts: &mut F,
    rng: &mut R,
) -> Result<(DdpgAgent, Vec<f64>)>
where
    E: Environment,
    R: Rng + ?Sized,
    F: FnMut(&mut E, &mut R) -> Vec<f64>,
{
    let mut agent = DdpgAgent::new(params.ddpg.clone(), env.observation_dim(), env.action_space(), rng)?;
    let schedule = params.ddpg.epsilon_schedule(params.budget);
    let reached = |s: &[f64]| beta.contains(s);
    let mut curve = Vec::with_capacity(params.budget);
    for episode in 0..params.budget {
        let start = starts(env, rng);
        let opts = EpisodeOptions {
            epsilon: schedule.value(episode),
            learn: true,
            max_steps: Some(params.episode_steps),
            subgoal: Some(Subgoal { reached: &reached, bonus: params.subgoal_bonus }),
        };
        curve.push(run_episode(&mut agent, env, start, &opts, rng, |_| {})?.episode_return);
    }
    Ok((agent, curve))
}

/// Uniform-random actions for `steps` steps; `None` if the episode ends first.
pub fn random_walk<E: Environment, R: Rng + ?Sized>(env: &mut E, steps: usize, rng: &mut R) -> Result<Option<Vec<f64>>> {
    let space = env.action_space();
    let mut s = env.observe();
    for _ in 0..steps {
        let step = env.step(&space.sample(rng))?;
        if step.done {
            return Ok(None);
        }
        s = step.observation;
    }
    Ok(Some(s))
}

/// Start states for one link: a reset inside the progress window (or, once
/// the window reaches the start, sometimes the canonical start) followed by
/// a random walk of up to `k` steps.
fn window_start<E: ChainEnvironment, R: Rng + ?Sized>(env: &mut E, lo: f64, hi: f64, params: &ChainParams, rng: &mut R) -> Vec<f64> {
    // Walks that end the episode (e.g. in a crash) are redrawn.
    for _ in 0..20 {
        if lo <= 0.0 && rng.gen_bool(params.canonical_share) {
            env.reset_canonical();
        } else {
            env.reset_in_window(lo, hi, rng);
        }
        let walk = rng.gen_range(0..=params.k);
        if let Ok(Some(s)) = random_walk(env, walk, rng) {
            return s;
        }
    }
    env.reset_in_window(lo, hi, rng)
}

/// Builds options backward from `goal` until the canonical start state lies
/// in the newest option's initiation region. Link `k ≥ 1` terminates in the
/// very classifier (same allocation) that is link `k−1`'s initiation region.
pub fn build_chain<E, R>(
    env: &mut E,
    goal: TerminationSet,
    params: &ChainParams,
    subtask: &str,
    phase: &str,
    rng: &mut R,
) -> Result<Vec<MotionPrimitive>>
where
    E: ChainEnvironment,
    R: Rng + ?Sized,
{
    build_chain_observed(env, goal, params, subtask, phase, rng, |_| {})
}

/// What went into one finished link.
#[derive(Debug, Clone)]
pub struct LinkReport<'a> {
    pub link: usize,
    /// Labelled starts of the link; the positives trained its classifier.
    pub labels: &'a [LabeledState],
    /// Per-episode shaped return of the policy's training.
    pub curve: &'a [f64],
    pub window: (f64, f64),
    pub initiation: &'a InitiationClassifier,
}

/// [`build_chain`] that reports every link as soon as it is built.
pub fn build_chain_observed<E, R, F>(
    env: &mut E,
    goal: TerminationSet,
    params: &ChainParams,
    subtask: &str,
    phase: &str,
    rng: &mut R,
    mut on_link: F,
) -> Result<Vec<MotionPrimitive>>
where
    E: ChainEnvironment,
    R: Rng + ?Sized,
    F: FnMut(&LinkReport<'_>),
{
    params.validate()?;
    let mut chain: Vec<MotionPrimitive> = Vec::new();
    let mut beta = goal;
    let mut frontier = 1.0_f64;
    for link in 0..params.max_chain {
        let (lo, hi) = ((frontier - params.window_span).max(0.0), frontier);
        let mut starts = |e: &mut E, r: &mut R| window_start(e, lo, hi, params, r);
        let (policy, curve) = train_option_policy(env, &beta, params, &mut starts, rng)?;
        let mut labels = Vec::new();
        for _ in 0..=params.label_retries {
            labels.extend(collect_labels(env, &policy, &beta, params.k, params.n, &mut starts, rng)?);
            if labels.iter().filter(|l| l.positive).count() >= MIN_POSITIVES {
                break;
            }
        }
        let positives: Vec<&LabeledState> = labels.iter().filter(|l| l.positive).collect();
        let states: Vec<Vec<f64>> = positives.iter().map(|l| l.state.clone()).collect();
        let initiation = Arc::new(fit_initiation(&states, params)?);
        frontier = positives.iter().map(|l| l.progress).fold(frontier, f64::min);
        on_link(&LinkReport { link, labels: &labels, curve: &curve, window: (lo, hi), initiation: &initiation });
        chain.push(MotionPrimitive {
            id: link,
            initiation: Arc::clone(&initiation),
            policy,
            termination: beta,
            meta: PrimitiveMeta {
                subtask: subtask.to_string(),
                phase: phase.to_string(),
                link,
                training_episodes: params.budget,
            },
        });
        let start = env.reset_canonical();
        if initiation.contains(&start) {
            return Ok(chain);
        }
        beta = TerminationSet::Classifier(initiation);
    }
    Err(Error::ChainIncomplete(Box::new(chain)))
}
