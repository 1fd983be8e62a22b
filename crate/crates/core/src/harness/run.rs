use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{scale_count, PhaseSpec, RunConfig};
use super::log::{save_episodes, EpisodeLog, EPISODES_FILE};
use crate::approximator::Mlp;
use crate::decision::{execute_option, DecisionAgent, SmdpTransition};
use crate::env::{ChainEnvironment, Environment};
use crate::error::{Error, Result};
use crate::execution::{run_episode, EpisodeOptions, EpsilonSchedule, Subgoal};
use crate::library::Library;
use crate::sim::world::{OBSERVATION_DIM, POSITION_SCALE};
use crate::sim::{IntersectionEnv, Presence};
use crate::skill::{build_chain, GoalDisk, TerminationSet};

pub const LIBRARY_DIR: &str = "library";
pub const SUMMARY_FILE: &str = "run.json";

/// Learning methods compared by the harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Motion-primitive library with the option-level decision layer.
    Mp,
    FlatDdpg,
    TabularQ,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Mp => "mp",
            Method::FlatDdpg => "flat_ddpg",
            Method::TabularQ => "tabular_q",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        [Method::Mp, Method::FlatDdpg, Method::TabularQ].into_iter().find(|m| m.name() == name)
    }
}

/// Counters of the hierarchical controller.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct HierarchyStats {
    pub options: usize,
    /// Decision points at which no initiation region accepted the state.
    pub fallbacks: usize,
    pub decision_updates: usize,
    /// Output units added to the decision network.
    pub grow_events: usize,
}

impl HierarchyStats {
    fn add(&mut self, other: &HierarchyStats) {
        self.options += other.options;
        self.fallbacks += other.fallbacks;
        self.decision_updates += other.decision_updates;
        self.grow_events += other.grow_events;
    }
}

/// Written next to `episodes.csv`; identifies the run for reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub method: Method,
    pub seed: u64,
    pub episodes: usize,
    pub primitives: usize,
    pub subtasks: Vec<String>,
    pub stats: HierarchyStats,
}

impl RunSummary {
    pub fn new(method: Method, seed: u64, episodes: usize) -> Self {
        Self { method, seed, episodes, primitives: 0, subtasks: Vec::new(), stats: HierarchyStats::default() }
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(SUMMARY_FILE), serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(SUMMARY_FILE);
        match std::fs::read_to_string(&path) {
            Ok(text) => Ok(serde_json::from_str(&text)?),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Err(Error::MissingFile(path)),
            Err(e) => Err(e.into()),
        }
    }
}

/// Independent random streams of one seed. Environment draws depend only on
/// the seed and the phase position, so every method meets the same worlds.
pub(crate) fn env_rng(seed: u64, phase_index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1 + phase_index as u64);
    rng
}

pub(crate) fn agent_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1 << 32 | stream);
    rng
}

const TRAIN_STREAM: u64 = 0;
const GROW_STREAM: u64 = 1;
const TEST_STREAM: u64 = 2;

pub(crate) fn phase_env(config: &RunConfig, phase: &PhaseSpec) -> Result<IntersectionEnv> {
    let presence = if phase.kind.is_test() {
        Presence::Random(phase.presence_probability)
    } else {
        Presence::Fixed(phase.kind.toggles())
    };
    IntersectionEnv::new(config.scenario.clone(), presence)
}

/// Phases in config order with their position and scaled episode count.
pub(crate) fn schedule(config: &RunConfig) -> Vec<(usize, &PhaseSpec, usize)> {
    config.phases.iter().enumerate().map(|(i, p)| (i, p, config.scaled_epochs(p))).collect()
}

pub fn goal_set(config: &RunConfig) -> Result<TerminationSet> {
    let goal = config.scenario.goal.as_ref().ok_or_else(|| Error::InvalidConfig("the scenario needs a goal region".into()))?;
    Ok(TerminationSet::Goal(GoalDisk {
        center: goal.center.to_vec(),
        radius: goal.radius,
        features: vec![0, 1],
        scale: POSITION_SCALE,
    }))
}

/// The option library either keeps learning or is read-only.
enum Primitives<'a> {
    Learning(&'a mut Library),
    Frozen(&'a Library),
}

impl Primitives<'_> {
    fn library(&self) -> &Library {
        match self {
            Primitives::Learning(l) => l,
            Primitives::Frozen(l) => l,
        }
    }
}

struct Control {
    decision_epsilon: f64,
    option_epsilon: f64,
    learn_decision: bool,
    subgoal_bonus: f64,
}

/// Runs one option from the current state. Returns the semi-Markov
/// transition and whether the episode is over.
#[allow(clippy::too_many_arguments)]
fn run_option<R: Rng>(
    env: &mut IntersectionEnv,
    primitives: &mut Primitives<'_>,
    id: usize,
    gamma: f64,
    t_max: usize,
    control: &Control,
    rng: &mut R,
    log: &mut EpisodeLog,
) -> Result<(SmdpTransition, bool)> {
    match primitives {
        Primitives::Frozen(lib) => {
            let mp = lib.get(id).ok_or_else(|| Error::Contract(format!("no primitive {id}")))?;
            let run = execute_option(env, mp, gamma, t_max, |step| log.record(step))?;
            Ok((run.transition, run.episode_over))
        }
        Primitives::Learning(lib) => {
            let beta = lib.get(id).ok_or_else(|| Error::Contract(format!("no primitive {id}")))?.termination.clone();
            let s0 = env.observe();
            let reached = |s: &[f64]| beta.contains(s);
            let opts = EpisodeOptions {
                epsilon: control.option_epsilon,
                learn: true,
                max_steps: Some(t_max),
                subgoal: Some(Subgoal { reached: &reached, bonus: control.subgoal_bonus }),
            };
            let mut rewards = Vec::new();
            let mut over = false;
            let policy = lib.policy_mut(id).expect("checked above");
            let outcome = run_episode(policy, env, s0.clone(), &opts, rng, |step| {
                log.record(step);
                rewards.push(step.reward);
                over |= step.done;
            })?;
            let reward = rewards.iter().rev().fold(0.0, |acc, r| r + gamma * acc);
            let transition = SmdpTransition {
                s: s0,
                option: id,
                reward,
                duration: rewards.len() as u32,
                s_next: env.observe(),
                done: outcome.terminal,
            };
            Ok((transition, over))
        }
    }
}

/// One episode of the hierarchical controller from a fresh reset.
fn hierarchical_episode<R: Rng>(
    env: &mut IntersectionEnv,
    start: Vec<f64>,
    primitives: &mut Primitives<'_>,
    decision: &mut DecisionAgent,
    control: &Control,
    rng: &mut R,
    log: &mut EpisodeLog,
) -> Result<HierarchyStats> {
    let mut stats = HierarchyStats::default();
    let (gamma, t_max) = (decision.config.gamma, decision.config.t_max);
    let mut s = start;
    loop {
        let lib = primitives.library();
        let mut available = lib.available_options(&s);
        if available.is_empty() {
            available.push(lib.nearest_option(&s).ok_or(Error::NoAvailableOption)?);
            stats.fallbacks += 1;
        }
        let id = decision.select_option(&s, &available, control.decision_epsilon, rng)?;
        let (transition, over) = run_option(env, primitives, id, gamma, t_max, control, rng, log)?;
        stats.options += 1;
        s = transition.s_next.clone();
        decision.remember(transition);
        if control.learn_decision && decision.learn(rng)?.is_some() {
            stats.decision_updates += 1;
        }
        if over {
            return Ok(stats);
        }
    }
}

/// Result of the offline curriculum of the motion-primitive method.
#[derive(Debug, Clone)]
pub struct OfflineRun {
    pub library: Library,
    pub decision: DecisionAgent,
    pub logs: Vec<EpisodeLog>,
    pub stats: HierarchyStats,
}

/// Runs every offline phase in order: each phase first makes sure the
/// library covers the phase's start state (building a new chain otherwise),
/// then runs its episodes with the hierarchical controller. Saves the library
/// (with the decision network) under `out/library`; on failure whatever
/// exists so far is saved before the error is returned.
pub fn run_offline(config: &RunConfig, seed: u64, out: &Path) -> Result<OfflineRun> {
    config.validate()?;
    let mut rng = agent_rng(seed, TRAIN_STREAM);
    let mut grow_rng = agent_rng(seed, GROW_STREAM);
    let mut library = Library::new();
    let mut decision = DecisionAgent::new(config.decision.clone(), OBSERVATION_DIM, 0, &mut rng)?;
    let mut logs = Vec::new();
    let mut stats = HierarchyStats::default();
    let result = offline_phases(config, seed, &mut library, &mut decision, &mut logs, &mut stats, &mut rng, &mut grow_rng);
    library.save(&out.join(LIBRARY_DIR), Some(&decision.online))?;
    save_episodes(&logs, &out.join(EPISODES_FILE))?;
    result?;
    Ok(OfflineRun { library, decision, logs, stats })
}

#[allow(clippy::too_many_arguments)]
fn offline_phases(
    config: &RunConfig,
    seed: u64,
    library: &mut Library,
    decision: &mut DecisionAgent,
    logs: &mut Vec<EpisodeLog>,
    stats: &mut HierarchyStats,
    rng: &mut ChaCha8Rng,
    grow_rng: &mut ChaCha8Rng,
) -> Result<()> {
    let chain = config.chain_params();
    let goal = goal_set(config)?;
    for (index, phase, episodes) in schedule(config) {
        if phase.kind.is_test() {
            continue;
        }
        let name = phase.kind.name();
        let mut env = phase_env(config, phase)?;
        let start = env.reset_canonical();
        let mut created = Vec::new();
        library.match_or_create(
            &start,
            name,
            |_| build_chain(&mut env, goal.clone(), &chain, name, name, rng),
            |id| created.push(id),
        )?;
        for _ in &created {
            decision.grow_output(grow_rng)?;
            stats.grow_events += 1;
        }

        let option_eps = config.ddpg.epsilon_schedule(episodes);
        let decision_eps = config.decision.epsilon_schedule(episodes);
        let mut envs = env_rng(seed, index);
        for i in 0..episodes {
            let clock = Instant::now();
            let mut log = EpisodeLog::new(name, logs.len(), seed);
            let control = Control {
                decision_epsilon: decision_eps.value(i),
                option_epsilon: option_eps.value(i),
                learn_decision: config.decision_schedule.during_offline,
                subgoal_bonus: chain.subgoal_bonus,
            };
            let start = env.reset(&mut envs);
            let mut primitives =
                if config.fine_tune_options { Primitives::Learning(&mut *library) } else { Primitives::Frozen(&*library) };
            let s = hierarchical_episode(&mut env, start, &mut primitives, decision, &control, rng, &mut log)?;
            stats.add(&s);
            log.wall_time = clock.elapsed().as_secs_f64();
            logs.push(log);
        }
    }
    let n = config.decision_schedule.consolidation_updates;
    if n > 0 {
        for _ in 0..scale_count(n, config.scale) {
            if decision.learn(rng)?.is_some() {
                stats.decision_updates += 1;
            }
        }
    }
    Ok(())
}

/// Result of the mixed test.
#[derive(Debug, Clone)]
pub struct TestRun {
    pub logs: Vec<EpisodeLog>,
    pub stats: HierarchyStats,
}

/// Runs the test phases with the option policies frozen. The decision layer
/// keeps learning when the schedule says so. `episodes` overrides the
/// (scaled) episode count of every test phase. Epochs continue the offline
/// numbering.
pub fn run_test(
    config: &RunConfig,
    library: &Library,
    decision: &mut DecisionAgent,
    seed: u64,
    episodes: Option<usize>,
) -> Result<TestRun> {
    config.validate()?;
    if library.is_empty() {
        return Err(Error::Contract("the library is empty".into()));
    }
    if decision.width() != library.len() {
        return Err(Error::Shape(format!("decision width {} for {} primitives", decision.width(), library.len())));
    }
    let mut rng = agent_rng(seed, TEST_STREAM);
    let mut epoch: usize = config.offline_phases().map(|p| config.scaled_epochs(p)).sum();
    let mut logs = Vec::new();
    let mut stats = HierarchyStats::default();
    let epsilon = EpsilonSchedule::constant(config.decision.epsilon_end);
    for (index, phase, scaled) in schedule(config) {
        if !phase.kind.is_test() {
            continue;
        }
        let mut env = phase_env(config, phase)?;
        let mut envs = env_rng(seed, index);
        for i in 0..episodes.unwrap_or(scaled) {
            let clock = Instant::now();
            let mut log = EpisodeLog::new(phase.kind.name(), epoch, seed);
            let control = Control {
                decision_epsilon: epsilon.value(i),
                option_epsilon: 0.0,
                learn_decision: config.decision_schedule.during_test,
                subgoal_bonus: 0.0,
            };
            let start = env.reset(&mut envs);
            let s = hierarchical_episode(&mut env, start, &mut Primitives::Frozen(library), decision, &control, &mut rng, &mut log)?;
            stats.add(&s);
            log.wall_time = clock.elapsed().as_secs_f64();
            logs.push(log);
            epoch += 1;
        }
    }
    Ok(TestRun { logs, stats })
}

/// Decision layer for a loaded library: the saved network if there is one,
/// else a fresh network grown to `width` outputs.
pub fn restore_decision(config: &RunConfig, saved: Option<Mlp>, width: usize, seed: u64) -> Result<DecisionAgent> {
    match saved {
        Some(net) => DecisionAgent::from_network(config.decision.clone(), net),
        None => {
            let mut rng = agent_rng(seed, GROW_STREAM);
            let mut agent = DecisionAgent::new(config.decision.clone(), OBSERVATION_DIM, 0, &mut rng)?;
            for _ in 0..width {
                agent.grow_output(&mut rng)?;
            }
            Ok(agent)
        }
    }
}

/// Offline curriculum, then the test phases if the config has any. Writes
/// `library/`, `episodes.csv` (all phases) and `run.json` into `out`.
pub fn train(config: &RunConfig, seed: u64, out: &Path) -> Result<(OfflineRun, TestRun)> {
    let offline = run_offline(config, seed, out)?;
    let mut decision = offline.decision.clone();
    let test = if config.test_phases().next().is_some() {
        run_test(config, &offline.library, &mut decision, seed, None)?
    } else {
        TestRun { logs: Vec::new(), stats: HierarchyStats::default() }
    };
    let mut logs = offline.logs.clone();
    logs.extend(test.logs.iter().cloned());
    save_episodes(&logs, &out.join(EPISODES_FILE))?;
    let mut summary = RunSummary::new(Method::Mp, seed, logs.len());
    summary.primitives = offline.library.len();
    summary.subtasks = offline.library.subtasks();
    summary.stats = offline.stats;
    summary.stats.add(&test.stats);
    summary.save(out)?;
    Ok((offline, test))
}
