//! Self-checks on the toy tasks, runnable from the command line.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::decision::{DecisionAgent, DecisionConfig, SmdpTransition};
use crate::env::{ChainEnvironment, Environment};
use crate::error::Result;
use crate::execution::{train_episode, DdpgAgent, DdpgConfig};
use crate::library::MotionPrimitive;
use crate::sim::geometry::rectangle_corners;
use crate::sim::{check_collision, VehicleState};
use crate::skill::{build_chain_observed, ChainParams, GoalDisk, TerminationSet};
use crate::toy::{ChainMdp, Corridor, CorridorConfig, PointReach, PointReachConfig};

/// Outcome of one named check.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// A network about the size of a table: the chain MDP has five states.
pub fn chain_mdp_decision_config(gamma: f64) -> DecisionConfig {
    DecisionConfig { hidden: vec![64, 64], lr: 1e-3, tau: 0.01, gamma, ..DecisionConfig::default() }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainMdpRun {
    pub greedy: Vec<usize>,
    pub q: Vec<Vec<f64>>,
    /// First update after which the greedy policy and values matched `v_star`.
    pub first_match: Option<usize>,
}

/// Double Q-learning on the chain MDP from exploring starts: each update
/// adds one transition from a uniformly drawn state and option.
pub fn ddqn_chain_mdp(seed: u64, updates: usize, v_star: &[f64], optimal: &[usize]) -> Result<ChainMdpRun> {
    let mdp = ChainMdp::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut agent = DecisionAgent::new(chain_mdp_decision_config(mdp.gamma), ChainMdp::STATES, 2, &mut rng)?;
    let snapshot = |agent: &DecisionAgent| -> Result<(Vec<usize>, Vec<Vec<f64>>)> {
        let q: Vec<Vec<f64>> = (0..ChainMdp::STATES).map(|s| agent.q_values(&mdp.encode(s))).collect::<Result<_>>()?;
        let greedy = q.iter().map(|q| usize::from(q[1] > q[0])).collect();
        Ok((greedy, q))
    };
    let mut first_match = None;
    for u in 1..=updates {
        let s = rng.gen_range(0..ChainMdp::STATES);
        let o = rng.gen_range(0..2);
        let out = mdp.step(s, ChainMdp::option(o));
        agent.remember(SmdpTransition {
            s: mdp.encode(s),
            option: o,
            reward: out.reward,
            duration: out.duration,
            s_next: mdp.encode(out.next),
            done: out.done,
        });
        agent.learn(&mut rng)?;
        if first_match.is_none() {
            let (greedy, q) = snapshot(&agent)?;
            if greedy == optimal && max_value_error(&q, v_star) < 0.05 {
                first_match = Some(u);
            }
        }
    }
    let (greedy, q) = snapshot(&agent)?;
    Ok(ChainMdpRun { greedy, q, first_match })
}

/// `maxₛ |maxₒ Q(s,o) − V*(s)|`.
pub fn max_value_error(q: &[Vec<f64>], v_star: &[f64]) -> f64 {
    q.iter().zip(v_star).map(|(q, v)| (q.iter().copied().fold(f64::NEG_INFINITY, f64::max) - v).abs()).fold(0.0, f64::max)
}

/// Training budget of the reach check; success is judged on the final 50.
pub const POINT_REACH_EPISODES: usize = 200;

pub fn point_reach_ddpg_config() -> DdpgConfig {
    DdpgConfig { warmup: 500, ..DdpgConfig::default() }
}

/// Trains DDPG on the reach task; returns the success flag of every episode.
pub fn ddpg_point_reach(seed: u64, episodes: usize) -> Result<Vec<bool>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut env = PointReach::new(PointReachConfig::default());
    let mut agent = DdpgAgent::new(point_reach_ddpg_config(), env.observation_dim(), env.action_space(), &mut rng)?;
    let schedule = agent.config.epsilon_schedule(episodes);
    (0..episodes).map(|i| Ok(train_episode(&mut agent, &mut env, &schedule, i, &mut rng)?.last_info.success)).collect()
}

pub fn corridor_chain_params() -> ChainParams {
    ChainParams {
        k: 25,
        n: 200,
        nu: 0.1,
        budget: 100,
        episode_steps: 50,
        ddpg: DdpgConfig { warmup: 200, ..DdpgConfig::default() },
        ..ChainParams::default()
    }
}

/// The corridor's goal interval as a termination set.
pub fn corridor_goal(config: &CorridorConfig) -> TerminationSet {
    let half = 0.5 * (config.length - config.goal_start);
    TerminationSet::Goal(GoalDisk {
        center: vec![config.goal_start + half],
        radius: half,
        features: vec![0],
        scale: config.length,
    })
}

/// Builds the corridor chain; also returns, per link, the share of its
/// training positives that its initiation classifier accepts.
pub fn corridor_chain(seed: u64, params: &ChainParams) -> Result<(Corridor, Vec<MotionPrimitive>, Vec<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let config = CorridorConfig::default();
    let mut env = Corridor::new(config.clone());
    let mut containment = Vec::new();
    let chain = build_chain_observed(&mut env, corridor_goal(&config), params, "corridor", "verify", &mut rng, |link| {
        let positives: Vec<&Vec<f64>> = link.labels.iter().filter(|l| l.positive).map(|l| &l.state).collect();
        let accepted = positives.iter().filter(|s| link.initiation.contains(s)).count();
        containment.push(accepted as f64 / positives.len() as f64);
    })?;
    Ok((env, chain, containment))
}

/// Every link after the first terminates in its predecessor's initiation
/// classifier itself, not a copy.
pub fn chain_is_linked(chain: &[MotionPrimitive]) -> bool {
    chain.windows(2).all(|w| w[1].termination.classifier().is_some_and(|c| Arc::ptr_eq(c, &w[0].initiation)))
}

pub fn covers_start<E: ChainEnvironment>(env: &mut E, chain: &[MotionPrimitive]) -> bool {
    let s0 = env.reset_canonical();
    chain.last().is_some_and(|mp| mp.initiation.contains(&s0))
}

fn in_rectangle(p: [f64; 2], pose: &VehicleState, dims: (f64, f64)) -> bool {
    let (dx, dy) = (p[0] - pose.x, p[1] - pose.y);
    let (s, c) = pose.theta.sin_cos();
    (c * dx + s * dy).abs() <= dims.0 / 2.0 && (-s * dx + c * dy).abs() <= dims.1 / 2.0
}

/// Points every `spacing` meters along a rectangle's outline, corners included.
fn outline(pose: &VehicleState, dims: (f64, f64), spacing: f64) -> Vec<[f64; 2]> {
    let corners = rectangle_corners(pose, dims.0, dims.1);
    let mut out = Vec::new();
    for k in 0..4 {
        let (a, b) = (corners[k], corners[(k + 1) % 4]);
        let n = ((b[0] - a[0]).hypot(b[1] - a[1]) / spacing).ceil() as usize;
        for i in 0..n {
            let t = i as f64 / n as f64;
            out.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
        }
    }
    out
}

/// Brute-force overlap: does any outline point of one rectangle lie in the other?
pub fn sampled_overlap(a: &VehicleState, dims_a: (f64, f64), b: &VehicleState, dims_b: (f64, f64), spacing: f64) -> bool {
    outline(a, dims_a, spacing).into_iter().any(|p| in_rectangle(p, b, dims_b))
        || outline(b, dims_b, spacing).into_iter().any(|p| in_rectangle(p, a, dims_a))
}

/// Smallest margin by which the pair is clearly apart or clearly overlapping
/// along the two rectangles' axes; pairs below a threshold are ambiguous for
/// a sampling oracle.
pub fn boundary_clearance(a: &VehicleState, dims_a: (f64, f64), b: &VehicleState, dims_b: (f64, f64)) -> f64 {
    let ca = rectangle_corners(a, dims_a.0, dims_a.1);
    let cb = rectangle_corners(b, dims_b.0, dims_b.1);
    let axes = [a.theta, a.theta + std::f64::consts::FRAC_PI_2, b.theta, b.theta + std::f64::consts::FRAC_PI_2];
    let mut smallest = f64::INFINITY;
    let mut largest_gap = f64::NEG_INFINITY;
    for th in axes {
        let (s, c) = th.sin_cos();
        let span = |cs: &[[f64; 2]; 4]| {
            cs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                let d = p[0] * c + p[1] * s;
                (lo.min(d), hi.max(d))
            })
        };
        let ((la, ha), (lb, hb)) = (span(&ca), span(&cb));
        let gap = (lb - ha).max(la - hb);
        largest_gap = largest_gap.max(gap);
        smallest = smallest.min(gap.abs());
    }
    if largest_gap > 0.0 { largest_gap } else { smallest }
}

/// Random rectangle pairs in a 10 m square; returns (agreements, pairs).
pub fn collision_agreement(seed: u64, pairs: usize) -> (usize, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut agree = 0;
    let mut tested = 0;
    while tested < pairs {
        let mut pose = || {
            VehicleState::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0), rng.gen_range(-3.2..3.2), 0.0)
        };
        let (a, b) = (pose(), pose());
        let dims_a = (rng.gen_range(2.0..6.0), rng.gen_range(1.0..2.5));
        let dims_b = (rng.gen_range(2.0..6.0), rng.gen_range(1.0..2.5));
        if boundary_clearance(&a, dims_a, &b, dims_b) <= 1e-3 {
            continue;
        }
        tested += 1;
        if check_collision(&a, dims_a, &b, dims_b) == sampled_overlap(&a, dims_a, &b, dims_b, 0.01) {
            agree += 1;
        }
    }
    (agree, tested)
}

fn check(name: &str, passed: bool, detail: String) -> Check {
    Check { name: name.to_string(), passed, detail }
}

/// The toy-task suite: double Q-learning against value iteration, DDPG on
/// the reach task, chain construction on the corridor, and the collision test
/// against point sampling. Takes a few minutes.
pub fn run_suite(mut progress: impl FnMut(&Check)) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let mut push = |c: Check| {
        progress(&c);
        checks.push(c);
    };

    let mdp = ChainMdp::default();
    let (v_star, q_star, _) = mdp.value_iteration(true, 1e-10);
    let optimal = ChainMdp::greedy(&q_star);
    let mut ok = 0;
    let mut detail = Vec::new();
    for seed in 0..3 {
        let run = ddqn_chain_mdp(seed, 5000, &v_star, &optimal)?;
        let err = max_value_error(&run.q, &v_star);
        if run.greedy == optimal && err < 0.05 {
            ok += 1;
        }
        detail.push(format!("seed {seed}: greedy {:?}, max |Q−V*| {err:.4}", run.greedy));
    }
    push(check("ddqn_chain_mdp", ok == 3, detail.join("; ")));

    let mut ok = 0;
    let mut detail = Vec::new();
    for seed in 0..3 {
        let flags = ddpg_point_reach(seed, POINT_REACH_EPISODES)?;
        let rate = flags[flags.len() - 50..].iter().filter(|&&s| s).count() as f64 / 50.0;
        if rate >= 0.9 {
            ok += 1;
        }
        detail.push(format!("seed {seed}: {:.0}%", rate * 100.0));
    }
    push(check("ddpg_point_reach", ok >= 2, detail.join("; ")));

    let detail = match corridor_chain(0, &corridor_chain_params()) {
        Ok((mut env, chain, containment)) => {
            let linked = chain_is_linked(&chain);
            let covered = covers_start(&mut env, &chain);
            let worst = containment.iter().copied().fold(1.0, f64::min);
            (
                linked && covered && worst >= 0.9 && (1..=8).contains(&chain.len()),
                format!("{} links, linked {linked}, start covered {covered}, min containment {worst:.3}", chain.len()),
            )
        }
        Err(e) => (false, e.to_string()),
    };
    push(check("corridor_chain", detail.0, detail.1));

    let (agree, total) = collision_agreement(7, 1000);
    push(check("collision_oracle", agree == total, format!("{agree}/{total} pairs agree")));
    Ok(checks)
}
