use rand::Rng;
use rayon::prelude::*;

use crate::agents::{compute_reward, FrozenPolicy, PolicyStep, QLearner, RewardSpec};
use crate::game::config::{PolicyMode, ScenarioConfig};
use crate::game::trajectory::{Record, Trajectory};
use crate::kernels::{observe, JointState, TransitionModel};
use crate::rng::{replica_stream, StreamRng};
use crate::{Error, Result};

/// The user as it plays one replica.
#[derive(Debug, Clone)]
pub enum UserAgent {
    Learner(QLearner),
    Frozen(FrozenPolicy),
}

impl UserAgent {
    pub fn for_config(cfg: &ScenarioConfig) -> Self {
        match &cfg.policy {
            PolicyMode::QLearning => UserAgent::Learner(QLearner::new(cfg.agent)),
            PolicyMode::Frozen(p) => UserAgent::Frozen(p.clone()),
        }
    }

    fn select<R: Rng + ?Sized>(&self, state: JointState, rng: &mut R) -> PolicyStep {
        match self {
            UserAgent::Learner(q) => q.select(state, rng),
            UserAgent::Frozen(p) => {
                let probabilities = p.action_probabilities(state);
                let u: f64 = rng.gen();
                let action = if u < probabilities[0] { 0 } else { 1 };
                PolicyStep { probabilities, action }
            }
        }
    }
}

/// Static pieces of a replica shared by every step.
#[derive(Debug, Clone, Copy)]
pub struct StepContext<'a> {
    pub model: &'a TransitionModel,
    pub reward: &'a RewardSpec,
    pub horizon: usize,
}

/// One round: choose a prompt, receive the reply, transition, collect the
/// reward, learn.
pub fn step<R: Rng + ?Sized>(
    t: usize,
    state: JointState,
    agent: &mut UserAgent,
    ctx: StepContext<'_>,
    rng: &mut R,
) -> (JointState, Record, PolicyStep) {
    let decision = agent.select(state, rng);
    let r = decision.action;
    let o = observe(state.m, r, ctx.model.observation);
    let next = ctx.model.sample_next(state, r, rng);
    let reward = compute_reward(ctx.reward, state.s, r, state.m, o, next.s);
    if let UserAgent::Learner(q) = agent {
        let lr = q.params().learning_rate_at(t, ctx.horizon);
        q.learn(state, r, reward, next, lr);
    }
    (next, Record { t, state, r, o, reward }, decision)
}

fn check_replica(cfg: &ScenarioConfig, replica: usize) -> Result<()> {
    if replica >= cfg.replicas {
        return Err(Error::config(format!("replica index {replica} out of range (replicas = {})", cfg.replicas)));
    }
    Ok(())
}

/// Run one replica and keep the final agent (for Q-table dumps).
pub fn simulate_replica(cfg: &ScenarioConfig, replica: usize) -> Result<(Trajectory, UserAgent)> {
    check_replica(cfg, replica)?;
    let model = cfg.transition_model()?;
    let mut rng: StreamRng = replica_stream(cfg.seed, replica as u64);
    let mut agent = UserAgent::for_config(cfg);
    let ctx = StepContext { model: &model, reward: &cfg.reward, horizon: cfg.horizon };

    let mut records = Vec::with_capacity(cfg.horizon);
    let mut trace = Vec::with_capacity(cfg.horizon);
    let mut state = cfg.init_state;
    for t in 1..=cfg.horizon {
        let (next, rec, decision) = step(t, state, &mut agent, ctx, &mut rng);
        records.push(rec);
        trace.push(decision);
        state = next;
    }
    let traj = Trajectory { run: replica, records, final_state: Some(state), policy_trace: trace };
    debug_assert!(traj.is_chained());
    Ok((traj, agent))
}

pub fn run_replica(cfg: &ScenarioConfig, replica: usize) -> Result<Trajectory> {
    simulate_replica(cfg, replica).map(|(t, _)| t)
}

/// All replicas, in replica order, run on up to `jobs` threads.
pub fn run_all(cfg: &ScenarioConfig, jobs: usize) -> Result<Vec<Trajectory>> {
    cfg.validate()?;
    let work = || (0..cfg.replicas).into_par_iter().map(|i| run_replica(cfg, i)).collect::<Result<Vec<_>>>();
    if jobs <= 1 {
        return (0..cfg.replicas).map(|i| run_replica(cfg, i)).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::config(format!("cannot build thread pool: {e}")))?;
    pool.install(work)
}
