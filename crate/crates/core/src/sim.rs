//! The round loop wiring an environment to a policy.
//!
//! Every run draws from three independent substreams of its run stream:
//! rewards, the policy's own randomness and the local privatizer. The
//! privatizer sits between environment and policy: a policy reporting
//! [`RewardModel::LocallyPrivatized`] is only ever handed `x + Lap(1/eps)`.

use crate::env::RewardSource;
use crate::error::Result;
use crate::metrics::{RoundRecord, RunTrace};
use crate::policy::{local_privatize, make_policy, Policy, PolicyKind, PolicyParams, RewardModel};
use crate::rng::RngStream;

pub const ENV_TAG: u64 = 1;
pub const POLICY_TAG: u64 = 2;
pub const PRIVATIZER_TAG: u64 = 3;

pub struct RunStreams {
    pub env: RngStream,
    pub privatizer: RngStream,
}

impl RunStreams {
    pub fn from_run(run: &RngStream) -> Self {
        Self {
            env: run.substream(ENV_TAG),
            privatizer: run.substream(PRIVATIZER_TAG),
        }
    }
}

/// Plays `rounds` rounds (or until the policy's horizon) and records them.
pub fn simulate<E: RewardSource + ?Sized>(
    env: &E,
    policy: &mut dyn Policy,
    rounds: u64,
    streams: &mut RunStreams,
) -> Result<RunTrace> {
    let rounds = rounds.min(policy.horizon().saturating_sub(policy.round() - 1));
    let mut trace = RunTrace::with_capacity(rounds as usize);
    for _ in 0..rounds {
        let t = policy.round();
        let arm = policy.select_arm()?;
        let reward = env.reward(arm, t as usize, &mut streams.env)?;
        let delivered = match policy.reward_model() {
            RewardModel::Raw => reward,
            RewardModel::LocallyPrivatized { epsilon } => local_privatize(reward, epsilon, &mut streams.privatizer)?,
        };
        policy.observe_reward(arm, delivered)?;
        trace.records.push(RoundRecord {
            t,
            arm,
            reward,
            log_mean: env.log_mean(arm),
        });
    }
    Ok(trace)
}

/// Builds the named policy on the run's policy substream and plays it to
/// its horizon.
pub fn run_policy<E: RewardSource + ?Sized>(
    kind: PolicyKind,
    params: PolicyParams,
    env: &E,
    run: &RngStream,
) -> Result<RunTrace> {
    let mut policy = make_policy(kind, params, run.substream(POLICY_TAG))?;
    let mut streams = RunStreams::from_run(run);
    simulate(env, policy.as_mut(), params.horizon, &mut streams)
}
