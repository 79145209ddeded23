//! Locally private Nash confidence bound.

use crate::error::Result;
use crate::rng::RngStream;

use super::gdp::Phase;
use super::index::{argmax_lowest, clip01, ncb_ldp, phase1_stop_ldp};
use super::{check_private_reward, Policy, PolicyKind, PolicyParams, RewardModel, Turn};

/// LDP-NCB state. Only ever sees rewards privatized by the caller.
///
/// Phase I explores uniformly and keeps unclipped running means of the
/// privatized rewards; Phase II pulls the arm with the largest index every
/// round and clips the running mean after each update.
#[derive(Clone, Debug)]
pub struct LdpNcb {
    params: PolicyParams,
    stream: RngStream,
    t: u64,
    phase: Phase,
    counts: Vec<u64>,
    mu_tilde: Vec<f64>,
    phase_one_len: Option<u64>,
    exploit_pulls: Vec<u64>,
    turn: Turn,
}

impl LdpNcb {
    pub fn new(params: PolicyParams, stream: RngStream) -> Result<Self> {
        params.validate()?;
        let k = params.k;
        Ok(Self {
            params,
            stream,
            t: 1,
            phase: Phase::Explore,
            counts: vec![0; k],
            mu_tilde: vec![0.0; k],
            phase_one_len: None,
            exploit_pulls: vec![0; k],
            turn: Turn::default(),
        })
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn mu_tilde(&self) -> &[f64] {
        &self.mu_tilde
    }

    pub fn phase_one_length(&self) -> Option<u64> {
        self.phase_one_len
    }

    pub fn exploitation_pulls(&self) -> &[u64] {
        &self.exploit_pulls
    }

    pub fn indices(&self) -> Vec<f64> {
        self.mu_tilde
            .iter()
            .zip(&self.counts)
            .map(|(&m, &n)| ncb_ldp(m, n, &self.params))
            .collect()
    }
}

impl Policy for LdpNcb {
    fn kind(&self) -> PolicyKind {
        PolicyKind::LdpNcb
    }

    fn k(&self) -> usize {
        self.params.k
    }

    fn round(&self) -> u64 {
        self.t
    }

    fn horizon(&self) -> u64 {
        self.params.horizon
    }

    fn reward_model(&self) -> RewardModel {
        RewardModel::LocallyPrivatized {
            epsilon: self.params.epsilon,
        }
    }

    fn in_exploitation(&self) -> bool {
        self.phase == Phase::Exploit
    }

    fn select_arm(&mut self) -> Result<usize> {
        Turn::check_horizon(self.t, self.params.horizon)?;
        let arm = match self.phase {
            Phase::Explore => self.stream.index(self.params.k),
            Phase::Exploit => argmax_lowest(self.indices()),
        };
        self.turn.begin(self.t, self.params.horizon, arm)
    }

    fn observe_reward(&mut self, arm: usize, reward: f64) -> Result<()> {
        check_private_reward(reward)?;
        self.turn.finish(arm)?;
        self.counts[arm] += 1;
        let n = self.counts[arm] as f64;
        self.mu_tilde[arm] = (n - 1.0) / n * self.mu_tilde[arm] + reward / n;
        self.t += 1;
        match self.phase {
            Phase::Explore => {
                if phase1_stop_ldp(&self.counts, &self.mu_tilde, self.t, &self.params) {
                    self.phase = Phase::Exploit;
                    self.phase_one_len = Some(self.t - 1);
                    for m in &mut self.mu_tilde {
                        *m = clip01(*m);
                    }
                }
            }
            Phase::Exploit => {
                self.exploit_pulls[arm] += 1;
                self.mu_tilde[arm] = clip01(self.mu_tilde[arm]);
            }
        }
        Ok(())
    }
}
