//! Comparison policies.
//!
//! These are simplified stand-ins for the published algorithms they are
//! named after and reproduce their qualitative behaviour only:
//!
//! * `ucb1`: `mu_hat + sqrt(2 ln t / n)`.
//! * `adap_ucb`: episodic doubling with forgetting. Each arm's episode
//!   length equals its pull count so far, only the last episode's rewards
//!   form the estimate, and a `Lap(1/(eps n))` noisy mean is released when
//!   the episode ends. Index `mu_tilde + sqrt(ln t / n) + ln t / (eps n)`.
//! * `ldp_ucb`: running mean of locally privatized rewards with index
//!   `mu_tilde + (1 + 1/eps) sqrt(2 ln t / n)`.
//!
//! All three start by pulling every arm once in index order.

use crate::error::Result;
use crate::rng::{laplace_or_zero, RngStream};

use super::index::argmax_lowest;
use super::{check_private_reward, check_raw_reward, Policy, PolicyKind, PolicyParams, RewardModel, Turn};

fn first_unpulled(counts: &[u64]) -> Option<usize> {
    counts.iter().position(|&n| n == 0)
}

#[derive(Clone, Debug)]
pub struct Ucb1 {
    params: PolicyParams,
    t: u64,
    counts: Vec<u64>,
    means: Vec<f64>,
    turn: Turn,
}

impl Ucb1 {
    /// UCB1 is deterministic; the stream is accepted for interface symmetry.
    pub fn new(params: PolicyParams, _stream: RngStream) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            params,
            t: 1,
            counts: vec![0; params.k],
            means: vec![0.0; params.k],
            turn: Turn::default(),
        })
    }
}

impl Policy for Ucb1 {
    fn kind(&self) -> PolicyKind {
        PolicyKind::Ucb1
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

    fn select_arm(&mut self) -> Result<usize> {
        Turn::check_horizon(self.t, self.params.horizon)?;
        let arm = first_unpulled(&self.counts).unwrap_or_else(|| {
            let ln_t = (self.t as f64).ln();
            argmax_lowest(
                self.means
                    .iter()
                    .zip(&self.counts)
                    .map(|(&m, &n)| m + (2.0 * ln_t / n as f64).sqrt()),
            )
        });
        self.turn.begin(self.t, self.params.horizon, arm)
    }

    fn observe_reward(&mut self, arm: usize, reward: f64) -> Result<()> {
        check_raw_reward(reward)?;
        self.turn.finish(arm)?;
        self.counts[arm] += 1;
        let n = self.counts[arm] as f64;
        self.means[arm] += (reward - self.means[arm]) / n;
        self.t += 1;
        Ok(())
    }
}

#[derive(Clone, Debug)]
struct AdapEpisode {
    arm: usize,
    target: u64,
    pulls: u64,
    sum: f64,
}

#[derive(Clone, Debug)]
pub struct AdapUcb {
    params: PolicyParams,
    stream: RngStream,
    t: u64,
    /// Total pulls per arm.
    counts: Vec<u64>,
    /// Length of each arm's last completed episode.
    last_len: Vec<u64>,
    mu_tilde: Vec<f64>,
    episode: Option<AdapEpisode>,
    releases: u64,
    turn: Turn,
}

impl AdapUcb {
    pub fn new(params: PolicyParams, stream: RngStream) -> Result<Self> {
        params.validate()?;
        let k = params.k;
        Ok(Self {
            params,
            stream,
            t: 1,
            counts: vec![0; k],
            last_len: vec![0; k],
            mu_tilde: vec![0.0; k],
            episode: None,
            releases: 0,
            turn: Turn::default(),
        })
    }

    pub fn release_count(&self) -> u64 {
        self.releases
    }

    fn index(&self, arm: usize) -> f64 {
        let n = self.last_len[arm] as f64;
        let ln_t = (self.t as f64).ln();
        self.mu_tilde[arm] + (ln_t / n).sqrt() + ln_t / (self.params.epsilon * n)
    }
}

impl Policy for AdapUcb {
    fn kind(&self) -> PolicyKind {
        PolicyKind::AdapUcb
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

    fn select_arm(&mut self) -> Result<usize> {
        Turn::check_horizon(self.t, self.params.horizon)?;
        let arm = match &self.episode {
            Some(ep) => ep.arm,
            None => {
                let arm = first_unpulled(&self.counts)
                    .unwrap_or_else(|| argmax_lowest((0..self.params.k).map(|a| self.index(a))));
                let target = self.counts[arm].max(1);
                self.episode = Some(AdapEpisode {
                    arm,
                    target,
                    pulls: 0,
                    sum: 0.0,
                });
                arm
            }
        };
        self.turn.begin(self.t, self.params.horizon, arm)
    }

    fn observe_reward(&mut self, arm: usize, reward: f64) -> Result<()> {
        check_raw_reward(reward)?;
        self.turn.finish(arm)?;
        self.counts[arm] += 1;
        self.t += 1;
        let ep = self.episode.as_mut().expect("episode open");
        ep.pulls += 1;
        ep.sum += reward;
        if ep.pulls == ep.target {
            let ep = self.episode.take().expect("episode open");
            let n = ep.target as f64;
            let noise = laplace_or_zero(&mut self.stream, 1.0 / (self.params.epsilon * n))?;
            self.mu_tilde[arm] = ep.sum / n + noise;
            self.last_len[arm] = ep.target;
            self.releases += 1;
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct LdpUcb {
    params: PolicyParams,
    t: u64,
    counts: Vec<u64>,
    mu_tilde: Vec<f64>,
    turn: Turn,
}

impl LdpUcb {
    pub fn new(params: PolicyParams, _stream: RngStream) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            params,
            t: 1,
            counts: vec![0; params.k],
            mu_tilde: vec![0.0; params.k],
            turn: Turn::default(),
        })
    }
}

impl Policy for LdpUcb {
    fn kind(&self) -> PolicyKind {
        PolicyKind::LdpUcb
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

    fn select_arm(&mut self) -> Result<usize> {
        Turn::check_horizon(self.t, self.params.horizon)?;
        let arm = first_unpulled(&self.counts).unwrap_or_else(|| {
            let ln_t = (self.t as f64).ln();
            let width = 1.0 + 1.0 / self.params.epsilon;
            argmax_lowest(
                self.mu_tilde
                    .iter()
                    .zip(&self.counts)
                    .map(|(&m, &n)| m + width * (2.0 * ln_t / n as f64).sqrt()),
            )
        });
        self.turn.begin(self.t, self.params.horizon, arm)
    }

    fn observe_reward(&mut self, arm: usize, reward: f64) -> Result<()> {
        check_private_reward(reward)?;
        self.turn.finish(arm)?;
        self.counts[arm] += 1;
        let n = self.counts[arm] as f64;
        self.mu_tilde[arm] += (reward - self.mu_tilde[arm]) / n;
        self.t += 1;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive_stream;

    #[test]
    fn ucb1_initial_sweep_then_best_arm() {
        let mut p = Ucb1::new(PolicyParams::new(3, 2000, 1.0).unwrap(), derive_stream(0, 0)).unwrap();
        let means = [0.2, 0.8, 0.5];
        let mut pulls = [0u64; 3];
        for t in 0..2000 {
            let a = p.select_arm().unwrap();
            if t < 3 {
                assert_eq!(a, t);
            }
            pulls[a] += 1;
            p.observe_reward(a, means[a]).unwrap();
        }
        assert!(pulls[1] > 1500, "{pulls:?}");
    }

    #[test]
    fn adap_episode_lengths_double() {
        let mut p = AdapUcb::new(PolicyParams::new(2, 300, 1e6).unwrap(), derive_stream(1, 0)).unwrap();
        let mut starts: Vec<(usize, u64)> = Vec::new();
        for _ in 0..300 {
            let a = p.select_arm().unwrap();
            let ep = p.episode.as_ref().unwrap();
            if ep.pulls == 0 {
                starts.push((a, ep.target));
            }
            p.observe_reward(a, if a == 0 { 0.9 } else { 0.1 }).unwrap();
        }
        // Each arm's episodes are 1, 1, 2, 4, ...: the pull count doubles.
        let arm0: Vec<u64> = starts.iter().filter(|s| s.0 == 0).map(|s| s.1).collect();
        assert_eq!(&arm0[..4], &[1, 1, 2, 4]);
        assert!(p.release_count() >= 5);
    }

    #[test]
    fn ldp_ucb_prefers_higher_privatized_mean() {
        let mut p = LdpUcb::new(PolicyParams::new(2, 5000, 1.0).unwrap(), derive_stream(0, 0)).unwrap();
        let mut s = derive_stream(0, 1);
        let mut pulls = [0u64; 2];
        for _ in 0..5000 {
            let a = p.select_arm().unwrap();
            pulls[a] += 1;
            let x = super::super::local_privatize(if a == 0 { 0.1 } else { 0.9 }, 1.0, &mut s).unwrap();
            p.observe_reward(a, x).unwrap();
        }
        assert!(pulls[1] > pulls[0] * 3, "{pulls:?}");
    }
}
