//! Globally private Nash confidence bound with episodic, forgetting releases.

use crate::error::Result;
use crate::rng::{laplace_or_zero, RngStream};

use super::index::{argmax_lowest, clip01, gdp_release_scale, ncb_gdp, phase1_stop_gdp};
use super::{check_raw_reward, Policy, PolicyKind, PolicyParams, Turn};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    Explore,
    Exploit,
}

#[derive(Clone, Debug)]
struct Episode {
    arm: usize,
    target: u64,
    pulls: u64,
    /// Starts at the arm's Phase-I mean; earlier episodes are forgotten.
    mean: f64,
}

/// One completed Phase-II episode and its private release.
#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeRecord {
    pub arm: usize,
    /// Round at which the episode's first pull happened.
    pub start_round: u64,
    pub length: u64,
    /// Denominator of the released mean: Phase-I pulls plus episode pulls.
    pub n_a: u64,
    pub pre_noise_mean: f64,
    /// Released value after clipping to [0, 1].
    pub released: f64,
}

/// GDP-NCB state.
///
/// Phase I pulls arms uniformly, keeps running means `mu_hat` and refreshes
/// the noisy `mu_tilde = mu_hat + Lap(ln T / (eps N1))` after every pull; it
/// ends once some arm's `N1 * mu_tilde` reaches the stopping threshold.
/// Phase II runs episodes: the arm with the largest index on its last
/// release is pulled `2 n_s` times, where `n_s` is the length of its previous
/// episode (1 before the first), and one new private mean is released when
/// the episode completes. Episodes cut short by the horizon release nothing.
#[derive(Clone, Debug)]
pub struct GdpNcb {
    kind: PolicyKind,
    params: PolicyParams,
    stream: RngStream,
    t: u64,
    phase: Phase,
    n1: Vec<u64>,
    mu_hat: Vec<f64>,
    mu_tilde: Vec<f64>,
    n_rel: Vec<u64>,
    n2: Vec<u64>,
    episode: Option<Episode>,
    episode_start: u64,
    releases: Vec<EpisodeRecord>,
    phase_one_len: Option<u64>,
    exploit_pulls: Vec<u64>,
    turn: Turn,
}

impl GdpNcb {
    pub fn new(params: PolicyParams, stream: RngStream) -> Result<Self> {
        Self::build(PolicyKind::GdpNcb, params, stream)
    }

    /// The same machinery with an infinite budget: no noise, no privacy
    /// terms in the index or the stopping threshold.
    pub fn non_private(params: PolicyParams, stream: RngStream) -> Result<Self> {
        let params = PolicyParams {
            epsilon: f64::INFINITY,
            ..params
        };
        Self::build(PolicyKind::Ncb, params, stream)
    }

    fn build(kind: PolicyKind, params: PolicyParams, stream: RngStream) -> Result<Self> {
        params.validate()?;
        let k = params.k;
        Ok(Self {
            kind,
            params,
            stream,
            t: 1,
            phase: Phase::Explore,
            n1: vec![0; k],
            mu_hat: vec![0.0; k],
            mu_tilde: vec![0.0; k],
            n_rel: vec![0; k],
            n2: vec![0; k],
            episode: None,
            episode_start: 0,
            releases: Vec::new(),
            phase_one_len: None,
            exploit_pulls: vec![0; k],
            turn: Turn::default(),
        })
    }

    pub fn params(&self) -> &PolicyParams {
        &self.params
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn phase_one_counts(&self) -> &[u64] {
        &self.n1
    }

    pub fn mu_hat(&self) -> &[f64] {
        &self.mu_hat
    }

    pub fn mu_tilde(&self) -> &[f64] {
        &self.mu_tilde
    }

    /// Sample count behind each arm's latest private mean.
    pub fn release_counts(&self) -> &[u64] {
        &self.n_rel
    }

    pub fn releases(&self) -> &[EpisodeRecord] {
        &self.releases
    }

    /// Number of Phase-I rounds, once Phase I has ended.
    pub fn phase_one_length(&self) -> Option<u64> {
        self.phase_one_len
    }

    pub fn exploitation_pulls(&self) -> &[u64] {
        &self.exploit_pulls
    }

    /// Pulls made so far in the current, unfinished episode.
    pub fn open_episode_pulls(&self) -> u64 {
        self.episode.as_ref().map_or(0, |e| e.pulls)
    }

    fn noise_scale(&self, n: u64) -> f64 {
        gdp_release_scale(n, &self.params)
    }

    /// Index of every arm at an episode boundary.
    pub fn indices(&self) -> Vec<f64> {
        self.mu_tilde
            .iter()
            .zip(&self.n_rel)
            .map(|(&m, &n)| ncb_gdp(m, n, &self.params))
            .collect()
    }

    fn enter_phase_two(&mut self) {
        self.phase = Phase::Exploit;
        self.phase_one_len = Some(self.t - 1);
        for i in 0..self.params.k {
            self.n2[i] = 1;
            self.mu_tilde[i] = clip01(self.mu_tilde[i]);
            self.n_rel[i] = self.n1[i];
        }
    }

    fn open_episode(&mut self) -> usize {
        let arm = argmax_lowest(self.indices());
        let n_s = self.n2[arm];
        self.n2[arm] = 0;
        self.episode = Some(Episode {
            arm,
            target: 2 * n_s,
            pulls: 0,
            mean: self.mu_hat[arm],
        });
        self.episode_start = self.t;
        arm
    }
}

impl Policy for GdpNcb {
    fn kind(&self) -> PolicyKind {
        self.kind
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

    fn in_exploitation(&self) -> bool {
        self.phase == Phase::Exploit
    }

    fn select_arm(&mut self) -> Result<usize> {
        Turn::check_horizon(self.t, self.params.horizon)?;
        let arm = match (self.phase, &self.episode) {
            (Phase::Explore, _) => self.stream.index(self.params.k),
            (Phase::Exploit, Some(ep)) => ep.arm,
            (Phase::Exploit, None) => self.open_episode(),
        };
        self.turn.begin(self.t, self.params.horizon, arm)
    }

    fn observe_reward(&mut self, arm: usize, reward: f64) -> Result<()> {
        check_raw_reward(reward)?;
        self.turn.finish(arm)?;
        match self.phase {
            Phase::Explore => {
                self.n1[arm] += 1;
                let n = self.n1[arm];
                let nf = n as f64;
                self.mu_hat[arm] = (nf - 1.0) / nf * self.mu_hat[arm] + reward / nf;
                let scale = self.noise_scale(n);
                let noise = laplace_or_zero(&mut self.stream, scale)?;
                self.mu_tilde[arm] = self.mu_hat[arm] + noise;
                self.t += 1;
                if phase1_stop_gdp(&self.n1, &self.mu_tilde, self.t, &self.params) {
                    self.enter_phase_two();
                }
            }
            Phase::Exploit => {
                self.n2[arm] += 1;
                self.exploit_pulls[arm] += 1;
                let n_a = self.n2[arm] + self.n1[arm];
                let nf = n_a as f64;
                let ep = self.episode.as_mut().expect("episode open during phase two");
                ep.pulls += 1;
                ep.mean = (nf - 1.0) / nf * ep.mean + reward / nf;
                self.t += 1;
                if ep.pulls == ep.target {
                    let ep = self.episode.take().expect("episode open");
                    let scale = self.noise_scale(n_a);
                    let noise = laplace_or_zero(&mut self.stream, scale)?;
                    let released = clip01(ep.mean + noise);
                    self.mu_tilde[arm] = released;
                    self.n_rel[arm] = n_a;
                    self.releases.push(EpisodeRecord {
                        arm,
                        start_round: self.episode_start,
                        length: ep.target,
                        n_a,
                        pre_noise_mean: ep.mean,
                        released,
                    });
                }
            }
        }
        Ok(())
    }
}
