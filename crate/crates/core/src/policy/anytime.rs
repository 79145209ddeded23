//! Horizon-free wrapper: doubling windows, each either uniform exploration
//! (probability `1/W^2`) or a fresh fixed-horizon run of length `W`.

use crate::error::Result;
use crate::rng::RngStream;

use super::{GdpNcb, LdpNcb, Policy, PolicyKind, PolicyParams, RewardModel, Turn};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AnytimeBase {
    Gdp,
    Ldp,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EpochFlag {
    Uniform,
    DpNcb,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpochRecord {
    /// 1-based epoch index `h`.
    pub index: u32,
    pub window: u64,
    /// Rounds played before this epoch started.
    pub prior_rounds: u64,
    pub flag: EpochFlag,
}

#[derive(Clone, Debug)]
enum Inner {
    Gdp(GdpNcb),
    Ldp(LdpNcb),
}

impl Inner {
    fn policy(&mut self) -> &mut dyn Policy {
        match self {
            Inner::Gdp(p) => p,
            Inner::Ldp(p) => p,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Anytime {
    base: AnytimeBase,
    params: PolicyParams,
    stream: RngStream,
    t: u64,
    window: u64,
    rounds_left: u64,
    flag: EpochFlag,
    inner: Option<Inner>,
    epochs: Vec<EpochRecord>,
    turn: Turn,
}

impl Anytime {
    /// `params.horizon` only bounds how long the wrapper may be driven; the
    /// inner policies never see it.
    pub fn new(base: AnytimeBase, params: PolicyParams, stream: RngStream) -> Result<Self> {
        params.validate()?;
        let mut a = Self {
            base,
            params,
            stream,
            t: 1,
            window: 1,
            rounds_left: 0,
            flag: EpochFlag::Uniform,
            inner: None,
            epochs: Vec::new(),
            turn: Turn::default(),
        };
        a.start_epoch()?;
        Ok(a)
    }

    pub fn window(&self) -> u64 {
        self.window
    }

    pub fn flag(&self) -> EpochFlag {
        self.flag
    }

    pub fn epochs(&self) -> &[EpochRecord] {
        &self.epochs
    }

    fn start_epoch(&mut self) -> Result<()> {
        let index = self.epochs.len() as u32 + 1;
        let w = self.window as f64;
        self.flag = if self.stream.uniform() < 1.0 / (w * w) {
            EpochFlag::Uniform
        } else {
            EpochFlag::DpNcb
        };
        self.inner = match self.flag {
            EpochFlag::Uniform => None,
            EpochFlag::DpNcb => {
                let params = self.params.with_horizon(self.window)?;
                let stream = self.stream.substream(u64::from(index));
                Some(match self.base {
                    AnytimeBase::Gdp => Inner::Gdp(GdpNcb::new(params, stream)?),
                    AnytimeBase::Ldp => Inner::Ldp(LdpNcb::new(params, stream)?),
                })
            }
        };
        self.rounds_left = self.window;
        self.epochs.push(EpochRecord {
            index,
            window: self.window,
            prior_rounds: self.t - 1,
            flag: self.flag,
        });
        Ok(())
    }
}

impl Policy for Anytime {
    fn kind(&self) -> PolicyKind {
        match self.base {
            AnytimeBase::Gdp => PolicyKind::AnytimeGdp,
            AnytimeBase::Ldp => PolicyKind::AnytimeLdp,
        }
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
        match self.base {
            AnytimeBase::Gdp => RewardModel::Raw,
            AnytimeBase::Ldp => RewardModel::LocallyPrivatized {
                epsilon: self.params.epsilon,
            },
        }
    }

    fn in_exploitation(&self) -> bool {
        false
    }

    fn select_arm(&mut self) -> Result<usize> {
        Turn::check_horizon(self.t, self.params.horizon)?;
        let arm = match self.inner.as_mut() {
            None => self.stream.index(self.params.k),
            // Epochs end exactly when the inner horizon is exhausted.
            Some(inner) => inner.policy().select_arm()?,
        };
        self.turn.begin(self.t, self.params.horizon, arm)
    }

    fn observe_reward(&mut self, arm: usize, reward: f64) -> Result<()> {
        match self.base {
            AnytimeBase::Gdp => super::check_raw_reward(reward)?,
            AnytimeBase::Ldp => super::check_private_reward(reward)?,
        }
        self.turn.finish(arm)?;
        if let Some(inner) = self.inner.as_mut() {
            inner.policy().observe_reward(arm, reward)?;
        }
        self.t += 1;
        self.rounds_left -= 1;
        if self.rounds_left == 0 {
            self.window *= 2;
            self.start_epoch()?;
        }
        Ok(())
    }
}
