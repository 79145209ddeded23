//! Bandit policies behind a uniform select/observe interface.
//!
//! A run alternates [`Policy::select_arm`] and [`Policy::observe_reward`].
//! Policies whose [`RewardModel`] is [`RewardModel::LocallyPrivatized`] must
//! only ever be handed rewards that already went through
//! [`local_privatize`]; the simulation loop in [`crate::sim`] does this before
//! the policy sees anything.

mod anytime;
mod baselines;
mod gdp;
pub mod index;
mod ldp;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::rng::{laplace_or_zero, RngStream};

pub use anytime::{Anytime, AnytimeBase, EpochFlag, EpochRecord};
pub use baselines::{AdapUcb, LdpUcb, Ucb1};
pub use gdp::{EpisodeRecord, GdpNcb};
pub use index::{
    argmax_lowest, gdp_release_scale, gdp_stop_threshold, ldp_stop_rhs, ncb_gdp, ncb_ldp, ncb_nonprivate,
    ncb_nonprivate_ln, phase1_stop_gdp, phase1_stop_ldp,
};
pub use ldp::LdpNcb;

pub const DEFAULT_C: f64 = 3.0;
pub const DEFAULT_ALPHA: f64 = 3.1;

/// Shared configuration of every policy.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicyParams {
    pub k: usize,
    /// Horizon `T` in rounds.
    pub horizon: u64,
    /// Privacy budget; `f64::INFINITY` disables all noise.
    pub epsilon: f64,
    pub c: f64,
    pub alpha: f64,
}

impl PolicyParams {
    pub fn new(k: usize, horizon: u64, epsilon: f64) -> Result<Self> {
        let p = Self {
            k,
            horizon,
            epsilon,
            c: DEFAULT_C,
            alpha: DEFAULT_ALPHA,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_c(mut self, c: f64) -> Result<Self> {
        self.c = c;
        self.validate()?;
        Ok(self)
    }

    pub fn with_alpha(mut self, alpha: f64) -> Result<Self> {
        self.alpha = alpha;
        self.validate()?;
        Ok(self)
    }

    pub fn with_horizon(mut self, horizon: u64) -> Result<Self> {
        self.horizon = horizon;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 1 {
            return Err(Error::Config("k must be >= 1".into()));
        }
        if self.horizon < 1 {
            return Err(Error::Config("horizon must be >= 1".into()));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::Config(format!("epsilon must be > 0, got {}", self.epsilon)));
        }
        if !(self.c >= 0.0 && self.c.is_finite()) || !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::Config(format!(
                "invalid constants c={} alpha={}",
                self.c, self.alpha
            )));
        }
        Ok(())
    }

    pub fn ln_horizon(&self) -> f64 {
        (self.horizon as f64).ln()
    }
}

/// What a policy expects to be fed by [`Policy::observe_reward`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RewardModel {
    /// The raw reward in [0, 1].
    Raw,
    /// `reward + Lap(1/epsilon)`, added by the caller.
    LocallyPrivatized { epsilon: f64 },
}

pub trait Policy: Send {
    fn kind(&self) -> PolicyKind;
    fn k(&self) -> usize;
    /// The 1-based round the next `select_arm` call will play.
    fn round(&self) -> u64;
    fn horizon(&self) -> u64;
    fn reward_model(&self) -> RewardModel {
        RewardModel::Raw
    }
    fn select_arm(&mut self) -> Result<usize>;
    fn observe_reward(&mut self, arm: usize, reward: f64) -> Result<()>;
    /// True once the policy has left uniform exploration.
    fn in_exploitation(&self) -> bool {
        false
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    GdpNcb,
    LdpNcb,
    AnytimeGdp,
    AnytimeLdp,
    /// GDP-NCB with every privacy term and noise draw removed.
    Ncb,
    AdapUcb,
    LdpUcb,
    Ucb1,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 8] = [
        PolicyKind::GdpNcb,
        PolicyKind::LdpNcb,
        PolicyKind::AnytimeGdp,
        PolicyKind::AnytimeLdp,
        PolicyKind::Ncb,
        PolicyKind::AdapUcb,
        PolicyKind::LdpUcb,
        PolicyKind::Ucb1,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::GdpNcb => "gdp_ncb",
            PolicyKind::LdpNcb => "ldp_ncb",
            PolicyKind::AnytimeGdp => "anytime_gdp",
            PolicyKind::AnytimeLdp => "anytime_ldp",
            PolicyKind::Ncb => "ncb",
            PolicyKind::AdapUcb => "adap_ucb",
            PolicyKind::LdpUcb => "ldp_ucb",
            PolicyKind::Ucb1 => "ucb1",
        }
    }

    /// Whether the privacy budget affects the policy at all.
    pub fn is_private(self) -> bool {
        !matches!(self, PolicyKind::Ncb | PolicyKind::Ucb1)
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PolicyKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown policy {s:?}")))
    }
}

/// Build a freshly initialized policy. The policy takes ownership of
/// `stream` for its internal randomness (uniform exploration, release noise).
pub fn make_policy(kind: PolicyKind, params: PolicyParams, stream: RngStream) -> Result<Box<dyn Policy>> {
    params.validate()?;
    Ok(match kind {
        PolicyKind::GdpNcb => Box::new(GdpNcb::new(params, stream)?),
        PolicyKind::Ncb => Box::new(GdpNcb::non_private(params, stream)?),
        PolicyKind::LdpNcb => Box::new(LdpNcb::new(params, stream)?),
        PolicyKind::AnytimeGdp => Box::new(Anytime::new(AnytimeBase::Gdp, params, stream)?),
        PolicyKind::AnytimeLdp => Box::new(Anytime::new(AnytimeBase::Ldp, params, stream)?),
        PolicyKind::AdapUcb => Box::new(AdapUcb::new(params, stream)?),
        PolicyKind::LdpUcb => Box::new(LdpUcb::new(params, stream)?),
        PolicyKind::Ucb1 => Box::new(Ucb1::new(params, stream)?),
    })
}

/// `x + Lap(1/epsilon)`: the randomizer each user applies before reporting.
pub fn local_privatize(x: f64, epsilon: f64, stream: &mut RngStream) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(domain(format!("reward {x} outside [0,1]")));
    }
    if !(epsilon > 0.0) {
        return Err(domain(format!("epsilon must be > 0, got {epsilon}")));
    }
    Ok(x + laplace_or_zero(stream, 1.0 / epsilon)?)
}

/// Guards the select/observe alternation shared by all policies.
#[derive(Clone, Debug, Default)]
pub(crate) struct Turn {
    pending: Option<usize>,
}

impl Turn {
    pub(crate) fn begin(&mut self, round: u64, horizon: u64, arm: usize) -> Result<usize> {
        if round > horizon {
            return Err(Error::State(format!("round {round} is past the horizon {horizon}")));
        }
        if let Some(prev) = self.pending {
            return Err(Error::State(format!("arm {prev} was selected but never observed")));
        }
        self.pending = Some(arm);
        Ok(arm)
    }

    pub(crate) fn check_horizon(round: u64, horizon: u64) -> Result<()> {
        if round > horizon {
            Err(Error::State(format!("round {round} is past the horizon {horizon}")))
        } else {
            Ok(())
        }
    }

    pub(crate) fn finish(&mut self, arm: usize) -> Result<()> {
        match self.pending.take() {
            Some(a) if a == arm => Ok(()),
            Some(a) => {
                self.pending = Some(a);
                Err(Error::State(format!("observed arm {arm} but arm {a} was selected")))
            }
            None => Err(Error::State(format!("observed arm {arm} without a selection"))),
        }
    }
}

pub(crate) fn check_raw_reward(reward: f64) -> Result<()> {
    if (0.0..=1.0).contains(&reward) {
        Ok(())
    } else {
        Err(domain(format!("raw reward {reward} outside [0,1]")))
    }
}

pub(crate) fn check_private_reward(reward: f64) -> Result<()> {
    if reward.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("privatized reward must be finite, got {reward}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive_stream;

    #[test]
    fn names_round_trip() {
        for k in PolicyKind::ALL {
            assert_eq!(k.name().parse::<PolicyKind>().unwrap(), k);
        }
        assert!(matches!("thompson".parse::<PolicyKind>(), Err(Error::Config(_))));
    }

    #[test]
    fn defaults() {
        let p = PolicyParams::new(4, 100, 0.5).unwrap();
        assert_eq!((p.c, p.alpha), (3.0, 3.1));
        assert!(PolicyParams::new(4, 0, 0.5).is_err());
        assert!(PolicyParams::new(4, 10, 0.0).is_err());
        assert!(PolicyParams::new(4, 10, -1.0).is_err());
    }

    #[test]
    fn every_policy_constructs_and_runs() {
        let p = PolicyParams::new(3, 50, 1.0).unwrap();
        for kind in PolicyKind::ALL {
            let mut pol = make_policy(kind, p, derive_stream(1, 1)).unwrap();
            assert_eq!(pol.round(), 1);
            for _ in 0..50 {
                let arm = pol.select_arm().unwrap();
                assert!(arm < 3);
                pol.observe_reward(arm, 0.5).unwrap();
            }
            assert!(matches!(pol.select_arm(), Err(Error::State(_))), "{kind}");
        }
    }

    #[test]
    fn arm_mismatch_and_double_select_are_state_errors() {
        let p = PolicyParams::new(3, 50, 1.0).unwrap();
        for kind in PolicyKind::ALL {
            let mut pol = make_policy(kind, p, derive_stream(1, 2)).unwrap();
            let arm = pol.select_arm().unwrap();
            assert!(matches!(pol.select_arm(), Err(Error::State(_))), "{kind}");
            assert!(
                matches!(pol.observe_reward((arm + 1) % 3, 0.5), Err(Error::State(_))),
                "{kind}"
            );
            pol.observe_reward(arm, 0.5).unwrap();
            assert!(matches!(pol.observe_reward(arm, 0.5), Err(Error::State(_))), "{kind}");
        }
    }

    #[test]
    fn raw_reward_policies_reject_out_of_range() {
        let p = PolicyParams::new(2, 10, 1.0).unwrap();
        for kind in [
            PolicyKind::GdpNcb,
            PolicyKind::Ncb,
            PolicyKind::AdapUcb,
            PolicyKind::Ucb1,
        ] {
            let mut pol = make_policy(kind, p, derive_stream(0, 0)).unwrap();
            let arm = pol.select_arm().unwrap();
            assert!(matches!(pol.observe_reward(arm, 1.5), Err(Error::Domain(_))), "{kind}");
        }
        let mut ldp = make_policy(PolicyKind::LdpNcb, p, derive_stream(0, 0)).unwrap();
        let arm = ldp.select_arm().unwrap();
        ldp.observe_reward(arm, -3.7).unwrap();
    }

    #[test]
    fn local_privatize_behaviour() {
        let mut s = derive_stream(4, 4);
        assert_eq!(local_privatize(0.3, f64::INFINITY, &mut s).unwrap(), 0.3);
        assert!(local_privatize(1.2, 1.0, &mut s).is_err());
        let n = 100_000;
        let draws: Vec<f64> = (0..n).map(|_| local_privatize(0.5, 1.0, &mut s).unwrap()).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        assert!((mean - 0.5).abs() < 0.02);
        assert!(draws.iter().any(|&x| x < 0.0) && draws.iter().any(|&x| x > 1.0));
    }
}
