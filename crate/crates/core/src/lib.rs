//! Differentially private, fairness-aware multi-armed bandits.
//!
//! * [`rng`]: seeded replayable streams and Laplace noise.
//! * [`env`]: bandit instances and replay tapes.
//! * [`policy`]: GDP-NCB, LDP-NCB, the anytime wrapper and baselines.
//! * [`sim`]: the round loop, including local privatization.
//! * [`metrics`]: Nash and average regret from Monte-Carlo curves.
//! * [`audit`]: empirical privacy-loss estimation.
//! * [`harness`]: config-driven experiments, CSV output and plots.

// Negated comparisons are used so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod audit;
pub mod env;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod policy;
pub mod rng;
pub mod sim;

pub use audit::{AuditConfig, AuditReport, Verdict};
pub use env::{ArmSpec, BanditInstance, InstancePreset, ReplayTape};
pub use error::{Error, Result};
pub use harness::{figure_preset, run_experiment, ExperimentConfig};
pub use metrics::{MeanRewardCurve, RegretReport, RunTrace};
pub use policy::{make_policy, Policy, PolicyKind, PolicyParams};
pub use rng::{derive_stream, RngStream};
