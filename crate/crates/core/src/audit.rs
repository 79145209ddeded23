//! Empirical privacy-loss estimation by neighbouring-input replay.
//!
//! A mechanism is run many times on each of two neighbouring inputs, the
//! outcomes are histogrammed, and the privacy loss is estimated as the
//! largest absolute log-ratio of outcome frequencies over outcomes seen at
//! least `min_count` times on both sides. This is a lower-bound estimator:
//! a `Consistent` verdict means the audit failed to refute the claimed
//! budget, never that the mechanism is private.

use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::env::{ReplayEnv, ReplayTape};
use crate::error::{Error, Result};
use crate::policy::{make_policy, PolicyKind, PolicyParams};
use crate::rng::{sample_laplace, LaplaceScale, RngStream};
use crate::sim::{simulate, RunStreams, POLICY_TAG};

/// Largest arm-sequence outcome space the sequence audit will enumerate.
pub const MAX_SEQUENCE_OUTCOMES: usize = 256;
pub const MIN_SCALAR_TRIALS: u64 = 10_000;
pub const MIN_SEQUENCE_TRIALS: u64 = 100_000;

const BOOTSTRAP_TAG: u64 = 0xB007;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OutcomeSpace {
    /// Equal-width bins on `[lo, hi]`; values outside land in the edge bins.
    ScalarBins { n_bins: usize, lo: f64, hi: f64 },
    /// Full arm sequences of a bandit run.
    ArmSequences { horizon: usize },
}

impl OutcomeSpace {
    pub fn bin(&self, y: f64) -> usize {
        match *self {
            OutcomeSpace::ScalarBins { n_bins, lo, hi } => {
                let pos = (y - lo) / (hi - lo) * n_bins as f64;
                if pos.is_nan() || pos < 0.0 {
                    0
                } else {
                    (pos as usize).min(n_bins - 1)
                }
            }
            OutcomeSpace::ArmSequences { .. } => {
                panic!("arm sequences are encoded, not binned")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditConfig {
    /// Trials per input.
    pub trials: u64,
    pub outcome_space: OutcomeSpace,
    pub min_count: u64,
    /// Tolerance above the target before a violation is reported.
    pub slack: f64,
    pub bootstrap_resamples: usize,
    pub seed: u64,
}

impl AuditConfig {
    pub fn scalar(trials: u64, n_bins: usize, lo: f64, hi: f64) -> Self {
        Self {
            trials,
            outcome_space: OutcomeSpace::ScalarBins { n_bins, lo, hi },
            min_count: 2000,
            slack: 0.1,
            bootstrap_resamples: 200,
            seed: 0,
        }
    }

    pub fn sequences(trials: u64, horizon: usize) -> Self {
        Self {
            trials,
            outcome_space: OutcomeSpace::ArmSequences { horizon },
            min_count: 200,
            slack: 0.1,
            bootstrap_resamples: 200,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_min_count(mut self, min_count: u64) -> Self {
        self.min_count = min_count;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.min_count < 5 {
            return Err(Error::Config(format!("min_count must be >= 5, got {}", self.min_count)));
        }
        if !(self.slack >= 0.0) {
            return Err(Error::Config("slack must be >= 0".into()));
        }
        match self.outcome_space {
            OutcomeSpace::ScalarBins { n_bins, lo, hi } => {
                if self.trials < MIN_SCALAR_TRIALS {
                    return Err(Error::Config(format!(
                        "scalar audits need >= {MIN_SCALAR_TRIALS} trials"
                    )));
                }
                if n_bins < 2 || !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                    return Err(Error::Config(format!("bad binning: {n_bins} bins on [{lo}, {hi}]")));
                }
            }
            OutcomeSpace::ArmSequences { horizon } => {
                if self.trials < MIN_SEQUENCE_TRIALS {
                    return Err(Error::Config(format!(
                        "sequence audits need >= {MIN_SEQUENCE_TRIALS} trials"
                    )));
                }
                if horizon == 0 {
                    return Err(Error::Config("sequence horizon must be >= 1".into()));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Consistent,
    ViolationSuspected,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    /// Estimated privacy loss; `+inf` when some outcome occurred under one
    /// input only.
    pub epsilon_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub epsilon_target: f64,
    pub verdict: Verdict,
    pub unbounded: bool,
    /// Outcomes that passed the `min_count` filter.
    pub outcomes_used: usize,
    pub trials: u64,
    pub note: String,
}

const REPORT_NOTE: &str =
    "epsilon_hat is a lower-bound estimate; 'consistent' means not refuted, not certified private";

impl AuditReport {
    pub fn to_json(&self) -> Result<String> {
        // serde_json has no representation for infinities.
        let mut v = serde_json::to_value(self)?;
        for key in ["epsilon_hat", "ci_low", "ci_high"] {
            let x = match key {
                "epsilon_hat" => self.epsilon_hat,
                "ci_low" => self.ci_low,
                _ => self.ci_high,
            };
            if x.is_infinite() {
                v[key] = serde_json::Value::String("inf".into());
            }
        }
        Ok(serde_json::to_string_pretty(&v)?)
    }
}

/// Log-ratio estimate from two histograms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RatioEstimate {
    pub epsilon: f64,
    pub used: usize,
    pub unbounded: bool,
}

/// `max |ln(p(o) / p'(o))|` over outcomes with at least `min_count` hits on
/// both sides. An outcome with `min_count` hits on one side and none on the
/// other makes the estimate unbounded.
pub fn histogram_epsilon(a: &[u64], b: &[u64], min_count: u64) -> RatioEstimate {
    let na: u64 = a.iter().sum();
    let nb: u64 = b.iter().sum();
    let mut eps: f64 = 0.0;
    let mut used = 0;
    let mut unbounded = false;
    for (&ca, &cb) in a.iter().zip(b) {
        if ca >= min_count && cb >= min_count {
            let r = (ca as f64 / na as f64).ln() - (cb as f64 / nb as f64).ln();
            eps = eps.max(r.abs());
            used += 1;
        } else if (ca >= min_count && cb == 0) || (cb >= min_count && ca == 0) {
            unbounded = true;
        }
    }
    RatioEstimate {
        epsilon: if unbounded { f64::INFINITY } else { eps },
        used,
        unbounded,
    }
}

fn multinomial_resample(counts: &[u64], stream: &mut RngStream) -> Vec<u64> {
    let mut remaining: u64 = counts.iter().sum();
    let mut mass_left = remaining as f64;
    let mut out = Vec::with_capacity(counts.len());
    for &c in counts {
        if remaining == 0 || c == 0 {
            out.push(0);
            mass_left -= c as f64;
            continue;
        }
        let p = (c as f64 / mass_left).clamp(0.0, 1.0);
        let draw = Binomial::new(remaining, p)
            .expect("valid binomial")
            .sample(stream.rng());
        out.push(draw);
        remaining -= draw;
        mass_left -= c as f64;
    }
    out
}

/// Per-outcome log-ratios and their delta-method standard errors for the
/// outcomes passing the `min_count` filter.
fn log_ratios(a: &[u64], b: &[u64], min_count: u64) -> Vec<(usize, f64, f64)> {
    let na = a.iter().sum::<u64>() as f64;
    let nb = b.iter().sum::<u64>() as f64;
    a.iter()
        .zip(b)
        .enumerate()
        .filter(|(_, (ca, cb))| **ca >= min_count && **cb >= min_count)
        .map(|(i, (&ca, &cb))| {
            let (ca, cb) = (ca as f64, cb as f64);
            let r = (ca / na).ln() - (cb / nb).ln();
            let se = (1.0 / ca - 1.0 / na + 1.0 / cb - 1.0 / nb).max(0.0).sqrt();
            (i, r, se)
        })
        .collect()
}

/// 95% interval for the max absolute log-ratio from a bootstrap max-t band:
/// the 95th percentile `q` of `max_o |r*_o - r_o| / se_o` over multinomial
/// resamples widens every outcome's ratio by `q se_o`. Unlike a percentile
/// interval on the max itself, this is not biased upwards by the max over
/// many noisy outcomes, so identical inputs give `ci_low = 0`.
fn simultaneous_band(a: &[u64], b: &[u64], config: &AuditConfig) -> (f64, f64) {
    let base = log_ratios(a, b, config.min_count);
    let mut stream = RngStream::new(config.seed, BOOTSTRAP_TAG);
    let mut stats: Vec<f64> = (0..config.bootstrap_resamples.max(20))
        .map(|_| {
            let ra = multinomial_resample(a, &mut stream);
            let rb = multinomial_resample(b, &mut stream);
            let (na, nb) = (ra.iter().sum::<u64>() as f64, rb.iter().sum::<u64>() as f64);
            base.iter()
                .filter(|&&(i, _, _)| ra[i] > 0 && rb[i] > 0)
                .map(|&(i, r, se)| {
                    let rs = (ra[i] as f64 / na).ln() - (rb[i] as f64 / nb).ln();
                    (rs - r).abs() / se
                })
                .fold(0.0, f64::max)
        })
        .collect();
    stats.sort_by(f64::total_cmp);
    let q = stats[((stats.len() as f64 * 0.95).ceil() as usize).min(stats.len()) - 1];

    let lo = base.iter().map(|&(_, r, se)| r.abs() - q * se).fold(0.0, f64::max);
    let hi = base.iter().map(|&(_, r, se)| r.abs() + q * se).fold(0.0, f64::max);
    (lo, hi)
}

/// Turns two histograms into a report with a bootstrap 95% interval.
pub fn report_from_histograms(a: &[u64], b: &[u64], epsilon_target: f64, config: &AuditConfig) -> Result<AuditReport> {
    let occupied = a.iter().zip(b).filter(|(x, y)| **x + **y > 0).count();
    if occupied <= 1 {
        return Err(Error::Audit(
            "degenerate histograms: all mass in a single outcome".into(),
        ));
    }
    let est = histogram_epsilon(a, b, config.min_count);
    if est.used == 0 && !est.unbounded {
        return Err(Error::Audit(format!(
            "no outcome reached min_count={} on both sides",
            config.min_count
        )));
    }
    let (ci_low, ci_high) = if est.unbounded {
        (f64::INFINITY, f64::INFINITY)
    } else {
        let (lo, hi) = simultaneous_band(a, b, config);
        (lo, hi)
    };
    let verdict = if ci_low > epsilon_target + config.slack {
        Verdict::ViolationSuspected
    } else {
        Verdict::Consistent
    };
    Ok(AuditReport {
        epsilon_hat: est.epsilon,
        ci_low,
        ci_high,
        epsilon_target,
        verdict,
        unbounded: est.unbounded,
        outcomes_used: est.used,
        trials: config.trials,
        note: REPORT_NOTE.into(),
    })
}

/// Histogram `trials` outcomes of `sample(trial, stream)` on each side.
/// Side `s` of trial `i` draws from stream id `2 i + s` under the audit seed.
pub fn paired_histograms<F>(n_outcomes: usize, config: &AuditConfig, sample: F) -> Result<(Vec<u64>, Vec<u64>)>
where
    F: Fn(usize, &mut RngStream) -> Result<usize> + Sync,
{
    let side = |s: usize| -> Result<Vec<u64>> {
        (0..config.trials)
            .into_par_iter()
            .try_fold(
                || vec![0u64; n_outcomes],
                |mut h, i| {
                    let mut stream = RngStream::new(config.seed, 2 * i + s as u64);
                    let o = sample(s, &mut stream)?;
                    h[o] += 1;
                    Ok(h)
                },
            )
            .try_reduce(
                || vec![0u64; n_outcomes],
                |mut x, y| {
                    x.iter_mut().zip(y).for_each(|(a, b)| *a += b);
                    Ok(x)
                },
            )
    };
    Ok((side(0)?, side(1)?))
}

/// A randomized map from a [0, 1] input to a real output.
pub trait ScalarMechanism: Sync {
    fn release(&self, x: f64, stream: &mut RngStream) -> f64;
}

/// `x + Lap(scale)`.
#[derive(Clone, Copy, Debug)]
pub struct LaplaceMechanism {
    pub scale: LaplaceScale,
}

impl LaplaceMechanism {
    /// The calibrated mechanism for sensitivity-1 inputs: scale `1/eps`.
    pub fn for_epsilon(epsilon: f64) -> Result<Self> {
        Ok(Self {
            scale: LaplaceScale::new(1.0 / epsilon)?,
        })
    }

    /// A deliberately miscalibrated mechanism with scale `1/(2 eps)`, which
    /// leaks `2 eps`.
    pub fn half_scale(epsilon: f64) -> Result<Self> {
        Ok(Self {
            scale: LaplaceScale::new(0.5 / epsilon)?,
        })
    }
}

impl ScalarMechanism for LaplaceMechanism {
    fn release(&self, x: f64, stream: &mut RngStream) -> f64 {
        x + sample_laplace(stream, self.scale)
    }
}

/// A mechanism followed by a deterministic map of its output.
pub struct PostProcessed<M, F> {
    pub mechanism: M,
    pub map: F,
}

impl<M: ScalarMechanism, F: Fn(f64) -> f64 + Sync> ScalarMechanism for PostProcessed<M, F> {
    fn release(&self, x: f64, stream: &mut RngStream) -> f64 {
        (self.map)(self.mechanism.release(x, stream))
    }
}

pub fn audit_scalar_mechanism<M: ScalarMechanism>(
    mechanism: &M,
    x: f64,
    x_prime: f64,
    epsilon_target: f64,
    config: &AuditConfig,
) -> Result<AuditReport> {
    config.validate()?;
    for v in [x, x_prime] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::Precondition(format!("mechanism input {v} outside [0,1]")));
        }
    }
    let space = match config.outcome_space {
        s @ OutcomeSpace::ScalarBins { .. } => s,
        OutcomeSpace::ArmSequences { .. } => {
            return Err(Error::Config("scalar audit needs a scalar binning".into()));
        }
    };
    let OutcomeSpace::ScalarBins { n_bins, .. } = space else {
        unreachable!()
    };
    let inputs = [x, x_prime];
    let (a, b) = paired_histograms(n_bins, config, |s, stream| {
        Ok(space.bin(mechanism.release(inputs[s], stream)))
    })?;
    report_from_histograms(&a, &b, epsilon_target, config)
}

/// Audits a bandit policy's full arm sequence under the global definition:
/// the same policy is replayed on two neighbouring reward tapes, where round
/// `t` delivers `X_t` whichever arm is pulled.
pub fn audit_bandit_global(
    kind: PolicyKind,
    params: PolicyParams,
    tape: &ReplayTape,
    tape_prime: &ReplayTape,
    config: &AuditConfig,
) -> Result<AuditReport> {
    config.validate()?;
    let horizon = match config.outcome_space {
        OutcomeSpace::ArmSequences { horizon } => horizon,
        OutcomeSpace::ScalarBins { .. } => {
            return Err(Error::Config(
                "bandit audit needs the arm-sequence outcome space".into(),
            ));
        }
    };
    match tape.hamming(tape_prime) {
        Some(d) if d <= 1 => {}
        Some(d) => {
            return Err(Error::Precondition(format!(
                "tapes differ at {d} rounds, expected at most 1"
            )))
        }
        None => return Err(Error::Precondition("tapes have different lengths".into())),
    }
    if tape.len() != horizon || params.horizon != horizon as u64 {
        return Err(Error::Precondition(format!(
            "tape length {}, policy horizon {} and audit horizon {horizon} must agree",
            tape.len(),
            params.horizon
        )));
    }
    let n_outcomes = (params.k as u128)
        .checked_pow(horizon as u32)
        .filter(|&n| n <= MAX_SEQUENCE_OUTCOMES as u128)
        .ok_or_else(|| {
            Error::Precondition(format!(
                "k^T = {}^{horizon} exceeds {MAX_SEQUENCE_OUTCOMES} outcomes",
                params.k
            ))
        })? as usize;

    let tapes = [tape, tape_prime];
    let (a, b) = paired_histograms(n_outcomes, config, |s, stream| {
        let env = ReplayEnv {
            tape: tapes[s],
            k: params.k,
        };
        let mut policy = make_policy(kind, params, stream.substream(POLICY_TAG))?;
        let mut streams = RunStreams::from_run(stream);
        let trace = simulate(&env, policy.as_mut(), params.horizon, &mut streams)?;
        Ok(trace.arms().fold(0usize, |acc, arm| acc * params.k + arm))
    })?;
    report_from_histograms(&a, &b, params.epsilon, config)
}
