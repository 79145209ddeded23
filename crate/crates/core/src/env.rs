//! Bandit instances with rewards on [0, 1], plus a replay tape used by the
//! privacy auditor.

use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derive_stream, RngStream};

/// Bernoulli probabilities below this are sampled as exactly zero.
pub const BERNOULLI_UNDERFLOW: f64 = 1e-300;

/// Reward distribution of one arm.
///
/// Bernoulli arms carry their success probability in log space so that
/// means like `(2e)^-1000` stay representable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ArmSpec {
    Bernoulli { log_p: f64 },
    Beta { a: f64, b: f64 },
    TwoPoint { lo: f64, hi: f64, p: f64 },
    Uniform01,
    Constant { value: f64 },
}

impl ArmSpec {
    pub fn bernoulli(p: f64) -> Result<Self> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::Config(format!("bernoulli p must be in (0,1], got {p}")));
        }
        Ok(ArmSpec::Bernoulli { log_p: p.ln() })
    }

    pub fn bernoulli_log(log_p: f64) -> Result<Self> {
        if !(log_p.is_finite() && log_p <= 0.0) {
            return Err(Error::Config(format!(
                "bernoulli log p must be finite and <= 0, got {log_p}"
            )));
        }
        Ok(ArmSpec::Bernoulli { log_p })
    }

    pub fn beta(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
            return Err(Error::Config(format!(
                "beta shape parameters must be positive, got ({a}, {b})"
            )));
        }
        Ok(ArmSpec::Beta { a, b })
    }

    pub fn two_point(lo: f64, hi: f64, p: f64) -> Result<Self> {
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        if !(unit(lo) && unit(hi) && unit(p) && lo <= hi) {
            return Err(Error::Config(format!(
                "two_point needs 0 <= lo <= hi <= 1 and p in [0,1], got ({lo}, {hi}, {p})"
            )));
        }
        Ok(ArmSpec::TwoPoint { lo, hi, p })
    }

    pub fn constant(value: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::Config(format!("constant reward must be in [0,1], got {value}")));
        }
        Ok(ArmSpec::Constant { value })
    }

    /// Re-runs the constructor checks; used after deserialization.
    pub fn validate(&self) -> Result<()> {
        match *self {
            ArmSpec::Bernoulli { log_p } => Self::bernoulli_log(log_p).map(drop),
            ArmSpec::Beta { a, b } => Self::beta(a, b).map(drop),
            ArmSpec::TwoPoint { lo, hi, p } => Self::two_point(lo, hi, p).map(drop),
            ArmSpec::Uniform01 => Ok(()),
            ArmSpec::Constant { value } => Self::constant(value).map(drop),
        }
    }

    /// Analytic mean. May underflow to 0 for log-space Bernoulli arms; use
    /// [`ArmSpec::log_mean`] in metrics.
    pub fn true_mean(&self) -> f64 {
        match *self {
            ArmSpec::Bernoulli { log_p } => log_p.exp(),
            ArmSpec::Beta { a, b } => a / (a + b),
            ArmSpec::TwoPoint { lo, hi, p } => lo * (1.0 - p) + hi * p,
            ArmSpec::Uniform01 => 0.5,
            ArmSpec::Constant { value } => value,
        }
    }

    pub fn log_mean(&self) -> f64 {
        match *self {
            ArmSpec::Bernoulli { log_p } => log_p,
            _ => self.true_mean().ln(),
        }
    }

    pub fn sample(&self, stream: &mut RngStream) -> f64 {
        match *self {
            ArmSpec::Bernoulli { log_p } => {
                let p = log_p.exp();
                let u = stream.uniform();
                if p >= BERNOULLI_UNDERFLOW && u < p {
                    1.0
                } else {
                    0.0
                }
            }
            ArmSpec::Beta { a, b } => {
                // Parameters were validated at construction.
                let beta = Beta::new(a, b).expect("valid beta parameters");
                beta.sample(stream.rng()).clamp(0.0, 1.0)
            }
            ArmSpec::TwoPoint { lo, hi, p } => {
                if stream.uniform() < p {
                    hi
                } else {
                    lo
                }
            }
            ArmSpec::Uniform01 => stream.uniform(),
            ArmSpec::Constant { value } => value,
        }
    }
}

/// Analytic mean of an arm spec.
pub fn true_mean(spec: &ArmSpec) -> f64 {
    spec.true_mean()
}

/// An ordered list of arms with strictly positive means.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BanditInstance {
    arms: Vec<ArmSpec>,
    log_means: Vec<f64>,
    mu_star: f64,
}

impl BanditInstance {
    pub fn new(arms: Vec<ArmSpec>) -> Result<Self> {
        if arms.len() < 2 {
            return Err(Error::Config(format!("need at least 2 arms, got {}", arms.len())));
        }
        let mut log_means = Vec::with_capacity(arms.len());
        for (i, arm) in arms.iter().enumerate() {
            arm.validate()?;
            let lm = arm.log_mean();
            if !lm.is_finite() {
                return Err(Error::Config(format!("arm {i} has non-positive mean")));
            }
            log_means.push(lm);
        }
        let max_log = log_means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(Self {
            arms,
            log_means,
            mu_star: max_log.exp(),
        })
    }

    pub fn k(&self) -> usize {
        self.arms.len()
    }

    pub fn arms(&self) -> &[ArmSpec] {
        &self.arms
    }

    pub fn mu_star(&self) -> f64 {
        self.mu_star
    }

    pub fn log_means(&self) -> &[f64] {
        &self.log_means
    }

    pub fn means(&self) -> Vec<f64> {
        self.arms.iter().map(ArmSpec::true_mean).collect()
    }

    pub fn sample_reward(&self, arm: usize, stream: &mut RngStream) -> Result<f64> {
        let spec = self
            .arms
            .get(arm)
            .ok_or_else(|| Error::Index(format!("arm {arm} out of range for k={}", self.k())))?;
        Ok(spec.sample(stream))
    }
}

/// Named instance presets used by the experiment figures.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case")]
pub enum InstancePreset {
    /// Two Bernoulli arms: mean `(2e)^-T` and mean 1.
    Adversarial { horizon: u64 },
    /// 50 Bernoulli arms with means drawn from Unif(0.005, 1).
    Bern50 { seed: u64 },
    /// 50 arms with means drawn from Unif(0.005, 1); the drawn value picks
    /// the distribution family.
    Mixed50 { seed: u64 },
}

pub const PRESET_ARMS: usize = 50;
const MEAN_LOW: f64 = 0.005;
const MEAN_HIGH: f64 = 1.0;
// Instance draws live on their own stream id so they never alias run streams.
const INSTANCE_STREAM: u64 = 0x1A57_A9CE;

fn draw_means(seed: u64) -> Vec<f64> {
    let mut s = derive_stream(seed, INSTANCE_STREAM);
    (0..PRESET_ARMS)
        .map(|_| {
            // Open interval: reject the (measure-zero) left endpoint.
            loop {
                let u = s.uniform_open01();
                let m = MEAN_LOW + (MEAN_HIGH - MEAN_LOW) * u;
                if m > MEAN_LOW && m < MEAN_HIGH {
                    break m;
                }
            }
        })
        .collect()
}

/// Distribution family assigned to a drawn mean in the mixed preset.
pub fn mixed_arm_for(label: f64) -> Result<ArmSpec> {
    if label >= 0.75 {
        ArmSpec::bernoulli(label)
    } else if label >= 0.5 {
        ArmSpec::beta(4.0, 1.0)
    } else if label >= 0.25 {
        ArmSpec::two_point(0.4, 1.0, 0.5)
    } else {
        Ok(ArmSpec::Uniform01)
    }
}

pub fn make_figure_instance(preset: &InstancePreset) -> Result<BanditInstance> {
    match *preset {
        InstancePreset::Adversarial { horizon } => {
            if horizon == 0 {
                return Err(Error::Config("adversarial preset needs horizon >= 1".into()));
            }
            let log_p = -(horizon as f64) * (1.0 + std::f64::consts::LN_2);
            BanditInstance::new(vec![ArmSpec::bernoulli_log(log_p)?, ArmSpec::bernoulli(1.0)?])
        }
        InstancePreset::Bern50 { seed } => {
            let arms = draw_means(seed)
                .into_iter()
                .map(ArmSpec::bernoulli)
                .collect::<Result<Vec<_>>>()?;
            BanditInstance::new(arms)
        }
        InstancePreset::Mixed50 { seed } => {
            let arms = draw_means(seed)
                .into_iter()
                .map(mixed_arm_for)
                .collect::<Result<Vec<_>>>()?;
            BanditInstance::new(arms)
        }
    }
}

/// Fixed reward sequence `X_1..X_T`: round `t` delivers `X_t` whichever arm
/// is pulled.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplayTape {
    rewards: Vec<f64>,
}

impl ReplayTape {
    pub fn new(rewards: Vec<f64>) -> Result<Self> {
        if let Some((i, x)) = rewards.iter().enumerate().find(|(_, x)| !(0.0..=1.0).contains(*x)) {
            return Err(Error::Domain(format!("tape entry {} = {x} outside [0,1]", i + 1)));
        }
        Ok(Self { rewards })
    }

    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    pub fn rewards(&self) -> &[f64] {
        &self.rewards
    }

    /// Reward at 1-based round `t`.
    pub fn replay_reward(&self, t: usize) -> Result<f64> {
        if t == 0 || t > self.rewards.len() {
            return Err(Error::Index(format!("round {t} outside 1..={}", self.rewards.len())));
        }
        Ok(self.rewards[t - 1])
    }

    /// Number of rounds at which the tapes differ, or `None` for different
    /// lengths.
    pub fn hamming(&self, other: &ReplayTape) -> Option<usize> {
        (self.len() == other.len()).then(|| self.rewards.iter().zip(&other.rewards).filter(|(a, b)| a != b).count())
    }
}

/// Where rewards come from during a run.
pub trait RewardSource {
    fn k(&self) -> usize;
    /// Reward for pulling `arm` at 1-based round `t`.
    fn reward(&self, arm: usize, t: usize, stream: &mut RngStream) -> Result<f64>;
    /// Natural log of the pulled arm's true mean.
    fn log_mean(&self, arm: usize) -> f64;
}

impl RewardSource for BanditInstance {
    fn k(&self) -> usize {
        self.k()
    }

    fn reward(&self, arm: usize, _t: usize, stream: &mut RngStream) -> Result<f64> {
        self.sample_reward(arm, stream)
    }

    fn log_mean(&self, arm: usize) -> f64 {
        self.log_means[arm]
    }
}

/// A replay tape served to a policy with a fixed number of arms.
#[derive(Clone, Debug)]
pub struct ReplayEnv<'a> {
    pub tape: &'a ReplayTape,
    pub k: usize,
}

impl RewardSource for ReplayEnv<'_> {
    fn k(&self) -> usize {
        self.k
    }

    fn reward(&self, arm: usize, t: usize, _stream: &mut RngStream) -> Result<f64> {
        if arm >= self.k {
            return Err(Error::Index(format!("arm {arm} out of range for k={}", self.k)));
        }
        self.tape.replay_reward(t)
    }

    fn log_mean(&self, _arm: usize) -> f64 {
        // Replay rounds have no arm-specific mean.
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn mc_mean(spec: &ArmSpec, n: usize, seed: u64) -> f64 {
        let mut s = derive_stream(seed, 0);
        (0..n).map(|_| spec.sample(&mut s)).sum::<f64>() / n as f64
    }

    // Composite Simpson integration of x * pdf(x) for Beta(a, b).
    fn beta_mean_by_quadrature(a: f64, b: f64) -> f64 {
        let ln_beta = ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b);
        let pdf = |x: f64| x.powf(a - 1.0) * (1.0 - x).powf(b - 1.0) / ln_beta.exp();
        let n = 20_000;
        let h = 1.0 / n as f64;
        let f = |x: f64| x * pdf(x);
        let mut acc = f(0.0) + f(1.0);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * f(i as f64 * h);
        }
        acc * h / 3.0
    }

    // Lanczos approximation, adequate for small positive integer-ish shapes.
    fn ln_gamma(x: f64) -> f64 {
        const G: [f64; 9] = [
            0.999_999_999_999_809_9,
            676.520_368_121_885_1,
            -1_259.139_216_722_402_8,
            771.323_428_777_653_1,
            -176.615_029_162_140_6,
            12.507_343_278_686_905,
            -0.138_571_095_265_720_12,
            9.984_369_578_019_572e-6,
            1.505_632_735_149_311_6e-7,
        ];
        let x = x - 1.0;
        let mut a = G[0];
        let t = x + 7.5;
        for (i, g) in G.iter().enumerate().skip(1) {
            a += g / (x + i as f64);
        }
        0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
    }

    #[test]
    fn analytic_means() {
        assert_abs_diff_eq!(true_mean(&ArmSpec::bernoulli(0.3).unwrap()), 0.3, epsilon = 1e-15);
        assert_abs_diff_eq!(true_mean(&ArmSpec::beta(4.0, 1.0).unwrap()), 0.8, epsilon = 1e-15);
        assert_abs_diff_eq!(beta_mean_by_quadrature(4.0, 1.0), 0.8, epsilon = 1e-9);
        assert_abs_diff_eq!(
            true_mean(&ArmSpec::two_point(0.4, 1.0, 0.5).unwrap()),
            0.7,
            epsilon = 1e-15
        );
        assert_eq!(true_mean(&ArmSpec::Uniform01), 0.5);
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(ArmSpec::two_point(0.4, 1.0, 1.5).is_err());
        assert!(ArmSpec::two_point(0.9, 0.1, 0.5).is_err());
        assert!(ArmSpec::bernoulli(0.0).is_err());
        assert!(ArmSpec::bernoulli(1.2).is_err());
        assert!(ArmSpec::beta(0.0, 1.0).is_err());
        assert!(ArmSpec::constant(1.1).is_err());
    }

    #[test]
    fn instance_rejects_zero_mean_and_single_arm() {
        let zero = ArmSpec::constant(0.0).unwrap();
        let half = ArmSpec::constant(0.5).unwrap();
        assert!(BanditInstance::new(vec![zero, half.clone()]).is_err());
        assert!(BanditInstance::new(vec![half]).is_err());
    }

    #[test]
    fn monte_carlo_means() {
        assert!((mc_mean(&ArmSpec::bernoulli(0.25).unwrap(), 100_000, 1) - 0.25).abs() < 0.01);
        assert!((mc_mean(&ArmSpec::Uniform01, 100_000, 2) - 0.5).abs() < 0.01);
        assert!((mc_mean(&ArmSpec::beta(4.0, 1.0).unwrap(), 100_000, 3) - 0.8).abs() < 0.01);
        assert!((mc_mean(&ArmSpec::two_point(0.4, 1.0, 0.5).unwrap(), 100_000, 4) - 0.7).abs() < 0.01);
    }

    #[test]
    fn constant_arm_is_constant() {
        let inst = BanditInstance::new(vec![ArmSpec::constant(0.5).unwrap(), ArmSpec::Uniform01]).unwrap();
        let mut s = derive_stream(0, 0);
        for _ in 0..100 {
            assert_eq!(inst.sample_reward(0, &mut s).unwrap(), 0.5);
        }
        assert!(matches!(inst.sample_reward(2, &mut s), Err(Error::Index(_))));
    }

    #[test]
    fn samples_stay_in_unit_interval() {
        let kinds = [
            ArmSpec::bernoulli(0.37).unwrap(),
            ArmSpec::beta(4.0, 1.0).unwrap(),
            ArmSpec::beta(0.3, 0.2).unwrap(),
            ArmSpec::two_point(0.4, 1.0, 0.5).unwrap(),
            ArmSpec::Uniform01,
            ArmSpec::constant(1.0).unwrap(),
        ];
        let mut s = derive_stream(99, 1);
        for spec in &kinds {
            for _ in 0..1_000_000 {
                let x = spec.sample(&mut s);
                assert!((0.0..=1.0).contains(&x), "{spec:?} produced {x}");
            }
        }
    }

    #[test]
    fn adversarial_preset() {
        let inst = make_figure_instance(&InstancePreset::Adversarial { horizon: 100 }).unwrap();
        assert_eq!(inst.k(), 2);
        let expected = -100.0 * (1.0 + 2f64.ln());
        assert_abs_diff_eq!(inst.log_means()[0], expected, epsilon = 1e-9);
        assert_abs_diff_eq!(inst.log_means()[0], -169.3147, epsilon = 1e-4);
        assert_eq!(inst.mu_star(), 1.0);

        let big = make_figure_instance(&InstancePreset::Adversarial { horizon: 1000 }).unwrap();
        assert!(big.log_means()[0] < -1690.0);
        let mut s = derive_stream(0, 0);
        assert!((0..10_000).all(|_| big.sample_reward(0, &mut s).unwrap() == 0.0));
    }

    #[test]
    fn bern50_means_in_interval() {
        for seed in 0..5 {
            let inst = make_figure_instance(&InstancePreset::Bern50 { seed }).unwrap();
            assert_eq!(inst.k(), 50);
            assert!(inst.means().iter().all(|&m| m > 0.005 && m < 1.0));
        }
    }

    #[test]
    fn mixed_bucket_rule() {
        assert_eq!(mixed_arm_for(0.6).unwrap(), ArmSpec::beta(4.0, 1.0).unwrap());
        assert_eq!(mixed_arm_for(0.8).unwrap(), ArmSpec::bernoulli(0.8).unwrap());
        assert_eq!(mixed_arm_for(0.3).unwrap(), ArmSpec::two_point(0.4, 1.0, 0.5).unwrap());
        assert_eq!(mixed_arm_for(0.1).unwrap(), ArmSpec::Uniform01);
        let inst = make_figure_instance(&InstancePreset::Mixed50 { seed: 3 }).unwrap();
        // Metrics use the family's analytic mean, not the drawn label.
        for (arm, lm) in inst.arms().iter().zip(inst.log_means()) {
            assert_abs_diff_eq!(*lm, arm.true_mean().ln(), epsilon = 1e-12);
        }
    }

    #[test]
    fn replay_tape() {
        let tape = ReplayTape::new(vec![0.1, 0.9]).unwrap();
        assert_eq!(tape.replay_reward(2).unwrap(), 0.9);
        assert!(tape.replay_reward(0).is_err());
        assert!(tape.replay_reward(3).is_err());
        let zeros = ReplayTape::new(vec![0.0; 5]).unwrap();
        assert!((1..=5).all(|t| zeros.replay_reward(t).unwrap() == 0.0));
        assert!(ReplayTape::new(vec![1.5]).is_err());

        let a = ReplayTape::new(vec![0.2, 0.3, 0.4]).unwrap();
        let b = ReplayTape::new(vec![0.2, 1.0, 0.4]).unwrap();
        assert_eq!(a.hamming(&b), Some(1));
        for t in [1, 3] {
            assert_eq!(a.replay_reward(t).unwrap(), b.replay_reward(t).unwrap());
        }
    }
}
