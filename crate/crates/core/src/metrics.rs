//! Monte-Carlo estimates of per-round expected reward and the regret
//! metrics derived from them.
//!
//! Per-round estimates are kept as logarithms. Averaging across runs is a
//! log-sum-exp, so means far below `f64::MIN_POSITIVE` (the adversarial
//! instance) aggregate without underflow; estimates below [`MEAN_FLOOR`]
//! are then floored and counted.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Smallest per-round expected reward kept as-is.
pub const MEAN_FLOOR: f64 = 1e-300;

pub fn log_floor() -> f64 {
    MEAN_FLOOR.ln()
}

/// One played round.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub t: u64,
    pub arm: usize,
    /// The raw reward the environment produced.
    pub reward: f64,
    /// `ln mu` of the pulled arm.
    pub log_mean: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub records: Vec<RoundRecord>,
}

impl RunTrace {
    pub fn with_capacity(n: usize) -> Self {
        Self {
            records: Vec::with_capacity(n),
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn log_means(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().map(|r| r.log_mean)
    }

    pub fn arms(&self) -> impl Iterator<Item = usize> + '_ {
        self.records.iter().map(|r| r.arm)
    }
}

/// `ln E[mu_{I_t}]` estimated per round from `runs` independent runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanRewardCurve {
    log_values: Vec<f64>,
    runs: usize,
    floored_rounds: usize,
}

impl MeanRewardCurve {
    /// Builds a curve from per-round log estimates, applying the floor.
    pub fn from_log_values(log_values: Vec<f64>, runs: usize) -> Result<Self> {
        if runs == 0 {
            return Err(Error::Shape("a curve needs at least one run".into()));
        }
        let floor = log_floor();
        let mut floored_rounds = 0;
        let log_values = log_values
            .into_iter()
            .map(|v| {
                if v.is_nan() {
                    Err(domain("NaN in mean-reward curve"))
                } else if v < floor {
                    floored_rounds += 1;
                    Ok(floor)
                } else {
                    Ok(v)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            log_values,
            runs,
            floored_rounds,
        })
    }

    /// Convenience for curves given directly as means.
    pub fn from_means(means: &[f64], runs: usize) -> Result<Self> {
        if let Some(m) = means.iter().find(|m| !(**m > 0.0)) {
            return Err(domain(format!("expected reward must be > 0, got {m}")));
        }
        Self::from_log_values(means.iter().map(|m| m.ln()).collect(), runs)
    }

    pub fn log_values(&self) -> &[f64] {
        &self.log_values
    }

    pub fn means(&self) -> impl Iterator<Item = f64> + '_ {
        self.log_values.iter().map(|v| v.exp())
    }

    pub fn horizon(&self) -> usize {
        self.log_values.len()
    }

    pub fn runs(&self) -> usize {
        self.runs
    }

    pub fn floored_rounds(&self) -> usize {
        self.floored_rounds
    }

    pub fn is_floored(&self) -> bool {
        self.floored_rounds > 0
    }
}

/// Streaming log-sum-exp over runs, one slot per round.
#[derive(Clone, Debug)]
pub struct CurveAccumulator {
    max: Vec<f64>,
    scaled: Vec<f64>,
    runs: usize,
}

impl CurveAccumulator {
    pub fn new(horizon: usize) -> Self {
        Self {
            max: vec![f64::NEG_INFINITY; horizon],
            scaled: vec![0.0; horizon],
            runs: 0,
        }
    }

    pub fn runs(&self) -> usize {
        self.runs
    }

    pub fn add_run<I: IntoIterator<Item = f64>>(&mut self, log_means: I) -> Result<()> {
        let mut n = 0;
        for (slot, x) in log_means.into_iter().enumerate() {
            if slot >= self.max.len() {
                return Err(Error::Shape(format!("run longer than horizon {}", self.max.len())));
            }
            if !x.is_finite() {
                return Err(domain(format!("log-mean must be finite, got {x}")));
            }
            let m = &mut self.max[slot];
            let s = &mut self.scaled[slot];
            if x > *m {
                *s = *s * (*m - x).exp() + 1.0;
                *m = x;
            } else {
                *s += (x - *m).exp();
            }
            n += 1;
        }
        if n != self.max.len() {
            return Err(Error::Shape(format!("run has {n} rounds, expected {}", self.max.len())));
        }
        self.runs += 1;
        Ok(())
    }

    pub fn finish(self) -> Result<MeanRewardCurve> {
        let ln_r = (self.runs as f64).ln();
        let logs = self
            .max
            .iter()
            .zip(&self.scaled)
            .map(|(m, s)| m + s.ln() - ln_r)
            .collect();
        MeanRewardCurve::from_log_values(logs, self.runs)
    }
}

/// Average `mu_{I_t}` over runs, round by round.
pub fn aggregate_runs(traces: &[RunTrace]) -> Result<MeanRewardCurve> {
    let first = traces
        .first()
        .ok_or_else(|| Error::Shape("no runs to aggregate".into()))?;
    let mut acc = CurveAccumulator::new(first.len());
    for tr in traces {
        if tr.len() != first.len() {
            return Err(Error::Shape(format!(
                "trace horizons differ: {} vs {}",
                tr.len(),
                first.len()
            )));
        }
        acc.add_run(tr.log_means())?;
    }
    acc.finish()
}

/// `mu* - (prod_t E[mu_{I_t}])^{1/T}`, evaluated in log space.
pub fn nash_regret(curve: &MeanRewardCurve, mu_star: f64) -> Result<f64> {
    if curve.horizon() == 0 {
        return Err(Error::Shape("empty curve".into()));
    }
    let mean_log = curve.log_values.iter().sum::<f64>() / curve.horizon() as f64;
    Ok(mu_star - mean_log.exp())
}

/// `mu* - (1/T) sum_t E[mu_{I_t}]`.
pub fn average_regret(curve: &MeanRewardCurve, mu_star: f64) -> Result<f64> {
    if curve.horizon() == 0 {
        return Err(Error::Shape("empty curve".into()));
    }
    Ok(mu_star - curve.means().sum::<f64>() / curve.horizon() as f64)
}

/// Nash and average regret of a single run, from its log-means.
pub fn run_regrets(log_means: &[f64], mu_star: f64) -> Result<(f64, f64)> {
    let curve = MeanRewardCurve::from_log_values(log_means.to_vec(), 1)?;
    Ok((nash_regret(&curve, mu_star)?, average_regret(&curve, mu_star)?))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrivacyModel {
    Global,
    Local,
}

/// Exploration budget governing the Phase-I length:
/// global `c^2 ln T / mu* + (ln T)^2 / (mu* eps)`,
/// local `c^2 ln T / mu* + (ln T / (mu* eps))^2`.
pub fn exploration_budget_s(mu_star: f64, horizon: f64, epsilon: f64, c: f64, model: PrivacyModel) -> Result<f64> {
    if !(mu_star > 0.0 && mu_star <= 1.0) {
        return Err(domain(format!("mu* must be in (0,1], got {mu_star}")));
    }
    if !(epsilon > 0.0) {
        return Err(domain(format!("epsilon must be > 0, got {epsilon}")));
    }
    let ln_t = horizon.ln();
    let base = c * c * ln_t / mu_star;
    Ok(match model {
        PrivacyModel::Global => base + ln_t * ln_t / (mu_star * epsilon),
        PrivacyModel::Local => base + (ln_t / (mu_star * epsilon)).powi(2),
    })
}

/// Phase-I lengths observed over a batch of runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseOneStats {
    pub tau: Vec<u64>,
    pub s: f64,
}

impl PhaseOneStats {
    /// Fraction of runs with `tau <= factor * k * S`.
    pub fn fraction_within(&self, factor: f64, k: usize) -> f64 {
        if self.tau.is_empty() {
            return 0.0;
        }
        let bound = factor * k as f64 * self.s;
        self.tau.iter().filter(|&&t| t as f64 <= bound).count() as f64 / self.tau.len() as f64
    }
}

/// One row of an experiment's output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegretReport {
    pub algorithm: String,
    pub epsilon: f64,
    pub k: usize,
    pub horizon: u64,
    pub runs: usize,
    pub nash_regret: f64,
    pub nash_regret_std: f64,
    pub avg_regret: f64,
    pub avg_regret_std: f64,
    pub mu_star: f64,
    pub floored_rounds: usize,
    pub seed: u64,
}

/// Sample standard deviation; zero for fewer than two values.
pub fn sample_std(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn trace(means: &[f64]) -> RunTrace {
        RunTrace {
            records: means
                .iter()
                .enumerate()
                .map(|(i, m)| RoundRecord {
                    t: i as u64 + 1,
                    arm: 0,
                    reward: 0.0,
                    log_mean: m.ln(),
                })
                .collect(),
        }
    }

    #[test]
    fn aggregate_two_runs() {
        let c = aggregate_runs(&[trace(&[0.2, 1.0]), trace(&[0.4, 1.0])]).unwrap();
        let m: Vec<f64> = c.means().collect();
        assert_abs_diff_eq!(m[0], 0.3, epsilon = 1e-15);
        assert_abs_diff_eq!(m[1], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn aggregate_single_run_is_identity() {
        let means = [0.11, 0.5, 0.93];
        let c = aggregate_runs(&[trace(&means)]).unwrap();
        for (a, b) in c.means().zip(means) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-15);
        }
    }

    #[test]
    fn aggregate_floors_tiny_means() {
        let tiny = RunTrace {
            records: vec![RoundRecord {
                t: 1,
                arm: 0,
                reward: 0.0,
                log_mean: -1693.0,
            }],
        };
        let c = aggregate_runs(&[tiny.clone(), tiny.clone(), tiny]).unwrap();
        assert!(c.is_floored());
        assert_eq!(c.floored_rounds(), 1);
        assert_eq!(c.log_values()[0], log_floor());
    }

    #[test]
    fn aggregate_tiny_and_ordinary_without_underflow() {
        let mut tiny = trace(&[0.5]);
        tiny.records[0].log_mean = -5000.0;
        let c = aggregate_runs(&[tiny, trace(&[0.5])]).unwrap();
        assert_abs_diff_eq!(c.means().next().unwrap(), 0.25, epsilon = 1e-15);
        assert!(!c.is_floored());
    }

    #[test]
    fn aggregate_rejects_mismatched_horizons() {
        let r = aggregate_runs(&[trace(&[0.5, 0.5]), trace(&[0.5])]);
        assert!(matches!(r, Err(Error::Shape(_))));
        assert!(matches!(aggregate_runs(&[]), Err(Error::Shape(_))));
    }

    #[test]
    fn regret_examples() {
        let opt = MeanRewardCurve::from_means(&[0.7; 5], 1).unwrap();
        assert_abs_diff_eq!(nash_regret(&opt, 0.7).unwrap(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(average_regret(&opt, 0.7).unwrap(), 0.0, epsilon = 1e-15);

        let two = MeanRewardCurve::from_means(&[1.0, 0.25], 1).unwrap();
        assert_abs_diff_eq!(nash_regret(&two, 1.0).unwrap(), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(average_regret(&two, 1.0).unwrap(), 0.375, epsilon = 1e-15);

        for len in [1, 7, 1000] {
            let flat = MeanRewardCurve::from_means(&vec![0.5; len], 1).unwrap();
            assert_abs_diff_eq!(nash_regret(&flat, 1.0).unwrap(), 0.5, epsilon = 1e-12);
        }
        assert!(MeanRewardCurve::from_means(&[0.5, 0.0], 1).is_err());
    }

    #[test]
    fn exploration_budget_examples() {
        let e = std::f64::consts::E;
        let g = exploration_budget_s(1.0, e, 1.0, 3.0, PrivacyModel::Global).unwrap();
        let l = exploration_budget_s(1.0, e, 1.0, 3.0, PrivacyModel::Local).unwrap();
        assert_abs_diff_eq!(g, 10.0, epsilon = 1e-12);
        assert_abs_diff_eq!(l, 10.0, epsilon = 1e-12);
        let half = exploration_budget_s(0.5, 1000.0, 0.2, 3.0, PrivacyModel::Global).unwrap();
        let one = exploration_budget_s(1.0, 1000.0, 0.2, 3.0, PrivacyModel::Global).unwrap();
        assert_abs_diff_eq!(half, 2.0 * one, epsilon = 1e-9);
        assert!(exploration_budget_s(0.0, 10.0, 1.0, 3.0, PrivacyModel::Global).is_err());
    }

    // Direct product formula; only valid while the product stays representable.
    fn nash_regret_direct(means: &[f64], mu_star: f64) -> f64 {
        let prod: f64 = means.iter().product();
        mu_star - prod.powf(1.0 / means.len() as f64)
    }

    proptest! {
        #[test]
        fn nash_dominates_average(means in prop::collection::vec(1e-6f64..1.0, 1..200)) {
            let curve = MeanRewardCurve::from_means(&means, 1).unwrap();
            let mu_star = means.iter().copied().fold(0.0, f64::max);
            let nr = nash_regret(&curve, mu_star).unwrap();
            let ar = average_regret(&curve, mu_star).unwrap();
            prop_assert!(nr >= ar - 1e-9);
            prop_assert!(nr <= mu_star && ar <= mu_star);
        }

        #[test]
        fn log_space_matches_product(means in prop::collection::vec(0.01f64..1.0, 1..=20)) {
            let curve = MeanRewardCurve::from_means(&means, 1).unwrap();
            let direct = nash_regret_direct(&means, 1.0);
            prop_assert!((nash_regret(&curve, 1.0).unwrap() - direct).abs() <= 1e-10);
        }

        #[test]
        fn optimal_round_never_hurts(means in prop::collection::vec(0.01f64..1.0, 1..100)) {
            let mu_star = means.iter().copied().fold(0.0, f64::max);
            let before = nash_regret(&MeanRewardCurve::from_means(&means, 1).unwrap(), mu_star).unwrap();
            let mut extended = means.clone();
            extended.push(mu_star);
            let after = nash_regret(&MeanRewardCurve::from_means(&extended, 1).unwrap(), mu_star).unwrap();
            prop_assert!(after <= before + 1e-12);
        }
    }
}
