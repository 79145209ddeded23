//! Confidence indices and Phase-I stopping rules.

use crate::error::{domain, Result};

use super::PolicyParams;

/// Multiplier of the Phase-I stopping thresholds.
pub const STOP_SCALE: f64 = 1600.0;

/// Nash confidence bound of a non-private empirical mean:
/// `mu_hat + 4 sqrt(mu_hat ln T / n)`.
pub fn ncb_nonprivate(mu_hat: f64, n: u64, horizon: u64) -> Result<f64> {
    if horizon < 2 {
        return Err(domain(format!("horizon must be >= 2, got {horizon}")));
    }
    ncb_nonprivate_ln(mu_hat, n, (horizon as f64).ln())
}

/// [`ncb_nonprivate`] taking `ln T` directly, for non-integer horizons.
pub fn ncb_nonprivate_ln(mu_hat: f64, n: u64, ln_t: f64) -> Result<f64> {
    if !(mu_hat >= 0.0) {
        return Err(domain(format!("non-private mean must be >= 0, got {mu_hat}")));
    }
    if n == 0 {
        return Err(domain("sample count must be >= 1"));
    }
    if !(ln_t > 0.0) {
        return Err(domain(format!("ln T must be > 0, got {ln_t}")));
    }
    Ok(mu_hat + 4.0 * (mu_hat * ln_t / n as f64).sqrt())
}

/// Index used by the globally private policy on a clipped private mean.
///
/// An arm without samples gets `+inf` so it is tried before any estimate is
/// trusted.
pub fn ncb_gdp(mu_tilde: f64, n: u64, params: &PolicyParams) -> f64 {
    if n == 0 {
        return f64::INFINITY;
    }
    let n = n as f64;
    let ln_t = params.ln_horizon();
    let (c, alpha, eps) = (params.c, params.alpha, params.epsilon);
    mu_tilde
        + 2.0 * c * (2.0 * mu_tilde * ln_t / n).sqrt()
        + alpha * ln_t * ln_t / (eps * n)
        + 4.0 * (2.0 * alpha / eps).sqrt() * ln_t.powf(1.5) / n
}

/// Index used by the locally private policy on a clipped private mean.
pub fn ncb_ldp(mu_tilde: f64, n: u64, params: &PolicyParams) -> f64 {
    if n == 0 {
        return f64::INFINITY;
    }
    let n = n as f64;
    let ln_t = params.ln_horizon();
    let (c, alpha, eps) = (params.c, params.alpha, params.epsilon);
    mu_tilde
        + 2.0 * c * (2.0 * mu_tilde * ln_t / n).sqrt()
        + (8.0 * alpha * ln_t / n).sqrt() / eps
        + 4.0 * c * (2.0 * alpha).powf(0.25) * ln_t.powf(0.75) / (eps.sqrt() * n.powf(0.75))
}

/// Right-hand side of the global Phase-I stopping test:
/// `1600 (c^2 ln T + (ln T)^2 / eps)`.
pub fn gdp_stop_threshold(params: &PolicyParams) -> f64 {
    let ln_t = params.ln_horizon();
    STOP_SCALE * (params.c * params.c * ln_t + ln_t * ln_t / params.epsilon)
}

/// Global Phase-I stopping test, evaluated after the round-`t - 1` update
/// (`next_round` is the round about to be played).
pub fn phase1_stop_gdp(counts: &[u64], mu_tilde: &[f64], next_round: u64, params: &PolicyParams) -> bool {
    if next_round > params.horizon {
        return true;
    }
    let threshold = gdp_stop_threshold(params);
    counts
        .iter()
        .zip(mu_tilde)
        .any(|(&n, &m)| n > 0 && n as f64 * m >= threshold)
}

/// Does a single arm satisfy the local Phase-I stopping condition?
///
/// The first operand of the max is checked first; the second is only
/// evaluated once `n mu > (1/eps) sqrt(8 n alpha ln T)`, which keeps its
/// denominator positive.
pub fn ldp_arm_stops(n: u64, mu_tilde: f64, params: &PolicyParams) -> bool {
    ldp_stop_rhs(n, mu_tilde, params).is_some_and(|rhs| n as f64 * mu_tilde >= rhs)
}

/// Second operand of the local stopping max, or `None` when the first
/// operand is not exceeded and the second would divide by a non-positive
/// number.
pub fn ldp_stop_rhs(n: u64, mu_tilde: f64, params: &PolicyParams) -> Option<f64> {
    if n == 0 {
        return None;
    }
    let nf = n as f64;
    let ln_t = params.ln_horizon();
    let eps = params.epsilon;
    let lhs = nf * mu_tilde;
    let noise_margin = (8.0 * nf * params.alpha * ln_t).sqrt() / eps;
    if !(lhs > noise_margin) {
        return None;
    }
    let privacy_term = nf * ln_t * ln_t / ((lhs - noise_margin) * eps * eps);
    Some(noise_margin + STOP_SCALE * (params.c * params.c * ln_t + privacy_term))
}

/// Laplace scale of a global release built from `n` samples: `ln T / (eps n)`.
pub fn gdp_release_scale(n: u64, params: &PolicyParams) -> f64 {
    params.ln_horizon() / (params.epsilon * n as f64)
}

/// Local Phase-I stopping test.
pub fn phase1_stop_ldp(counts: &[u64], mu_tilde: &[f64], next_round: u64, params: &PolicyParams) -> bool {
    if next_round > params.horizon {
        return true;
    }
    counts.iter().zip(mu_tilde).any(|(&n, &m)| ldp_arm_stops(n, m, params))
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax_lowest<I: IntoIterator<Item = f64>>(values: I) -> usize {
    let mut best = 0;
    let mut best_val = f64::NEG_INFINITY;
    for (i, v) in values.into_iter().enumerate() {
        if v > best_val {
            best = i;
            best_val = v;
        }
    }
    best
}

pub(crate) fn clip01(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn params(eps: f64) -> PolicyParams {
        PolicyParams::new(2, 1000, eps).unwrap()
    }

    #[test]
    fn nonprivate_index() {
        assert_eq!(ncb_nonprivate(0.0, 10, 100).unwrap(), 0.0);
        assert!(ncb_nonprivate(-0.1, 10, 100).is_err());
        assert!(ncb_nonprivate(0.5, 0, 100).is_err());
        // ln T = 16^2 ln T / n  =>  the square root equals 1/16.
        let t = 1000u64;
        let n = (256.0 * (t as f64).ln()).round() as u64;
        let v = ncb_nonprivate(1.0, n, t).unwrap();
        let expected = 1.0 + 4.0 * ((t as f64).ln() / n as f64).sqrt();
        assert_relative_eq!(v, expected, max_relative = 1e-12);
        assert!((v - 1.25).abs() < 1e-3);
    }

    #[test]
    fn nonprivate_index_monotone_in_mean() {
        let mut prev = -1.0;
        for i in 0..=100 {
            let v = ncb_nonprivate(i as f64 / 100.0, 37, 5000).unwrap();
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn gdp_privacy_terms_vanish_without_noise() {
        let p = PolicyParams::new(3, 1000, f64::INFINITY).unwrap();
        let m: f64 = 0.4;
        let expected = m + 6.0 * (2.0 * m * 1000f64.ln() / 50.0).sqrt();
        assert_relative_eq!(ncb_gdp(m, 50, &p), expected, max_relative = 1e-14);
    }

    #[test]
    fn ldp_third_term_scales_with_inverse_root_n() {
        let p = params(1.0);
        let third = |n: u64| {
            ncb_ldp(0.0, n, &p) - {
                let nf = n as f64;
                4.0 * p.c * (2.0 * p.alpha).powf(0.25) * p.ln_horizon().powf(0.75) / nf.powf(0.75)
            }
        };
        assert_relative_eq!(third(100) / third(1600), 4.0, max_relative = 1e-12);
    }

    #[test]
    fn zero_count_is_optimistic() {
        assert_eq!(ncb_gdp(0.0, 0, &params(1.0)), f64::INFINITY);
        assert_eq!(ncb_ldp(0.0, 0, &params(1.0)), f64::INFINITY);
    }

    #[test]
    fn gdp_stop_nonpositive_means_never_fire() {
        let p = params(0.2);
        assert!(!phase1_stop_gdp(&[100, 200], &[0.0, -0.3], 10, &p));
        assert!(phase1_stop_gdp(&[0, 0], &[0.0, 0.0], 1001, &p));
    }

    #[test]
    fn ldp_stop_first_operand_guards() {
        let p = params(1.0);
        // mu below (1/eps) sqrt(8 alpha ln T / N) for every arm.
        let n = 400u64;
        let bar = (8.0 * p.alpha * p.ln_horizon() / n as f64).sqrt();
        assert!(!phase1_stop_ldp(&[n, n], &[bar * 0.99, bar], 5, &p));
        assert!(phase1_stop_ldp(&[n, n], &[0.0, 0.0], 1001, &p));
    }

    #[test]
    fn argmax_ties_go_low() {
        assert_eq!(argmax_lowest([1.0, 3.0, 3.0]), 1);
        assert_eq!(argmax_lowest([2.0, 2.0]), 0);
        assert_eq!(argmax_lowest([0.0, f64::INFINITY, f64::INFINITY]), 1);
    }

    proptest! {
        #[test]
        fn argmax_depends_only_on_order(vals in prop::collection::vec(-5.0f64..5.0, 1..40)) {
            let base = argmax_lowest(vals.iter().copied());
            let transformed = argmax_lowest(vals.iter().map(|v| (v * 0.7 + 1.0).exp()));
            let cubed = argmax_lowest(vals.iter().map(|v| v.powi(3) + 2.0 * v));
            prop_assert_eq!(base, transformed);
            prop_assert_eq!(base, cubed);
        }
    }
}
