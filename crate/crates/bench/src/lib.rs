//! Shared fixtures for the benchmarks.

use dpncb_core::env::{make_figure_instance, InstancePreset};
use dpncb_core::BanditInstance;

/// The 50-arm Bernoulli instance used by the large-horizon figures.
pub fn bern50() -> BanditInstance {
    make_figure_instance(&InstancePreset::Bern50 { seed: 0 }).expect("preset builds")
}

/// Means spread over (0, 1) for index benchmarks.
pub fn spread_means(k: usize) -> Vec<f64> {
    (0..k).map(|i| (i as f64 + 0.5) / k as f64).collect()
}
