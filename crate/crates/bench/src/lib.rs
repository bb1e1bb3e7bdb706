//! Input generators shared by the benchmarks.

use chrono::NaiveDate;
use prefixwatch_core::fixture::{render_fixture, FixtureSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Piecewise-constant series with Gaussian noise, `levels.len()` equal parts.
pub fn noisy_steps(n: usize, levels: &[f64], sigma: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, sigma).unwrap();
    (0..n)
        .map(|i| levels[i * levels.len() / n] + noise.sample(&mut rng))
        .collect()
}

/// One canonical-TSV snapshot with `peers` feeds each announcing `prefixes`.
pub fn snapshot_text(peers: usize, prefixes: usize) -> (NaiveDate, String) {
    let spec = FixtureSpec::new(1, peers, prefixes as f64);
    render_fixture(&spec).unwrap().remove(0)
}
