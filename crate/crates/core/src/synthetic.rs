// SPDX-License-Identifier: MIT OR Apache-2.0

//! Seeded synthetic sequences for tests and benchmarks.

use rand::rngs::StdRng;
use rand::SeedableRng;
use rand_distr::{Distribution, Normal, Poisson};

/// Counts with alternating background / peak segments of equal length.
/// `changes` changes give `changes + 1` segments, the first one background.
pub fn planted_peaks(n: usize, changes: usize, background: f64, peak: f64, seed: u64) -> Vec<f64> {
    let mut rng = StdRng::seed_from_u64(seed);
    let bkg = Poisson::new(background).expect("positive background rate");
    let top = Poisson::new(peak).expect("positive peak rate");
    let segments = changes + 1;
    (0..n)
        .map(|i| {
            let seg = i * segments / n;
            if seg.is_multiple_of(2) {
                bkg.sample(&mut rng)
            } else {
                top.sample(&mut rng)
            }
        })
        .collect()
}

/// Gaussian noise around a staircase of `steps` equal-length levels
/// `0, 1, 2, ...` times `jump`.
pub fn noisy_steps(n: usize, steps: usize, jump: f64, sd: f64, seed: u64) -> Vec<f64> {
    let mut rng = StdRng::seed_from_u64(seed);
    let noise = Normal::new(0.0, sd).expect("finite standard deviation");
    (0..n)
        .map(|i| (i * steps / n) as f64 * jump + noise.sample(&mut rng))
        .collect()
}
