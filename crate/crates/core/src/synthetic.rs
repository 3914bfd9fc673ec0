//! Synthetic benchmark data.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::data::{Column, Dataset};

/// Two linear regimes switched by a categorical column `s`:
/// `y = 1 + 2x` where `s = A` and `y = 10 − 3x` where `s = B`, with
/// `x ~ U[0, 1]` and Gaussian noise whose standard deviation is
/// `noise_fraction` times the range of the noiseless target.
pub fn two_segment(n: usize, noise_fraction: f64, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = Vec::with_capacity(n);
    let mut x = Vec::with_capacity(n);
    let mut clean = Vec::with_capacity(n);
    for i in 0..n {
        // alternate the first two rows so both segments always exist
        let a = if i < 2 { i == 0 } else { rng.random::<bool>() };
        let xi: f64 = rng.random();
        s.push(if a { "A" } else { "B" }.to_string());
        x.push(xi);
        clean.push(if a { 1.0 + 2.0 * xi } else { 10.0 - 3.0 * xi });
    }
    let lo = clean.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = clean.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let y: Vec<f64> = if noise_fraction > 0.0 && hi > lo {
        let noise = Normal::new(0.0, noise_fraction * (hi - lo)).expect("positive deviation");
        clean.iter().map(|v| v + noise.sample(&mut rng)).collect()
    } else {
        clean
    };
    Dataset::from_columns(
        vec![
            ("s".into(), Column::Categorical(s)),
            ("x".into(), Column::Numerical(x)),
            ("y".into(), Column::Numerical(y)),
        ],
        "y",
    )
    .expect("generator output is well formed")
}
