#![allow(dead_code)]

use std::path::PathBuf;

use hdcov::models::{sample_panel, seeded_rng, NoiseDistribution};
use hdcov::{CovarianceMatrix, DataPanel};
use nalgebra::DMatrix;
use rand::Rng;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests").join("data").join(name)
}

/// A random well-conditioned covariance `AAᵀ/p + D` and a Gaussian panel drawn from it.
pub fn random_instance(seed: u64) -> (CovarianceMatrix, DataPanel) {
    let mut rng = seeded_rng(seed);
    let p = rng.random_range(3..=10);
    let n = rng.random_range(2 * p..=4 * p);
    let a = DMatrix::from_fn(p, p, |_, _| rng.random_range(-1.0..1.0));
    let mut m = &a * a.transpose() / p as f64;
    for i in 0..p {
        m[(i, i)] += rng.random_range(0.05..2.0);
    }
    let sigma = CovarianceMatrix::from_symmetrized(m).unwrap();
    let panel = sample_panel(&sigma, n, NoiseDistribution::Gaussian, &mut rng).unwrap();
    (sigma, panel)
}
