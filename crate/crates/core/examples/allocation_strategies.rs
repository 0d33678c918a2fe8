//! Weights of the four allocation strategies on a small hand-made covariance
//! and on its linear-shrinkage estimate from a short sample.
//!
//!     cargo run --example allocation_strategies

use hdcov::allocation::Strategy;
use hdcov::estimators::{estimate, EstimatorKind, EstimatorSpec};
use hdcov::metrics::{hhi, leverage, rdi};
use hdcov::models::{sample_panel, seeded_rng, NoiseDistribution};
use hdcov::CovarianceMatrix;

fn show(label: &str, xi: &CovarianceMatrix, sigma: &CovarianceMatrix) -> hdcov::Result<()> {
    println!("{label}");
    for s in Strategy::ALL {
        let w = s.weights(xi)?;
        let cells: Vec<String> = w.as_slice().iter().map(|x| format!("{x:>7.3}")).collect();
        println!(
            "  {:8} [{}]  HHI {:.3}  L {:.3}  RDI {:.3}",
            s.name(),
            cells.join(""),
            hhi(&w),
            leverage(&w),
            rdi(&w, sigma)?
        );
    }
    Ok(())
}

fn main() -> hdcov::Result<()> {
    // Two correlated pairs and a quiet asset.
    let sigma = CovarianceMatrix::from_rows(&[
        &[0.040, 0.030, 0.002, 0.001, 0.000],
        &[0.030, 0.045, 0.001, 0.002, 0.000],
        &[0.002, 0.001, 0.020, 0.012, 0.000],
        &[0.001, 0.002, 0.012, 0.025, 0.000],
        &[0.000, 0.000, 0.000, 0.000, 0.010],
    ])?;
    show("population", &sigma, &sigma)?;

    let panel = sample_panel(&sigma, 12, NoiseDistribution::Gaussian, &mut seeded_rng(3))?;
    let xi = estimate(&panel, &EstimatorSpec::new(EstimatorKind::Linear), false)?;
    show("linear shrinkage from 12 observations", &xi, &sigma)?;
    Ok(())
}
