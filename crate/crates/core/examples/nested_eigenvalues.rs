//! Eigenvalues of the nested covariance by bisection on the tridiagonal
//! characteristic determinant, next to a dense eigensolver.
//!
//!     cargo run --example nested_eigenvalues -- 8 0.1

use hdcov::models::{build_nested_sigma, nested_sigma_eigenvalues};

fn main() -> hdcov::Result<()> {
    let mut args = std::env::args().skip(1);
    let p: usize = args.next().map_or(8, |s| s.parse().expect("p must be an integer"));
    let gamma: f64 = args.next().map_or(0.1, |s| s.parse().expect("gamma must be a number"));

    let roots = nested_sigma_eigenvalues(p, gamma)?;
    let dense = build_nested_sigma(p, gamma)?.spectrum().eigenvalues.clone();
    println!("{:>3}  {:>22}  {:>22}  {:>9}", "k", "root finder", "dense", "rel diff");
    for (k, (a, b)) in roots.iter().zip(&dense).enumerate() {
        println!("{:>3}  {a:>22.15e}  {b:>22.15e}  {:>9.1e}", k + 1, ((a - b) / b).abs());
    }
    let trace = gamma * gamma * (p * (p + 1)) as f64 / 2.0;
    println!("sum {:.15e}, trace {trace:.15e}", roots.iter().sum::<f64>());
    Ok(())
}
