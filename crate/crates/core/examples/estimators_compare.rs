//! Runs every estimator on one panel from a population model and compares
//! each estimate with the population in Frobenius norm and by the spread of
//! its spectrum.
//!
//!     cargo run --release --example estimators_compare -- one-factor 100 200

use hdcov::estimators::{estimate, EstimatorSpec};
use hdcov::models::{seeded_rng, ModelKind, ModelSpec};

fn main() -> hdcov::Result<()> {
    let mut args = std::env::args().skip(1);
    let kind: ModelKind = args.next().as_deref().unwrap_or("nested").parse()?;
    let p: usize = args.next().map_or(50, |s| s.parse().expect("p must be an integer"));
    let n: usize = args.next().map_or(100, |s| s.parse().expect("n must be an integer"));

    let spec = ModelSpec::new(kind, p);
    let mut rng = seeded_rng(42);
    let pop = spec.draw(&mut rng)?;
    let panel = pop.sample(n, spec.noise(), &mut rng)?;
    let sigma = pop.sigma.matrix();
    println!("{} model, p = {p}, n = {n}", kind.label());
    println!("{:12} {:>12} {:>12} {:>12}", "estimator", "‖Ξ − Σ‖/‖Σ‖", "λ_max", "λ_min");
    for e in EstimatorSpec::all() {
        match estimate(&panel, &e, false) {
            Ok(xi) => println!(
                "{:12} {:>12.4} {:>12.4e} {:>12.4e}",
                e.name(),
                (xi.matrix() - sigma).norm() / sigma.norm(),
                xi.spectrum().max(),
                xi.spectrum().min()
            ),
            Err(err) => println!("{:12} failed: {err}", e.name()),
        }
    }
    Ok(())
}
