//! Moving-window metric track on a price file (defaults to the bundled
//! synthetic prices).
//!
//!     cargo run --example moving_window_backtest -- prices.csv

use std::path::PathBuf;

use hdcov::allocation::Strategy;
use hdcov::backtest::{load_returns, moving_window_track, WindowPlan, DEFAULT_MAX_MISSING};
use hdcov::estimators::{EstimatorKind, EstimatorSpec};
use hdcov::report::Metric;

fn main() -> hdcov::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data/synthetic_prices.csv"));
    let (returns, cleaned) = load_returns(&path, DEFAULT_MAX_MISSING)?;
    for (ticker, reason) in &cleaned.dropped {
        println!("dropped {ticker}: {reason:?}");
    }

    let plan = WindowPlan::new(returns.len(), 2 * returns.p(), 10)?;
    println!("{} assets, {} returns, {} windows of {} days", returns.p(), returns.len(), plan.count, plan.window_length);
    let estimators = [EstimatorKind::Naive, EstimatorKind::Linear, EstimatorKind::Alca].map(EstimatorSpec::new);
    let records = moving_window_track(&returns, &plan, &estimators, &[Strategy::Mvp], true)?;

    println!("{:12} {:>10} {:>10}", "", "mean RDI", "mean R2");
    for row in ["naive", "linear", "alca", "U"] {
        let mean = |metric| {
            let v: Vec<f64> = records
                .iter()
                .filter(|r| r.estimator == row && r.metric == metric)
                .filter_map(|r| r.value)
                .collect();
            v.iter().sum::<f64>() / v.len() as f64
        };
        println!("{row:12} {:>10.4} {:>10.3e}", mean(Metric::Rdi), mean(Metric::RealizedRisk));
    }
    Ok(())
}
