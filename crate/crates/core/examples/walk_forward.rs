//! Walk-forward rebalancing with a shortened schedule on the bundled
//! synthetic prices, or the default yearly schedule on a file passed as the
//! first argument.
//!
//!     cargo run --release --example walk_forward -- prices.csv

use std::path::PathBuf;

use hdcov::allocation::Strategy;
use hdcov::backtest::{load_returns, walk_forward, WalkForwardPlan, DEFAULT_MAX_MISSING};
use hdcov::estimators::{EstimatorKind, EstimatorSpec};

fn main() -> hdcov::Result<()> {
    let arg = std::env::args().nth(1).map(PathBuf::from);
    let plan = if arg.is_some() {
        WalkForwardPlan::default()
    } else {
        WalkForwardPlan { t_in: 100, t_out: 50, rebalance_every: 50 }
    };
    let path =
        arg.unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data/synthetic_prices.csv"));
    let (returns, _) = load_returns(&path, DEFAULT_MAX_MISSING)?;

    let estimators = [EstimatorKind::Linear, EstimatorKind::TwoStepLp].map(EstimatorSpec::new);
    let strategies = [Strategy::Mvp, Strategy::MvpLongOnly, Strategy::Hrp];
    let res = walk_forward(&returns, &plan, &estimators, &strategies, true)?;

    println!(
        "{:18} {:>8} {:>8} {:>7} {:>8} {:>7} {:>8}",
        "", "return", "vol", "sharpe", "max dd", "sortino", "turnover"
    );
    let opt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.2}"));
    for run in &res.runs {
        let r = &run.report;
        println!(
            "{:18} {:>7.2}% {:>7.2}% {:>7} {:>7.2}% {:>7} {:>8.3}",
            run.label(),
            100.0 * r.annual_return,
            100.0 * r.annual_volatility,
            opt(r.sharpe),
            100.0 * r.max_drawdown,
            opt(r.sortino),
            r.turnover
        );
    }
    for (label, why) in &res.failures {
        println!("{label}: {why}");
    }
    Ok(())
}
