//! A small fixed-size table: mean MVP concentration and leverage per
//! estimator for the three population models.
//!
//!     cargo run --release --example monte_carlo_table -- 20
//!
//! Writes `table_*.csv` into `target/monte_carlo_table/` as well.

use hdcov::allocation::Strategy;
use hdcov::estimators::EstimatorSpec;
use hdcov::models::{ModelKind, ModelSpec};
use hdcov::report::Metric;
use hdcov::simulation::{run_table, write_table_csvs, TableConfig, POPULATION_ROW, UNIFORM_ROW};

fn main() -> hdcov::Result<()> {
    let m: usize = std::env::args().nth(1).map_or(10, |s| s.parse().expect("m must be an integer"));
    let kinds = [ModelKind::Nested, ModelKind::OneFactor, ModelKind::Diagonal];
    let cfg = TableConfig {
        models: kinds.iter().map(|&k| ModelSpec::new(k, 100)).collect(),
        n: 200,
        realizations: m,
        estimators: EstimatorSpec::all(),
        strategies: vec![Strategy::Mvp],
        base_seed: 2024,
    };
    let res = run_table(&cfg)?;

    for metric in [Metric::Hhi, Metric::Leverage] {
        println!("mean {metric} under mvp, {m} realizations");
        println!("{:12} {:>10} {:>10} {:>10}", "", "nested", "one-factor", "diagonal");
        let rows = std::iter::once(POPULATION_ROW)
            .chain(cfg.estimators.iter().map(|e| e.name()))
            .chain(std::iter::once(UNIFORM_ROW));
        for row in rows {
            let vals: Vec<String> = kinds
                .iter()
                .map(|k| {
                    res.cells
                        .iter()
                        .find(|c| c.model == k.label() && c.estimator == row && c.metric == metric)
                        .and_then(|c| c.mean)
                        .map_or("-".into(), |v| format!("{v:.4}"))
                })
                .collect();
            println!("{row:12} {:>10} {:>10} {:>10}", vals[0], vals[1], vals[2]);
        }
    }

    let dir = std::path::Path::new("target/monte_carlo_table");
    std::fs::create_dir_all(dir)?;
    write_table_csvs(&res, dir)?;
    Ok(())
}
