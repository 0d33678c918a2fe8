//! Empirical pipeline: price ingestion and cleaning, moving-window metric
//! tracks and walk-forward rebalancing.

mod prices;
mod walk;
mod window;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub use prices::{
    clean_prices, compute_returns, parse_prices, read_prices, CleanedPrices, DropReason, PricePanel,
    ReturnPanel,
};
pub use walk::{hold, walk_forward, WalkForwardPlan, WalkForwardResult, WalkForwardRun};
pub use window::{moving_window_track, TrackRecord, WindowPlan};

use crate::allocation::Strategy;
use crate::error::{Error, Result};
use crate::estimators::EstimatorSpec;
use crate::report::{config_hash, fmt_value, provenance_line, write_csv};

pub const DEFAULT_MAX_MISSING: f64 = 0.05;

fn default_max_missing() -> f64 {
    DEFAULT_MAX_MISSING
}

fn default_step() -> usize {
    10
}

fn default_true() -> bool {
    true
}

/// Settings of a moving-window run. The window length defaults to twice the
/// number of assets that survive cleaning.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrackConfig {
    pub input: PathBuf,
    #[serde(default)]
    pub window_length: Option<usize>,
    #[serde(default = "default_step")]
    pub step: usize,
    #[serde(default = "default_max_missing")]
    pub max_missing_frac: f64,
    pub estimators: Vec<EstimatorSpec>,
    pub strategies: Vec<Strategy>,
    #[serde(default = "default_true")]
    pub include_uniform: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WalkForwardConfig {
    pub input: PathBuf,
    #[serde(default)]
    pub plan: WalkForwardPlan,
    #[serde(default = "default_max_missing")]
    pub max_missing_frac: f64,
    pub estimators: Vec<EstimatorSpec>,
    pub strategies: Vec<Strategy>,
    #[serde(default = "default_true")]
    pub include_uniform: bool,
}

/// Reads, cleans and differences a price file.
pub fn load_returns(path: &Path, max_missing_frac: f64) -> Result<(ReturnPanel, CleanedPrices)> {
    let raw = read_prices(path).map_err(|e| e.in_stage("reading prices"))?;
    let cleaned = clean_prices(&raw, max_missing_frac).map_err(|e| e.in_stage("cleaning prices"))?;
    let returns = compute_returns(&cleaned.panel).map_err(|e| e.in_stage("computing returns"))?;
    Ok((returns, cleaned))
}

/// Output of [`run_track`].
pub struct TrackOutput {
    pub config_hash: String,
    pub plan: WindowPlan,
    pub cleaned: CleanedPrices,
    pub records: Vec<TrackRecord>,
}

pub fn run_track(cfg: &TrackConfig) -> Result<TrackOutput> {
    let hash = config_hash(cfg)?;
    let (returns, cleaned) = load_returns(&cfg.input, cfg.max_missing_frac)?;
    let n = cfg.window_length.unwrap_or(2 * returns.p());
    let plan = WindowPlan::new(returns.len(), n, cfg.step).map_err(|e| e.in_stage("planning windows"))?;
    let records = moving_window_track(&returns, &plan, &cfg.estimators, &cfg.strategies, cfg.include_uniform)
        .map_err(|e| e.in_stage("moving-window track"))?;
    Ok(TrackOutput {
        config_hash: hash,
        plan,
        cleaned,
        records,
    })
}

/// `window_end_date,estimator,strategy,metric,value`, one row per record.
pub fn write_track_csv(records: &[TrackRecord], hash: &str, path: &Path) -> Result<()> {
    let header = ["window_end_date", "estimator", "strategy", "metric", "value"].map(String::from);
    let rows: Vec<Vec<String>> = records
        .iter()
        .map(|r| {
            vec![
                r.end_date.to_string(),
                r.estimator.clone(),
                r.strategy.to_string(),
                r.metric.to_string(),
                fmt_value(r.value),
            ]
        })
        .collect();
    write_csv(path, &provenance_line(hash, None), &header, &rows)
}

pub struct WalkForwardOutput {
    pub config_hash: String,
    pub cleaned: CleanedPrices,
    pub result: WalkForwardResult,
}

pub fn run_walk_forward(cfg: &WalkForwardConfig) -> Result<WalkForwardOutput> {
    let hash = config_hash(cfg)?;
    let (returns, cleaned) = load_returns(&cfg.input, cfg.max_missing_frac)?;
    let result = walk_forward(&returns, &cfg.plan, &cfg.estimators, &cfg.strategies, cfg.include_uniform)
        .map_err(|e| e.in_stage("walk-forward"))?;
    if result.runs.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "every walk-forward combination failed: {:?}",
            result.failures
        ))
        .in_stage("walk-forward"));
    }
    Ok(WalkForwardOutput {
        config_hash: hash,
        cleaned,
        result,
    })
}

/// `date` followed by one cumulative-value column per run.
pub fn write_cumulative_csv(result: &WalkForwardResult, hash: &str, path: &Path) -> Result<()> {
    let mut header = vec!["date".to_string()];
    header.extend(result.runs.iter().map(WalkForwardRun::label));
    let rows: Vec<Vec<String>> = result
        .dates
        .iter()
        .enumerate()
        .map(|(t, d)| {
            let mut row = vec![d.to_string()];
            row.extend(result.runs.iter().map(|r| fmt_value(Some(r.cumulative[t]))));
            row
        })
        .collect();
    write_csv(path, &provenance_line(hash, None), &header, &rows)
}

/// One row of annualized statistics per run.
pub fn write_performance_csv(result: &WalkForwardResult, hash: &str, path: &Path) -> Result<()> {
    let header = [
        "estimator",
        "strategy",
        "annual_return",
        "annual_volatility",
        "sharpe",
        "max_drawdown",
        "sortino",
        "turnover",
    ]
    .map(String::from);
    let rows: Vec<Vec<String>> = result
        .runs
        .iter()
        .map(|r| {
            let p = &r.report;
            vec![
                r.estimator.clone(),
                r.strategy.to_string(),
                fmt_value(Some(p.annual_return)),
                fmt_value(Some(p.annual_volatility)),
                fmt_value(p.sharpe),
                fmt_value(Some(p.max_drawdown)),
                fmt_value(p.sortino),
                fmt_value(Some(p.turnover)),
            ]
        })
        .collect();
    write_csv(path, &provenance_line(hash, None), &header, &rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::EstimatorKind;

    #[test]
    fn config_defaults() {
        let cfg: TrackConfig = serde_json::from_str(
            r#"{"input":"p.csv","estimators":[{"kind":"naive"}],"strategies":["mvp"]}"#,
        )
        .unwrap();
        assert_eq!(cfg.step, 10);
        assert_eq!(cfg.window_length, None);
        assert_eq!(cfg.max_missing_frac, 0.05);
        assert_eq!(cfg.estimators[0].kind, EstimatorKind::Naive);
        let wf: WalkForwardConfig =
            serde_json::from_str(r#"{"input":"p.csv","estimators":[],"strategies":[]}"#).unwrap();
        assert_eq!(wf.plan, WalkForwardPlan::default());
    }
}
