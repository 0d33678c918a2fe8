//! Monte Carlo evaluation of estimator × strategy pairs on synthetic models.
//!
//! Each realization `r` owns the random stream seeded by `base_seed ^ r`:
//! stream 0 draws the population (one-factor loadings), stream `n` draws the
//! panel of length `n`. Realizations run in parallel and are reduced in
//! realization order, so results do not depend on the worker count.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::allocation::{uniform_weights, Strategy};
use crate::error::{Error, Result};
use crate::estimators::{estimate, EstimatorSpec};
use crate::matrix::{CovarianceMatrix, WeightVector};
use crate::metrics::{hhi, leverage, rdi, realized_risk};
use crate::models::{seeded_rng, ModelSpec, Population, SeededRng};
use crate::report::{config_hash, fmt_value, provenance_line, write_csv, Metric, MetricRecord};

/// Row label of the uniform-portfolio baseline.
pub const UNIFORM_ROW: &str = "U";
/// Row label of the population-input baseline.
pub const POPULATION_ROW: &str = "sigma";

fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub model: ModelSpec,
    pub n_values: Vec<usize>,
    pub realizations: usize,
    pub estimators: Vec<EstimatorSpec>,
    pub strategies: Vec<Strategy>,
    pub base_seed: u64,
    /// Also score every strategy on the population covariance itself.
    #[serde(default)]
    pub include_population: bool,
    #[serde(default = "default_true")]
    pub include_uniform: bool,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if self.realizations == 0 {
            return Err(Error::InvalidArgument("realizations must be ≥ 1".into()));
        }
        if self.n_values.is_empty() || self.n_values.iter().any(|&n| n < 2) {
            return Err(Error::InvalidArgument(
                "n_values must be non-empty with every n ≥ 2".into(),
            ));
        }
        if self.strategies.is_empty() {
            return Err(Error::InvalidArgument("no strategies configured".into()));
        }
        for e in &self.estimators {
            e.validate()?;
        }
        Ok(())
    }

    pub fn hash(&self) -> Result<String> {
        config_hash(self)
    }
}

/// Several models evaluated at one sample size, laid out like a paper table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableConfig {
    pub models: Vec<ModelSpec>,
    pub n: usize,
    pub realizations: usize,
    pub estimators: Vec<EstimatorSpec>,
    pub strategies: Vec<Strategy>,
    pub base_seed: u64,
}

impl TableConfig {
    /// The sweep run for one model column group.
    pub fn sweep_for(&self, model: &ModelSpec) -> SweepConfig {
        SweepConfig {
            model: model.clone(),
            n_values: vec![self.n],
            realizations: self.realizations,
            estimators: self.estimators.clone(),
            strategies: self.strategies.clone(),
            base_seed: self.base_seed,
            include_population: true,
            include_uniform: true,
        }
    }
}

/// Mean and spread of one metric over the successful realizations of a cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub model: String,
    pub estimator: String,
    pub strategy: Strategy,
    pub n: usize,
    pub metric: Metric,
    /// `None` when every realization failed.
    pub mean: Option<f64>,
    pub std_err: Option<f64>,
    pub count: usize,
    pub failures: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub config_hash: String,
    pub base_seed: u64,
    pub cells: Vec<CellSummary>,
    /// Per-realization values in realization order.
    pub records: Vec<MetricRecord>,
}

impl SweepResult {
    pub fn cell(&self, estimator: &str, strategy: Strategy, n: usize, metric: Metric) -> Option<&CellSummary> {
        self.cells.iter().find(|c| {
            c.estimator == estimator && c.strategy == strategy && c.n == n && c.metric == metric
        })
    }

    pub fn mean(&self, estimator: &str, strategy: Strategy, n: usize, metric: Metric) -> Option<f64> {
        self.cell(estimator, strategy, n, metric).and_then(|c| c.mean)
    }
}

/// Pairwise summation, accurate and independent of evaluation order.
pub fn pairwise_sum(x: &[f64]) -> f64 {
    if x.len() <= 8 {
        return x.iter().sum();
    }
    let (a, b) = x.split_at(x.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

fn summarize(values: &[f64]) -> (Option<f64>, Option<f64>) {
    if values.is_empty() {
        return (None, None);
    }
    let n = values.len() as f64;
    let mean = pairwise_sum(values) / n;
    if values.len() < 2 {
        return (Some(mean), None);
    }
    let dev: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    let var = pairwise_sum(&dev) / (n - 1.0);
    (Some(mean), Some((var / n).sqrt()))
}

/// Values of the four metrics for one weight vector.
fn score(w: &WeightVector, sigma: &CovarianceMatrix) -> Result<[(Metric, f64); 4]> {
    Ok([
        (Metric::Hhi, hhi(w)),
        (Metric::Leverage, leverage(w)),
        (Metric::Rdi, rdi(w, sigma)?),
        (Metric::RealizedRisk, realized_risk(w, sigma)?),
    ])
}

/// Outcome of one (row, strategy) pair in one realization.
type Outcome = (String, Strategy, Option<[(Metric, f64); 4]>);

fn realization_rng(base_seed: u64, r: usize, stream: u64) -> SeededRng {
    let mut rng = seeded_rng(base_seed ^ r as u64);
    rng.set_stream(stream);
    rng
}

fn run_one(cfg: &SweepConfig, fixed: Option<&Population>, r: usize, n: usize) -> Result<Vec<Outcome>> {
    let drawn;
    let pop = match fixed {
        Some(p) => p,
        None => {
            drawn = cfg.model.draw(&mut realization_rng(cfg.base_seed, r, 0))?;
            &drawn
        }
    };
    let sigma = &pop.sigma;
    let mut out = Vec::new();

    if cfg.include_population {
        for &s in &cfg.strategies {
            let m = s.weights(sigma).and_then(|w| score(&w, sigma)).ok();
            out.push((POPULATION_ROW.to_string(), s, m));
        }
    }

    let mut rng = realization_rng(cfg.base_seed, r, n as u64);
    let panel = pop.sample(n, cfg.model.noise(), &mut rng)?;
    for spec in &cfg.estimators {
        let xi = estimate(&panel, spec, false);
        if let Err(e) = &xi {
            log::debug!("realization {r}, n = {n}: {} failed: {e}", spec.name());
        }
        for &s in &cfg.strategies {
            let m = xi
                .as_ref()
                .ok()
                .and_then(|xi| s.weights(xi).ok())
                .and_then(|w| score(&w, sigma).ok());
            out.push((spec.name().to_string(), s, m));
        }
    }

    if cfg.include_uniform {
        let u = uniform_weights(sigma.dim())?;
        let m = score(&u, sigma)?;
        for &s in &cfg.strategies {
            out.push((UNIFORM_ROW.to_string(), s, Some(m)));
        }
    }
    Ok(out)
}

/// Runs every realization for every `n` and aggregates per cell.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let hash = cfg.hash()?;
    let fixed = if cfg.model.is_random() {
        None
    } else {
        Some(cfg.model.draw(&mut seeded_rng(cfg.base_seed))?)
    };

    let tasks: Vec<(usize, usize)> = cfg
        .n_values
        .iter()
        .flat_map(|&n| (0..cfg.realizations).map(move |r| (n, r)))
        .collect();
    let outcomes: Vec<Vec<Outcome>> = tasks
        .par_iter()
        .map(|&(n, r)| run_one(cfg, fixed.as_ref(), r, n))
        .collect::<Result<_>>()?;

    let label = cfg.model.kind.label().to_string();
    let mut records = Vec::new();
    // (n, row order, strategy order) -> (label, per-metric values, failures)
    let mut cells: BTreeMap<(usize, usize, usize), (String, Vec<Vec<f64>>, usize)> = BTreeMap::new();
    for (&(n, r), outcome) in tasks.iter().zip(&outcomes) {
        for (k, (row, strategy, metrics)) in outcome.iter().enumerate() {
            let si = cfg.strategies.iter().position(|s| s == strategy).unwrap_or(0);
            let key = (n, k / cfg.strategies.len(), si);
            let entry = cells
                .entry(key)
                .or_insert_with(|| (row.clone(), vec![Vec::new(); Metric::ALL.len()], 0));
            match metrics {
                Some(values) => {
                    for (slot, (metric, v)) in values.iter().enumerate() {
                        entry.1[slot].push(*v);
                        records.push(MetricRecord {
                            context: label.clone(),
                            estimator: row.clone(),
                            strategy: strategy.name().to_string(),
                            n: Some(n),
                            window: Some(r),
                            metric: *metric,
                            value: *v,
                        });
                    }
                }
                None => entry.2 += 1,
            }
        }
    }

    let mut summaries = Vec::new();
    for ((n, _, si), (row, values, failures)) in cells {
        for (slot, metric) in Metric::ALL.into_iter().enumerate() {
            let (mean, std_err) = summarize(&values[slot]);
            summaries.push(CellSummary {
                model: label.clone(),
                estimator: row.clone(),
                strategy: cfg.strategies[si],
                n,
                metric,
                mean,
                std_err,
                count: values[slot].len(),
                failures,
            });
        }
    }

    Ok(SweepResult {
        config_hash: hash,
        base_seed: cfg.base_seed,
        cells: summaries,
        records,
    })
}

/// Runs one sweep per model at the table's sample size, population row included.
pub fn run_table(cfg: &TableConfig) -> Result<SweepResult> {
    if cfg.models.is_empty() {
        return Err(Error::InvalidArgument("table needs at least one model".into()));
    }
    let hash = config_hash(cfg)?;
    let mut cells = Vec::new();
    let mut records = Vec::new();
    for model in &cfg.models {
        let res = run_sweep(&cfg.sweep_for(model))
            .map_err(|e| e.in_stage(format!("table model {}", model.kind.label())))?;
        cells.extend(res.cells);
        records.extend(res.records);
    }
    Ok(SweepResult {
        config_hash: hash,
        base_seed: cfg.base_seed,
        cells,
        records,
    })
}

fn row_labels(result: &SweepResult) -> Vec<String> {
    let mut rows: Vec<String> = Vec::new();
    for c in &result.cells {
        if !rows.contains(&c.estimator) {
            rows.push(c.estimator.clone());
        }
    }
    rows
}

/// Long-form summary: one line per (model, row, strategy, n, metric).
pub fn write_summary_csv(result: &SweepResult, path: &Path) -> Result<()> {
    let header = ["model", "estimator", "strategy", "n", "metric", "mean", "std_err", "count", "failures"]
        .map(String::from)
        .to_vec();
    let rows: Vec<Vec<String>> = result
        .cells
        .iter()
        .map(|c| {
            vec![
                c.model.clone(),
                c.estimator.clone(),
                c.strategy.name().to_string(),
                c.n.to_string(),
                c.metric.name().to_string(),
                fmt_value(c.mean),
                fmt_value(c.std_err),
                c.count.to_string(),
                c.failures.to_string(),
            ]
        })
        .collect();
    write_csv(path, &provenance_line(&result.config_hash, Some(result.base_seed)), &header, &rows)
}

/// Per-realization values in long form.
pub fn write_records_csv(result: &SweepResult, path: &Path) -> Result<()> {
    let header = ["model", "estimator", "strategy", "n", "realization", "metric", "value"]
        .map(String::from)
        .to_vec();
    let rows: Vec<Vec<String>> = result
        .records
        .iter()
        .map(|r| {
            vec![
                r.context.clone(),
                r.estimator.clone(),
                r.strategy.clone(),
                r.n.map_or_else(String::new, |n| n.to_string()),
                r.window.map_or_else(String::new, |w| w.to_string()),
                r.metric.name().to_string(),
                fmt_value(Some(r.value)),
            ]
        })
        .collect();
    write_csv(path, &provenance_line(&result.config_hash, Some(result.base_seed)), &header, &rows)
}

/// One file per (metric, strategy): `n` down the rows, one column per estimator.
/// Returns the paths written.
pub fn write_plot_csvs(result: &SweepResult, dir: &Path) -> Result<Vec<std::path::PathBuf>> {
    let rows = row_labels(result);
    let mut ns: Vec<usize> = result.cells.iter().map(|c| c.n).collect();
    ns.sort_unstable();
    ns.dedup();
    let mut strategies: Vec<Strategy> = Vec::new();
    for c in &result.cells {
        if !strategies.contains(&c.strategy) {
            strategies.push(c.strategy);
        }
    }
    let provenance = provenance_line(&result.config_hash, Some(result.base_seed));
    let mut written = Vec::new();
    for metric in Metric::ALL {
        for &strategy in &strategies {
            let mut header = vec!["n".to_string()];
            header.extend(rows.iter().cloned());
            let body: Vec<Vec<String>> = ns
                .iter()
                .map(|&n| {
                    let mut line = vec![n.to_string()];
                    line.extend(rows.iter().map(|r| fmt_value(result.mean(r, strategy, n, metric))));
                    line
                })
                .collect();
            let name = format!("plot_{}_{}.csv", metric.name(), strategy.name().replace('+', "plus"));
            let path = dir.join(name);
            write_csv(&path, &provenance, &header, &body)?;
            written.push(path);
        }
    }
    Ok(written)
}

/// One file per metric: rows are estimators (plus baselines), columns are
/// `model:strategy`.
pub fn write_table_csvs(result: &SweepResult, dir: &Path) -> Result<Vec<std::path::PathBuf>> {
    let rows = row_labels(result);
    let mut columns: Vec<(String, Strategy)> = Vec::new();
    for c in &result.cells {
        let key = (c.model.clone(), c.strategy);
        if !columns.contains(&key) {
            columns.push(key);
        }
    }
    let provenance = provenance_line(&result.config_hash, Some(result.base_seed));
    let mut written = Vec::new();
    for metric in Metric::ALL {
        let mut header = vec!["estimator".to_string()];
        header.extend(columns.iter().map(|(m, s)| format!("{m}:{}", s.name())));
        let body: Vec<Vec<String>> = rows
            .iter()
            .map(|row| {
                let mut line = vec![row.clone()];
                line.extend(columns.iter().map(|(model, s)| {
                    let v = result
                        .cells
                        .iter()
                        .find(|c| &c.model == model && c.strategy == *s && &c.estimator == row && c.metric == metric)
                        .and_then(|c| c.mean);
                    fmt_value(v)
                }));
                line
            })
            .collect();
        let path = dir.join(format!("table_{}.csv", metric.name()));
        write_csv(&path, &provenance, &header, &body)?;
        written.push(path);
    }
    Ok(written)
}
