use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::prices::ReturnPanel;
use crate::allocation::{uniform_weights, Strategy};
use crate::error::{Error, Result};
use crate::estimators::{estimate, EstimatorSpec};
use crate::matrix::WeightVector;
use crate::metrics::{performance_report, PerformanceReport, RebalanceEvent};
use crate::simulation::UNIFORM_ROW;

/// Yearly rebalancing on a trailing estimation window.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WalkForwardPlan {
    pub t_in: usize,
    pub t_out: usize,
    pub rebalance_every: usize,
}

impl Default for WalkForwardPlan {
    fn default() -> Self {
        WalkForwardPlan {
            t_in: 756,
            t_out: 252,
            rebalance_every: 252,
        }
    }
}

impl WalkForwardPlan {
    /// Day indices (into the return series) of every rebalance. Rebalance `k`
    /// happens at `t_in + k·rebalance_every` and needs `t_out` days after it.
    pub fn rebalance_days(&self, t: usize) -> Result<Vec<usize>> {
        if self.t_in < 2 || self.t_out == 0 || self.rebalance_every == 0 {
            return Err(Error::InvalidArgument(
                "t_in must be ≥ 2, t_out and rebalance_every ≥ 1".into(),
            ));
        }
        if self.rebalance_every > self.t_out {
            return Err(Error::InvalidArgument(format!(
                "rebalancing every {} days leaves days uncovered by a {}-day holding period",
                self.rebalance_every, self.t_out
            )));
        }
        if self.t_in + self.t_out > t {
            return Err(Error::PlanDoesNotFit(format!(
                "{t} observations cannot hold {} in-sample plus {} out-sample days",
                self.t_in, self.t_out
            )));
        }
        let count = (t - self.t_in - self.t_out) / self.rebalance_every + 1;
        Ok((0..count).map(|k| self.t_in + k * self.rebalance_every).collect())
    }
}

/// One estimator × strategy combination run through the plan.
#[derive(Clone, Debug, PartialEq)]
pub struct WalkForwardRun {
    pub estimator: String,
    pub strategy: Strategy,
    /// Daily portfolio returns over the out-sample days.
    pub daily: Vec<f64>,
    /// Cumulative value, starting at 1.0 the day before the first out-sample day.
    pub cumulative: Vec<f64>,
    pub history: Vec<RebalanceEvent>,
    pub report: PerformanceReport,
}

impl WalkForwardRun {
    pub fn label(&self) -> String {
        format!("{}:{}", self.estimator, self.strategy)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WalkForwardResult {
    /// Dates of the cumulative series (one more than the number of out-sample days).
    pub dates: Vec<NaiveDate>,
    pub runs: Vec<WalkForwardRun>,
    /// Combinations that could not be run, with the reason.
    pub failures: Vec<(String, String)>,
}

/// Holds `w` over `days` of returns, letting positions drift with prices.
/// Returns the daily portfolio returns and the drifted weights at the end.
pub fn hold(returns: &ReturnPanel, w: &WeightVector, days: std::ops::Range<usize>) -> (Vec<f64>, Vec<f64>) {
    let r = returns.returns.values();
    let mut h = w.as_slice().to_vec();
    let mut daily = Vec::with_capacity(days.len());
    for t in days {
        let value: f64 = h.iter().sum();
        let mut next = 0.0;
        for (i, x) in h.iter_mut().enumerate() {
            *x *= 1.0 + r[(i, t)];
            next += *x;
        }
        daily.push(next / value - 1.0);
    }
    let total: f64 = h.iter().sum();
    (daily, h.into_iter().map(|x| x / total).collect())
}

fn finish(
    estimator: &str,
    strategy: Strategy,
    daily: Vec<f64>,
    history: Vec<RebalanceEvent>,
) -> Result<WalkForwardRun> {
    let mut cumulative = Vec::with_capacity(daily.len() + 1);
    cumulative.push(1.0);
    let mut v = 1.0;
    for r in &daily {
        v *= 1.0 + r;
        cumulative.push(v);
    }
    let report = performance_report(&daily, &history)?;
    Ok(WalkForwardRun {
        estimator: estimator.to_string(),
        strategy,
        daily,
        cumulative,
        history,
        report,
    })
}

fn run_combination(
    returns: &ReturnPanel,
    plan: &WalkForwardPlan,
    days: &[usize],
    end: usize,
    spec: &EstimatorSpec,
    strategy: Strategy,
) -> Result<WalkForwardRun> {
    let mut daily = Vec::new();
    let mut history = Vec::new();
    let mut drifted: Option<Vec<f64>> = None;
    for (k, &t) in days.iter().enumerate() {
        let stop = days.get(k + 1).copied().unwrap_or(end);
        let panel = returns.returns.slice(t - plan.t_in, t)?;
        let date = returns.dates[t];
        let w = estimate(&panel, spec, true)
            .and_then(|xi| strategy.weights(&xi))
            .map_err(|e| e.in_stage(format!("rebalance {k} ({date})")))?;
        let pre = drifted.take().map(WeightVector::new).transpose()?;
        let (r, after) = hold(returns, &w, t..stop);
        history.push(RebalanceEvent { date, pre, post: w });
        daily.extend(r);
        drifted = Some(after);
    }
    finish(spec.name(), strategy, daily, history)
}

/// Rebalances every estimator × strategy on the plan's schedule and compares
/// them with a buy-and-hold uniform portfolio bought on the first rebalance day.
pub fn walk_forward(
    returns: &ReturnPanel,
    plan: &WalkForwardPlan,
    estimators: &[EstimatorSpec],
    strategies: &[Strategy],
    include_uniform: bool,
) -> Result<WalkForwardResult> {
    let days = plan.rebalance_days(returns.len())?;
    let (first, last) = (days[0], days[days.len() - 1]);
    let end = last + plan.t_out;
    for e in estimators {
        e.validate()?;
    }

    let combos: Vec<(&EstimatorSpec, Strategy)> = estimators
        .iter()
        .flat_map(|e| strategies.iter().map(move |&s| (e, s)))
        .collect();
    let outcomes: Vec<Result<WalkForwardRun>> = combos
        .par_iter()
        .map(|&(spec, s)| run_combination(returns, plan, &days, end, spec, s))
        .collect();

    let mut runs = Vec::new();
    let mut failures = Vec::new();
    for ((spec, s), outcome) in combos.iter().zip(outcomes) {
        match outcome {
            Ok(run) => runs.push(run),
            Err(e) => {
                let label = format!("{}:{}", spec.name(), s);
                log::warn!("walk-forward {label} failed: {e}");
                failures.push((label, e.to_string()));
            }
        }
    }
    if include_uniform {
        let u = uniform_weights(returns.p())?;
        let (daily, _) = hold(returns, &u, first..end);
        let history = vec![RebalanceEvent {
            date: returns.dates[first],
            pre: None,
            post: u,
        }];
        runs.push(finish(UNIFORM_ROW, Strategy::Uniform, daily, history)?);
    }
    Ok(WalkForwardResult {
        dates: returns.dates[first - 1..end].to_vec(),
        runs,
        failures,
    })
}
