use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::prices::ReturnPanel;
use crate::allocation::{uniform_weights, Strategy};
use crate::error::{Error, Result};
use crate::estimators::{estimate, EstimatorSpec};
use crate::matrix::{CovarianceMatrix, WeightVector};
use crate::metrics::{hhi, leverage, rdi, realized_risk};
use crate::models::sample_covariance;
use crate::report::Metric;
use crate::simulation::UNIFORM_ROW;

/// Overlapping in-sample windows of `window_length` days shifted by `step`,
/// each followed by a disjoint out-sample window of the same length.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowPlan {
    pub window_length: usize,
    pub step: usize,
    pub count: usize,
}

impl WindowPlan {
    /// Plan over `t` observations with `count = ⌊(t − 2n) / step⌋`.
    pub fn new(t: usize, window_length: usize, step: usize) -> Result<Self> {
        if window_length < 2 || step == 0 {
            return Err(Error::InvalidArgument(
                "window length must be ≥ 2 and step ≥ 1".into(),
            ));
        }
        let need = 2 * window_length;
        if t < need + step {
            return Err(Error::PlanDoesNotFit(format!(
                "{t} observations cannot hold a window of {window_length} days, its out-sample \
                 successor and one step of {step}"
            )));
        }
        Ok(WindowPlan {
            window_length,
            step,
            count: (t - need) / step,
        })
    }

    /// In-sample column range of window `k`.
    pub fn in_sample(&self, k: usize) -> (usize, usize) {
        let start = k * self.step;
        (start, start + self.window_length)
    }

    /// Out-sample column range of window `k`.
    pub fn out_sample(&self, k: usize) -> (usize, usize) {
        let (_, end) = self.in_sample(k);
        (end, end + self.window_length)
    }

    pub fn check_fits(&self, t: usize) -> Result<()> {
        if self.count == 0 || self.step == 0 || self.window_length < 2 {
            return Err(Error::PlanDoesNotFit("empty window plan".into()));
        }
        let last = self.out_sample(self.count - 1).1;
        if last > t {
            return Err(Error::PlanDoesNotFit(format!(
                "window {} ends at observation {last} but only {t} exist",
                self.count - 1
            )));
        }
        Ok(())
    }
}

/// One metric value from the moving-window track. `value` is `None` when the
/// estimator, the allocation or the metric failed for that window.
#[derive(Clone, Debug, PartialEq)]
pub struct TrackRecord {
    pub window: usize,
    pub end_date: NaiveDate,
    pub estimator: String,
    pub strategy: Strategy,
    pub metric: Metric,
    pub value: Option<f64>,
}

fn score(w: &WeightVector, s_out: &CovarianceMatrix) -> [(Metric, Option<f64>); 4] {
    [
        (Metric::Hhi, Some(hhi(w))),
        (Metric::Leverage, Some(leverage(w))),
        (Metric::Rdi, rdi(w, s_out).ok()),
        (Metric::RealizedRisk, realized_risk(w, s_out).ok()),
    ]
}

fn push(out: &mut Vec<TrackRecord>, k: usize, date: NaiveDate, est: &str, s: Strategy, m: Option<[(Metric, Option<f64>); 4]>) {
    for (slot, metric) in Metric::ALL.into_iter().enumerate() {
        out.push(TrackRecord {
            window: k,
            end_date: date,
            estimator: est.to_string(),
            strategy: s,
            metric,
            value: m.and_then(|v| v[slot].1),
        });
    }
}

fn run_window(
    returns: &ReturnPanel,
    plan: &WindowPlan,
    k: usize,
    estimators: &[EstimatorSpec],
    strategies: &[Strategy],
    include_uniform: bool,
) -> Result<Vec<TrackRecord>> {
    let (a, b) = plan.in_sample(k);
    let (c, d) = plan.out_sample(k);
    let in_sample = returns.returns.slice(a, b)?;
    let s_out = sample_covariance(&returns.returns.slice(c, d)?, true);
    let date = returns.dates[d - 1];
    let mut out = Vec::new();
    for spec in estimators {
        let xi = estimate(&in_sample, spec, true);
        if let Err(e) = &xi {
            log::warn!("window {k} ({date}): {} failed: {e}", spec.name());
        }
        for &s in strategies {
            let w = xi.as_ref().ok().map(|xi| s.weights(xi));
            if let Some(Err(e)) = &w {
                log::warn!("window {k} ({date}): {} with {} failed: {e}", s, spec.name());
            }
            let m = w.and_then(|w| w.ok()).map(|w| score(&w, &s_out));
            push(&mut out, k, date, spec.name(), s, m);
        }
    }
    if include_uniform {
        let u = uniform_weights(returns.p())?;
        push(&mut out, k, date, UNIFORM_ROW, Strategy::Uniform, Some(score(&u, &s_out)));
    }
    Ok(out)
}

/// Scores every estimator × strategy on each window: concentration and
/// leverage of the in-sample weights, diversification and realized risk
/// against the demeaned sample covariance of the following window. Records
/// are ordered by window, then estimator, strategy and metric as configured.
pub fn moving_window_track(
    returns: &ReturnPanel,
    plan: &WindowPlan,
    estimators: &[EstimatorSpec],
    strategies: &[Strategy],
    include_uniform: bool,
) -> Result<Vec<TrackRecord>> {
    plan.check_fits(returns.len())?;
    for e in estimators {
        e.validate()?;
    }
    let per_window: Vec<Vec<TrackRecord>> = (0..plan.count)
        .into_par_iter()
        .map(|k| run_window(returns, plan, k, estimators, strategies, include_uniform))
        .collect::<Result<_>>()?;
    Ok(per_window.into_iter().flatten().collect())
}
