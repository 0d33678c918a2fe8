//! Diversification, risk and performance metrics.

use chrono::NaiveDate;
use nalgebra::{Cholesky, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{CovarianceMatrix, WeightVector};

pub const TRADING_DAYS: f64 = 252.0;

/// Herfindahl–Hirschman index `Σ wᵢ²`.
pub fn hhi(w: &WeightVector) -> f64 {
    w.as_slice().iter().map(|x| x * x).sum()
}

/// Gross exposure `Σ |wᵢ|`.
pub fn leverage(w: &WeightVector) -> f64 {
    w.as_slice().iter().map(|x| x.abs()).sum()
}

/// Portfolio volatility over the weighted average of asset volatilities,
/// `√(wᵀΣw) / (wᵀ √diag Σ)`.
pub fn rdi(w: &WeightVector, sigma: &CovarianceMatrix) -> Result<f64> {
    check_len(w, sigma)?;
    let diag = sigma.diagonal();
    if let Some(bad) = diag.iter().find(|&&v| !(v > 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "diversification ratio needs positive variances, found {bad}"
        )));
    }
    let denom: f64 = w.as_slice().iter().zip(&diag).map(|(x, v)| x * v.sqrt()).sum();
    if denom == 0.0 {
        return Err(Error::InvalidArgument(
            "diversification ratio has a zero denominator".into(),
        ));
    }
    Ok(sigma.quadratic_form(w.as_slice()).max(0.0).sqrt() / denom)
}

/// Variance of the in-sample weights under the evaluation covariance.
pub fn realized_risk(w: &WeightVector, s_out: &CovarianceMatrix) -> Result<f64> {
    check_len(w, s_out)?;
    Ok(s_out.quadratic_form(w.as_slice()))
}

/// Minimum attainable variance `1 / (1ᵀΣ⁻¹1)`.
pub fn true_risk(sigma: &CovarianceMatrix) -> Result<f64> {
    let chol = Cholesky::new(sigma.matrix().clone()).ok_or_else(|| Error::IllConditioned {
        origin: sigma.origin().to_string(),
        condition: f64::INFINITY,
    })?;
    let u = chol.solve(&DVector::from_element(sigma.dim(), 1.0));
    Ok(1.0 / u.sum())
}

fn check_len(w: &WeightVector, sigma: &CovarianceMatrix) -> Result<()> {
    if w.len() != sigma.dim() {
        return Err(Error::DimensionMismatch(format!(
            "{} weights against a {}x{} covariance",
            w.len(),
            sigma.dim(),
            sigma.dim()
        )));
    }
    Ok(())
}

/// Weights around one rebalance. `pre` is the drifted allocation just before
/// trading and is absent for the initial allocation.
#[derive(Clone, Debug, PartialEq)]
pub struct RebalanceEvent {
    pub date: NaiveDate,
    pub pre: Option<WeightVector>,
    pub post: WeightVector,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerformanceReport {
    pub annual_return: f64,
    pub annual_volatility: f64,
    pub sharpe: Option<f64>,
    pub max_drawdown: f64,
    pub sortino: Option<f64>,
    pub turnover: f64,
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Sample standard deviation (divisor `n − 1`); `None` for fewer than two
/// points. Constant series give exactly zero.
fn std_dev(x: &[f64]) -> Option<f64> {
    if x.len() < 2 {
        return None;
    }
    if x.iter().all(|&v| v == x[0]) {
        return Some(0.0);
    }
    let m = mean(x);
    let ss: f64 = x.iter().map(|v| (v - m) * (v - m)).sum();
    Some((ss / (x.len() - 1) as f64).sqrt())
}

/// Largest peak-to-trough decline of `Π(1 + rₜ)`, starting from a peak of 1.
pub fn max_drawdown(daily: &[f64]) -> f64 {
    let mut value = 1.0;
    let mut peak = 1.0f64;
    let mut worst = 0.0f64;
    for r in daily {
        value *= 1.0 + r;
        peak = peak.max(value);
        worst = worst.min(value / peak - 1.0);
    }
    worst
}

/// Mean over rebalances (excluding the initial allocation) of `Σ |post − pre|`.
pub fn turnover(history: &[RebalanceEvent]) -> Result<f64> {
    let mut total = 0.0;
    let mut count = 0usize;
    for event in history {
        if let Some(pre) = &event.pre {
            if pre.len() != event.post.len() {
                return Err(Error::DimensionMismatch(
                    "rebalance weights change length".into(),
                ));
            }
            total += pre
                .as_slice()
                .iter()
                .zip(event.post.as_slice())
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>();
            count += 1;
        }
    }
    Ok(if count == 0 { 0.0 } else { total / count as f64 })
}

/// Annualized statistics of a daily return stream.
pub fn performance_report(daily: &[f64], history: &[RebalanceEvent]) -> Result<PerformanceReport> {
    if daily.is_empty() {
        return Err(Error::InvalidArgument("empty return series".into()));
    }
    if history.windows(2).any(|w| w[0].date > w[1].date) {
        return Err(Error::InvalidArgument("rebalance history is not ordered".into()));
    }
    let annual_return = mean(daily) * TRADING_DAYS;
    let annual_volatility = std_dev(daily).unwrap_or(0.0) * TRADING_DAYS.sqrt();
    let sharpe = (annual_volatility > 0.0).then(|| annual_return / annual_volatility);
    let negatives: Vec<f64> = daily.iter().copied().filter(|&r| r < 0.0).collect();
    let sortino = std_dev(&negatives)
        .map(|s| s * TRADING_DAYS.sqrt())
        .filter(|&d| d > 0.0)
        .map(|d| annual_return / d);
    Ok(PerformanceReport {
        annual_return,
        annual_volatility,
        sharpe,
        max_drawdown: max_drawdown(daily),
        sortino,
        turnover: turnover(history)?,
    })
}
