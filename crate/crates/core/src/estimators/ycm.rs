//! Regularized Tyler fixed-point estimator with a data-driven shrinkage level.
//!
//! For a shrinkage value `ρ` the estimate solves
//! `Ξ = (1 − ρ)/n Σᵢ x̃ᵢx̃ᵢᵀ / ((1/p) x̃ᵢᵀ Ξ⁻¹ x̃ᵢ) + ρI` over demeaned
//! observations `x̃ᵢ`. `ρ` is picked on a grid by a split-sample proxy of the
//! realized minimum-variance risk: weights are fitted on one half of the
//! observations and evaluated on the sample covariance of the other half.

use nalgebra::{Cholesky, DMatrix, DVector};

use super::EstimatorSpec;
use crate::error::{Error, Result};
use crate::matrix::{CovarianceMatrix, DataPanel};

/// Smallest distance of the grid from the existence boundary `max(0, 1 − n/p)`.
pub const RHO_EPSILON: f64 = 0.01;

/// Result of the fixed-point estimator.
#[derive(Clone, Debug)]
pub struct YcmFit {
    /// `Ξ(ρ̂)` rescaled to the trace of the demeaned sample covariance.
    pub cov: CovarianceMatrix,
    pub rho_hat: f64,
    /// `(ρ, proxy)` for every grid point; the proxy is `None` where a half
    /// failed to converge.
    pub proxies: Vec<(f64, Option<f64>)>,
}

/// Uniform grid of `size` points over `[ε + max(0, 1 − n/p), 1]`.
pub fn rho_grid(p: usize, n: usize, size: usize) -> Vec<f64> {
    let lo = RHO_EPSILON + (1.0 - n as f64 / p as f64).max(0.0);
    if size <= 1 || lo >= 1.0 {
        return vec![1.0];
    }
    let step = (1.0 - lo) / (size - 1) as f64;
    (0..size)
        .map(|k| if k + 1 == size { 1.0 } else { lo + step * k as f64 })
        .collect()
}

/// Iterates the fixed point from `start` (trace-normalized to p). Returns the
/// converged matrix, or `None` when the iterate stops being positive definite
/// or `max_iter` is exhausted.
fn solve_fixed_point(
    x: &DMatrix<f64>,
    rho: f64,
    start: &DMatrix<f64>,
    tol: f64,
    max_iter: usize,
) -> Option<DMatrix<f64>> {
    let (p, n) = x.shape();
    let pf = p as f64;
    let xt = x.transpose();
    let mut xi = start * (pf / start.trace());
    let mut residuals: Vec<f64> = Vec::new();
    for _ in 0..max_iter {
        let chol = Cholesky::new(xi.clone())?;
        let z = chol.l().solve_lower_triangular(x)?;
        let mut scaled = x.clone();
        for (i, mut col) in scaled.column_iter_mut().enumerate() {
            let tau = z.column(i).norm_squared() / pf;
            if tau > 0.0 {
                col *= (1.0 - rho) / (n as f64 * tau);
            } else {
                col.fill(0.0);
            }
        }
        let mut next = DMatrix::<f64>::identity(p, p) * rho;
        next.gemm(1.0, &scaled, &xt, 1.0);
        let next = (&next + next.transpose()) * 0.5;
        let next = &next * (pf / next.trace());
        let residual = (&next - &xi).norm() / xi.norm();
        residuals.push(residual);
        xi = next;
        if residual < tol {
            if residuals.len() > 4 && residuals[3..].windows(2).any(|w| w[1] > w[0] * (1.0 + 1e-9)) {
                log::debug!("fixed point at rho = {rho}: residual not monotone after 3 iterations");
            }
            return Some(xi);
        }
    }
    None
}

/// Minimum-variance weights for `xi` via Cholesky; `None` if not PD.
fn mvp_weights(xi: &DMatrix<f64>) -> Option<DVector<f64>> {
    let chol = Cholesky::new(xi.clone())?;
    let w = chol.solve(&DVector::from_element(xi.nrows(), 1.0));
    let total = w.sum();
    (total.is_finite() && total != 0.0).then(|| w / total)
}

/// Solves every grid point for one half, warm-starting each from the
/// previous (larger) `ρ`.
fn solve_grid(x: &DMatrix<f64>, grid: &[f64], spec: &EstimatorSpec) -> Vec<Option<DMatrix<f64>>> {
    let p = x.nrows();
    let identity = DMatrix::<f64>::identity(p, p);
    let mut out = vec![None; grid.len()];
    let mut warm: Option<DMatrix<f64>> = None;
    for k in (0..grid.len()).rev() {
        let start = warm.as_ref().unwrap_or(&identity);
        let mut sol = solve_fixed_point(x, grid[k], start, spec.fixed_point_tol, spec.fixed_point_max_iter);
        if sol.is_none() && warm.is_some() {
            sol = solve_fixed_point(x, grid[k], &identity, spec.fixed_point_tol, spec.fixed_point_max_iter);
        }
        if let Some(s) = &sol {
            warm = Some(s.clone());
        }
        out[k] = sol;
    }
    out
}

fn half_covariance(x: &DMatrix<f64>) -> DMatrix<f64> {
    let mut s = x * x.transpose();
    s /= x.ncols() as f64;
    s
}

/// Runs the fixed-point estimator with split-sample selection of `ρ`.
pub fn estimate_ycm(panel: &DataPanel, spec: &EstimatorSpec) -> Result<YcmFit> {
    spec.validate()?;
    let (p, n) = (panel.p(), panel.n());
    if n < 4 {
        return Err(Error::InvalidArgument(
            "fixed-point estimator needs at least 4 observations".into(),
        ));
    }
    let x = panel.demeaned().values().clone();
    let grid = rho_grid(p, n, spec.rho_grid_size);

    let half = n / 2;
    let xa = x.columns(0, half).into_owned();
    let xb = x.columns(half, n - half).into_owned();
    let (sol_a, sol_b) = rayon::join(|| solve_grid(&xa, &grid, spec), || solve_grid(&xb, &grid, spec));
    let (sa, sb) = (half_covariance(&xa), half_covariance(&xb));

    let proxies: Vec<(f64, Option<f64>)> = grid
        .iter()
        .enumerate()
        .map(|(k, &rho)| {
            let proxy = match (&sol_a[k], &sol_b[k]) {
                (Some(a), Some(b)) => mvp_weights(a).zip(mvp_weights(b)).map(|(wa, wb)| {
                    0.5 * ((wa.transpose() * &sb * &wa)[0] + (wb.transpose() * &sa * &wb)[0])
                }),
                _ => None,
            };
            (rho, proxy)
        })
        .collect();

    // Candidates by increasing proxy, lowest ρ first on ties.
    let mut order: Vec<usize> = (0..grid.len()).filter(|&k| proxies[k].1.is_some()).collect();
    order.sort_by(|&a, &b| {
        proxies[a].1.unwrap().total_cmp(&proxies[b].1.unwrap()).then(a.cmp(&b))
    });

    let target_trace = x.iter().map(|v| v * v).sum::<f64>() / n as f64;
    let identity = DMatrix::<f64>::identity(p, p);
    for k in order {
        let rho = grid[k];
        let start = match (&sol_a[k], &sol_b[k]) {
            (Some(a), Some(b)) => (a + b) * 0.5,
            _ => identity.clone(),
        };
        let tol = spec.fixed_point_tol;
        let iters = spec.fixed_point_max_iter;
        let sol = solve_fixed_point(&x, rho, &start, tol, iters)
            .or_else(|| solve_fixed_point(&x, rho, &identity, tol, iters));
        if let Some(xi) = sol {
            let scale = if target_trace > 0.0 { target_trace / p as f64 } else { 1.0 };
            let cov = CovarianceMatrix::from_symmetrized(xi * scale)?.with_origin("ycm");
            return Ok(YcmFit {
                cov,
                rho_hat: rho,
                proxies,
            });
        }
    }
    Err(Error::NoConvergence {
        what: "fixed-point estimator at every grid point".into(),
        iterations: spec.fixed_point_max_iter,
    })
}
