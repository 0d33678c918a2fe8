use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::matrix::{CovarianceMatrix, WeightVector};

const KKT_TOLERANCE: f64 = 1e-8;

/// Solves the equality-constrained problem restricted to `free`:
/// `Ξ_FF w_F = ν 1`, `1ᵀ w_F = 1`. Returns `(w_F, ν)`.
fn solve_on_support(xi: &DMatrix<f64>, free: &[usize]) -> Option<(Vec<f64>, f64)> {
    let k = free.len();
    let mut kkt = DMatrix::<f64>::zeros(k + 1, k + 1);
    for (a, &i) in free.iter().enumerate() {
        for (b, &j) in free.iter().enumerate() {
            kkt[(a, b)] = xi[(i, j)];
        }
        kkt[(a, k)] = -1.0;
        kkt[(k, a)] = 1.0;
    }
    let mut rhs = DVector::<f64>::zeros(k + 1);
    rhs[k] = 1.0;
    let sol = match kkt.clone().lu().solve(&rhs) {
        Some(s) if s.iter().all(|v| v.is_finite()) => s,
        // Singular Ξ_FF: take the minimum-norm solution instead.
        _ => kkt.svd(true, true).solve(&rhs, 1e-13).ok()?,
    };
    if sol.iter().any(|v| !v.is_finite()) {
        return None;
    }
    Some((sol.rows(0, k).iter().copied().collect(), sol[k]))
}

/// Long-only minimum-variance weights.
///
/// Primal active-set method over the constraints `wᵢ ≥ 0`. The start is the
/// uniform portfolio over the assets with positive unconstrained weight.
/// Each step solves the equality problem on the free set, walks towards it
/// until the first weight hits zero (lowest index on ties), and releases the
/// fixed asset with the most negative multiplier once the free-set optimum
/// is reached.
pub fn mvp_long_only(xi: &CovarianceMatrix) -> Result<WeightVector> {
    xi.check_psd()?;
    let p = xi.dim();
    let m = xi.matrix();
    let scale = m.diagonal().amax().max(f64::MIN_POSITIVE);
    let tol = 1e-12 * scale;

    let mut free: Vec<usize> = match super::mvp_weights(xi) {
        Ok(u) => (0..p).filter(|&i| u[i] > 0.0).collect(),
        Err(_) => Vec::new(),
    };
    if free.is_empty() {
        free = (0..p).collect();
    }
    let mut w = vec![0.0; p];
    for &i in &free {
        w[i] = 1.0 / free.len() as f64;
    }

    let cap = 10 * p.max(1);
    for _ in 0..cap {
        let (target, nu) = solve_on_support(m, &free).ok_or_else(|| Error::IllConditioned {
            origin: xi.origin().to_string(),
            condition: super::condition_number(xi),
        })?;
        let step: Vec<f64> = free.iter().zip(&target).map(|(&i, &t)| t - w[i]).collect();

        let mut alpha = 1.0;
        let mut blocking: Option<usize> = None;
        for (&i, &d) in free.iter().zip(&step) {
            if d < 0.0 {
                let ratio = -w[i] / d;
                if ratio < alpha || (ratio == alpha && blocking.is_some_and(|b| i < b)) {
                    alpha = ratio;
                    blocking = Some(i);
                }
            }
        }
        if let Some(b) = blocking {
            for (&i, &d) in free.iter().zip(&step) {
                w[i] += alpha * d;
            }
            w[b] = 0.0;
            free.retain(|&i| i != b);
            continue;
        }

        for (&i, &t) in free.iter().zip(&target) {
            w[i] = t;
        }
        let gradient = m * DVector::from_column_slice(&w);
        let mut entering: Option<(usize, f64)> = None;
        for i in (0..p).filter(|i| !free.contains(i)) {
            let mu = gradient[i] - nu;
            if mu < -tol && entering.is_none_or(|(_, best)| mu < best) {
                entering = Some((i, mu));
            }
        }
        match entering {
            None => return finish(xi, w),
            Some((i, _)) => {
                free.push(i);
                free.sort_unstable();
            }
        }
    }
    Err(Error::NoConvergence {
        what: "long-only minimum-variance active set".into(),
        iterations: cap,
    })
}

fn finish(xi: &CovarianceMatrix, w: Vec<f64>) -> Result<WeightVector> {
    let w: Vec<f64> = w.into_iter().map(|x| x.max(0.0)).collect();
    let w = WeightVector::normalized(w)?;
    let residual = kkt_residual(xi.matrix(), w.as_slice());
    let scale = xi.matrix().diagonal().amax().max(f64::MIN_POSITIVE);
    if residual > KKT_TOLERANCE * scale {
        log::warn!("long-only optimum on `{}` has KKT residual {residual:e}", xi.origin());
    }
    Ok(w)
}

/// Largest violation of the optimality conditions of the long-only problem.
pub(crate) fn kkt_residual(xi: &DMatrix<f64>, w: &[f64]) -> f64 {
    let g = xi * DVector::from_column_slice(w);
    let support: Vec<usize> = (0..w.len()).filter(|&i| w[i] > 0.0).collect();
    let nu = support.iter().map(|&i| g[i] * w[i]).sum::<f64>();
    let mut r = (w.iter().sum::<f64>() - 1.0).abs();
    for i in 0..w.len() {
        r = r.max((-w[i]).max(0.0));
        if w[i] > 0.0 {
            r = r.max((g[i] - nu).abs());
        } else {
            r = r.max((nu - g[i]).max(0.0));
        }
    }
    r
}
