use nalgebra::DMatrix;

use crate::cluster::{agglomerate, Linkage};
use crate::error::{Error, Result};
use crate::matrix::{CovarianceMatrix, WeightVector};

const CLAMP_TOLERANCE: f64 = 1e-8;

/// Correlation distances `D_ij = √(½(1 − C_ij))` and the distances between
/// their columns `D̃_ij = ‖D_·i − D_·j‖`. Returns `(D, D̃)`.
pub fn hrp_distances(xi: &CovarianceMatrix) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let c = xi.correlation()?;
    let p = xi.dim();
    if let Some(bad) = c.iter().find(|v| v.abs() > 1.0 + CLAMP_TOLERANCE) {
        return Err(Error::InvalidArgument(format!(
            "correlation {bad} is outside [-1, 1]"
        )));
    }
    let d = c.map(|v| (0.5 * (1.0 - v.clamp(-1.0, 1.0))).sqrt());
    let mut dt = DMatrix::zeros(p, p);
    for i in 0..p {
        for j in (i + 1)..p {
            let v = (d.column(i) - d.column(j)).norm();
            dt[(i, j)] = v;
            dt[(j, i)] = v;
        }
    }
    Ok((d, dt))
}

/// Inverse-variance weights within `members`, then `wᵀ Ξ_c w`.
fn cluster_variance(xi: &DMatrix<f64>, members: &[usize]) -> f64 {
    let inv: Vec<f64> = members.iter().map(|&i| 1.0 / xi[(i, i)]).collect();
    let total: f64 = inv.iter().sum();
    let mut v = 0.0;
    for (a, &i) in members.iter().enumerate() {
        for (b, &j) in members.iter().enumerate() {
            v += inv[a] * inv[b] * xi[(i, j)];
        }
    }
    v / (total * total)
}

/// Hierarchical risk parity weights.
///
/// Assets are clustered by single linkage on `D̃`, ordered by the dendrogram
/// leaves, and capital is split by recursive bisection of that order: each
/// half receives a share inversely proportional to its inverse-variance
/// cluster variance. The left half has `⌈len/2⌉` assets.
pub fn hrp_weights(xi: &CovarianceMatrix) -> Result<WeightVector> {
    let p = xi.dim();
    if p == 1 {
        return WeightVector::new(vec![1.0]);
    }
    let (_, dt) = hrp_distances(xi)?;
    let order = agglomerate(&dt, Linkage::Single)?.leaf_order();
    let m = xi.matrix();

    let mut w = vec![1.0; p];
    let mut stack: Vec<&[usize]> = vec![&order];
    while let Some(items) = stack.pop() {
        if items.len() < 2 {
            continue;
        }
        let (left, right) = items.split_at(items.len().div_ceil(2));
        let (vl, vr) = (cluster_variance(m, left), cluster_variance(m, right));
        let alpha = 1.0 - vl / (vl + vr);
        for &i in left {
            w[i] *= alpha;
        }
        for &i in right {
            w[i] *= 1.0 - alpha;
        }
        stack.push(right);
        stack.push(left);
    }
    WeightVector::normalized(w)
}
