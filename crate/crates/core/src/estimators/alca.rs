use nalgebra::DMatrix;

use crate::cluster::{agglomerate, Dendrogram, Linkage};
use crate::error::{Error, Result};
use crate::matrix::CovarianceMatrix;

/// Average-linkage dendrogram of a dissimilarity matrix.
pub fn alca_dendrogram(d: &DMatrix<f64>) -> Result<Dendrogram> {
    let p = d.nrows();
    for i in 0..p {
        if d[(i, i)] != 0.0 {
            return Err(Error::InvalidArgument(
                "dissimilarity must have a zero diagonal".into(),
            ));
        }
        for j in 0..i {
            if d[(i, j)] != d[(j, i)] || d[(i, j)] < 0.0 {
                return Err(Error::InvalidArgument(
                    "dissimilarity must be symmetric and non-negative".into(),
                ));
            }
        }
    }
    agglomerate(d, Linkage::Average)
}

/// Hierarchically filtered covariance.
///
/// Correlations are turned into dissimilarities `1 − C_ij`, clustered with
/// average linkage, and replaced by `1 − h_ij` where `h_ij` is the merge
/// height joining `i` and `j`. Variances are kept.
pub fn estimate_alca(s: &CovarianceMatrix) -> Result<CovarianceMatrix> {
    let c = s.correlation()?;
    let p = s.dim();
    if p == 1 {
        return Ok(s.clone().with_origin("alca"));
    }
    // 1 − C can come out slightly negative when |C_ij| drifts past 1.
    let d = DMatrix::from_fn(p, p, |i, j| if i == j { 0.0 } else { (1.0 - c[(i, j)]).max(0.0) });
    let d = crate::matrix::symmetrize(d);
    let coph = alca_dendrogram(&d)?.cophenetic();
    let sd: Vec<f64> = s.diagonal().iter().map(|v| v.sqrt()).collect();
    let filtered = DMatrix::from_fn(p, p, |i, j| {
        if i == j {
            s.get(i, i)
        } else {
            sd[i] * sd[j] * (1.0 - coph[(i, j)])
        }
    });
    Ok(CovarianceMatrix::from_symmetrized(filtered)?
        .with_origin("alca")
        .psd_repaired())
}
