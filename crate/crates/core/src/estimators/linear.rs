use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::matrix::{CovarianceMatrix, DataPanel};
use crate::models::sample_covariance;

/// The sample covariance itself.
pub fn estimate_naive(s: &CovarianceMatrix) -> CovarianceMatrix {
    s.clone()
}

/// Optimal intensity `α̂` for shrinking towards `ζI`, `ζ = tr(S)/p`.
///
/// `α̂ = min(b̄², d²)/d²` with `d² = ‖S − ζI‖²_F` and
/// `b̄² = n⁻² Σᵢ ‖xᵢxᵢᵀ − S‖²_F`. Returns `None` when `S` is already isotropic.
pub fn linear_shrinkage_intensity(panel: &DataPanel, centered: bool) -> Result<Option<f64>> {
    if panel.n() < 2 {
        return Err(Error::InvalidArgument("linear shrinkage needs n ≥ 2".into()));
    }
    let x = if centered {
        panel.demeaned()
    } else {
        panel.clone()
    };
    let s = sample_covariance(panel, centered);
    let p = s.dim();
    let n = x.n() as f64;
    let zeta = s.trace() / p as f64;
    let target = DMatrix::<f64>::identity(p, p) * zeta;
    let d2 = (s.matrix() - target).norm_squared();
    if d2 == 0.0 {
        return Ok(None);
    }
    // ‖xxᵀ − S‖² = ‖x‖⁴ − 2 xᵀSx + ‖S‖²
    let s_norm2 = s.matrix().norm_squared();
    let sx = s.matrix() * x.values();
    let mut acc = 0.0;
    for (col, scol) in x.values().column_iter().zip(sx.column_iter()) {
        let nx2 = col.norm_squared();
        acc += nx2 * nx2 - 2.0 * col.dot(&scol) + s_norm2;
    }
    let b2 = (acc / (n * n)).max(0.0);
    Ok(Some((b2.min(d2) / d2).clamp(0.0, 1.0)))
}

/// `Ξ = α̂ ζ I + (1 − α̂) S`.
pub fn estimate_linear(panel: &DataPanel, centered: bool) -> Result<CovarianceMatrix> {
    let s = sample_covariance(panel, centered);
    let Some(alpha) = linear_shrinkage_intensity(panel, centered)? else {
        return Ok(s.with_origin("linear"));
    };
    let p = s.dim();
    let zeta = s.trace() / p as f64;
    let m = s.matrix() * (1.0 - alpha) + DMatrix::<f64>::identity(p, p) * (alpha * zeta);
    Ok(CovarianceMatrix::from_symmetrized(m)?.with_origin("linear"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{sample_panel, seeded_rng, NoiseDistribution};

    #[test]
    fn naive_is_identity_map() {
        let s = CovarianceMatrix::from_rows(&[&[2.0, 0.3], &[0.3, 1.0]]).unwrap();
        assert_eq!(estimate_naive(&s).matrix(), s.matrix());
    }

    #[test]
    fn isotropic_sample_returns_s() {
        // Columns ±e1, ±e2 give S = I/2 exactly.
        let panel =
            DataPanel::from_rows(&[vec![1.0, -1.0, 0.0, 0.0], vec![0.0, 0.0, 1.0, -1.0]]).unwrap();
        assert_eq!(linear_shrinkage_intensity(&panel, false).unwrap(), None);
        let xi = estimate_linear(&panel, false).unwrap();
        assert_eq!(xi.matrix(), sample_covariance(&panel, false).matrix());
    }

    #[test]
    fn intensity_matches_direct_sum() {
        let mut rng = seeded_rng(5);
        let sigma = CovarianceMatrix::from_diagonal(&[3.0, 1.0, 0.5, 2.0]).unwrap();
        let panel = sample_panel(&sigma, 30, NoiseDistribution::Gaussian, &mut rng).unwrap();
        let s = sample_covariance(&panel, false);
        let mut acc = 0.0;
        for col in panel.values().column_iter() {
            let outer = &col * col.transpose();
            acc += (outer - s.matrix()).norm_squared();
        }
        let b2 = acc / (30.0 * 30.0);
        let zeta = s.trace() / 4.0;
        let d2 = (s.matrix() - DMatrix::identity(4, 4) * zeta).norm_squared();
        let want = b2.min(d2) / d2;
        let got = linear_shrinkage_intensity(&panel, false).unwrap().unwrap();
        assert!((got - want).abs() < 1e-12);
    }

    #[test]
    fn intensity_vanishes_for_large_n() {
        let mut rng = seeded_rng(9);
        let sigma = CovarianceMatrix::from_diagonal(&[5.0, 4.0, 3.0, 2.0, 1.0]).unwrap();
        let panel = sample_panel(&sigma, 100_000, NoiseDistribution::Gaussian, &mut rng).unwrap();
        let a = linear_shrinkage_intensity(&panel, false).unwrap().unwrap();
        assert!(a < 0.01, "alpha = {a}");
    }
}
