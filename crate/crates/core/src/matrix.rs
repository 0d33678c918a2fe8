//! Core numeric containers: covariance matrices with a cached spectrum,
//! observation panels and portfolio weight vectors.

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Relative tolerance used when deciding whether a slightly negative
/// eigenvalue is floating-point noise or a genuine loss of definiteness.
pub const PSD_TOLERANCE: f64 = 1e-10;

/// Eigen-decomposition of a symmetric matrix, eigenvalues sorted descending.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors stored as columns, in the order of `eigenvalues`.
    pub eigenvectors: DMatrix<f64>,
}

impl Spectrum {
    pub fn of(matrix: &DMatrix<f64>) -> Self {
        let eig = SymmetricEigen::new(matrix.clone());
        let p = eig.eigenvalues.len();
        let mut order: Vec<usize> = (0..p).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let eigenvalues = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let eigenvectors = DMatrix::from_fn(p, p, |i, j| eig.eigenvectors[(i, order[j])]);
        Spectrum {
            eigenvalues,
            eigenvectors,
        }
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn max(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }

    pub fn min(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }

    /// Builds `V diag(values) Vᵀ`, symmetrized.
    pub fn reconstruct(&self, values: &[f64]) -> DMatrix<f64> {
        assert_eq!(values.len(), self.dim());
        let mut scaled = self.eigenvectors.clone();
        for (j, &v) in values.iter().enumerate() {
            scaled.column_mut(j).scale_mut(v);
        }
        let m = scaled * self.eigenvectors.transpose();
        symmetrize(m)
    }
}

pub(crate) fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    let t = m.transpose();
    (m + t) * 0.5
}

/// A symmetric p×p covariance matrix.
///
/// Symmetry is exact: constructors either verify it or enforce it by
/// averaging with the transpose. The spectrum is computed lazily and cached.
#[derive(Clone, Debug)]
pub struct CovarianceMatrix {
    matrix: DMatrix<f64>,
    origin: String,
    spectrum: OnceLock<Spectrum>,
}

impl PartialEq for CovarianceMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.matrix == other.matrix
    }
}

impl CovarianceMatrix {
    /// Wraps a matrix, rejecting non-square, non-finite or non-symmetric input.
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || matrix.nrows() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "covariance must be square and non-empty, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "covariance has non-finite entries".into(),
            ));
        }
        let p = matrix.nrows();
        let mut asym = 0.0f64;
        for i in 0..p {
            for j in (i + 1)..p {
                asym = asym.max((matrix[(i, j)] - matrix[(j, i)]).abs());
            }
        }
        if asym > 0.0 {
            return Err(Error::NotSymmetric {
                max_asymmetry: asym,
            });
        }
        Ok(Self::from_parts(matrix))
    }

    /// Averages the input with its transpose.
    pub fn from_symmetrized(matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "covariance must be square, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Self::new(symmetrize(matrix))
    }

    fn from_parts(matrix: DMatrix<f64>) -> Self {
        CovarianceMatrix {
            matrix,
            origin: String::from("unlabelled"),
            spectrum: OnceLock::new(),
        }
    }

    pub fn identity(p: usize) -> Self {
        Self::from_parts(DMatrix::identity(p, p))
    }

    pub fn from_diagonal(values: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(values)))
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let p = rows.len();
        if rows.iter().any(|r| r.len() != p) {
            return Err(Error::DimensionMismatch("rows must form a square".into()));
        }
        Self::new(DMatrix::from_fn(p, p, |i, j| rows[i][j]))
    }

    /// Rebuilds a matrix from a spectrum with replaced eigenvalues. The new
    /// matrix keeps the eigenvectors, and its spectrum is primed in the cache.
    pub fn from_spectrum(spectrum: &Spectrum, values: &[f64]) -> Self {
        let matrix = spectrum.reconstruct(values);
        let p = values.len();
        let mut order: Vec<usize> = (0..p).collect();
        order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
        let primed = Spectrum {
            eigenvalues: order.iter().map(|&k| values[k]).collect(),
            eigenvectors: DMatrix::from_fn(p, p, |i, j| spectrum.eigenvectors[(i, order[j])]),
        };
        let out = Self::from_parts(matrix);
        let _ = out.spectrum.set(primed);
        out
    }

    /// Labels where this matrix came from, so downstream errors can name it.
    pub fn with_origin(mut self, origin: impl Into<String>) -> Self {
        self.origin = origin.into();
        self
    }

    pub fn origin(&self) -> &str {
        &self.origin
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix[(i, j)]
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        self.matrix.diagonal().iter().copied().collect()
    }

    pub fn spectrum(&self) -> &Spectrum {
        self.spectrum.get_or_init(|| Spectrum::of(&self.matrix))
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self::from_parts(&self.matrix * c).with_origin(self.origin.clone())
    }

    /// `x̂ᵀ A x` for a vector given as a slice.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        let v = DVector::from_column_slice(x);
        (v.transpose() * &self.matrix * &v)[(0, 0)]
    }

    /// Checks `λ_min ≥ -PSD_TOLERANCE · λ_max`.
    pub fn check_psd(&self) -> Result<()> {
        let s = self.spectrum();
        let scale = s.max().abs().max(f64::MIN_POSITIVE);
        if s.min() < -PSD_TOLERANCE * scale {
            return Err(Error::NotPsd {
                min_eigenvalue: s.min(),
                max_eigenvalue: s.max(),
            });
        }
        Ok(())
    }

    /// Clamps negative eigenvalues to zero. Matrices that are already PSD are
    /// returned unchanged. Repairs larger than `1e-6·λ_max` are logged.
    pub fn psd_repaired(self) -> Self {
        let s = self.spectrum();
        if s.min() >= 0.0 {
            return self;
        }
        let scale = s.max().abs();
        if -s.min() > 1e-6 * scale {
            log::warn!(
                "PSD repair on `{}` clamped eigenvalue {:e} (largest {:e})",
                self.origin,
                s.min(),
                s.max()
            );
        }
        let clamped: Vec<f64> = s.eigenvalues.iter().map(|&l| l.max(0.0)).collect();
        Self::from_spectrum(s, &clamped).with_origin(self.origin)
    }

    /// Symmetric PSD square root `R` with `R·R = Σ`.
    pub fn sqrt(&self) -> Result<Self> {
        self.check_psd()?;
        let s = self.spectrum();
        let roots: Vec<f64> = s.eigenvalues.iter().map(|&l| l.max(0.0).sqrt()).collect();
        Ok(Self::from_spectrum(s, &roots))
    }

    /// Moore–Penrose inverse square root; eigenvalues at or below
    /// `cutoff · λ_max` are treated as zero.
    pub fn pinv_sqrt(&self, cutoff: f64) -> Self {
        let s = self.spectrum();
        let floor = cutoff * s.max();
        let inv: Vec<f64> = s
            .eigenvalues
            .iter()
            .map(|&l| if l > floor { 1.0 / l.sqrt() } else { 0.0 })
            .collect();
        Self::from_spectrum(s, &inv)
    }

    /// Converts to a correlation matrix using the diagonal as variances.
    pub fn correlation(&self) -> Result<DMatrix<f64>> {
        let d = self.diagonal();
        if let Some(bad) = d.iter().find(|&&v| !(v > 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "correlation needs strictly positive variances, found {bad}"
            )));
        }
        let sd: Vec<f64> = d.iter().map(|v| v.sqrt()).collect();
        let p = self.dim();
        Ok(DMatrix::from_fn(p, p, |i, j| {
            if i == j {
                1.0
            } else {
                self.matrix[(i, j)] / (sd[i] * sd[j])
            }
        }))
    }
}

/// A p×n panel of observations, one column per time step.
#[derive(Clone, Debug, PartialEq)]
pub struct DataPanel {
    values: DMatrix<f64>,
}

impl DataPanel {
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        if values.nrows() == 0 || values.ncols() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "panel must be non-empty, got {}x{}",
                values.nrows(),
                values.ncols()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("panel has non-finite values".into()));
        }
        Ok(DataPanel { values })
    }

    /// Builds a panel from row-major data: `rows[i]` is the series of variable `i`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let p = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch("ragged panel rows".into()));
        }
        Self::new(DMatrix::from_fn(p, n, |i, t| rows[i][t]))
    }

    pub fn p(&self) -> usize {
        self.values.nrows()
    }

    pub fn n(&self) -> usize {
        self.values.ncols()
    }

    /// Ratio p/n.
    pub fn aspect_ratio(&self) -> f64 {
        self.p() as f64 / self.n() as f64
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    /// Columns `start..end` as a new panel.
    pub fn slice(&self, start: usize, end: usize) -> Result<Self> {
        if start >= end || end > self.n() {
            return Err(Error::InvalidArgument(format!(
                "column range {start}..{end} out of bounds for n = {}",
                self.n()
            )));
        }
        Ok(DataPanel {
            values: self.values.columns(start, end - start).into_owned(),
        })
    }

    /// Subtracts each row's mean.
    pub fn demeaned(&self) -> Self {
        let mut values = self.values.clone();
        let n = values.ncols() as f64;
        for mut row in values.row_iter_mut() {
            let mean = row.sum() / n;
            row.add_scalar_mut(-mean);
        }
        DataPanel { values }
    }
}

/// Capital allocation across p assets, summing to one.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub const BUDGET_TOLERANCE: f64 = 1e-8;

    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() || weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidArgument(
                "weights must be non-empty and finite".into(),
            ));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > Self::BUDGET_TOLERANCE {
            return Err(Error::InvalidArgument(format!(
                "weights sum to {sum}, expected 1"
            )));
        }
        Ok(WeightVector(weights))
    }

    /// Divides by the sum. Fails when the sum is zero or not finite.
    pub fn normalized(raw: Vec<f64>) -> Result<Self> {
        let sum: f64 = raw.iter().sum();
        if !sum.is_finite() || sum == 0.0 {
            return Err(Error::InvalidArgument(format!(
                "cannot normalize weights with sum {sum}"
            )));
        }
        Self::new(raw.into_iter().map(|w| w / sum).collect())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl std::ops::Index<usize> for WeightVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn rejects_asymmetric_matrix() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.4, 1.0]);
        assert!(matches!(
            CovarianceMatrix::new(m),
            Err(Error::NotSymmetric { .. })
        ));
    }

    #[test]
    fn spectrum_is_descending_and_orthonormal() {
        let c = CovarianceMatrix::from_rows(&[&[2.0, 1.0, 0.0], &[1.0, 3.0, 0.5], &[0.0, 0.5, 1.0]])
            .unwrap();
        let s = c.spectrum();
        assert!(s.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
        let vtv = s.eigenvectors.transpose() * &s.eigenvectors;
        assert!((vtv - DMatrix::identity(3, 3)).norm() < 1e-10);
        let back = s.reconstruct(&s.eigenvalues);
        assert!((back - c.matrix()).norm() / c.matrix().norm() < 1e-8);
    }

    #[test]
    fn sqrt_of_diagonal() {
        let c = CovarianceMatrix::from_diagonal(&[4.0, 9.0]).unwrap();
        let r = c.sqrt().unwrap();
        assert_relative_eq!(r.get(0, 0), 2.0, epsilon = 1e-12);
        assert_relative_eq!(r.get(1, 1), 3.0, epsilon = 1e-12);
        assert!(r.get(0, 1).abs() < 1e-12);
    }

    #[test]
    fn sqrt_rejects_indefinite() {
        let c = CovarianceMatrix::from_rows(&[&[1.0, 2.0], &[2.0, 1.0]]).unwrap();
        assert!(matches!(c.sqrt(), Err(Error::NotPsd { .. })));
    }

    #[test]
    fn psd_repair_clamps_negative_eigenvalues() {
        let c = CovarianceMatrix::from_rows(&[&[1.0, 2.0], &[2.0, 1.0]]).unwrap();
        let r = c.psd_repaired();
        assert!(r.spectrum().min() > -1e-12);
        assert_relative_eq!(r.spectrum().max(), 3.0, epsilon = 1e-12);
    }

    #[test]
    fn weight_vector_budget() {
        assert!(WeightVector::new(vec![0.5, 0.5]).is_ok());
        assert!(WeightVector::new(vec![0.5, 0.6]).is_err());
        assert!(WeightVector::normalized(vec![1.0, -1.0]).is_err());
        let w = WeightVector::normalized(vec![2.0, 6.0]).unwrap();
        assert_relative_eq!(w[1], 0.75);
    }

    #[test]
    fn demeaned_rows_have_zero_mean() {
        let p = DataPanel::from_rows(&[vec![1.0, 2.0, 3.0], vec![5.0, 5.0, 8.0]]).unwrap();
        let d = p.demeaned();
        for row in d.values().row_iter() {
            assert!(row.sum().abs() < 1e-12);
        }
    }
}
