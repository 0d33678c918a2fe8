//! Population covariance models and the multiplicative noise sampler.
//!
//! Three structures are provided:
//!
//! * **Nested**: `Σ = L Lᵀ` with `L` the anti-triangular matrix of `γ`s, so
//!   `Σ_ij = (p + 1 − max(i, j)) γ²` (1-based). Every asset shares the factor
//!   of the last one; the scree plot decays roughly as a power law.
//! * **One factor**: `Σ = σ² b bᵀ + σ_r² I` with loadings `b ~ U(0.5, 1.5)`.
//! * **Diagonal**: a fixed multiset of variances (by default 20% ones,
//!   40% threes and 40% tens).
//!
//! Panels are drawn as `Y = √Σ X` where `X` has i.i.d. unit-variance entries.

use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{CovarianceMatrix, DataPanel};

/// Random stream used by every sampler in the crate.
pub type SeededRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Nested,
    #[serde(alias = "onefactor", alias = "factor")]
    OneFactor,
    Diagonal,
}

impl ModelKind {
    pub fn label(self) -> &'static str {
        match self {
            ModelKind::Nested => "nested",
            ModelKind::OneFactor => "one-factor",
            ModelKind::Diagonal => "diagonal",
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nested" => Ok(ModelKind::Nested),
            "one-factor" | "onefactor" | "factor" => Ok(ModelKind::OneFactor),
            "diagonal" => Ok(ModelKind::Diagonal),
            _ => Err(Error::UnknownName {
                kind: "model",
                name: s.to_string(),
                valid: "nested, one-factor, diagonal".into(),
            }),
        }
    }
}

/// Distribution of the entries of `X`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum NoiseDistribution {
    Gaussian,
    /// Student-t entries rescaled by `√((d−2)/d)` to unit variance.
    StudentT { dof: u32 },
}

fn default_gamma() -> f64 {
    0.1
}
fn default_sigma() -> f64 {
    0.16
}
fn default_sigma_r() -> f64 {
    0.2
}
fn default_dof() -> u32 {
    3
}
fn default_fractions() -> Vec<(f64, f64)> {
    vec![(1.0, 0.2), (3.0, 0.4), (10.0, 0.4)]
}

/// Configuration of one population model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub p: usize,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    #[serde(default = "default_sigma_r")]
    pub sigma_r: f64,
    /// Degrees of freedom of the one-factor model's t-distributed noise.
    #[serde(default = "default_dof")]
    pub dof: u32,
    /// `(eigenvalue, fraction)` pairs of the diagonal model.
    #[serde(default = "default_fractions")]
    pub diag_fractions: Vec<(f64, f64)>,
}

impl ModelSpec {
    pub fn new(kind: ModelKind, p: usize) -> Self {
        ModelSpec {
            kind,
            p,
            gamma: default_gamma(),
            sigma: default_sigma(),
            sigma_r: default_sigma_r(),
            dof: default_dof(),
            diag_fractions: default_fractions(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.p == 0 {
            return Err(Error::InvalidArgument("model dimension p must be ≥ 1".into()));
        }
        match self.kind {
            ModelKind::Nested if !(self.gamma > 0.0) => Err(Error::InvalidArgument(
                "nested model needs gamma > 0".into(),
            )),
            ModelKind::OneFactor if !(self.sigma > 0.0 && self.sigma_r > 0.0) => Err(
                Error::InvalidArgument("one-factor model needs sigma, sigma_r > 0".into()),
            ),
            ModelKind::OneFactor if self.dof < 3 => Err(Error::InvalidArgument(
                "one-factor noise needs dof ≥ 3".into(),
            )),
            ModelKind::Diagonal => diagonal_counts(self.p, &self.diag_fractions).map(|_| ()),
            _ => Ok(()),
        }
    }

    /// Noise distribution used for this model's panels.
    pub fn noise(&self) -> NoiseDistribution {
        match self.kind {
            ModelKind::OneFactor => NoiseDistribution::StudentT { dof: self.dof },
            _ => NoiseDistribution::Gaussian,
        }
    }

    /// Whether `draw` consumes randomness.
    pub fn is_random(&self) -> bool {
        self.kind == ModelKind::OneFactor
    }

    /// Builds the population covariance (and its square root) for one realization.
    pub fn draw(&self, rng: &mut SeededRng) -> Result<Population> {
        self.validate()?;
        let (sigma, loadings) = match self.kind {
            ModelKind::Nested => (build_nested_sigma(self.p, self.gamma)?, None),
            ModelKind::OneFactor => {
                let (s, b) = build_factor_sigma(self.p, self.sigma, self.sigma_r, rng)?;
                (s, Some(b))
            }
            ModelKind::Diagonal => (build_diagonal_sigma(self.p, &self.diag_fractions)?, None),
        };
        Population::new(sigma, loadings)
    }
}

/// A population covariance together with its symmetric square root.
#[derive(Clone, Debug)]
pub struct Population {
    pub sigma: CovarianceMatrix,
    pub root: CovarianceMatrix,
    pub loadings: Option<Vec<f64>>,
}

impl Population {
    pub fn new(sigma: CovarianceMatrix, loadings: Option<Vec<f64>>) -> Result<Self> {
        let sigma = sigma.with_origin("population");
        let root = matrix_sqrt(&sigma)?;
        Ok(Population {
            sigma,
            root,
            loadings,
        })
    }

    pub fn sample(
        &self,
        n: usize,
        dist: NoiseDistribution,
        rng: &mut SeededRng,
    ) -> Result<DataPanel> {
        sample_with_root(&self.root, n, dist, rng)
    }
}

/// Nested model: `Σ_ij = (p + 1 − max(i, j)) γ²` for 1-based indices.
pub fn build_nested_sigma(p: usize, gamma: f64) -> Result<CovarianceMatrix> {
    if p == 0 {
        return Err(Error::InvalidArgument("nested model needs p ≥ 1".into()));
    }
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::InvalidArgument("nested model needs gamma > 0".into()));
    }
    let g2 = gamma * gamma;
    let m = DMatrix::from_fn(p, p, |i, j| (p - i.max(j)) as f64 * g2);
    CovarianceMatrix::new(m)
}

/// One-factor model with freshly drawn loadings. Returns `(Σ, b)`.
pub fn build_factor_sigma(
    p: usize,
    sigma: f64,
    sigma_r: f64,
    rng: &mut SeededRng,
) -> Result<(CovarianceMatrix, Vec<f64>)> {
    if p == 0 {
        return Err(Error::InvalidArgument("factor model needs p ≥ 1".into()));
    }
    let b: Vec<f64> = (0..p).map(|_| rng.random_range(0.5..=1.5)).collect();
    let s = factor_sigma_from_loadings(&b, sigma, sigma_r)?;
    Ok((s, b))
}

/// `σ² b bᵀ + σ_r² I` for given loadings.
pub fn factor_sigma_from_loadings(b: &[f64], sigma: f64, sigma_r: f64) -> Result<CovarianceMatrix> {
    if !(sigma > 0.0 && sigma_r > 0.0) {
        return Err(Error::InvalidArgument("sigma and sigma_r must be > 0".into()));
    }
    let p = b.len();
    let s2 = sigma * sigma;
    let r2 = sigma_r * sigma_r;
    let m = DMatrix::from_fn(p, p, |i, j| {
        s2 * b[i] * b[j] + if i == j { r2 } else { 0.0 }
    });
    CovarianceMatrix::from_symmetrized(m)
}

/// Group sizes for the diagonal model: `round(fraction·p)` per group, with the
/// rounding remainder absorbed by the first group of largest fraction.
pub fn diagonal_counts(p: usize, fractions: &[(f64, f64)]) -> Result<Vec<usize>> {
    if fractions.is_empty() {
        return Err(Error::InvalidArgument("diagonal model needs at least one group".into()));
    }
    let total: f64 = fractions.iter().map(|f| f.1).sum();
    if (total - 1.0).abs() > 1e-9 || fractions.iter().any(|f| f.1 < 0.0 || !(f.0 > 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "diagonal fractions must be non-negative and sum to 1 (got {total}), eigenvalues positive"
        )));
    }
    let mut counts: Vec<i64> = fractions
        .iter()
        .map(|&(_, f)| (f * p as f64).round() as i64)
        .collect();
    let mut largest = 0;
    for (k, f) in fractions.iter().enumerate() {
        if f.1 > fractions[largest].1 {
            largest = k;
        }
    }
    let assigned: i64 = counts.iter().sum();
    counts[largest] += p as i64 - assigned;
    if let Some(c) = counts.iter().find(|&&c| c < 0) {
        return Err(Error::InvalidArgument(format!(
            "diagonal model rounding produced a negative group size {c} at p = {p}"
        )));
    }
    Ok(counts.into_iter().map(|c| c as usize).collect())
}

/// Diagonal model with the configured eigenvalue multiset, sorted descending.
pub fn build_diagonal_sigma(p: usize, fractions: &[(f64, f64)]) -> Result<CovarianceMatrix> {
    let counts = diagonal_counts(p, fractions)?;
    let mut values: Vec<f64> = fractions
        .iter()
        .zip(&counts)
        .flat_map(|(&(v, _), &c)| std::iter::repeat_n(v, c))
        .collect();
    values.sort_by(|a, b| b.total_cmp(a));
    CovarianceMatrix::from_diagonal(&values)
}

/// Symmetric PSD square root of `sigma`.
pub fn matrix_sqrt(sigma: &CovarianceMatrix) -> Result<CovarianceMatrix> {
    sigma.sqrt()
}

/// Draws `Y = √Σ X`.
pub fn sample_panel(
    sigma: &CovarianceMatrix,
    n: usize,
    dist: NoiseDistribution,
    rng: &mut SeededRng,
) -> Result<DataPanel> {
    let root = matrix_sqrt(sigma)?;
    sample_with_root(&root, n, dist, rng)
}

fn sample_with_root(
    root: &CovarianceMatrix,
    n: usize,
    dist: NoiseDistribution,
    rng: &mut SeededRng,
) -> Result<DataPanel> {
    if n < 2 {
        return Err(Error::InvalidArgument("panel needs n ≥ 2 observations".into()));
    }
    let p = root.dim();
    let x = match dist {
        NoiseDistribution::Gaussian => {
            DMatrix::from_fn(p, n, |_, _| StandardNormal.sample(&mut *rng))
        }
        NoiseDistribution::StudentT { dof } => {
            if dof < 3 {
                return Err(Error::InvalidArgument(format!(
                    "Student-t noise needs dof ≥ 3 for finite variance, got {dof}"
                )));
            }
            let t = StudentT::new(dof as f64)
                .map_err(|e| Error::InvalidArgument(format!("Student-t: {e}")))?;
            let scale = ((dof as f64 - 2.0) / dof as f64).sqrt();
            DMatrix::from_fn(p, n, |_, _| scale * t.sample(&mut *rng))
        }
    };
    DataPanel::new(root.matrix() * x)
}

/// `S = (1/n) Y Yᵀ`; with `centered`, rows are demeaned first (divisor stays n).
pub fn sample_covariance(panel: &DataPanel, centered: bool) -> CovarianceMatrix {
    let y = if centered {
        panel.demeaned().values().clone()
    } else {
        panel.values().clone()
    };
    let n = y.ncols() as f64;
    let s = (&y * y.transpose()) / n;
    CovarianceMatrix::from_symmetrized(s)
        .expect("Y·Yᵀ of a finite panel is square and finite")
        .with_origin("sample")
}

/// Eigenvalues of the nested model from its tridiagonal characterization,
/// returned in descending order.
///
/// `det(Σ − λI)` equals the determinant of the tridiagonal matrix with
/// diagonal `γ² − 2λ` (last entry `γ² − λ`) and off-diagonal `λ`, whose
/// leading minors follow `D_k = a·D_{k−1} − λ²·D_{k−2}`. The ratios
/// `D_k / D_{k−1}` are the pivots of an LDLᵀ factorization; for `λ > 0` the
/// number of negative pivots equals the number of eigenvalues below `λ`, which
/// turns the recurrence into a Sturm count for bisection. All roots lie in
/// `(γ²/4, tr Σ]`.
pub fn nested_sigma_eigenvalues(p: usize, gamma: f64) -> Result<Vec<f64>> {
    if p == 0 {
        return Err(Error::InvalidArgument("nested model needs p ≥ 1".into()));
    }
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::InvalidArgument("nested model needs gamma > 0".into()));
    }
    const MAX_ITER: usize = 300;
    let g2 = gamma * gamma;
    let trace = g2 * (p * (p + 1)) as f64 / 2.0;
    let lower = 0.25 * g2 * (1.0 - 1e-12);
    let upper = trace * (1.0 + 1e-12);

    let mut roots = Vec::with_capacity(p);
    for k in 0..p {
        // k-th smallest root: largest λ with count(λ) ≤ k.
        let (mut lo, mut hi) = (lower, upper);
        let mut iter = 0;
        while hi - lo > 2.0 * f64::EPSILON * hi {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if nested_count_below(p, g2, mid) <= k {
                lo = mid;
            } else {
                hi = mid;
            }
            iter += 1;
            if iter >= MAX_ITER {
                return Err(Error::NoConvergence {
                    what: format!("nested eigenvalue bisection (root {k})"),
                    iterations: iter,
                });
            }
        }
        roots.push(0.5 * (lo + hi));
    }
    roots.reverse();
    Ok(roots)
}

/// Number of eigenvalues of the nested Σ strictly below `lambda > 0`.
fn nested_count_below(p: usize, g2: f64, lambda: f64) -> usize {
    let l2 = lambda * lambda;
    let tiny = f64::MIN_POSITIVE.sqrt() * lambda;
    let mut negatives = 0;
    let mut prev = 0.0f64;
    for k in 0..p {
        let a = if k + 1 == p { g2 - lambda } else { g2 - 2.0 * lambda };
        let mut pivot = if k == 0 { a } else { a - l2 / prev };
        if pivot == 0.0 {
            pivot = -tiny;
        }
        if pivot < 0.0 {
            negatives += 1;
        }
        prev = pivot;
    }
    negatives
}

/// Value of the tridiagonal determinant `D_p(λ)` from the three-term recurrence.
pub fn nested_characteristic_determinant(p: usize, gamma: f64, lambda: f64) -> f64 {
    let g2 = gamma * gamma;
    let (mut d_prev, mut d) = (1.0, 0.0);
    for k in 0..p {
        let a = if k + 1 == p { g2 - lambda } else { g2 - 2.0 * lambda };
        let next = if k == 0 {
            a
        } else {
            a * d - lambda * lambda * d_prev
        };
        if k > 0 {
            d_prev = d;
        }
        d = next;
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn nested_small_cases() {
        let s = build_nested_sigma(1, 0.1).unwrap();
        assert_relative_eq!(s.get(0, 0), 0.01, epsilon = 1e-15);
        let s = build_nested_sigma(2, 0.1).unwrap();
        let expected = [[0.02, 0.01], [0.01, 0.01]];
        for i in 0..2 {
            for j in 0..2 {
                assert_relative_eq!(s.get(i, j), expected[i][j], epsilon = 1e-15);
            }
        }
        assert!(build_nested_sigma(0, 0.1).is_err());
    }

    #[test]
    fn nested_equals_l_lt() {
        let p = 7;
        let g = 0.3;
        let l = DMatrix::from_fn(p, p, |i, j| if i + j < p { g } else { 0.0 });
        let direct = &l * l.transpose();
        let s = build_nested_sigma(p, g).unwrap();
        assert!((direct - s.matrix()).amax() < 1e-14);
    }

    #[test]
    fn factor_hand_values() {
        let s = factor_sigma_from_loadings(&[0.5, 1.5], 0.16, 0.2).unwrap();
        assert_relative_eq!(s.get(0, 0), 0.0464, epsilon = 1e-12);
        assert_relative_eq!(s.get(0, 1), 0.0192, epsilon = 1e-12);
        assert_relative_eq!(s.get(1, 1), 0.0976, epsilon = 1e-12);

        let s = factor_sigma_from_loadings(&[1.0, 1.0, 1.0], 1.0, 1.0).unwrap();
        let e = &s.spectrum().eigenvalues;
        assert_relative_eq!(e[0], 4.0, epsilon = 1e-12);
        assert_relative_eq!(e[1], 1.0, epsilon = 1e-12);
        assert_relative_eq!(e[2], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn factor_loadings_in_range() {
        let mut rng = seeded_rng(3);
        let (_, b) = build_factor_sigma(500, 0.16, 0.2, &mut rng).unwrap();
        assert!(b.iter().all(|&x| (0.5..=1.5).contains(&x)));
    }

    #[test]
    fn diagonal_layouts() {
        let f = default_fractions();
        assert_eq!(build_diagonal_sigma(5, &f).unwrap().diagonal(), vec![10.0, 10.0, 3.0, 3.0, 1.0]);
        let d10 = build_diagonal_sigma(10, &f).unwrap().diagonal();
        assert_eq!(d10.iter().filter(|&&v| v == 1.0).count(), 2);
        assert_eq!(d10.iter().filter(|&&v| v == 3.0).count(), 4);
        assert_eq!(d10.iter().filter(|&&v| v == 10.0).count(), 4);
        let d100 = build_diagonal_sigma(100, &f).unwrap().diagonal();
        assert_eq!(d100.iter().filter(|&&v| v == 1.0).count(), 20);
        assert_eq!(d100.iter().filter(|&&v| v == 3.0).count(), 40);
        assert_eq!(d100.iter().filter(|&&v| v == 10.0).count(), 40);
        // p = 7: 1.4→1, 2.8→3, 2.8→3, total 7.
        assert_eq!(diagonal_counts(7, &f).unwrap(), vec![1, 3, 3]);
        // p = 3: 0.6→1, 1.2→1, 1.2→1.
        assert_eq!(diagonal_counts(3, &f).unwrap(), vec![1, 1, 1]);
        assert!(diagonal_counts(5, &[(1.0, 0.5), (2.0, 0.6)]).is_err());
    }

    #[test]
    fn diagonal_negative_count_rejected() {
        // Four quarters at p = 2 each round 0.5 up to 1, leaving −2 for the first group.
        let f = [(1.0, 0.25), (2.0, 0.25), (3.0, 0.25), (4.0, 0.25)];
        assert!(diagonal_counts(2, &f).is_err());
    }

    #[test]
    fn sqrt_reproduces_nested() {
        let s = build_nested_sigma(4, 0.1).unwrap();
        let r = matrix_sqrt(&s).unwrap();
        let rr = r.matrix() * r.matrix();
        assert!((rr - s.matrix()).norm() / s.matrix().norm() < 1e-10);
        let id = CovarianceMatrix::identity(3);
        assert!((matrix_sqrt(&id).unwrap().matrix() - id.matrix()).amax() < 1e-14);
    }

    #[test]
    fn sample_covariance_hand_cases() {
        let panel = DataPanel::from_rows(&[vec![1.0, -1.0], vec![1.0, -1.0]]).unwrap();
        let s = sample_covariance(&panel, false);
        assert!((s.matrix() - DMatrix::from_element(2, 2, 1.0)).amax() < 1e-15);
        let shifted = DataPanel::from_rows(&[vec![1.0, 3.0], vec![4.0, 4.0]]).unwrap();
        let u = sample_covariance(&shifted, false);
        assert_eq!(u.matrix(), &DMatrix::from_row_slice(2, 2, &[5.0, 8.0, 8.0, 16.0]));
        let c = sample_covariance(&shifted, true);
        assert_eq!(c.matrix(), &DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]));
    }

    #[test]
    fn sample_covariance_matches_double_loop() {
        let mut rng = seeded_rng(11);
        let panel = sample_panel(&CovarianceMatrix::identity(5), 50, NoiseDistribution::Gaussian, &mut rng).unwrap();
        for centered in [false, true] {
            let y = if centered { panel.demeaned() } else { panel.clone() };
            let s = sample_covariance(&panel, centered);
            for i in 0..5 {
                for j in 0..5 {
                    let mut acc = 0.0;
                    for t in 0..50 {
                        acc += y.values()[(i, t)] * y.values()[(j, t)];
                    }
                    assert!((acc / 50.0 - s.get(i, j)).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn student_t_requires_three_dof() {
        let mut rng = seeded_rng(1);
        let r = sample_panel(
            &CovarianceMatrix::identity(2),
            10,
            NoiseDistribution::StudentT { dof: 2 },
            &mut rng,
        );
        assert!(r.is_err());
    }

    #[test]
    fn nested_eigenvalues_closed_form_p2() {
        let e = nested_sigma_eigenvalues(2, 0.1).unwrap();
        let disc = (0.03f64 * 0.03 - 4.0 * 0.0001).sqrt();
        assert_relative_eq!(e[0], (0.03 + disc) / 2.0, max_relative = 1e-12);
        assert_relative_eq!(e[1], (0.03 - disc) / 2.0, max_relative = 1e-12);
        assert_relative_eq!(e[0], 0.026180, epsilon = 1e-6);
        assert_relative_eq!(e[1], 0.003820, epsilon = 1e-6);
        assert_relative_eq!(nested_sigma_eigenvalues(1, 0.1).unwrap()[0], 0.01, max_relative = 1e-14);
    }

    #[test]
    fn nested_determinant_vanishes_at_roots() {
        let p = 6;
        let g = 0.1;
        for &l in &nested_sigma_eigenvalues(p, g).unwrap() {
            // Scale-free check: compare against the determinant a little away from the root.
            let at = nested_characteristic_determinant(p, g, l).abs();
            let off = nested_characteristic_determinant(p, g, l * 1.01).abs();
            assert!(at < 1e-8 * off, "D({l}) = {at}, nearby {off}");
        }
    }

    #[test]
    fn config_json_round_trip() {
        let json = r#"{"kind":"one-factor","p":50}"#;
        let m: ModelSpec = serde_json::from_str(json).unwrap();
        assert_eq!(m, ModelSpec::new(ModelKind::OneFactor, 50));
        assert_eq!(m.noise(), NoiseDistribution::StudentT { dof: 3 });
    }
}
