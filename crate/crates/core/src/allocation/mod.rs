//! Portfolio construction from a covariance estimate.

mod hrp;
mod long_only;

use nalgebra::{Cholesky, DVector};
use serde::{Deserialize, Serialize};

pub use hrp::{hrp_distances, hrp_weights};
pub use long_only::mvp_long_only;

use crate::error::{Error, Result};
use crate::matrix::{CovarianceMatrix, WeightVector};

/// Largest condition number accepted by [`mvp_weights`].
pub const MAX_CONDITION: f64 = 1e14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Strategy {
    #[serde(rename = "mvp")]
    Mvp,
    #[serde(rename = "mvp+")]
    MvpLongOnly,
    #[serde(rename = "hrp")]
    Hrp,
    #[serde(rename = "uniform")]
    Uniform,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [
        Strategy::Mvp,
        Strategy::MvpLongOnly,
        Strategy::Hrp,
        Strategy::Uniform,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Mvp => "mvp",
            Strategy::MvpLongOnly => "mvp+",
            Strategy::Hrp => "hrp",
            Strategy::Uniform => "uniform",
        }
    }

    pub fn vocabulary() -> String {
        Self::ALL.map(|s| s.name()).join(", ")
    }

    /// Computes weights for `xi` under this strategy.
    pub fn weights(self, xi: &CovarianceMatrix) -> Result<WeightVector> {
        match self {
            Strategy::Mvp => mvp_weights(xi),
            Strategy::MvpLongOnly => mvp_long_only(xi),
            Strategy::Hrp => hrp_weights(xi),
            Strategy::Uniform => uniform_weights(xi.dim()),
        }
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Strategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::UnknownName {
                kind: "strategy",
                name: s.to_string(),
                valid: Self::vocabulary(),
            })
    }
}

/// Condition number `λ_max/λ_min`, infinite when `λ_min ≤ 0`.
pub fn condition_number(xi: &CovarianceMatrix) -> f64 {
    let s = xi.spectrum();
    if s.min() > 0.0 {
        s.max() / s.min()
    } else {
        f64::INFINITY
    }
}

/// Global minimum-variance weights `Ξ⁻¹1 / (1ᵀΞ⁻¹1)`.
pub fn mvp_weights(xi: &CovarianceMatrix) -> Result<WeightVector> {
    let condition = condition_number(xi);
    if !(condition < MAX_CONDITION) {
        return Err(Error::IllConditioned {
            origin: xi.origin().to_string(),
            condition,
        });
    }
    let chol = Cholesky::new(xi.matrix().clone()).ok_or_else(|| Error::IllConditioned {
        origin: xi.origin().to_string(),
        condition,
    })?;
    let u = chol.solve(&DVector::from_element(xi.dim(), 1.0));
    WeightVector::normalized(u.iter().copied().collect())
}

pub fn uniform_weights(p: usize) -> Result<WeightVector> {
    if p == 0 {
        return Err(Error::InvalidArgument("uniform weights need p ≥ 1".into()));
    }
    WeightVector::new(vec![1.0 / p as f64; p])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::build_nested_sigma;

    #[test]
    fn identity_gives_uniform() {
        let w = mvp_weights(&CovarianceMatrix::identity(4)).unwrap();
        for &x in w.as_slice() {
            assert!((x - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn diagonal_gives_inverse_variance() {
        let w = mvp_weights(&CovarianceMatrix::from_diagonal(&[1.0, 2.0, 4.0]).unwrap()).unwrap();
        let total = 1.0 + 0.5 + 0.25;
        for (x, v) in w.as_slice().iter().zip([1.0, 0.5, 0.25]) {
            assert!((x - v / total).abs() < 1e-15);
        }
    }

    #[test]
    fn nested_population_puts_everything_on_one_asset() {
        let sigma = build_nested_sigma(100, 0.1).unwrap();
        let w = mvp_weights(&sigma).unwrap();
        assert!((w[99] - 1.0).abs() < 1e-8, "w99 = {}", w[99]);
        let hhi: f64 = w.as_slice().iter().map(|x| x * x).sum();
        assert!((hhi - 1.0).abs() < 1e-8);
    }

    #[test]
    fn singular_input_names_origin() {
        let xi = CovarianceMatrix::from_rows(&[&[1.0, 1.0], &[1.0, 1.0]])
            .unwrap()
            .with_origin("naive");
        let err = mvp_weights(&xi).unwrap_err().to_string();
        assert!(err.contains("naive"), "{err}");
    }

    #[test]
    fn uniform_and_names() {
        assert_eq!(uniform_weights(4).unwrap().as_slice(), &[0.25; 4]);
        assert!(uniform_weights(0).is_err());
        for s in Strategy::ALL {
            assert_eq!(s.name().parse::<Strategy>().unwrap(), s);
        }
        assert!("mvp++".parse::<Strategy>().unwrap_err().to_string().contains("mvp+"));
        assert_eq!(serde_json::to_string(&Strategy::MvpLongOnly).unwrap(), "\"mvp+\"");
    }
}
