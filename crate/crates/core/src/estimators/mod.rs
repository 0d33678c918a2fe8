//! Covariance estimators.
//!
//! Every estimator consumes an observation panel (plus a flag saying whether
//! columns are demeaned before forming the sample covariance) and returns a
//! symmetric PSD estimate tagged with the estimator's name.

mod alca;
mod linear;
mod rie;
mod ycm;

use serde::{Deserialize, Serialize};

pub use alca::{alca_dendrogram, estimate_alca};
pub use linear::{estimate_linear, estimate_naive, linear_shrinkage_intensity};
pub use rie::{
    estimate_lp, estimate_stein, estimate_symstein, lp_eigenvalues, rie_eta, stein_eigenvalues,
    stieltjes, symstein_eigenvalues,
};
pub use ycm::{estimate_ycm, rho_grid, YcmFit};

use crate::error::{Error, Result};
use crate::matrix::{CovarianceMatrix, DataPanel};
use crate::models::sample_covariance;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EstimatorKind {
    #[serde(rename = "naive")]
    Naive,
    #[serde(rename = "linear")]
    Linear,
    #[serde(rename = "alca")]
    Alca,
    #[serde(rename = "lp")]
    Lp,
    #[serde(rename = "stein")]
    Stein,
    #[serde(rename = "symstein")]
    SymStein,
    #[serde(rename = "ycm")]
    Ycm,
    #[serde(rename = "2s-lp")]
    TwoStepLp,
    #[serde(rename = "2s-stein")]
    TwoStepStein,
    #[serde(rename = "2s-symstein")]
    TwoStepSymStein,
    #[serde(rename = "2s-ycm")]
    TwoStepYcm,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 11] = [
        EstimatorKind::Naive,
        EstimatorKind::Linear,
        EstimatorKind::Alca,
        EstimatorKind::Lp,
        EstimatorKind::Stein,
        EstimatorKind::SymStein,
        EstimatorKind::Ycm,
        EstimatorKind::TwoStepLp,
        EstimatorKind::TwoStepStein,
        EstimatorKind::TwoStepSymStein,
        EstimatorKind::TwoStepYcm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::Naive => "naive",
            EstimatorKind::Linear => "linear",
            EstimatorKind::Alca => "alca",
            EstimatorKind::Lp => "lp",
            EstimatorKind::Stein => "stein",
            EstimatorKind::SymStein => "symstein",
            EstimatorKind::Ycm => "ycm",
            EstimatorKind::TwoStepLp => "2s-lp",
            EstimatorKind::TwoStepStein => "2s-stein",
            EstimatorKind::TwoStepSymStein => "2s-symstein",
            EstimatorKind::TwoStepYcm => "2s-ycm",
        }
    }

    pub fn vocabulary() -> String {
        Self::ALL.map(|k| k.name()).join(", ")
    }
}

impl std::fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for EstimatorKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::UnknownName {
                kind: "estimator",
                name: s.to_string(),
                valid: Self::vocabulary(),
            })
    }
}

fn default_grid() -> usize {
    20
}
fn default_tol() -> f64 {
    1e-8
}
fn default_max_iter() -> usize {
    500
}
fn default_eta_scale() -> f64 {
    1.0
}

/// Which estimator to run and its tuning knobs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSpec {
    pub kind: EstimatorKind,
    /// Number of shrinkage values tried by the fixed-point estimators.
    #[serde(default = "default_grid")]
    pub rho_grid_size: usize,
    #[serde(default = "default_tol")]
    pub fixed_point_tol: f64,
    #[serde(default = "default_max_iter")]
    pub fixed_point_max_iter: usize,
    /// Multiplier of the imaginary offset used when evaluating the Stieltjes
    /// transform just below the real axis.
    #[serde(default = "default_eta_scale")]
    pub stieltjes_eta_scale: f64,
}

impl EstimatorSpec {
    pub fn new(kind: EstimatorKind) -> Self {
        EstimatorSpec {
            kind,
            rho_grid_size: default_grid(),
            fixed_point_tol: default_tol(),
            fixed_point_max_iter: default_max_iter(),
            stieltjes_eta_scale: default_eta_scale(),
        }
    }

    pub fn all() -> Vec<Self> {
        EstimatorKind::ALL.into_iter().map(Self::new).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.rho_grid_size < 2 {
            return Err(Error::InvalidArgument("rho_grid_size must be ≥ 2".into()));
        }
        if !(self.fixed_point_tol > 0.0) || !(self.stieltjes_eta_scale > 0.0) {
            return Err(Error::InvalidArgument(
                "tolerances and eta scale must be > 0".into(),
            ));
        }
        if self.fixed_point_max_iter == 0 {
            return Err(Error::InvalidArgument("fixed_point_max_iter must be ≥ 1".into()));
        }
        Ok(())
    }

    pub fn name(&self) -> &'static str {
        self.kind.name()
    }
}

impl From<EstimatorKind> for EstimatorSpec {
    fn from(kind: EstimatorKind) -> Self {
        Self::new(kind)
    }
}

/// Runs the estimator described by `spec` on `panel`.
///
/// `centered` selects whether the sample covariance demeans the columns.
/// The fixed-point estimator always demeans internally.
pub fn estimate(panel: &DataPanel, spec: &EstimatorSpec, centered: bool) -> Result<CovarianceMatrix> {
    spec.validate()?;
    let q = panel.aspect_ratio();
    let eta = spec.stieltjes_eta_scale;
    let out = match spec.kind {
        EstimatorKind::Naive => estimate_naive(&sample_covariance(panel, centered)),
        EstimatorKind::Linear => estimate_linear(panel, centered)?,
        EstimatorKind::Alca => estimate_alca(&sample_covariance(panel, centered))?,
        EstimatorKind::Lp => estimate_lp(&sample_covariance(panel, centered), q, eta),
        EstimatorKind::Stein => estimate_stein(&sample_covariance(panel, centered), q, eta),
        EstimatorKind::SymStein => estimate_symstein(&sample_covariance(panel, centered), q, eta),
        EstimatorKind::Ycm => estimate_ycm(panel, spec)?.cov,
        EstimatorKind::TwoStepLp
        | EstimatorKind::TwoStepStein
        | EstimatorKind::TwoStepSymStein
        | EstimatorKind::TwoStepYcm => estimate_two_step(panel, spec, centered)?,
    };
    Ok(out.with_origin(spec.name()))
}

/// Hierarchical filtering followed by an eigenvalue-cleaning or fixed-point step.
///
/// The shrinkage variants clean the spectrum of the filtered matrix with the
/// panel's aspect ratio. The fixed-point variant needs observations, so the
/// panel is recoloured as `Z = Ξ_filtered^{1/2} S^{+1/2} Y`: its sample
/// covariance is exactly the filtered matrix (on the range of `S`) while each
/// column keeps its own fluctuation.
pub fn estimate_two_step(
    panel: &DataPanel,
    spec: &EstimatorSpec,
    centered: bool,
) -> Result<CovarianceMatrix> {
    let s = sample_covariance(panel, centered);
    let filtered = estimate_alca(&s)?;
    let q = panel.aspect_ratio();
    let eta = spec.stieltjes_eta_scale;
    let out = match spec.kind {
        EstimatorKind::TwoStepLp => estimate_lp(&filtered, q, eta),
        EstimatorKind::TwoStepStein => estimate_stein(&filtered, q, eta),
        EstimatorKind::TwoStepSymStein => estimate_symstein(&filtered, q, eta),
        EstimatorKind::TwoStepYcm => {
            let y = if centered {
                panel.demeaned()
            } else {
                panel.clone()
            };
            let whiten = s.pinv_sqrt(1e-12);
            let color = filtered.sqrt()?;
            let z = color.matrix() * (whiten.matrix() * y.values());
            estimate_ycm(&DataPanel::new(z)?, spec)?.cov
        }
        other => {
            return Err(Error::InvalidArgument(format!(
                "`{other}` is not a two-step estimator"
            )))
        }
    };
    Ok(out.with_origin(spec.name()))
}
